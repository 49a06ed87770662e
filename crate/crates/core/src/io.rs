//! File formats: CSV matrices and label columns, the JSON rule-model
//! document, and report tables.
//!
//! Every `render_*` function is deterministic, so writing the same value
//! twice yields identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{ChangeRecord, EvalReport};
use crate::pruning::PruneTrace;
use crate::types::{
    AttributionMatrix, ClassId, Dataset, IntervalConstraint, LabelVector, RuleModel, Term, TermId,
};

pub const MODEL_SCHEMA_VERSION: u32 = 1;
const ROW_ID_COLUMN: &str = "row_id";

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path_str(path),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: path_str(parent),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path_str(path),
        source,
    })
}

/// Header plus rows of a numeric CSV; `what` names the source for messages.
fn parse_numeric_csv(text: &str, what: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let csv_err = |source| Error::Csv {
        path: what.to_string(),
        source,
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        rows.push(rec.iter().map(|f| f.trim().to_string()).collect());
    }
    Ok((header, rows))
}

fn parse_f64(field: &str, what: &str, row: usize, col: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| {
        Error::input(format!(
            "{what}: row {row}, column {col:?}: {field:?} is not a number"
        ))
    })?;
    if !v.is_finite() {
        return Err(Error::input(format!(
            "{what}: row {row}, column {col:?}: non-finite value"
        )));
    }
    Ok(v)
}

/// Feature CSV: a header of feature names, one sample per row. An optional
/// leading `row_id` column carries opaque row identifiers.
pub fn parse_dataset(text: &str, what: &str) -> Result<Dataset> {
    let (mut header, rows) = parse_numeric_csv(text, what)?;
    let has_ids = header.first().is_some_and(|h| h == ROW_ID_COLUMN);
    if has_ids {
        header.remove(0);
    }
    let mut ids = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (i, mut row) in rows.into_iter().enumerate() {
        if has_ids {
            ids.push(row.remove(0));
        } else {
            ids.push(i.to_string());
        }
        let parsed = row
            .iter()
            .zip(&header)
            .map(|(f, col)| parse_f64(f, what, i, col))
            .collect::<Result<Vec<_>>>()?;
        values.push(parsed);
    }
    Dataset::with_row_ids(header, values, ids).map_err(|e| Error::input(format!("{what}: {e}")))
}

pub fn render_dataset(data: &Dataset) -> String {
    let default_ids = data
        .row_ids()
        .iter()
        .enumerate()
        .all(|(i, id)| *id == i.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = Vec::new();
    if !default_ids {
        header.push(ROW_ID_COLUMN);
    }
    header.extend(data.feature_names().iter().map(String::as_str));
    w.write_record(&header).expect("in-memory csv write");
    for (i, row) in data.rows().enumerate() {
        let mut fields: Vec<String> = Vec::with_capacity(row.len() + 1);
        if !default_ids {
            fields.push(data.row_ids()[i].clone());
        }
        fields.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&fields).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(&read_text(path)?, &path_str(path))
}

/// Single-column label CSV with a header; values are non-negative integers.
pub fn parse_labels(text: &str, what: &str) -> Result<LabelVector> {
    let (header, rows) = parse_numeric_csv(text, what)?;
    if header.len() != 1 {
        return Err(Error::input(format!(
            "{what}: expected one label column, found {}",
            header.len()
        )));
    }
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            r[0].parse::<u32>()
                .map(ClassId)
                .map_err(|_| Error::input(format!("{what}: row {i}: {:?} is not a class id", r[0])))
        })
        .collect::<Result<Vec<_>>>()
        .map(LabelVector::new)
}

pub fn render_labels(labels: &LabelVector, column: &str) -> String {
    let mut out = format!("{column}\n");
    for c in labels.as_slice() {
        let _ = writeln!(out, "{c}");
    }
    out
}

pub fn read_labels(path: &Path) -> Result<LabelVector> {
    parse_labels(&read_text(path)?, &path_str(path))
}

/// Attribution CSV: same header as the feature CSV, one score row per sample.
pub fn parse_attributions(text: &str, what: &str) -> Result<(Vec<String>, AttributionMatrix)> {
    let (header, rows) = parse_numeric_csv(text, what)?;
    let values = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .zip(&header)
                .map(|(f, col)| parse_f64(f, what, i, col))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let m = AttributionMatrix::new(header.len(), values)
        .map_err(|e| Error::input(format!("{what}: {e}")))?;
    Ok((header, m))
}

pub fn render_attributions(feature_names: &[String], attr: &AttributionMatrix) -> String {
    let mut out = feature_names.join(",");
    out.push('\n');
    for row in attr.rows() {
        out.push_str(
            &row.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
    }
    out
}

pub fn read_attributions(path: &Path) -> Result<(Vec<String>, AttributionMatrix)> {
    parse_attributions(&read_text(path)?, &path_str(path))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    schema_version: u32,
    feature_names: Vec<String>,
    classes: Vec<ClassId>,
    default_class: ClassId,
    terms: Vec<TermRecord>,
    provenance: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRecord {
    id: TermId,
    class: ClassId,
    accuracy: f64,
    constraints: Vec<ConstraintRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintRecord {
    feature: String,
    dim: usize,
    lo: f64,
    hi: f64,
}

/// Pretty-printed JSON rule-model document with a trailing newline.
pub fn render_model(model: &RuleModel) -> String {
    let doc = ModelDocument {
        schema_version: MODEL_SCHEMA_VERSION,
        feature_names: model.feature_names().to_vec(),
        classes: model.classes().to_vec(),
        default_class: model.default_class(),
        terms: model
            .terms()
            .iter()
            .zip(model.accuracies())
            .map(|(t, &accuracy)| TermRecord {
                id: t.id(),
                class: t.class_label(),
                accuracy,
                constraints: t
                    .constraints()
                    .iter()
                    .map(|c| ConstraintRecord {
                        feature: model.feature_names()[c.dim].clone(),
                        dim: c.dim,
                        lo: c.lo,
                        hi: c.hi,
                    })
                    .collect(),
            })
            .collect(),
        provenance: model.provenance().clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("model document serializes");
    s.push('\n');
    s
}

pub fn parse_model(text: &str) -> Result<RuleModel> {
    let doc: ModelDocument = serde_json::from_str(text)?;
    if doc.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::input(format!(
            "unsupported model schema_version {} (expected {MODEL_SCHEMA_VERSION})",
            doc.schema_version
        )));
    }
    let mut terms = Vec::with_capacity(doc.terms.len());
    let mut accuracies = Vec::with_capacity(doc.terms.len());
    for t in doc.terms {
        let constraints = t
            .constraints
            .iter()
            .map(|c| {
                if doc.feature_names.get(c.dim) != Some(&c.feature) {
                    return Err(Error::input(format!(
                        "term {}: dimension {} is not feature {:?}",
                        t.id, c.dim, c.feature
                    )));
                }
                IntervalConstraint::new(c.dim, c.lo, c.hi)
            })
            .collect::<Result<Vec<_>>>()?;
        terms.push(Term::new(t.id, t.class, constraints)?);
        accuracies.push(t.accuracy);
    }
    RuleModel::new(
        doc.feature_names,
        doc.classes,
        doc.default_class,
        terms,
        accuracies,
        doc.provenance,
    )
}

pub fn read_model(path: &Path) -> Result<RuleModel> {
    parse_model(&read_text(path)?).map_err(|e| match e {
        Error::Json(j) => Error::input(format!("{}: {j}", path_str(path))),
        other => other,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| x.to_string())
}

/// `metric,value` rows.
pub fn render_report_csv(report: &EvalReport) -> String {
    let mut out = String::from("metric,value\n");
    let _ = writeln!(out, "n_samples,{}", report.n_samples);
    let _ = writeln!(out, "f1,{}", report.f1);
    if let Some(gt) = report.f1_ground_truth {
        let _ = writeln!(out, "f1_ground_truth,{gt}");
    }
    let _ = writeln!(out, "size,{}", report.size);
    let _ = writeln!(out, "ambiguity,{}", report.ambiguity);
    let _ = writeln!(out, "coverage,{}", report.coverage);
    for (c, f) in &report.per_class_f1 {
        let _ = writeln!(out, "f1_class_{c},{f}");
    }
    out
}

pub fn parse_report_csv(text: &str, what: &str) -> Result<EvalReport> {
    let (header, rows) = parse_numeric_csv(text, what)?;
    if header != ["metric", "value"] {
        return Err(Error::input(format!(
            "{what}: expected header metric,value"
        )));
    }
    let mut fields: BTreeMap<String, String> = BTreeMap::new();
    for r in rows {
        if fields.insert(r[0].clone(), r[1].clone()).is_some() {
            return Err(Error::input(format!("{what}: duplicate metric {:?}", r[0])));
        }
    }
    let num = |key: &str| -> Result<f64> {
        let v = fields
            .get(key)
            .ok_or_else(|| Error::input(format!("{what}: missing metric {key:?}")))?;
        parse_f64(v, what, 0, key)
    };
    let count = |key: &str| -> Result<usize> {
        let v = fields
            .get(key)
            .ok_or_else(|| Error::input(format!("{what}: missing metric {key:?}")))?;
        v.parse()
            .map_err(|_| Error::input(format!("{what}: {key} is not a count: {v:?}")))
    };
    let mut per_class_f1 = BTreeMap::new();
    for (k, v) in &fields {
        if let Some(c) = k.strip_prefix("f1_class_") {
            let c: u32 = c
                .parse()
                .map_err(|_| Error::input(format!("{what}: bad class metric {k:?}")))?;
            per_class_f1.insert(ClassId(c), parse_f64(v, what, 0, k)?);
        } else if ![
            "n_samples",
            "f1",
            "f1_ground_truth",
            "size",
            "ambiguity",
            "coverage",
        ]
        .contains(&k.as_str())
        {
            return Err(Error::input(format!("{what}: unknown metric {k:?}")));
        }
    }
    Ok(EvalReport {
        n_samples: count("n_samples")?,
        f1: num("f1")?,
        size: count("size")?,
        ambiguity: num("ambiguity")?,
        coverage: num("coverage")?,
        per_class_f1,
        f1_ground_truth: fields
            .contains_key("f1_ground_truth")
            .then(|| num("f1_ground_truth"))
            .transpose()?,
    })
}

pub fn read_report_csv(path: &Path) -> Result<EvalReport> {
    parse_report_csv(&read_text(path)?, &path_str(path))
}

/// A Markdown table with one block of F1 / Size / Amb (%) / coverage rows
/// per named report.
pub fn render_report_markdown(rows: &[(&str, &EvalReport)]) -> String {
    let mut out = String::from("| Dataset | Metric | Value |\n|---|---|---|\n");
    for (name, r) in rows {
        let _ = writeln!(out, "| {name} (n={}) | F1 | {:.2} |", r.n_samples, r.f1);
        if let Some(gt) = r.f1_ground_truth {
            let _ = writeln!(out, "| | F1 (ground truth) | {gt:.2} |");
        }
        let _ = writeln!(out, "| | Size | {} |", r.size);
        let _ = writeln!(out, "| | Amb (%) | {:.1} |", 100.0 * r.ambiguity);
        let _ = writeln!(out, "| | Coverage (%) | {:.1} |", 100.0 * r.coverage);
    }
    out
}

/// `metric,before,after,rel_change_pct`; undefined changes print as `n/a`.
pub fn render_changes_csv(records: &[ChangeRecord]) -> String {
    let mut out = String::from("metric,before,after,rel_change_pct\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.metric,
            r.before,
            r.after,
            fmt_opt(r.rel_change_pct)
        );
    }
    out
}

pub fn parse_changes_csv(text: &str, what: &str) -> Result<Vec<ChangeRecord>> {
    let (header, rows) = parse_numeric_csv(text, what)?;
    if header != ["metric", "before", "after", "rel_change_pct"] {
        return Err(Error::input(format!(
            "{what}: unexpected change-record header"
        )));
    }
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let rel = if r[3] == "n/a" {
                None
            } else {
                Some(parse_f64(&r[3], what, i, "rel_change_pct")?)
            };
            Ok(ChangeRecord {
                metric: r[0].clone(),
                before: parse_f64(&r[1], what, i, "before")?,
                after: parse_f64(&r[2], what, i, "after")?,
                rel_change_pct: rel,
            })
        })
        .collect()
}

/// One row per attempted removal step.
pub fn render_trace_csv(trace: &PruneTrace) -> String {
    let mut out = String::from("k,removed_term_ids,accuracy_after,size_after,accepted\n");
    for s in &trace.steps {
        let ids: Vec<String> = s.removed.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.k,
            ids.join(" "),
            s.accuracy_after,
            s.size_after,
            s.accepted
        );
    }
    out
}

pub fn render_wins_csv(trace: &PruneTrace) -> String {
    let mut out = String::from("term_id,wins\n");
    for (id, w) in trace.wins.iter() {
        let _ = writeln!(out, "{id},{w}");
    }
    out
}
