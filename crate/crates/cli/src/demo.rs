//! End-to-end run on a generated blob mixture: train the linear black box,
//! explain it by occlusion, extract, prune at theta 0 and at `--theta`,
//! evaluate on held-out data and write every artifact to one directory.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use log::info;
use rulebox::evaluation::{compare, EvalOptions};
use rulebox::io::{
    parse_attributions, parse_changes_csv, parse_dataset, parse_labels, parse_model,
    parse_report_csv, read_text, render_attributions, render_changes_csv, render_dataset,
    render_labels, render_model, render_report_csv, render_report_markdown, render_trace_csv,
    render_wins_csv, write_text,
};
use rulebox::surrogate::{
    occlusion_attributions, predict_blackbox, train_linear_softmax, TrainConfig,
};
use rulebox::synth::BlobMixture;
use rulebox::{
    evaluate_with, extract_with_diagnostics, predict_all, threshold_prune, ChangeRecord, Error,
    EvalReport, PruneConfig, Result, RuleModel,
};

use crate::commands::print_changes;
use crate::provenance::{sha256_hex, GENERATOR};
use crate::DemoCmd;

const SWEEP: [f64; 6] = [0.0, 0.01, 0.02, 0.05, 0.1, 0.2];

/// How a written artifact is re-read to confirm the bytes are canonical.
#[derive(Clone, Copy)]
enum Kind {
    Dataset,
    Labels,
    Attributions,
    Model,
    Report,
    Changes,
    /// Write-only tables; checked as canonical CSV.
    Table,
}

struct Artifacts<'a> {
    dir: &'a Path,
    written: Vec<(String, Kind)>,
}

impl Artifacts<'_> {
    fn write(&mut self, name: &str, kind: Kind, text: &str) -> Result<()> {
        write_text(&self.dir.join(name), text)?;
        self.written.push((name.to_string(), kind));
        Ok(())
    }

    fn verify_round_trip(&self) -> Result<()> {
        for (name, kind) in &self.written {
            let path = self.dir.join(name);
            let text = read_text(&path)?;
            let again = match kind {
                Kind::Dataset => render_dataset(&parse_dataset(&text, name)?),
                Kind::Labels => {
                    let column = text.lines().next().unwrap_or_default();
                    render_labels(&parse_labels(&text, name)?, column)
                }
                Kind::Attributions => {
                    let (names, m) = parse_attributions(&text, name)?;
                    render_attributions(&names, &m)
                }
                Kind::Model => render_model(&parse_model(&text)?),
                Kind::Report => render_report_csv(&parse_report_csv(&text, name)?),
                Kind::Changes => render_changes_csv(&parse_changes_csv(&text, name)?),
                Kind::Table => rewrite_csv(&text, name)?,
            };
            if again != text {
                return Err(Error::Internal(format!(
                    "{name} does not round-trip byte-identically"
                )));
            }
        }
        Ok(())
    }
}

fn rewrite_csv(text: &str, name: &str) -> Result<String> {
    let csv_err = |source| Error::Csv {
        path: name.to_string(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in reader.records() {
        w.write_record(&rec.map_err(csv_err)?).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

struct Evaluated {
    theta: f64,
    model: RuleModel,
    reference: EvalReport,
    test: EvalReport,
}

fn report_pair(model: &RuleModel, task: &Task) -> Result<(EvalReport, EvalReport)> {
    let opts = EvalOptions::default();
    let reference = evaluate_with(model, &task.x, &task.yhat, Some(&task.y), opts)?;
    let test = evaluate_with(
        model,
        &task.x_test,
        &task.yhat_test,
        Some(&task.y_test),
        opts,
    )?;
    Ok((reference, test))
}

struct Task {
    x: rulebox::Dataset,
    y: rulebox::LabelVector,
    yhat: rulebox::LabelVector,
    x_test: rulebox::Dataset,
    y_test: rulebox::LabelVector,
    yhat_test: rulebox::LabelVector,
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |p| format!("{p:.2}"))
}

pub fn run(cmd: &DemoCmd) -> Result<()> {
    let start = Instant::now();
    let tuned = PruneConfig::new(cmd.theta)?;
    let mixture = BlobMixture {
        n_train: cmd.n_train,
        n_test: cmd.n_test,
        seed: cmd.seed,
        ..Default::default()
    };
    let generated = mixture.generate();
    let train_config = TrainConfig {
        epochs: cmd.epochs,
        seed: cmd.seed,
        ..Default::default()
    };
    let blackbox = train_linear_softmax(&generated.train, &generated.train_labels, &train_config)?;
    let task = Task {
        yhat: predict_blackbox(&blackbox.model, &generated.train),
        yhat_test: predict_blackbox(&blackbox.model, &generated.test),
        x: generated.train,
        y: generated.train_labels,
        x_test: generated.test,
        y_test: generated.test_labels,
    };
    let attr = occlusion_attributions(&blackbox.model, &task.x, None)?;
    info!(
        "black box trained: final loss {:.4}",
        blackbox.losses.last().copied().unwrap_or(f64::NAN)
    );

    let config = cmd.rules.config();
    let (model, diagnostics) = extract_with_diagnostics(&task.x, &task.yhat, &attr, &config)?;
    let config_json = serde_json::to_string(&config).map_err(Error::Json)?;
    let task_json = serde_json::to_string(&mixture).map_err(Error::Json)?;
    let model = model
        .with_provenance("generator", GENERATOR)
        .with_provenance(
            "extraction_config_sha256",
            sha256_hex(config_json.as_bytes()),
        )
        .with_provenance("extraction_config", config_json)
        .with_provenance("demo_task", task_json)
        .with_provenance("seed", cmd.seed.to_string());

    let mut thetas: Vec<f64> = SWEEP.to_vec();
    if !thetas.contains(&tuned.theta()) {
        thetas.push(tuned.theta());
        thetas.sort_by(f64::total_cmp);
    }
    let (ref0, test0) = report_pair(&model, &task)?;
    let mut runs = Vec::new();
    let mut traces = Vec::new();
    for &theta in &thetas {
        let (pruned, trace) =
            threshold_prune(&model, &task.x, &task.yhat, &PruneConfig::new(theta)?)?;
        let pruned = pruned.with_provenance("prune_theta", theta.to_string());
        let (reference, test) = report_pair(&pruned, &task)?;
        traces.push((theta, trace));
        runs.push(Evaluated {
            theta,
            model: pruned,
            reference,
            test,
        });
    }

    // Invariants the pipeline promises; a failure here is a bug.
    let safe = &runs[0];
    if predict_all(&safe.model, &task.x)? != predict_all(&model, &task.x)?
        || safe.reference.f1 != ref0.f1
    {
        return Err(Error::Internal(
            "theta = 0 pruning changed reference predictions".into(),
        ));
    }
    for r in &runs {
        if r.model.len() > model.len() || r.test.ambiguity > test0.ambiguity {
            return Err(Error::Internal(format!(
                "pruning at theta {} grew size or ambiguity",
                r.theta
            )));
        }
    }

    let mut out = Artifacts {
        dir: &cmd.out,
        written: Vec::new(),
    };
    out.write("train.csv", Kind::Dataset, &render_dataset(&task.x))?;
    out.write(
        "train_labels.csv",
        Kind::Labels,
        &render_labels(&task.y, "label"),
    )?;
    out.write(
        "train_preds.csv",
        Kind::Labels,
        &render_labels(&task.yhat, "prediction"),
    )?;
    out.write(
        "train_attr.csv",
        Kind::Attributions,
        &render_attributions(task.x.feature_names(), &attr),
    )?;
    out.write("test.csv", Kind::Dataset, &render_dataset(&task.x_test))?;
    out.write(
        "test_labels.csv",
        Kind::Labels,
        &render_labels(&task.y_test, "label"),
    )?;
    out.write(
        "test_preds.csv",
        Kind::Labels,
        &render_labels(&task.yhat_test, "prediction"),
    )?;
    out.write("model.json", Kind::Model, &render_model(&model))?;
    out.write(
        "report_original.csv",
        Kind::Report,
        &render_report_csv(&test0),
    )?;
    out.write(
        "report_original_reference.csv",
        Kind::Report,
        &render_report_csv(&ref0),
    )?;

    let mut md_rows: Vec<(String, &EvalReport)> = vec![("original".to_string(), &test0)];
    let mut sweep =
        String::from("theta,size,size_rel_pct,ambiguity,amb_rel_pct,f1_test,f1_reference\n");
    let chosen: Vec<&Evaluated> = runs
        .iter()
        .filter(|r| r.theta == 0.0 || r.theta == tuned.theta())
        .collect();
    for (r, (_, trace)) in runs.iter().zip(&traces) {
        let size = ChangeRecord::new("size", model.len() as f64, r.model.len() as f64);
        let amb = ChangeRecord::new("ambiguity", test0.ambiguity, r.test.ambiguity);
        let _ = writeln!(
            sweep,
            "{},{},{},{},{},{},{}",
            r.theta,
            r.model.len(),
            fmt_pct(size.rel_change_pct),
            r.test.ambiguity,
            fmt_pct(amb.rel_change_pct),
            r.test.f1,
            r.reference.f1
        );
        if chosen.iter().any(|c| c.theta == r.theta) {
            let tag = format!("theta_{}", r.theta);
            out.write(
                &format!("model_{tag}.json"),
                Kind::Model,
                &render_model(&r.model),
            )?;
            out.write(
                &format!("model_{tag}.trace.csv"),
                Kind::Table,
                &render_trace_csv(trace),
            )?;
            out.write(
                &format!("model_{tag}.wins.csv"),
                Kind::Table,
                &render_wins_csv(trace),
            )?;
            out.write(
                &format!("report_{tag}.csv"),
                Kind::Report,
                &render_report_csv(&r.test),
            )?;
            out.write(
                &format!("report_{tag}_reference.csv"),
                Kind::Report,
                &render_report_csv(&r.reference),
            )?;
            let changes = compare(&test0, &r.test, Some((&ref0, &r.reference)));
            out.write(
                &format!("changes_{tag}.csv"),
                Kind::Changes,
                &render_changes_csv(&changes),
            )?;
            md_rows.push((format!("pruned, theta={}", r.theta), &r.test));
        }
    }
    out.write("sweep.csv", Kind::Table, &sweep)?;
    let md_refs: Vec<(&str, &EvalReport)> = md_rows.iter().map(|(n, r)| (n.as_str(), *r)).collect();
    // Markdown is for people and has no reader, so it is not re-checked.
    write_text(
        &cmd.out.join("report.md"),
        &render_report_markdown(&md_refs),
    )?;
    out.verify_round_trip()?;

    for w in &diagnostics.warnings {
        println!("warning: {w}");
    }
    println!(
        "black box: linear softmax, train accuracy vs labels {:.3}",
        accuracy(&task.yhat, &task.y)
    );
    println!(
        "extracted {} terms over {} classes; test F1 {:.3}, ambiguity {:.1}%",
        model.len(),
        model.classes().len(),
        test0.f1,
        100.0 * test0.ambiguity
    );
    println!();
    println!(
        "{:>6} {:>8} {:>8} {:>10} {:>10} {:>6}",
        "theta", "dF1_X", "dF1_X'", "dSize %", "dAmb %", "size"
    );
    for r in &chosen {
        let size = ChangeRecord::new("size", model.len() as f64, r.model.len() as f64);
        let amb = ChangeRecord::new("ambiguity", test0.ambiguity, r.test.ambiguity);
        println!(
            "{:>6} {:>8.3} {:>8.3} {:>10} {:>10} {:>6}",
            format!("{:.2}", r.theta),
            r.reference.f1 - ref0.f1,
            r.test.f1 - test0.f1,
            fmt_pct(size.rel_change_pct),
            fmt_pct(amb.rel_change_pct),
            r.model.len()
        );
    }
    if let Some(last) = chosen.last() {
        println!();
        print_changes(&compare(&test0, &last.test, Some((&ref0, &last.reference))));
    }
    println!();
    println!(
        "artifacts in {} ({} files, all round-trip)",
        cmd.out.display(),
        out.written.len() + 1
    );
    info!("demo finished in {:?}", start.elapsed());
    Ok(())
}

fn accuracy(pred: &rulebox::LabelVector, truth: &rulebox::LabelVector) -> f64 {
    let hits = pred
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .filter(|(a, b)| a == b)
        .count();
    hits as f64 / pred.len().max(1) as f64
}
