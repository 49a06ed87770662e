use std::path::{Path, PathBuf};

use log::info;
use rulebox::evaluation::{compare as compare_reports, Averaging, EvalOptions, EvalReport};
use rulebox::io::{
    read_attributions, read_dataset, read_labels, read_model, read_report_csv, render_changes_csv,
    render_model, render_report_csv, render_report_markdown, render_trace_csv, render_wins_csv,
    write_text,
};
use rulebox::{
    evaluate, evaluate_with, extract_with_diagnostics, threshold_prune, ChangeRecord, Dataset,
    Error, PruneConfig, Result,
};

use crate::provenance::{file_sha256, sha256_hex, GENERATOR};
use crate::{AveragingArg, CompareCmd, EvalCmd, ExtractCmd, F1Target, PruneCmd};

pub fn check_names(expected: &[String], data: &Dataset, what: &str) -> Result<()> {
    if expected != data.feature_names() {
        return Err(Error::Input(format!(
            "{what} columns {:?} do not match the dataset columns {:?}",
            expected,
            data.feature_names()
        )));
    }
    Ok(())
}

/// `out` with its extension replaced by `suffix` (e.g. `trace.csv`).
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

pub fn extract(cmd: &ExtractCmd) -> Result<()> {
    let data = read_dataset(&cmd.data)?;
    let preds = read_labels(&cmd.preds)?;
    let (attr_names, attr) = read_attributions(&cmd.attr)?;
    check_names(&attr_names, &data, "attribution")?;
    let config = cmd.rules.config();

    let (model, diagnostics) = extract_with_diagnostics(&data, &preds, &attr, &config)?;
    let config_json = serde_json::to_string(&config).map_err(Error::Json)?;
    let model = model
        .with_provenance("generator", GENERATOR)
        .with_provenance(
            "extraction_config_sha256",
            sha256_hex(config_json.as_bytes()),
        )
        .with_provenance("extraction_config", config_json)
        .with_provenance("data_sha256", file_sha256(&cmd.data)?)
        .with_provenance("preds_sha256", file_sha256(&cmd.preds)?)
        .with_provenance("attr_sha256", file_sha256(&cmd.attr)?);
    for c in &diagnostics.classes {
        info!(
            "class {}: {} samples, min support {}, {} closed itemsets, {} selected",
            c.class_label, c.n_samples, c.min_support, c.closed_itemsets, c.selected
        );
    }
    write_text(&cmd.out, &render_model(&model))?;

    let report = evaluate(&model, &data, &preds)?;
    println!("size: {}", model.len());
    println!("reference F1: {:.4}", report.f1);
    println!("wrote {}", cmd.out.display());
    Ok(())
}

pub fn prune(cmd: &PruneCmd) -> Result<()> {
    let config = PruneConfig::new(cmd.theta)?;
    let model = read_model(&cmd.model)?;
    let data = read_dataset(&cmd.data)?;
    let preds = read_labels(&cmd.preds)?;
    check_names(model.feature_names(), &data, "model")?;

    let (pruned, trace) = threshold_prune(&model, &data, &preds, &config)?;
    let pruned = pruned
        .with_provenance("prune_theta", cmd.theta.to_string())
        .with_provenance("pruned_from_sha256", file_sha256(&cmd.model)?)
        .with_provenance("prune_reference_sha256", file_sha256(&cmd.data)?);
    let before = evaluate(&model, &data, &preds)?;
    let after = evaluate(&pruned, &data, &preds)?;
    let changes = compare_reports(&before, &after, None);

    write_text(&cmd.out, &render_model(&pruned))?;
    write_text(&sibling(&cmd.out, "trace.csv"), &render_trace_csv(&trace))?;
    write_text(&sibling(&cmd.out, "wins.csv"), &render_wins_csv(&trace))?;
    write_text(
        &sibling(&cmd.out, "changes.csv"),
        &render_changes_csv(&changes),
    )?;

    println!("theta: {}", cmd.theta);
    println!("size: {} -> {}", model.len(), pruned.len());
    println!(
        "reference accuracy baseline: {:.4}",
        trace.baseline_accuracy
    );
    print_changes(&changes);
    Ok(())
}

pub fn eval(cmd: &EvalCmd) -> Result<()> {
    let model = read_model(&cmd.model)?;
    let data = read_dataset(&cmd.data)?;
    check_names(model.feature_names(), &data, "model")?;
    let labels = cmd.labels.as_deref().map(read_labels).transpose()?;
    let preds = cmd.preds.as_deref().map(read_labels).transpose()?;
    let options = EvalOptions {
        averaging: match cmd.averaging {
            AveragingArg::Macro => Averaging::Macro,
            AveragingArg::Weighted => Averaging::Weighted,
        },
    };
    let report = match cmd.f1_target {
        F1Target::Fidelity => {
            let preds = preds.ok_or_else(|| Error::Config("fidelity F1 needs --preds".into()))?;
            evaluate_with(&model, &data, &preds, labels.as_ref(), options)?
        }
        F1Target::GroundTruth => {
            let labels = labels
                .ok_or_else(|| Error::Config("--f1-target ground_truth needs --labels".into()))?;
            evaluate_with(&model, &data, &labels, None, options)?
        }
    };
    write_text(&cmd.out, &render_report_csv(&report))?;
    let md = render_report_markdown(&[(cmd.name.as_str(), &report)]);
    write_text(&sibling(&cmd.out, "md"), &md)?;
    print!("{md}");
    Ok(())
}

fn check_comparable(a: &EvalReport, b: &EvalReport, what: &str) -> Result<()> {
    if a.n_samples != b.n_samples {
        return Err(Error::Input(format!(
            "{what}: reports cover {} and {} samples",
            a.n_samples, b.n_samples
        )));
    }
    let keys = |r: &EvalReport| r.per_class_f1.keys().copied().collect::<Vec<_>>();
    if keys(a) != keys(b) || a.f1_ground_truth.is_some() != b.f1_ground_truth.is_some() {
        return Err(Error::Input(format!(
            "{what}: reports have different metric sets"
        )));
    }
    Ok(())
}

pub fn compare(cmd: &CompareCmd) -> Result<()> {
    let before = read_report_csv(&cmd.before)?;
    let after = read_report_csv(&cmd.after)?;
    check_comparable(&before, &after, "--before/--after")?;
    let reference = match (&cmd.ref_before, &cmd.ref_after) {
        (Some(b), Some(a)) => {
            let (b, a) = (read_report_csv(b)?, read_report_csv(a)?);
            check_comparable(&b, &a, "--ref-before/--ref-after")?;
            Some((b, a))
        }
        _ => None,
    };
    let changes = compare_reports(&before, &after, reference.as_ref().map(|(b, a)| (b, a)));
    write_text(&cmd.out, &render_changes_csv(&changes))?;
    print_changes(&changes);
    Ok(())
}

pub fn print_changes(changes: &[ChangeRecord]) {
    println!(
        "{:<16} {:>12} {:>12} {:>10}",
        "metric", "before", "after", "change %"
    );
    for c in changes {
        let rel = c
            .rel_change_pct
            .map_or_else(|| "n/a".to_string(), |p| format!("{p:.2}"));
        println!(
            "{:<16} {:>12.4} {:>12.4} {:>10}",
            c.metric, c.before, c.after, rel
        );
    }
}
