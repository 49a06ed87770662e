//! Fidelity, size, ambiguity and coverage reports, and relative changes
//! between two reports.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{ambiguity, coverage, predict_all};
use crate::types::{ClassId, Dataset, LabelVector, RuleModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    #[default]
    Macro,
    /// Per-class F1 weighted by the class's share of the truth vector.
    Weighted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct F1Scores {
    pub per_class: BTreeMap<ClassId, f64>,
    pub average: f64,
}

/// `2tp / (2tp + fp + fn)`: the harmonic mean of precision and recall with a
/// single rounding step.
fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

pub fn f1_scores(
    pred: &LabelVector,
    truth: &LabelVector,
    classes: &[ClassId],
    averaging: Averaging,
) -> Result<F1Scores> {
    if pred.len() != truth.len() {
        return Err(Error::input(format!(
            "{} predictions for {} reference labels",
            pred.len(),
            truth.len()
        )));
    }
    if classes.is_empty() {
        return Err(Error::input("F1 needs at least one class"));
    }
    let mut per_class = BTreeMap::new();
    let mut support = BTreeMap::new();
    for &c in classes {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (&p, &t) in pred.as_slice().iter().zip(truth.as_slice()) {
            match (p == c, t == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        if tp + fp + fn_ == 0 {
            warn!("class {c} is absent from both predictions and labels; scoring F1 = 0");
        }
        per_class.insert(c, f1_from_counts(tp, fp, fn_));
        support.insert(c, tp + fn_);
    }
    let average = match averaging {
        Averaging::Macro => per_class.values().sum::<f64>() / per_class.len() as f64,
        Averaging::Weighted => {
            let total: usize = support.values().sum();
            if total == 0 {
                0.0
            } else {
                per_class
                    .iter()
                    .map(|(c, f)| f * support[c] as f64)
                    .sum::<f64>()
                    / total as f64
            }
        }
    };
    Ok(F1Scores { per_class, average })
}

/// Unweighted mean of per-class F1 over `classes`.
pub fn macro_f1(pred: &LabelVector, truth: &LabelVector, classes: &[ClassId]) -> Result<f64> {
    f1_scores(pred, truth, classes, Averaging::Macro).map(|s| s.average)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_samples: usize,
    pub f1: f64,
    pub size: usize,
    pub ambiguity: f64,
    pub coverage: f64,
    pub per_class_f1: BTreeMap<ClassId, f64>,
    /// F1 against ground-truth labels, when supplied.
    pub f1_ground_truth: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub averaging: Averaging,
}

/// Scores `model` against black-box predictions on an evaluation set.
pub fn evaluate(model: &RuleModel, data: &Dataset, blackbox: &LabelVector) -> Result<EvalReport> {
    evaluate_with(model, data, blackbox, None, EvalOptions::default())
}

pub fn evaluate_with(
    model: &RuleModel,
    data: &Dataset,
    blackbox: &LabelVector,
    ground_truth: Option<&LabelVector>,
    options: EvalOptions,
) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::config("evaluation set is empty"));
    }
    blackbox.check_len(data.n_samples(), "prediction vector")?;
    let pred = predict_all(model, data)?;
    let classes_for = |truth: &LabelVector| -> Vec<ClassId> {
        let set: BTreeSet<ClassId> = model
            .classes()
            .iter()
            .copied()
            .chain(truth.classes())
            .collect();
        set.into_iter().collect()
    };
    let fidelity = f1_scores(&pred, blackbox, &classes_for(blackbox), options.averaging)?;
    let f1_ground_truth = match ground_truth {
        Some(truth) => {
            truth.check_len(data.n_samples(), "ground-truth label vector")?;
            Some(f1_scores(&pred, truth, &classes_for(truth), options.averaging)?.average)
        }
        None => None,
    };
    Ok(EvalReport {
        n_samples: data.n_samples(),
        f1: fidelity.average,
        size: model.len(),
        ambiguity: ambiguity(model, data)?,
        coverage: coverage(model, data)?,
        per_class_f1: fidelity.per_class,
        f1_ground_truth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeRecord {
    pub metric: String,
    pub before: f64,
    pub after: f64,
    /// `None` when `before` is zero.
    pub rel_change_pct: Option<f64>,
}

impl ChangeRecord {
    pub fn new(metric: impl Into<String>, before: f64, after: f64) -> Self {
        ChangeRecord {
            metric: metric.into(),
            before,
            after,
            rel_change_pct: relative_change_pct(before, after),
        }
    }
}

/// `100 * (after - before) / before`, undefined for a zero baseline.
pub fn relative_change_pct(before: f64, after: f64) -> Option<f64> {
    if before == 0.0 {
        None
    } else {
        Some(100.0 * (after - before) / before)
    }
}

/// Changes in test F1, size and ambiguity; `reference` adds the
/// reference-set F1 as `f1_reference`.
pub fn compare(
    before: &EvalReport,
    after: &EvalReport,
    reference: Option<(&EvalReport, &EvalReport)>,
) -> Vec<ChangeRecord> {
    let mut out = vec![ChangeRecord::new("f1", before.f1, after.f1)];
    if let Some((rb, ra)) = reference {
        out.push(ChangeRecord::new("f1_reference", rb.f1, ra.f1));
    }
    if let (Some(b), Some(a)) = (before.f1_ground_truth, after.f1_ground_truth) {
        out.push(ChangeRecord::new("f1_ground_truth", b, a));
    }
    out.push(ChangeRecord::new(
        "size",
        before.size as f64,
        after.size as f64,
    ));
    out.push(ChangeRecord::new(
        "ambiguity",
        before.ambiguity,
        after.ambiguity,
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{IntervalConstraint, Term, TermId};

    fn ids(v: &[u32]) -> LabelVector {
        LabelVector::from_ids(v.iter().copied())
    }

    const AB: [ClassId; 2] = [ClassId(0), ClassId(1)];

    #[test]
    fn perfect_agreement() {
        let y = ids(&[0, 1, 0, 1]);
        assert_eq!(macro_f1(&y, &y, &AB).unwrap(), 1.0);
    }

    #[test]
    fn one_of_each_confusion_cell() {
        let truth = ids(&[0, 0, 1, 1]);
        let pred = ids(&[0, 1, 0, 1]);
        let s = f1_scores(&pred, &truth, &AB, Averaging::Macro).unwrap();
        assert_eq!(s.per_class[&ClassId(0)], 0.5);
        assert_eq!(s.per_class[&ClassId(1)], 0.5);
        assert_eq!(s.average, 0.5);
    }

    #[test]
    fn constant_prediction() {
        let truth = ids(&[0, 0, 1, 1]);
        let pred = ids(&[0, 0, 0, 0]);
        let s = f1_scores(&pred, &truth, &AB, Averaging::Macro).unwrap();
        assert!((s.per_class[&ClassId(0)] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.per_class[&ClassId(1)], 0.0);
        assert!((s.average - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn absent_class_scores_zero() {
        let y = ids(&[0, 0]);
        assert_eq!(macro_f1(&y, &y, &AB).unwrap(), 0.5);
        assert!(macro_f1(&y, &ids(&[0]), &AB).is_err());
    }

    #[test]
    fn weighted_average() {
        let truth = ids(&[0, 0, 0, 1]);
        let pred = ids(&[0, 0, 0, 0]);
        let s = f1_scores(&pred, &truth, &AB, Averaging::Weighted).unwrap();
        // F1_0 = 6/7, F1_1 = 0, weights 3/4 and 1/4.
        assert!((s.average - 0.75 * 6.0 / 7.0).abs() < 1e-12);
    }

    fn separated() -> (RuleModel, Dataset, LabelVector) {
        let t = |id, c, lo, hi| {
            Term::new(
                TermId(id),
                ClassId(c),
                vec![IntervalConstraint::new(0, lo, hi).unwrap()],
            )
            .unwrap()
        };
        let m = RuleModel::new(
            Dataset::default_feature_names(1),
            AB.to_vec(),
            ClassId(0),
            vec![t(0, 0, 0.0, 1.0), t(1, 1, 2.0, 3.0)],
            vec![1.0, 1.0],
            Default::default(),
        )
        .unwrap();
        let x = Dataset::new(
            Dataset::default_feature_names(1),
            vec![vec![0.5], vec![1.0], vec![2.5], vec![3.0]],
        )
        .unwrap();
        (m, x, ids(&[0, 0, 1, 1]))
    }

    #[test]
    fn evaluate_perfect_model() {
        let (m, x, y) = separated();
        let r = evaluate(&m, &x, &y).unwrap();
        assert_eq!((r.f1, r.size, r.ambiguity, r.coverage), (1.0, 2, 0.0, 1.0));
        assert_eq!(r, evaluate(&m, &x, &y).unwrap());
    }

    #[test]
    fn evaluate_empty_model() {
        let (m, x, y) = separated();
        let empty = m.retain(|_| false);
        let r = evaluate(&empty, &x, &y).unwrap();
        assert_eq!((r.size, r.coverage, r.ambiguity), (0, 0.0, 0.0));
        assert!((r.f1 - 1.0 / 3.0).abs() < 1e-15);
        let none = x.select(&[]);
        assert!(matches!(
            evaluate(&m, &none, &ids(&[])),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn relative_changes() {
        assert_eq!(relative_change_pct(20.0, 11.0), Some(-45.0));
        assert_eq!(relative_change_pct(0.0, 0.3), None);
        let (m, x, y) = separated();
        let r = evaluate(&m, &x, &y).unwrap();
        for rec in compare(&r, &r, Some((&r, &r))) {
            let expect = if rec.before == 0.0 { None } else { Some(0.0) };
            assert_eq!(rec.rel_change_pct, expect, "{}", rec.metric);
        }
    }
}
