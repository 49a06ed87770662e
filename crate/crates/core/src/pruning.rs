//! Threshold pruning: drop terms in ascending win-count order while the
//! reference-set accuracy stays within a relative tolerance of the original.
//!
//! Win counts and term accuracies are computed once on the input model and
//! never refreshed inside the loop. At step `k` every surviving term with
//! `wins <= k` is removed at once. A candidate is accepted while
//! `accuracy >= (1 - theta) * baseline`; with `theta == 0` it must in
//! addition reproduce the original per-sample predictions exactly, so safe
//! pruning never changes behaviour on the reference set.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{predict_all, win_counts, RankedApplicability, WinTable};
use crate::types::{ClassId, Dataset, LabelVector, RuleModel, TermId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    theta: f64,
}

impl PruneConfig {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::config(format!(
                "theta must be in [0, 1], got {theta}"
            )));
        }
        Ok(PruneConfig { theta })
    }

    /// `theta = 0`: only prediction-preserving removals.
    pub fn safe() -> Self {
        PruneConfig { theta: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruneStep {
    pub k: usize,
    /// Terms this step tried to remove (surviving terms with `wins <= k`).
    pub removed: Vec<TermId>,
    pub accuracy_after: f64,
    pub size_after: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneTrace {
    pub theta: f64,
    pub baseline_accuracy: f64,
    pub wins: WinTable,
    pub steps: Vec<PruneStep>,
    /// Largest `k` whose removal step was accepted.
    pub final_k: Option<usize>,
}

impl PruneTrace {
    pub fn removed(&self) -> BTreeSet<TermId> {
        self.steps
            .iter()
            .filter(|s| s.accepted)
            .flat_map(|s| s.removed.iter().copied())
            .collect()
    }
}

fn accuracy_of(pred: &[ClassId], labels: &LabelVector) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    let correct = pred
        .iter()
        .zip(labels.as_slice())
        .filter(|(p, y)| p == y)
        .count();
    correct as f64 / pred.len() as f64
}

/// Fraction of samples where the model's prediction equals the label.
pub fn model_accuracy(model: &RuleModel, data: &Dataset, labels: &LabelVector) -> Result<f64> {
    labels.check_len(data.n_samples(), "label vector")?;
    let pred = predict_all(model, data)?;
    Ok(accuracy_of(pred.as_slice(), labels))
}

pub fn threshold_prune(
    model: &RuleModel,
    data: &Dataset,
    labels: &LabelVector,
    config: &PruneConfig,
) -> Result<(RuleModel, PruneTrace)> {
    labels.check_len(data.n_samples(), "label vector")?;
    let wins = win_counts(model, data, labels)?;
    let index = RankedApplicability::build(model, data);

    let all_alive = vec![true; model.len()];
    let original = index.predict_with(model, &all_alive);
    let baseline = accuracy_of(&original, labels);
    let floor = (1.0 - config.theta) * baseline;
    let safe = config.theta == 0.0;

    let term_wins: Vec<usize> = model
        .terms()
        .iter()
        .map(|t| wins.get(t.id()).unwrap_or(0))
        .collect();
    let max_wins = wins.max();

    let mut alive = all_alive;
    let mut steps = Vec::new();
    let mut final_k = None;
    // The unpruned model trivially meets its own baseline, so the loop starts
    // from the first removal. `k` runs to max_wins, at which point every
    // term is gone.
    for k in 0..=max_wins {
        let doomed: Vec<usize> = (0..model.len())
            .filter(|&i| alive[i] && term_wins[i] <= k)
            .collect();
        if doomed.is_empty() {
            continue;
        }
        let mut candidate = alive.clone();
        for &i in &doomed {
            candidate[i] = false;
        }
        let pred = index.predict_with(model, &candidate);
        let acc = accuracy_of(&pred, labels);
        let accepted = acc >= floor && (!safe || pred == original);
        steps.push(PruneStep {
            k,
            removed: doomed.iter().map(|&i| model.terms()[i].id()).collect(),
            accuracy_after: acc,
            size_after: candidate.iter().filter(|&&a| a).count(),
            accepted,
        });
        if !accepted {
            break;
        }
        alive = candidate;
        final_k = Some(k);
    }

    let mut keep = alive.iter().copied();
    let pruned = model.retain(|_| keep.next().unwrap_or(false));
    let trace = PruneTrace {
        theta: config.theta,
        baseline_accuracy: baseline,
        wins,
        steps,
        final_k,
    };
    Ok((pruned, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::predict;
    use crate::types::{IntervalConstraint, Term};

    fn term(id: usize, class: u32, lo: f64, hi: f64) -> Term {
        Term::new(
            TermId(id),
            ClassId(class),
            vec![IntervalConstraint::new(0, lo, hi).unwrap()],
        )
        .unwrap()
    }

    fn model(terms: Vec<Term>, acc: Vec<f64>, default: u32) -> RuleModel {
        RuleModel::new(
            crate::Dataset::default_feature_names(1),
            vec![ClassId(0), ClassId(1)],
            ClassId(default),
            terms,
            acc,
            Default::default(),
        )
        .unwrap()
    }

    fn data(xs: &[f64]) -> Dataset {
        Dataset::new(
            Dataset::default_feature_names(1),
            xs.iter().map(|&x| vec![x]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn theta_bounds() {
        assert!(PruneConfig::new(-0.1).is_err());
        assert!(PruneConfig::new(1.1).is_err());
        assert!(PruneConfig::new(f64::NAN).is_err());
        assert!(PruneConfig::new(1.0).is_ok());
    }

    #[test]
    fn accuracy_counts() {
        let empty = model(vec![], vec![], 0);
        let x = data(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let y = LabelVector::from_ids([0, 0, 0, 1, 1]);
        assert_eq!(model_accuracy(&empty, &x, &y).unwrap(), 0.6);

        let sep = model(
            vec![term(0, 0, 0.0, 2.0), term(1, 1, 3.0, 4.0)],
            vec![1.0, 1.0],
            0,
        );
        assert_eq!(model_accuracy(&sep, &x, &y).unwrap(), 1.0);

        // Overlap on [4, 5] resolved to class 0; sample at 5 labeled 1 is wrong.
        let tie = model(
            vec![term(0, 0, 0.0, 5.0), term(1, 1, 4.0, 9.0)],
            vec![0.9, 0.9],
            0,
        );
        let x = data(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let y = LabelVector::from_ids([0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(model_accuracy(&tie, &x, &y).unwrap(), 0.9);
    }

    #[test]
    fn safe_pruning_drops_zero_win_term() {
        // t0 wins 5 samples, t1 wins 3; t2 lies inside t0 with lower accuracy.
        let m = model(
            vec![
                term(0, 0, 0.0, 4.0),
                term(1, 1, 5.0, 7.0),
                term(2, 1, 1.0, 2.0),
            ],
            vec![1.0, 1.0, 0.4],
            0,
        );
        let x = data(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let y = LabelVector::from_ids([0, 0, 0, 0, 0, 1, 1, 1]);
        let (pruned, trace) = threshold_prune(&m, &x, &y, &PruneConfig::safe()).unwrap();
        assert_eq!(trace.wins.get(TermId(0)), Some(5));
        assert_eq!(trace.wins.get(TermId(1)), Some(3));
        assert_eq!(trace.wins.get(TermId(2)), Some(0));
        let ids: Vec<TermId> = pruned.terms().iter().map(|t| t.id()).collect();
        assert_eq!(ids, vec![TermId(0), TermId(1)]);
        for r in x.rows() {
            assert_eq!(predict(&pruned, r), predict(&m, r));
        }
        assert_eq!(pruned.accuracy(TermId(1)), Some(1.0));
    }

    #[test]
    fn safe_pruning_fixed_point() {
        // Each term wins once and removing either flips one sample.
        let m = model(
            vec![term(0, 0, 0.0, 0.0), term(1, 1, 1.0, 1.0)],
            vec![1.0, 1.0],
            0,
        );
        let x = data(&[0.0, 1.0]);
        let y = LabelVector::from_ids([0, 1]);
        let (pruned, trace) = threshold_prune(&m, &x, &y, &PruneConfig::safe()).unwrap();
        assert_eq!(pruned, m);
        assert_eq!(trace.final_k, None);
        assert_eq!(trace.steps.len(), 1);
        assert!(!trace.steps[0].accepted);
    }

    #[test]
    fn theta_one_prunes_to_empty() {
        let m = model(
            vec![term(0, 0, 0.0, 0.0), term(1, 1, 1.0, 1.0)],
            vec![1.0, 1.0],
            0,
        );
        let x = data(&[0.0, 1.0]);
        let y = LabelVector::from_ids([0, 1]);
        let (pruned, trace) = threshold_prune(&m, &x, &y, &PruneConfig::new(1.0).unwrap()).unwrap();
        assert!(pruned.is_empty());
        assert_eq!(trace.final_k, Some(1));
        assert_eq!(pruned.default_class(), ClassId(0));
    }

    #[test]
    fn tolerance_allows_bounded_loss() {
        // 10 samples; t1 wins one sample. Dropping it costs 10% accuracy.
        // Dropping t0 too leaves the default class, which is right on 9 of 10.
        let m = model(
            vec![term(0, 0, 0.0, 8.0), term(1, 1, 9.0, 9.0)],
            vec![1.0, 1.0],
            0,
        );
        let x = data(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let y = LabelVector::from_ids([0, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
        let (p05, _) = threshold_prune(&m, &x, &y, &PruneConfig::new(0.05).unwrap()).unwrap();
        assert_eq!(p05.len(), 2);
        let (p10, _) = threshold_prune(&m, &x, &y, &PruneConfig::new(0.1).unwrap()).unwrap();
        assert!(p10.is_empty());
        assert!(model_accuracy(&p10, &x, &y).unwrap() >= 0.9 * 1.0);
    }

    #[test]
    fn safe_mode_rejects_accuracy_neutral_flips() {
        // t0 (class 0) wins the sample at 1 although it is labeled 1, and t1
        // (class 1) wins the sample at 3 although it is labeled 0. Removing
        // both keeps accuracy but changes predictions.
        let m = model(
            vec![term(0, 0, 0.0, 1.0), term(1, 1, 1.0, 3.0)],
            vec![0.9, 0.8],
            0,
        );
        let x = data(&[1.0, 3.0]);
        let y = LabelVector::from_ids([1, 0]);
        let (pruned, _) = threshold_prune(&m, &x, &y, &PruneConfig::safe()).unwrap();
        assert_eq!(pruned, m);
    }

    #[test]
    fn shape_mismatch() {
        let m = model(vec![], vec![], 0);
        let r = threshold_prune(
            &m,
            &data(&[0.0]),
            &LabelVector::from_ids([0, 1]),
            &PruneConfig::safe(),
        );
        assert!(matches!(r, Err(Error::Input(_))));
    }
}
