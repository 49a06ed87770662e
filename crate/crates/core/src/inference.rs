//! Applicability, accuracy-ranked prediction, win counts and inter-class
//! ambiguity of a [`RuleModel`].

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::types::{ClassId, Dataset, LabelVector, RuleModel, Term, TermId};

/// Ids of all terms applicable to `x`, in term order.
pub fn applicable_terms(model: &RuleModel, x: &[f64]) -> Vec<TermId> {
    model
        .terms()
        .iter()
        .filter(|t| t.applies(x))
        .map(Term::id)
        .collect()
}

/// Fraction of samples covered by `term` whose label is the term's class;
/// zero when the term covers nothing.
pub fn term_accuracy(term: &Term, data: &Dataset, labels: &LabelVector) -> Result<f64> {
    labels.check_len(data.n_samples(), "label vector")?;
    let mut covered = 0usize;
    let mut correct = 0usize;
    for (x, &y) in data.rows().zip(labels.as_slice()) {
        if crate::types::term_applies(term, x)? {
            covered += 1;
            correct += usize::from(y == term.class_label());
        }
    }
    Ok(if covered == 0 {
        0.0
    } else {
        correct as f64 / covered as f64
    })
}

/// Index (into `model.terms()`) of the tie-break winner among applicable
/// terms: highest accuracy, then lowest term id.
fn winner_index(model: &RuleModel, x: &[f64]) -> Option<usize> {
    let acc = model.accuracies();
    let mut best: Option<usize> = None;
    for (i, t) in model.terms().iter().enumerate() {
        if !t.applies(x) {
            continue;
        }
        // Terms are id-ascending, so a strict comparison keeps the lowest id.
        if best.is_none_or(|b| acc[i] > acc[b]) {
            best = Some(i);
        }
    }
    best
}

/// The term that decides the prediction for `x`, if any applies.
pub fn selected_term(model: &RuleModel, x: &[f64]) -> Option<TermId> {
    winner_index(model, x).map(|i| model.terms()[i].id())
}

pub fn predict(model: &RuleModel, x: &[f64]) -> ClassId {
    winner_index(model, x)
        .map(|i| model.terms()[i].class_label())
        .unwrap_or_else(|| model.default_class())
}

pub fn predict_all(model: &RuleModel, data: &Dataset) -> Result<LabelVector> {
    model.check_dataset(data)?;
    Ok(data.rows().map(|x| predict(model, x)).collect())
}

/// Whether the terms applicable to `x` predict more than one class.
pub fn is_ambiguous(model: &RuleModel, x: &[f64]) -> bool {
    let mut first: Option<ClassId> = None;
    for t in model.terms() {
        if t.applies(x) {
            match first {
                None => first = Some(t.class_label()),
                Some(c) if c != t.class_label() => return true,
                _ => {}
            }
        }
    }
    false
}

/// Fraction of samples whose applicable terms span more than one class.
pub fn ambiguity(model: &RuleModel, data: &Dataset) -> Result<f64> {
    model.check_dataset(data)?;
    if data.is_empty() {
        return Err(Error::config(
            "ambiguity is undefined on an empty sample set",
        ));
    }
    let amb = data.rows().filter(|x| is_ambiguous(model, x)).count();
    Ok(amb as f64 / data.n_samples() as f64)
}

/// Fraction of samples with at least one applicable term.
pub fn coverage(model: &RuleModel, data: &Dataset) -> Result<f64> {
    model.check_dataset(data)?;
    if data.is_empty() {
        return Err(Error::config(
            "coverage is undefined on an empty sample set",
        ));
    }
    let covered = data
        .rows()
        .filter(|x| model.terms().iter().any(|t| t.applies(x)))
        .count();
    Ok(covered as f64 / data.n_samples() as f64)
}

/// Number of reference samples on which each term is the tie-break winner.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WinTable {
    wins: BTreeMap<TermId, usize>,
}

impl WinTable {
    pub fn get(&self, id: TermId) -> Option<usize> {
        self.wins.get(&id).copied()
    }

    pub fn total(&self) -> usize {
        self.wins.values().sum()
    }

    pub fn max(&self) -> usize {
        self.wins.values().copied().max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.wins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wins.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, usize)> + '_ {
        self.wins.iter().map(|(&id, &w)| (id, w))
    }

    /// Terms whose win count is at most `k`.
    pub fn at_most(&self, k: usize) -> BTreeSet<TermId> {
        self.iter()
            .filter(|&(_, w)| w <= k)
            .map(|(id, _)| id)
            .collect()
    }
}

/// Win counts of every term in `model` on `(data, labels)`. Labels are only
/// shape-checked: the winner depends on the model's frozen accuracies.
pub fn win_counts(model: &RuleModel, data: &Dataset, labels: &LabelVector) -> Result<WinTable> {
    model.check_dataset(data)?;
    labels.check_len(data.n_samples(), "label vector")?;
    let mut counts = vec![0usize; model.len()];
    for x in data.rows() {
        if let Some(i) = winner_index(model, x) {
            counts[i] += 1;
        }
    }
    Ok(WinTable {
        wins: model.terms().iter().map(Term::id).zip(counts).collect(),
    })
}

/// Precomputed, accuracy-ranked applicable terms per sample. Predicting with
/// any sub-model of the indexed model is then a scan for the first
/// surviving term.
#[derive(Debug, Clone)]
pub(crate) struct RankedApplicability {
    ranked: Vec<Vec<usize>>,
}

impl RankedApplicability {
    pub fn build(model: &RuleModel, data: &Dataset) -> Self {
        let acc = model.accuracies();
        let ranked = data
            .rows()
            .map(|x| {
                let mut app: Vec<usize> = (0..model.len())
                    .filter(|&i| model.terms()[i].applies(x))
                    .collect();
                // Stable sort: equal accuracies stay in id order.
                app.sort_by(|&a, &b| acc[b].total_cmp(&acc[a]));
                app
            })
            .collect();
        RankedApplicability { ranked }
    }

    /// Predictions of the sub-model keeping the term indices in `alive`.
    pub fn predict_with(&self, model: &RuleModel, alive: &[bool]) -> Vec<ClassId> {
        self.ranked
            .iter()
            .map(|app| {
                app.iter()
                    .find(|&&i| alive[i])
                    .map(|&i| model.terms()[i].class_label())
                    .unwrap_or_else(|| model.default_class())
            })
            .collect()
    }
}
