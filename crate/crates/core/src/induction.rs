//! Candidate box terms from closed itemsets, greedy set cover per class, and
//! assembly of the global rule model.

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::inference::term_accuracy;
use crate::mining::{binarize, mine_with_tids, BinarizationPolicy, Itemset, Transaction};
use crate::types::{
    AttributionMatrix, ClassId, Dataset, IntervalConstraint, LabelVector, RuleModel, Term, TermId,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub policy: BinarizationPolicy,
    /// Minimum itemset support as a fraction of the class's nonempty
    /// transactions; the absolute threshold is never below 2.
    pub min_support_fraction: f64,
    /// Candidates below this precision on the full extraction set are skipped.
    pub min_precision: f64,
    /// The cover stops once this fraction of the class is covered.
    pub cover_target: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            policy: BinarizationPolicy::default(),
            min_support_fraction: 0.05,
            min_precision: 0.5,
            cover_target: 1.0,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        self.policy.validate(n_features)?;
        let f = self.min_support_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::config(format!(
                "min_support_fraction must be in (0, 1], got {f}"
            )));
        }
        if !(0.0..=1.0).contains(&self.min_precision) {
            return Err(Error::config(format!(
                "min_precision must be in [0, 1], got {}",
                self.min_precision
            )));
        }
        let c = self.cover_target;
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::config(format!(
                "cover_target must be in (0, 1], got {c}"
            )));
        }
        Ok(())
    }

    /// Absolute support threshold for a class with `n_transactions`
    /// nonempty transactions.
    pub fn min_support(&self, n_transactions: usize) -> usize {
        ((self.min_support_fraction * n_transactions as f64).floor() as usize).max(2)
    }
}

/// A box term for class `c` with its coverage over `X_c` and its precision
/// over the whole extraction set.
#[derive(Debug, Clone)]
pub struct CandidateTerm {
    pub term: Term,
    pub coverage: BitSet,
    pub precision: f64,
}

/// Tightest box around `supporting_rows` on the itemset's dimensions.
pub fn build_term(
    id: TermId,
    itemset: &Itemset,
    class_label: ClassId,
    supporting_rows: &[&[f64]],
) -> Result<Term> {
    if supporting_rows.is_empty() {
        return Err(Error::Internal(format!(
            "itemset {:?} has no supporting rows",
            itemset.items
        )));
    }
    let constraints = itemset
        .items
        .iter()
        .map(|&dim| {
            let (lo, hi) = supporting_rows
                .iter()
                .map(|r| r[dim])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            IntervalConstraint::new(dim, lo, hi)
        })
        .collect::<Result<Vec<_>>>()?;
    Term::new(id, class_label, constraints)
}

/// Indices (into `candidates`) chosen by the greedy cover, in selection order.
pub(crate) fn greedy_cover_indices(
    candidates: &[CandidateTerm],
    class_size: usize,
    config: &ExtractionConfig,
) -> Vec<usize> {
    let mut covered = BitSet::new(class_size);
    let mut n_covered = 0usize;
    let mut used = vec![false; candidates.len()];
    let mut selected = Vec::new();
    while class_size > 0 && (n_covered as f64) < config.cover_target * class_size as f64 {
        let mut best: Option<(usize, usize)> = None;
        for (i, cand) in candidates.iter().enumerate() {
            if used[i] || cand.precision < config.min_precision {
                continue;
            }
            let gain = cand.coverage.difference_count(&covered);
            if gain == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, bg)) => {
                    gain > bg || (gain == bg && cand.precision > candidates[bi].precision)
                }
            };
            if better {
                best = Some((i, gain));
            }
        }
        let Some((i, gain)) = best else { break };
        used[i] = true;
        covered.union_with(&candidates[i].coverage);
        n_covered += gain;
        selected.push(i);
    }
    selected
}

/// Greedy set cover over `X_c`. Candidate order is the tie-break of last
/// resort.
pub fn greedy_cover(
    candidates: &[CandidateTerm],
    class_size: usize,
    config: &ExtractionConfig,
) -> Vec<Term> {
    greedy_cover_indices(candidates, class_size, config)
        .into_iter()
        .map(|i| candidates[i].term.clone())
        .collect()
}

/// Per-class record of what the extraction did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassDiagnostics {
    pub class_label: ClassId,
    pub n_samples: usize,
    pub empty_transactions: usize,
    pub min_support: usize,
    pub closed_itemsets: usize,
    pub candidates: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExtractionDiagnostics {
    pub classes: Vec<ClassDiagnostics>,
    pub warnings: Vec<String>,
}

/// Candidates for class `class_label`, in mined-itemset order.
pub fn class_candidates(
    data: &Dataset,
    labels: &LabelVector,
    class_rows: &[usize],
    transactions: &[Transaction],
    class_label: ClassId,
    min_support: usize,
) -> Result<Vec<CandidateTerm>> {
    let mined = mine_with_tids(transactions, min_support)?;
    let mut out = Vec::with_capacity(mined.len());
    for (ci, m) in mined.iter().enumerate() {
        let rows: Vec<&[f64]> = m
            .tids
            .iter()
            .map(|local| data.row(class_rows[local]))
            .collect();
        let term = build_term(TermId(ci), &m.itemset, class_label, &rows)?;
        let mut coverage = BitSet::new(class_rows.len());
        for (local, &row) in class_rows.iter().enumerate() {
            if term.applies(data.row(row)) {
                coverage.insert(local);
            }
        }
        if !m.tids.is_subset(&coverage) {
            return Err(Error::Internal(format!(
                "box for itemset {:?} misses a supporting row",
                m.itemset.items
            )));
        }
        let precision = term_accuracy(&term, data, labels)?;
        out.push(CandidateTerm {
            term,
            coverage,
            precision,
        });
    }
    Ok(out)
}

pub fn extract_rule_model(
    data: &Dataset,
    labels: &LabelVector,
    attributions: &AttributionMatrix,
    config: &ExtractionConfig,
) -> Result<RuleModel> {
    extract_with_diagnostics(data, labels, attributions, config).map(|(m, _)| m)
}

/// Full extraction: per class (ascending id) binarize, mine, build
/// candidates and greedy-cover; then assign term ids and freeze accuracies.
pub fn extract_with_diagnostics(
    data: &Dataset,
    labels: &LabelVector,
    attributions: &AttributionMatrix,
    config: &ExtractionConfig,
) -> Result<(RuleModel, ExtractionDiagnostics)> {
    labels.check_len(data.n_samples(), "prediction vector")?;
    attributions.check_shape(data)?;
    config.validate(data.n_features())?;
    if data.is_empty() {
        return Err(Error::input("cannot extract rules from an empty dataset"));
    }

    let mut by_class: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.as_slice().iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }

    let mut diagnostics = ExtractionDiagnostics::default();
    let mut selected_terms: Vec<Term> = Vec::new();
    for (&class_label, rows) in &by_class {
        let transactions = rows
            .iter()
            .map(|&i| binarize(attributions.row(i), &config.policy))
            .collect::<Result<Vec<_>>>()?;
        let empty = transactions.iter().filter(|t| t.is_empty()).count();
        let nonempty = transactions.len() - empty;
        let min_support = config.min_support(nonempty);
        let mut diag = ClassDiagnostics {
            class_label,
            n_samples: rows.len(),
            empty_transactions: empty,
            min_support,
            closed_itemsets: 0,
            candidates: 0,
            selected: 0,
        };
        let candidates = if nonempty == 0 {
            Vec::new()
        } else {
            class_candidates(data, labels, rows, &transactions, class_label, min_support)?
        };
        diag.closed_itemsets = candidates.len();
        diag.candidates = candidates
            .iter()
            .filter(|c| c.precision >= config.min_precision)
            .count();
        let chosen = greedy_cover(&candidates, rows.len(), config);
        diag.selected = chosen.len();
        if chosen.is_empty() {
            let msg = format!(
                "class {class_label}: no terms selected ({} closed itemsets, {} above min_precision, {empty} empty transactions)",
                diag.closed_itemsets, diag.candidates
            );
            warn!("{msg}");
            diagnostics.warnings.push(msg);
        }
        selected_terms.extend(chosen);
        diagnostics.classes.push(diag);
    }

    let terms: Vec<Term> = selected_terms
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.with_id(TermId(i)))
        .collect();
    let accuracies = terms
        .iter()
        .map(|t| term_accuracy(t, data, labels))
        .collect::<Result<Vec<_>>>()?;
    let default_class = labels
        .majority()
        .ok_or_else(|| Error::input("empty prediction vector"))?;
    let model = RuleModel::new(
        data.feature_names().to_vec(),
        by_class.keys().copied().collect(),
        default_class,
        terms,
        accuracies,
        BTreeMap::new(),
    )?;
    Ok((model, diagnostics))
}
