//! Domain types shared by every stage of the pipeline.
//!
//! All types are immutable once constructed; constructors validate the
//! invariants so downstream code can index without re-checking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class identifier. Classes are ordered by their numeric id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Stable term identifier, assigned once at model assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermId(pub usize);

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Row-major real feature matrix with feature names and row identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n_features: usize,
    feature_names: Vec<String>,
    row_ids: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from rows; row ids default to the row index.
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let row_ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::with_row_ids(feature_names, rows, row_ids)
    }

    pub fn with_row_ids(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        row_ids: Vec<String>,
    ) -> Result<Self> {
        let d = feature_names.len();
        if d == 0 {
            return Err(Error::input("dataset needs at least one feature"));
        }
        let mut seen = BTreeSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::input(format!("duplicate feature name {name:?}")));
            }
        }
        if row_ids.len() != rows.len() {
            return Err(Error::input(format!(
                "{} row ids for {} rows",
                row_ids.len(),
                rows.len()
            )));
        }
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::input(format!(
                    "row {i} has {} values, expected {d}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::input(format!(
                    "row {i}, column {:?}: non-finite value",
                    feature_names[j]
                )));
            }
            values.extend(row);
        }
        Ok(Dataset {
            values,
            n_features: d,
            feature_names,
            row_ids,
        })
    }

    /// Names `x0, x1, ...` for `d` anonymous features.
    pub fn default_feature_names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("x{j}")).collect()
    }

    pub fn n_samples(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn is_empty(&self) -> bool {
        self.row_ids.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_features)
    }

    /// Subset of rows in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            values,
            n_features: self.n_features,
            feature_names: self.feature_names.clone(),
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
        }
    }
}

/// One class label per sample, either black-box predictions or ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector(Vec<ClassId>);

impl LabelVector {
    pub fn new(labels: Vec<ClassId>) -> Self {
        LabelVector(labels)
    }

    pub fn from_ids(ids: impl IntoIterator<Item = u32>) -> Self {
        LabelVector(ids.into_iter().map(ClassId).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[ClassId] {
        &self.0
    }

    pub fn get(&self, i: usize) -> ClassId {
        self.0[i]
    }

    /// Sorted distinct classes present.
    pub fn classes(&self) -> Vec<ClassId> {
        let set: BTreeSet<ClassId> = self.0.iter().copied().collect();
        set.into_iter().collect()
    }

    /// Most frequent class, ties resolved to the lowest id.
    pub fn majority(&self) -> Option<ClassId> {
        let mut counts: BTreeMap<ClassId, usize> = BTreeMap::new();
        for &c in &self.0 {
            *counts.entry(c).or_default() += 1;
        }
        let mut best: Option<(ClassId, usize)> = None;
        for (c, n) in counts {
            if best.is_none_or(|(_, bn)| n > bn) {
                best = Some((c, n));
            }
        }
        best.map(|(c, _)| c)
    }

    pub(crate) fn check_len(&self, n: usize, what: &str) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::input(format!(
                "{what} has {} labels but the dataset has {n} rows",
                self.0.len()
            )));
        }
        Ok(())
    }
}

impl FromIterator<ClassId> for LabelVector {
    fn from_iter<I: IntoIterator<Item = ClassId>>(iter: I) -> Self {
        LabelVector(iter.into_iter().collect())
    }
}

/// Per-sample, per-feature importance scores from a local explainer.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_features: usize,
}

impl AttributionMatrix {
    pub fn new(n_features: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let mut values = Vec::with_capacity(n_rows * n_features);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::input(format!(
                    "attribution row {i} has {} values, expected {n_features}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(format!(
                    "attribution row {i} has a non-finite score"
                )));
            }
            values.extend(row);
        }
        Ok(AttributionMatrix {
            values,
            n_rows,
            n_features,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values
            .chunks_exact(self.n_features.max(1))
            .take(self.n_rows)
    }

    pub(crate) fn check_shape(&self, data: &Dataset) -> Result<()> {
        if self.n_rows != data.n_samples() || self.n_features != data.n_features() {
            return Err(Error::input(format!(
                "attribution matrix is {}x{} but the dataset is {}x{}",
                self.n_rows,
                self.n_features,
                data.n_samples(),
                data.n_features()
            )));
        }
        Ok(())
    }
}

/// Closed interval `lo <= x[dim] <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalConstraint {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
}

impl IntervalConstraint {
    pub fn new(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::input(format!(
                "invalid interval [{lo}, {hi}] on dimension {dim}"
            )));
        }
        Ok(IntervalConstraint { dim, lo, hi })
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Conjunction of interval constraints predicting one class.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    id: TermId,
    class_label: ClassId,
    constraints: Vec<IntervalConstraint>,
}

impl Term {
    pub fn new(
        id: TermId,
        class_label: ClassId,
        constraints: Vec<IntervalConstraint>,
    ) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::input(format!("term {id} has no constraints")));
        }
        let mut dims = BTreeSet::new();
        for c in &constraints {
            if !dims.insert(c.dim) {
                return Err(Error::input(format!(
                    "term {id} constrains dimension {} twice",
                    c.dim
                )));
            }
        }
        Ok(Term {
            id,
            class_label,
            constraints,
        })
    }

    pub fn id(&self) -> TermId {
        self.id
    }

    pub fn class_label(&self) -> ClassId {
        self.class_label
    }

    pub fn constraints(&self) -> &[IntervalConstraint] {
        &self.constraints
    }

    pub(crate) fn with_id(mut self, id: TermId) -> Self {
        self.id = id;
        self
    }

    fn max_dim(&self) -> usize {
        self.constraints.iter().map(|c| c.dim).max().unwrap_or(0)
    }

    /// Unchecked applicability; callers guarantee every constrained dim
    /// indexes into `x`.
    #[inline]
    pub fn applies(&self, x: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.contains(x[c.dim]))
    }
}

/// Whether every constraint of `term` is satisfied by `x`.
pub fn term_applies(term: &Term, x: &[f64]) -> Result<bool> {
    if term.max_dim() >= x.len() {
        return Err(Error::input(format!(
            "term {} constrains dimension {} but the sample has {} features",
            term.id,
            term.max_dim(),
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("sample has non-finite values"));
    }
    Ok(term.applies(x))
}

/// Global rule model: the union of per-class DNFs plus frozen per-term
/// accuracies used for tie-breaking.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleModel {
    feature_names: Vec<String>,
    classes: Vec<ClassId>,
    default_class: ClassId,
    terms: Vec<Term>,
    accuracies: Vec<f64>,
    provenance: BTreeMap<String, String>,
}

impl RuleModel {
    /// `accuracies[i]` belongs to `terms[i]`. Term ids must be strictly
    /// ascending; they need not be dense, since pruning keeps original ids.
    pub fn new(
        feature_names: Vec<String>,
        classes: Vec<ClassId>,
        default_class: ClassId,
        terms: Vec<Term>,
        accuracies: Vec<f64>,
        provenance: BTreeMap<String, String>,
    ) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::input("rule model needs at least one class"));
        }
        if classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("model classes must be sorted and distinct"));
        }
        if classes.binary_search(&default_class).is_err() {
            return Err(Error::input(format!(
                "default class {default_class} is not among the model classes"
            )));
        }
        if accuracies.len() != terms.len() {
            return Err(Error::input(format!(
                "{} accuracies for {} terms",
                accuracies.len(),
                terms.len()
            )));
        }
        if terms.windows(2).any(|w| w[0].id >= w[1].id) {
            return Err(Error::input("term ids must be unique and ascending"));
        }
        let d = feature_names.len();
        for (t, &a) in terms.iter().zip(&accuracies) {
            if classes.binary_search(&t.class_label).is_err() {
                return Err(Error::input(format!(
                    "term {} predicts unknown class {}",
                    t.id, t.class_label
                )));
            }
            if t.max_dim() >= d {
                return Err(Error::input(format!(
                    "term {} constrains dimension {} of a {d}-feature model",
                    t.id,
                    t.max_dim()
                )));
            }
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::input(format!(
                    "term {} accuracy {a} outside [0, 1]",
                    t.id
                )));
            }
        }
        Ok(RuleModel {
            feature_names,
            classes,
            default_class,
            terms,
            accuracies,
            provenance,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn default_class(&self) -> ClassId {
        self.default_class
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn accuracies(&self) -> &[f64] {
        &self.accuracies
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn provenance(&self) -> &BTreeMap<String, String> {
        &self.provenance
    }

    pub fn with_provenance(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.provenance.insert(key.into(), value.into());
        self
    }

    /// Position of a term id in `terms()`.
    pub fn index_of(&self, id: TermId) -> Option<usize> {
        self.terms.binary_search_by_key(&id, |t| t.id).ok()
    }

    pub fn accuracy(&self, id: TermId) -> Option<f64> {
        self.index_of(id).map(|i| self.accuracies[i])
    }

    /// Terms of class `c` (the per-class DNF).
    pub fn class_terms(&self, c: ClassId) -> impl Iterator<Item = &Term> + '_ {
        self.terms.iter().filter(move |t| t.class_label == c)
    }

    /// The model restricted to terms satisfying `keep`: ids, accuracies,
    /// default class and provenance are carried over unchanged.
    pub fn retain(&self, mut keep: impl FnMut(&Term) -> bool) -> RuleModel {
        let (terms, accuracies) = self
            .terms
            .iter()
            .zip(&self.accuracies)
            .filter(|(t, _)| keep(t))
            .map(|(t, &a)| (t.clone(), a))
            .unzip();
        RuleModel {
            feature_names: self.feature_names.clone(),
            classes: self.classes.clone(),
            default_class: self.default_class,
            terms,
            accuracies,
            provenance: self.provenance.clone(),
        }
    }

    pub(crate) fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.n_features() != self.n_features() {
            return Err(Error::input(format!(
                "model has {} features but the dataset has {}",
                self.n_features(),
                data.n_features()
            )));
        }
        Ok(())
    }
}
