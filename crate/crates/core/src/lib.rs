//! Global rule models built from local feature attributions, and
//! win-count threshold pruning of those models.
//!
//! The pipeline runs per class: attribution rows become transactions of
//! important dimensions ([`mining`]), closed frequent itemsets become
//! axis-aligned box terms, and a greedy set cover picks a compact DNF
//! ([`induction`]). Prediction resolves overlapping terms by their frozen
//! accuracy ([`inference`]); [`pruning`] removes terms that rarely decide a
//! prediction, and [`evaluation`] reports fidelity, size and inter-class
//! ambiguity before and after.

pub mod bitset;
pub mod error;
pub mod evaluation;
pub mod induction;
pub mod inference;
pub mod io;
pub mod mining;
pub mod pruning;
pub mod surrogate;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use evaluation::{
    compare, evaluate, evaluate_with, macro_f1, Averaging, ChangeRecord, EvalOptions, EvalReport,
};
pub use induction::{extract_rule_model, extract_with_diagnostics, ExtractionConfig};
pub use inference::{
    ambiguity, applicable_terms, predict, predict_all, term_accuracy, win_counts, WinTable,
};
pub use mining::{binarize, mine_closed_frequent, BinarizationPolicy, Itemset, Transaction};
pub use pruning::{model_accuracy, threshold_prune, PruneConfig, PruneTrace};
pub use types::{
    term_applies, AttributionMatrix, ClassId, Dataset, IntervalConstraint, LabelVector, RuleModel,
    Term, TermId,
};
