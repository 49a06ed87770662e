//! Random fixtures and brute-force oracles shared by the property and
//! acceptance suites. Oracles here never call into the code they check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::Rng;
use rulebox::{
    ClassId, Dataset, IntervalConstraint, LabelVector, RuleModel, Term, TermId, Transaction,
};

pub fn random_transactions<R: Rng>(
    rng: &mut R,
    max_items: usize,
    max_tx: usize,
) -> Vec<Transaction> {
    let n_items = rng.random_range(1..=max_items);
    let n_tx = rng.random_range(1..=max_tx);
    let density: f64 = rng.random_range(0.1..0.7);
    (0..n_tx)
        .map(|_| Transaction::new((0..n_items).filter(|_| rng.random_bool(density))))
        .collect()
}

/// Every nonempty itemset over the items present, checked for support and
/// closedness by direct scanning. Sorted by (support desc, items asc).
pub fn brute_force_closed(db: &[Transaction], min_support: usize) -> Vec<(Vec<usize>, usize)> {
    let items: Vec<usize> = db
        .iter()
        .flat_map(|t| t.items().iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(items.len() <= 16, "brute force limited to 16 items");
    let support = |set: &[usize]| {
        db.iter()
            .filter(|t| set.iter().all(|i| t.items().contains(i)))
            .count()
    };
    let mut out = Vec::new();
    for mask in 1u32..(1 << items.len()) {
        let set: Vec<usize> = (0..items.len())
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| items[b])
            .collect();
        let s = support(&set);
        if s < min_support {
            continue;
        }
        let closed = items.iter().filter(|i| !set.contains(i)).all(|&i| {
            let mut sup = set.clone();
            sup.push(i);
            support(&sup) < s
        });
        if closed {
            out.push((set, s));
        }
    }
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Uniform samples in `[0, 10]^d`, labelled by the nearest of a few random
/// centres with some label noise.
pub fn random_reference<R: Rng>(
    rng: &mut R,
    n: usize,
    d: usize,
    n_classes: u32,
) -> (Dataset, LabelVector) {
    let centres: Vec<(u32, Vec<f64>)> = (0..n_classes * 2)
        .map(|i| {
            (
                i % n_classes,
                (0..d).map(|_| rng.random_range(0.0..10.0)).collect(),
            )
        })
        .collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..10.0)).collect();
        let dist = |c: &[f64]| {
            c.iter()
                .zip(&x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        let mut label = centres
            .iter()
            .min_by(|a, b| dist(&a.1).total_cmp(&dist(&b.1)))
            .map(|c| c.0)
            .unwrap();
        if rng.random_bool(0.1) {
            label = rng.random_range(0..n_classes);
        }
        rows.push(x);
        labels.push(ClassId(label));
    }
    (
        Dataset::new(Dataset::default_feature_names(d), rows).unwrap(),
        LabelVector::new(labels),
    )
}

/// A random box model over `data`. Accuracies are either measured on
/// `(data, labels)` or drawn from a coarse grid so exact ties occur.
pub fn random_model<R: Rng>(
    rng: &mut R,
    data: &Dataset,
    labels: &LabelVector,
    n_classes: u32,
    max_terms: usize,
) -> RuleModel {
    let d = data.n_features();
    let n_terms = rng.random_range(0..=max_terms);
    let grid_accuracies = rng.random_bool(0.3);
    let mut terms = Vec::with_capacity(n_terms);
    for id in 0..n_terms {
        let anchor = data.row(rng.random_range(0..data.n_samples()));
        let n_dims = rng.random_range(1..=d);
        let mut dims: Vec<usize> = (0..d).collect();
        for i in 0..n_dims {
            let j = rng.random_range(i..d);
            dims.swap(i, j);
        }
        let constraints = dims[..n_dims]
            .iter()
            .map(|&dim| {
                let w = rng.random_range(0.5..5.0);
                let lo = anchor[dim] - rng.random_range(0.0..w);
                IntervalConstraint::new(dim, lo, lo + w).unwrap()
            })
            .collect();
        terms.push(
            Term::new(
                TermId(id),
                ClassId(rng.random_range(0..n_classes)),
                constraints,
            )
            .unwrap(),
        );
    }
    let accuracies = terms
        .iter()
        .map(|t| {
            if grid_accuracies {
                rng.random_range(0..=4) as f64 / 4.0
            } else {
                rulebox::term_accuracy(t, data, labels).unwrap()
            }
        })
        .collect();
    let classes = (0..n_classes).map(ClassId).collect();
    let default_class = ClassId(rng.random_range(0..n_classes));
    RuleModel::new(
        data.feature_names().to_vec(),
        classes,
        default_class,
        terms,
        accuracies,
        BTreeMap::new(),
    )
    .unwrap()
}

fn box_contains(t: &Term, x: &[f64]) -> bool {
    t.constraints()
        .iter()
        .all(|c| x[c.dim] >= c.lo && x[c.dim] <= c.hi)
}

/// Ambiguity recomputed by collecting the class set of every sample.
pub fn brute_ambiguity(model: &RuleModel, data: &Dataset) -> f64 {
    let mut amb = 0;
    for x in data.rows() {
        let classes: HashSet<ClassId> = model
            .terms()
            .iter()
            .filter(|t| box_contains(t, x))
            .map(|t| t.class_label())
            .collect();
        if classes.len() > 1 {
            amb += 1;
        }
    }
    amb as f64 / data.n_samples() as f64
}

/// Macro F1 from an explicit confusion matrix.
pub fn brute_macro_f1(pred: &[ClassId], truth: &[ClassId], classes: &[ClassId]) -> f64 {
    let mut confusion: BTreeMap<(ClassId, ClassId), usize> = BTreeMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *confusion.entry((t, p)).or_default() += 1;
    }
    let mut total = 0.0;
    for &c in classes {
        let tp = *confusion.get(&(c, c)).unwrap_or(&0) as f64;
        let predicted: usize = confusion
            .iter()
            .filter(|((_, p), _)| *p == c)
            .map(|(_, n)| n)
            .sum();
        let actual: usize = confusion
            .iter()
            .filter(|((t, _), _)| *t == c)
            .map(|(_, n)| n)
            .sum();
        let f1 = if predicted + actual == 0 {
            0.0
        } else {
            2.0 * tp / (predicted + actual) as f64
        };
        total += f1;
    }
    total / classes.len() as f64
}

/// Sample-wise prediction by explicit argmax over (accuracy, -id).
pub fn brute_predict(model: &RuleModel, x: &[f64]) -> ClassId {
    let mut best: Option<(f64, TermId, ClassId)> = None;
    for (t, &a) in model.terms().iter().zip(model.accuracies()) {
        if !box_contains(t, x) {
            continue;
        }
        let better = match best {
            None => true,
            Some((ba, bid, _)) => a > ba || (a == ba && t.id() < bid),
        };
        if better {
            best = Some((a, t.id(), t.class_label()));
        }
    }
    best.map_or(model.default_class(), |b| b.2)
}
