//! Attribution rows to transactions, and closed frequent itemset mining.
//!
//! The miner enumerates closed itemsets by prefix-preserving closure
//! extension (the LCM scheme) over bitset tid-lists: every closed itemset is
//! reached from exactly one parent, so no duplicate check or candidate
//! store is needed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// Sorted, duplicate-free set of feature indices deemed important for one sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Transaction {
    items: Vec<usize>,
}

impl Transaction {
    pub fn new(items: impl IntoIterator<Item = usize>) -> Self {
        let mut items: Vec<usize> = items.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        Transaction { items }
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains_all(&self, itemset: &[usize]) -> bool {
        itemset.iter().all(|i| self.items.binary_search(i).is_ok())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Itemset {
    pub items: Vec<usize>,
    pub support: usize,
}

/// How an attribution row is turned into a set of important dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BinarizationPolicy {
    /// The `k` dimensions with the largest `|score|`, ties to the lowest index.
    TopK { k: usize },
    /// Every dimension with `|score| >= tau`.
    AbsThreshold { tau: f64 },
    /// Every dimension with `score > 0`.
    Positive,
}

impl Default for BinarizationPolicy {
    fn default() -> Self {
        BinarizationPolicy::TopK { k: 3 }
    }
}

impl BinarizationPolicy {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        match *self {
            BinarizationPolicy::TopK { k: 0 } => Err(Error::config("top_k needs k >= 1")),
            BinarizationPolicy::TopK { k } if k > n_features => Err(Error::config(format!(
                "top_k k={k} exceeds the feature count {n_features}"
            ))),
            BinarizationPolicy::AbsThreshold { tau } if !(tau >= 0.0 && tau.is_finite()) => Err(
                Error::config(format!("abs_threshold needs a finite tau >= 0, got {tau}")),
            ),
            _ => Ok(()),
        }
    }
}

pub fn binarize(attr_row: &[f64], policy: &BinarizationPolicy) -> Result<Transaction> {
    policy.validate(attr_row.len())?;
    if attr_row.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("attribution row has non-finite scores"));
    }
    let t = match *policy {
        BinarizationPolicy::TopK { k } => {
            let mut order: Vec<usize> = (0..attr_row.len()).collect();
            // Stable sort keeps lower indices first among equal magnitudes.
            order.sort_by(|&a, &b| attr_row[b].abs().total_cmp(&attr_row[a].abs()));
            Transaction::new(order.into_iter().take(k))
        }
        BinarizationPolicy::AbsThreshold { tau } => Transaction::new(
            attr_row
                .iter()
                .enumerate()
                .filter(|(_, v)| v.abs() >= tau)
                .map(|(j, _)| j),
        ),
        BinarizationPolicy::Positive => Transaction::new(
            attr_row
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(|(j, _)| j),
        ),
    };
    Ok(t)
}

/// A mined closed itemset together with the ids of the transactions that
/// contain it (indices into the miner's input slice).
#[derive(Debug, Clone)]
pub(crate) struct MinedItemset {
    pub itemset: Itemset,
    pub tids: BitSet,
}

/// Closed frequent itemsets, sorted by descending support then ascending
/// lexicographic items. Empty transactions are ignored.
pub fn mine_closed_frequent(
    transactions: &[Transaction],
    min_support: usize,
) -> Result<Vec<Itemset>> {
    Ok(mine_with_tids(transactions, min_support)?
        .into_iter()
        .map(|m| m.itemset)
        .collect())
}

pub(crate) fn mine_with_tids(
    transactions: &[Transaction],
    min_support: usize,
) -> Result<Vec<MinedItemset>> {
    if min_support < 1 {
        return Err(Error::config("min_support must be >= 1"));
    }
    let n = transactions.len();
    let mut root = BitSet::new(n);
    let mut item_tids: BTreeMap<usize, BitSet> = BTreeMap::new();
    for (tid, t) in transactions.iter().enumerate() {
        if t.is_empty() {
            continue;
        }
        root.insert(tid);
        for &item in t.items() {
            item_tids
                .entry(item)
                .or_insert_with(|| BitSet::new(n))
                .insert(tid);
        }
    }
    if root.is_empty() {
        return Err(Error::input("no nonempty transactions to mine"));
    }

    // Dense local item ids preserve the original item order.
    let items: Vec<usize> = item_tids.keys().copied().collect();
    let tids: Vec<BitSet> = item_tids.into_values().collect();
    let miner = Miner {
        tids: &tids,
        min_support,
    };

    let mut out = Vec::new();
    let root_support = root.count();
    if root_support >= min_support {
        let closure = miner.closure(&root);
        if !closure.is_empty() {
            out.push((closure.clone(), root.clone()));
        }
        miner.expand(&closure, &root, 0, &mut out);
    }

    let mut mined: Vec<MinedItemset> = out
        .into_iter()
        .map(|(local, tids)| MinedItemset {
            itemset: Itemset {
                items: local.iter().map(|&i| items[i]).collect(),
                support: tids.count(),
            },
            tids,
        })
        .collect();
    mined.sort_by(|a, b| {
        b.itemset
            .support
            .cmp(&a.itemset.support)
            .then_with(|| a.itemset.items.cmp(&b.itemset.items))
    });
    Ok(mined)
}

struct Miner<'a> {
    tids: &'a [BitSet],
    min_support: usize,
}

impl Miner<'_> {
    /// Items contained in every transaction of `occ`.
    fn closure(&self, occ: &BitSet) -> Vec<usize> {
        (0..self.tids.len())
            .filter(|&j| occ.is_subset(&self.tids[j]))
            .collect()
    }

    /// Children of the closed set `closed` (occurrence set `occ`) whose core
    /// item is at least `start`.
    fn expand(
        &self,
        closed: &[usize],
        occ: &BitSet,
        start: usize,
        out: &mut Vec<(Vec<usize>, BitSet)>,
    ) {
        for i in start..self.tids.len() {
            if closed.binary_search(&i).is_ok() {
                continue;
            }
            let next = occ.intersection(&self.tids[i]);
            if next.count() < self.min_support {
                continue;
            }
            let child = self.closure(&next);
            // Prefix preservation: the closure must not add any item below i.
            let prefix_child = child.iter().take_while(|&&j| j < i);
            let prefix_parent = closed.iter().take_while(|&&j| j < i);
            if !prefix_child.eq(prefix_parent) {
                continue;
            }
            out.push((child.clone(), next.clone()));
            self.expand(&child, &next, i + 1, out);
        }
    }
}
