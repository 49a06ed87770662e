//! Seeded synthetic classification tasks (Gaussian blob mixtures).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::types::{ClassId, Dataset, LabelVector};

/// Two unit-variance blobs in 2-D centred at `(-sep, -sep)` and
/// `(sep, sep)`, alternating labels 0 and 1.
pub fn two_blobs(n: usize, sep: f64, seed: u64) -> (Dataset, LabelVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = (i % 2) as u32;
        let m = if c == 0 { -sep } else { sep };
        rows.push(vec![m + noise.sample(&mut rng), m + noise.sample(&mut rng)]);
        labels.push(ClassId(c));
    }
    let data =
        Dataset::new(Dataset::default_feature_names(2), rows).expect("finite synthetic rows");
    (data, LabelVector::new(labels))
}

/// A mixture where each class owns several Gaussian blobs placed uniformly
/// in a hypercube; overlap grows with `spread` relative to `box_size`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobMixture {
    pub n_classes: usize,
    pub blobs_per_class: usize,
    pub n_features: usize,
    /// Features `>= n_informative` are pure noise around zero.
    pub n_informative: usize,
    pub box_size: f64,
    pub spread: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for BlobMixture {
    fn default() -> Self {
        BlobMixture {
            n_classes: 3,
            blobs_per_class: 3,
            n_features: 6,
            n_informative: 4,
            box_size: 10.0,
            spread: 1.0,
            n_train: 600,
            n_test: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub train: Dataset,
    pub train_labels: LabelVector,
    pub test: Dataset,
    pub test_labels: LabelVector,
}

impl BlobMixture {
    pub fn generate(&self) -> SyntheticTask {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let d = self.n_features;
        let informative = self.n_informative.min(d);
        let place = Uniform::new(0.0, self.box_size).expect("valid range");
        let centres: Vec<(u32, Vec<f64>)> = (0..self.n_classes)
            .flat_map(|c| std::iter::repeat_n(c as u32, self.blobs_per_class))
            .map(|c| {
                let centre = (0..d)
                    .map(|j| {
                        if j < informative {
                            place.sample(&mut rng)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                (c, centre)
            })
            .collect();
        let noise = Normal::new(0.0, self.spread).expect("valid spread");
        let mut draw = |n: usize| {
            let mut rows = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let (c, centre) = &centres[rng.random_range(0..centres.len())];
                rows.push(centre.iter().map(|m| m + noise.sample(&mut rng)).collect());
                labels.push(ClassId(*c));
            }
            (
                Dataset::new(Dataset::default_feature_names(d), rows)
                    .expect("finite synthetic rows"),
                LabelVector::new(labels),
            )
        };
        let (train, train_labels) = draw(self.n_train);
        let (test, test_labels) = draw(self.n_test);
        SyntheticTask {
            train,
            train_labels,
            test,
            test_labels,
        }
    }
}
