//! A small linear-softmax black box and an occlusion explainer, enough to
//! run the whole pipeline without external ML tooling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{AttributionMatrix, ClassId, Dataset, LabelVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSoftmaxModel {
    classes: Vec<ClassId>,
    n_features: usize,
    /// Row-major `classes.len() x n_features`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

/// Result of training: the model plus the mean cross-entropy after each epoch.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: LinearSoftmaxModel,
    pub losses: Vec<f64>,
}

impl LinearSoftmaxModel {
    pub fn new(
        classes: Vec<ClassId>,
        n_features: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
    ) -> Result<Self> {
        if classes.is_empty() || classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input(
                "classes must be nonempty, sorted and distinct",
            ));
        }
        if weights.len() != classes.len() * n_features || biases.len() != classes.len() {
            return Err(Error::input(
                "weight/bias shape does not match classes x features",
            ));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite model parameter"));
        }
        Ok(LinearSoftmaxModel {
            classes,
            n_features,
            weights,
            biases,
        })
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let w = &self.weights[c * self.n_features..(c + 1) * self.n_features];
            *o = self.biases[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// Class probabilities in `classes()` order.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.classes.len()];
        self.logits_into(x, &mut p);
        softmax_in_place(&mut p);
        p
    }

    /// Index of the argmax class; ties go to the lowest class.
    fn predict_index(&self, x: &[f64]) -> usize {
        let mut logits = vec![0.0; self.classes.len()];
        self.logits_into(x, &mut logits);
        let mut best = 0;
        for (i, &v) in logits.iter().enumerate().skip(1) {
            if v > logits[best] {
                best = i;
            }
        }
        best
    }

    pub fn predict(&self, x: &[f64]) -> ClassId {
        self.classes[self.predict_index(x)]
    }
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for e in v.iter_mut() {
        *e = (*e - max).exp();
        sum += *e;
    }
    for e in v.iter_mut() {
        *e /= sum;
    }
}

/// Full-batch gradient descent on mean softmax cross-entropy. Weights start
/// from a small seeded Gaussian.
pub fn train_linear_softmax(
    data: &Dataset,
    labels: &LabelVector,
    config: &TrainConfig,
) -> Result<Trained> {
    if config.epochs == 0 {
        return Err(Error::config("epochs must be >= 1"));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::config(format!(
            "learning_rate must be positive, got {}",
            config.learning_rate
        )));
    }
    labels.check_len(data.n_samples(), "training label vector")?;
    if data.is_empty() {
        return Err(Error::input("cannot train on an empty dataset"));
    }
    let classes = labels.classes();
    let k = classes.len();
    let d = data.n_features();
    let targets: Vec<usize> = labels
        .as_slice()
        .iter()
        .map(|c| {
            classes
                .binary_search(c)
                .expect("label drawn from its own class set")
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = Normal::new(0.0, 0.01).expect("valid normal");
    let mut model = LinearSoftmaxModel {
        classes,
        n_features: d,
        weights: (0..k * d).map(|_| init.sample(&mut rng)).collect(),
        biases: vec![0.0; k],
    };

    let n = data.n_samples() as f64;
    let mut probs = vec![0.0; k];
    let mut grad_w = vec![0.0; k * d];
    let mut grad_b = vec![0.0; k];
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        grad_b.iter_mut().for_each(|g| *g = 0.0);
        for (x, &y) in data.rows().zip(&targets) {
            model.logits_into(x, &mut probs);
            softmax_in_place(&mut probs);
            for c in 0..k {
                let err = probs[c] - f64::from(u8::from(c == y));
                grad_b[c] += err;
                for (g, &xv) in grad_w[c * d..(c + 1) * d].iter_mut().zip(x) {
                    *g += err * xv;
                }
            }
        }
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w -= config.learning_rate * g / n;
        }
        for (b, g) in model.biases.iter_mut().zip(&grad_b) {
            *b -= config.learning_rate * g / n;
        }
        let loss = mean_cross_entropy(&model, data, &targets);
        if !loss.is_finite() {
            return Err(Error::Divergence(format!(
                "loss became {loss} at epoch {epoch}"
            )));
        }
        losses.push(loss);
    }
    Ok(Trained { model, losses })
}

fn mean_cross_entropy(model: &LinearSoftmaxModel, data: &Dataset, targets: &[usize]) -> f64 {
    let mut logits = vec![0.0; model.classes.len()];
    let mut total = 0.0;
    for (x, &y) in data.rows().zip(targets) {
        model.logits_into(x, &mut logits);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        total += lse - logits[y];
    }
    total / data.n_samples() as f64
}

pub fn predict_blackbox(model: &LinearSoftmaxModel, data: &Dataset) -> LabelVector {
    data.rows().map(|x| model.predict(x)).collect()
}

/// Per-feature column means.
pub fn feature_means(data: &Dataset) -> Vec<f64> {
    let mut means = vec![0.0; data.n_features()];
    for x in data.rows() {
        for (m, v) in means.iter_mut().zip(x) {
            *m += v;
        }
    }
    let n = data.n_samples().max(1) as f64;
    means.iter_mut().for_each(|m| *m /= n);
    means
}

/// `score[i][j] = p(yhat_i | x_i) - p(yhat_i | x_i with feature j set to
/// baseline[j])`. The baseline defaults to the feature means of `data`.
pub fn occlusion_attributions(
    model: &LinearSoftmaxModel,
    data: &Dataset,
    baseline: Option<&[f64]>,
) -> Result<AttributionMatrix> {
    let d = data.n_features();
    if d != model.n_features {
        return Err(Error::input(format!(
            "black box expects {} features, dataset has {d}",
            model.n_features
        )));
    }
    let means;
    let baseline = match baseline {
        Some(b) => {
            if b.len() != d || b.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(
                    "occlusion baseline must have one finite value per feature",
                ));
            }
            b
        }
        None => {
            means = feature_means(data);
            &means
        }
    };
    let mut rows = Vec::with_capacity(data.n_samples());
    let mut occluded = vec![0.0; d];
    for x in data.rows() {
        let c = model.predict_index(x);
        let p = model.probabilities(x)[c];
        occluded.copy_from_slice(x);
        let mut row = Vec::with_capacity(d);
        for j in 0..d {
            occluded[j] = baseline[j];
            row.push(p - model.probabilities(&occluded)[c]);
            occluded[j] = x[j];
        }
        rows.push(row);
    }
    AttributionMatrix::new(d, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::two_blobs;

    #[test]
    fn separable_blobs_train_well() {
        let (x, y) = two_blobs(200, 3.0, 7);
        let trained = train_linear_softmax(&x, &y, &TrainConfig::default()).unwrap();
        let pred = predict_blackbox(&trained.model, &x);
        let acc = pred
            .as_slice()
            .iter()
            .zip(y.as_slice())
            .filter(|(a, b)| a == b)
            .count() as f64
            / 200.0;
        assert!(acc >= 0.95, "training accuracy {acc}");
        for w in trained.losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "loss increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn zero_epochs_rejected() {
        let (x, y) = two_blobs(10, 3.0, 0);
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(matches!(
            train_linear_softmax(&x, &y, &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn divergence_reported() {
        let (x, y) = two_blobs(20, 1e150, 0);
        let cfg = TrainConfig {
            learning_rate: 1e10,
            epochs: 5,
            ..Default::default()
        };
        assert!(matches!(
            train_linear_softmax(&x, &y, &cfg),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = two_blobs(50, 3.0, 1);
        let cfg = TrainConfig {
            seed: 42,
            ..Default::default()
        };
        let a = train_linear_softmax(&x, &y, &cfg).unwrap().model;
        let b = train_linear_softmax(&x, &y, &cfg).unwrap().model;
        assert_eq!(
            a.weights().iter().map(|w| w.to_bits()).collect::<Vec<_>>(),
            b.weights().iter().map(|w| w.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(a, b);
    }

    #[test]
    fn zero_model_predicts_lowest_class() {
        let m =
            LinearSoftmaxModel::new(vec![ClassId(2), ClassId(5)], 2, vec![0.0; 4], vec![0.0; 2])
                .unwrap();
        assert_eq!(m.predict(&[1.0, -3.0]), ClassId(2));
    }

    #[test]
    fn blackbox_permutes_with_samples() {
        let (x, y) = two_blobs(30, 3.0, 4);
        let m = train_linear_softmax(&x, &y, &TrainConfig::default())
            .unwrap()
            .model;
        let pred = predict_blackbox(&m, &x);
        let order: Vec<usize> = (0..30).rev().collect();
        let permuted = predict_blackbox(&m, &x.select(&order));
        for (i, &j) in order.iter().enumerate() {
            assert_eq!(permuted.get(i), pred.get(j));
        }
    }

    #[test]
    fn occlusion_zero_weight_and_self_baseline() {
        // Feature 1 carries no weight in either class.
        let m = LinearSoftmaxModel::new(
            vec![ClassId(0), ClassId(1)],
            2,
            vec![-1.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0],
        )
        .unwrap();
        let x = Dataset::new(
            Dataset::default_feature_names(2),
            vec![vec![2.0, 5.0], vec![-1.0, 3.0], vec![0.5, -2.0]],
        )
        .unwrap();
        let attr = occlusion_attributions(&m, &x, None).unwrap();
        for row in attr.rows() {
            assert_eq!(row[1], 0.0);
            assert!(row.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
        let attr = occlusion_attributions(&m, &x, Some(&[2.0, 5.0])).unwrap();
        assert_eq!(attr.row(0), &[0.0, 0.0]);
    }

    #[test]
    fn occlusion_sign() {
        // 1-D, class 1 logit grows with x. x = 2 above baseline 0 predicts
        // class 1 with p = sigmoid(4) > p(baseline) = 0.5.
        let m = LinearSoftmaxModel::new(
            vec![ClassId(0), ClassId(1)],
            1,
            vec![-1.0, 1.0],
            vec![0.0, 0.0],
        )
        .unwrap();
        let x = Dataset::new(Dataset::default_feature_names(1), vec![vec![2.0]]).unwrap();
        let attr = occlusion_attributions(&m, &x, Some(&[0.0])).unwrap();
        let expect = 1.0 / (1.0 + (-4.0f64).exp()) - 0.5;
        assert!(attr.row(0)[0] > 0.0);
        assert!((attr.row(0)[0] - expect).abs() < 1e-12);
    }
}
