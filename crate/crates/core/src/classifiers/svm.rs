//! Linear one-vs-rest SVM trained by stochastic subgradient descent on the
//! hinge loss with step size 1/(λt).
//!
//! Features are standardized internally during training and the scaling is
//! folded back into the stored weights, so the model is a plain set of
//! per-class hyperplanes.

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, Classifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mix_seed;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearSvmModel {
    /// One weight row per class.
    weights: Array2<f64>,
    bias: Vec<f64>,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Mean regularized hinge objective per epoch, summed over the
    /// one-vs-rest problems; used to check training made progress.
    pub objective_trace: Vec<f64>,
}

/// Trains one binary hinge classifier per class.
pub fn fit(train: &Dataset, lambda: f64, epochs: usize, seed: u64) -> Result<LinearSvmModel> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("{lambda} <= 0")));
    }
    if epochs == 0 {
        return Err(Error::invalid("epochs", "must be >= 1"));
    }
    let present = train
        .class_counts()
        .iter()
        .filter(|&&c| c > 0)
        .count();
    if present < 2 {
        return Err(Error::invalid(
            "train",
            format!("SVM needs >= 2 classes with data, found {present}"),
        ));
    }
    let n = train.n_samples();
    let d = train.dim();

    // standardize; zero-variance features pass through unscaled
    let mean = train.features().mean_axis(ndarray::Axis(0)).unwrap();
    let mut sd = Array1::<f64>::zeros(d);
    for row in train.features().rows() {
        for j in 0..d {
            let delta = row[j] - mean[j];
            sd[j] += delta * delta;
        }
    }
    for v in sd.iter_mut() {
        *v = (*v / n as f64).sqrt();
        if *v < 1e-12 {
            *v = 1.0;
        }
    }
    // standardized features plus a constant column: the bias lives inside
    // the (regularized) weight vector, keeping the 1/(lambda t) steps stable
    let scaled: Array2<f64> = Array2::from_shape_fn((n, d + 1), |(i, j)| {
        if j < d {
            (train.features()[[i, j]] - mean[j]) / sd[j]
        } else {
            1.0
        }
    });

    let n_classes = train.n_classes();
    let mut weights = Array2::<f64>::zeros((n_classes, d));
    let mut bias = vec![0.0; n_classes];
    let mut objective_trace = vec![0.0; epochs];

    for class in 0..n_classes {
        let y: Vec<f64> = train
            .labels()
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        let mut w = Array1::<f64>::zeros(d + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 500 + class as u64));
        let mut order: Vec<usize> = (0..n).collect();
        let mut t = 0usize;
        for epoch in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let margin = y[i] * w.dot(&scaled.row(i));
                w *= 1.0 - eta * lambda;
                if margin < 1.0 {
                    w.scaled_add(eta * y[i], &scaled.row(i));
                }
            }
            // regularized mean hinge objective for this class at epoch end
            let mut hinge = 0.0;
            for i in 0..n {
                hinge += (1.0 - y[i] * w.dot(&scaled.row(i))).max(0.0);
            }
            objective_trace[epoch] += 0.5 * lambda * w.dot(&w) + hinge / n as f64;
        }
        // fold the standardization into the hyperplane
        let mut b = w[d];
        for j in 0..d {
            weights[[class, j]] = w[j] / sd[j];
            b -= w[j] * mean[j] / sd[j];
        }
        bias[class] = b;
    }

    Ok(LinearSvmModel {
        weights,
        bias,
        lambda,
        epochs,
        seed,
        objective_trace,
    })
}

impl Classifier for LinearSvmModel {
    fn n_classes(&self) -> usize {
        self.weights.nrows()
    }

    fn dim(&self) -> usize {
        self.weights.ncols()
    }

    fn scores(&self, x: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        check_dim(self.dim(), x)?;
        Ok((0..self.n_classes())
            .map(|c| self.weights.row(c).dot(&x) + self.bias[c])
            .collect())
    }
}
