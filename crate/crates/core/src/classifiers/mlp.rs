//! Small fully connected network: configurable hidden layers, ReLU
//! activations, softmax output, minibatch SGD with cross-entropy loss.
//!
//! Input standardization is folded into the first layer after training.

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, Classifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mix_seed;

const BATCH: usize = 32;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel {
    /// Row-major weight matrices, one per layer (out x in).
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    n_classes: usize,
    dim: usize,
}

pub fn fit(
    train: &Dataset,
    hidden: &[usize],
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<MlpModel> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    if hidden.contains(&0) {
        return Err(Error::invalid("hidden", "zero-width layer"));
    }
    if !(learning_rate > 0.0) {
        return Err(Error::invalid("learning_rate", "must be > 0"));
    }
    let d = train.dim();
    let n = train.n_samples();
    let n_classes = train.n_classes();

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
    let x: Array2<f64> =
        Array2::from_shape_fn((n, d), |(i, j)| (train.features()[[i, j]] - mean[j]) / sd[j]);

    let mut sizes = vec![d];
    sizes.extend_from_slice(hidden);
    sizes.push(n_classes);

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 900));
    let mut weights: Vec<Array2<f64>> = Vec::new();
    let mut biases: Vec<Array1<f64>> = Vec::new();
    for l in 0..sizes.len() - 1 {
        let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
        let scale = (2.0 / fan_in as f64).sqrt();
        weights.push(Array2::from_shape_fn((fan_out, fan_in), |_| {
            let u: f64 = rng.random_range(-1.0..1.0);
            u * scale
        }));
        biases.push(Array1::zeros(fan_out));
    }
    let n_layers = weights.len();

    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(BATCH) {
            let mut grad_w: Vec<Array2<f64>> =
                weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
            let mut grad_b: Vec<Array1<f64>> =
                biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect();
            for &i in batch {
                // forward
                let mut activations: Vec<Array1<f64>> = vec![x.row(i).to_owned()];
                for l in 0..n_layers {
                    let mut z = weights[l].dot(activations.last().unwrap()) + &biases[l];
                    if l + 1 < n_layers {
                        z.mapv_inplace(|v| v.max(0.0));
                    }
                    activations.push(z);
                }
                // softmax + cross-entropy gradient at the output
                let out = activations.last().unwrap();
                let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exp: Array1<f64> = out.mapv(|v| (v - max).exp());
                let z: f64 = exp.sum();
                let mut delta: Array1<f64> = exp / z;
                delta[train.labels()[i]] -= 1.0;
                // backward
                for l in (0..n_layers).rev() {
                    for (r, dr) in delta.iter().enumerate() {
                        for (c, ac) in activations[l].iter().enumerate() {
                            grad_w[l][[r, c]] += dr * ac;
                        }
                        grad_b[l][r] += dr;
                    }
                    if l > 0 {
                        let mut prev = weights[l].t().dot(&delta);
                        for (v, a) in prev.iter_mut().zip(activations[l].iter()) {
                            if *a <= 0.0 {
                                *v = 0.0;
                            }
                        }
                        delta = prev;
                    }
                }
            }
            let step = learning_rate / batch.len() as f64;
            for l in 0..n_layers {
                weights[l].scaled_add(-step, &grad_w[l]);
                biases[l].scaled_add(-step, &grad_b[l]);
            }
        }
    }

    // fold standardization into the first layer: w'(x) = w((x - mean)/sd)
    let w0 = &mut weights[0];
    for r in 0..w0.nrows() {
        let mut shift = 0.0;
        for c in 0..d {
            w0[[r, c]] /= sd[c];
            shift += w0[[r, c]] * mean[c];
        }
        biases[0][r] -= shift;
    }

    Ok(MlpModel {
        weights,
        biases,
        n_classes,
        dim: d,
    })
}

impl Classifier for MlpModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    /// Softmax probabilities.
    fn scores(&self, x: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        check_dim(self.dim, x)?;
        let n_layers = self.weights.len();
        let mut a = x.to_owned();
        for l in 0..n_layers {
            let mut z = self.weights[l].dot(&a) + &self.biases[l];
            if l + 1 < n_layers {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        let max = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = a.iter().map(|v| (v - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        Ok(exp.into_iter().map(|e| e / z).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::tests::blobs;

    #[test]
    fn learns_separated_blobs() {
        let data = blobs(&[(0.0, 0.0), (4.0, 4.0), (-4.0, 4.0)], 0.6, 60, 17);
        let model = fit(&data, &[16, 8], 80, 0.05, 3).unwrap();
        let preds = model.predict_batch(data.features()).unwrap();
        let acc = preds.iter().zip(data.labels()).filter(|(p, t)| p == t).count() as f64
            / preds.len() as f64;
        assert!(acc > 0.95, "training accuracy {acc}");
    }

    #[test]
    fn deterministic_under_seed() {
        let data = blobs(&[(0.0, 0.0), (3.0, 3.0)], 1.0, 30, 1);
        let a = fit(&data, &[8], 10, 0.05, 5).unwrap();
        let b = fit(&data, &[8], 10, 0.05, 5).unwrap();
        assert_eq!(a.weights[0], b.weights[0]);
        assert_eq!(a.biases[1], b.biases[1]);
    }

    #[test]
    fn scores_are_a_distribution() {
        let data = blobs(&[(0.0, 0.0), (3.0, 3.0)], 1.0, 30, 1);
        let model = fit(&data, &[8], 10, 0.05, 5).unwrap();
        let s = model.scores(data.row(0)).unwrap();
        let total: f64 = s.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(s.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }
}
