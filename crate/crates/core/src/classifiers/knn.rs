//! k-nearest-neighbor classifier with Euclidean distance.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{check_dim, Classifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    train_x: Array2<f64>,
    train_y: Vec<usize>,
    pub k: usize,
    n_classes: usize,
}

pub fn fit(train: &Dataset, k: usize) -> Result<KnnModel> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    if k == 0 || k > train.n_samples() {
        return Err(Error::invalid(
            "k",
            format!("{k} outside 1..={}", train.n_samples()),
        ));
    }
    Ok(KnnModel {
        train_x: train.features().to_owned(),
        train_y: train.labels().to_vec(),
        k,
        n_classes: train.n_classes(),
    })
}

impl Classifier for KnnModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn dim(&self) -> usize {
        self.train_x.ncols()
    }

    /// Per-class neighbor counts among the k nearest. Equidistant points are
    /// ordered by training index so the neighbor set is deterministic.
    fn scores(&self, x: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        check_dim(self.dim(), x)?;
        let mut dist: Vec<(f64, usize)> = self
            .train_x
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let d: f64 = row
                    .iter()
                    .zip(x.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut counts = vec![0.0; self.n_classes];
        for &(_, i) in dist.iter().take(self.k) {
            counts[self.train_y[i]] += 1.0;
        }
        Ok(counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::tests::blobs;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn own_training_point_with_k1() {
        let data = blobs(&[(0.0, 0.0), (5.0, 5.0)], 1.0, 10, 3);
        let model = fit(&data, 1).unwrap();
        for (i, row) in data.features().rows().into_iter().enumerate() {
            assert_eq!(model.predict(row).unwrap(), data.labels()[i]);
        }
    }

    #[test]
    fn k_equals_n_gives_global_majority() {
        let features = Array2::from_shape_fn((9, 1), |(i, _)| i as f64);
        let labels = vec![0, 0, 0, 0, 0, 1, 1, 1, 1];
        let data = Dataset::from_parts(features, labels).unwrap();
        let model = fit(&data, 9).unwrap();
        assert_eq!(model.predict(array![100.0].view()).unwrap(), 0);
    }

    #[test]
    fn rejects_k_zero_and_k_above_n() {
        let data = blobs(&[(0.0, 0.0)], 1.0, 5, 0);
        assert!(fit(&data, 0).is_err());
        assert!(fit(&data, 6).is_err());
    }

    #[test]
    fn grid_matches_brute_force_scan() {
        // oracle: full O(n) scan with majority + smallest-id tie-break
        let data = blobs(&[(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)], 1.0, 25, 8);
        let k = 5;
        let model = fit(&data, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let x = array![rng.random_range(-2.0..5.0), rng.random_range(-2.0..5.0)];
            let mut dist: Vec<(f64, usize)> = data
                .features()
                .rows()
                .into_iter()
                .enumerate()
                .map(|(i, row)| {
                    let dx = row[0] - x[0];
                    let dy = row[1] - x[1];
                    (dx * dx + dy * dy, i)
                })
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut counts = [0usize; 3];
            for &(_, i) in dist.iter().take(k) {
                counts[data.labels()[i]] += 1;
            }
            let expected = counts
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .unwrap()
                .0;
            assert_eq!(model.predict(x.view()).unwrap(), expected);
        }
    }
}
