//! Gaussian discriminant analysis with isotropic or diagonal class
//! covariances.
//!
//! Scores are unnormalized log-posteriors: `log L_i(x) + log prior_i`, with
//! the shared evidence term omitted. The argmax therefore matches the exact
//! posterior argmax.

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use super::{check_dim, Classifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837877066409345483560659472811;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GdaMode {
    #[default]
    Isotropic,
    Diagonal,
}

/// Per-class variance under the selected mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassVariance {
    Isotropic(f64),
    Diagonal(Vec<f64>),
}

/// One fitted class. Classes with no training rows have no component and
/// score negative infinity, so they are never predicted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GdaClass {
    pub mean: Vec<f64>,
    pub variance: ClassVariance,
    pub log_prior: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GdaModel {
    classes: Vec<Option<GdaClass>>,
    mode: GdaMode,
    dim: usize,
}

/// Fits per-class sample means, floored variances, and frequency priors.
///
/// Every non-empty class needs at least 2 samples; empty classes stay in the
/// label space but are never predicted.
pub fn fit(train: &Dataset, mode: GdaMode) -> Result<GdaModel> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let d = train.dim();
    let n = train.n_samples() as f64;

    // Variance floor scaled to the data; keeps all-identical classes finite.
    let global_mean = train.features().mean_axis(ndarray::Axis(0)).unwrap();
    let global_var = train
        .features()
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .zip(global_mean.iter())
                .map(|(x, m)| (x - m) * (x - m))
                .sum::<f64>()
        })
        .sum::<f64>()
        / (n * d as f64);
    let floor = 1e-6 * (global_var + 1e-12);

    let mut classes = Vec::with_capacity(train.n_classes());
    for (class, members) in train.class_indices().into_iter().enumerate() {
        if members.is_empty() {
            classes.push(None);
            continue;
        }
        if members.len() < 2 {
            return Err(Error::InsufficientData {
                class,
                count: members.len(),
            });
        }
        let nc = members.len() as f64;
        let mut mean = vec![0.0; d];
        for &i in &members {
            for (j, v) in train.row(i).iter().enumerate() {
                mean[j] += v;
            }
        }
        for m in &mut mean {
            *m /= nc;
        }
        let mut per_dim = vec![0.0; d];
        for &i in &members {
            for (j, v) in train.row(i).iter().enumerate() {
                let delta = v - mean[j];
                per_dim[j] += delta * delta;
            }
        }
        for v in &mut per_dim {
            *v = (*v / nc).max(floor);
        }
        let variance = match mode {
            GdaMode::Isotropic => {
                ClassVariance::Isotropic((per_dim.iter().sum::<f64>() / d as f64).max(floor))
            }
            GdaMode::Diagonal => ClassVariance::Diagonal(per_dim),
        };
        classes.push(Some(GdaClass {
            mean,
            variance,
            log_prior: (nc / n).ln(),
            count: members.len(),
        }));
    }
    Ok(GdaModel { classes, mode, dim: d })
}

impl GdaModel {
    pub fn mode(&self) -> GdaMode {
        self.mode
    }

    pub fn class(&self, id: usize) -> Option<&GdaClass> {
        self.classes.get(id).and_then(|c| c.as_ref())
    }

    fn log_density(class: &GdaClass, x: ArrayView1<'_, f64>) -> f64 {
        let d = class.mean.len() as f64;
        match &class.variance {
            ClassVariance::Isotropic(var) => {
                let sq: f64 = x
                    .iter()
                    .zip(&class.mean)
                    .map(|(xi, mi)| (xi - mi) * (xi - mi))
                    .sum();
                -0.5 * (d * (LN_2PI + var.ln()) + sq / var)
            }
            ClassVariance::Diagonal(vars) => {
                let mut acc = -0.5 * d * LN_2PI;
                for ((xi, mi), vi) in x.iter().zip(&class.mean).zip(vars) {
                    acc -= 0.5 * (vi.ln() + (xi - mi) * (xi - mi) / vi);
                }
                acc
            }
        }
    }
}

impl Classifier for GdaModel {
    fn n_classes(&self) -> usize {
        self.classes.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn scores(&self, x: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        check_dim(self.dim, x)?;
        Ok(self
            .classes
            .iter()
            .map(|class| match class {
                Some(c) => Self::log_density(c, x) + c.log_prior,
                None => f64::NEG_INFINITY,
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::tests::blobs;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    #[test]
    fn symmetric_two_class_boundary_through_midpoint() {
        let data = blobs(&[(0.0, 0.0), (4.0, 4.0)], 1.0, 2000, 5);
        let model = fit(&data, GdaMode::Isotropic).unwrap();
        // scores on the perpendicular bisector differ by at most the
        // estimation noise of the fitted means/variances
        let mid = array![2.0, 2.0];
        let s = model.scores(mid.view()).unwrap();
        assert!((s[0] - s[1]).abs() < 0.5, "midpoint scores {s:?}");
        // far on either side the right class dominates
        assert_eq!(model.predict(array![0.0, 0.0].view()).unwrap(), 0);
        assert_eq!(model.predict(array![4.0, 4.0].view()).unwrap(), 1);
    }

    #[test]
    fn identical_points_hit_variance_floor() {
        let features = Array2::from_shape_vec((4, 2), vec![1.0; 8]).unwrap();
        let data = Dataset::from_parts(features, vec![0, 0, 0, 0]).unwrap();
        let model = fit(&data, GdaMode::Isotropic).unwrap();
        let s = model.scores(array![1.0, 1.0].view()).unwrap();
        assert!(s[0].is_finite());
    }

    #[test]
    fn singleton_class_is_an_error() {
        let features = array![[0.0, 0.0], [0.1, 0.1], [5.0, 5.0]];
        let data = Dataset::from_parts(features, vec![0, 0, 1]).unwrap();
        match fit(&data, GdaMode::Isotropic) {
            Err(Error::InsufficientData { class: 1, count: 1 }) => {}
            other => panic!("expected insufficient data for class 1, got {other:?}"),
        }
    }

    #[test]
    fn empty_class_is_never_predicted() {
        let features = array![[0.0, 0.0], [0.1, 0.1], [5.0, 5.0], [5.1, 5.1]];
        let data = Dataset::new(features, vec![0, 0, 1, 1], 3).unwrap();
        let model = fit(&data, GdaMode::Isotropic).unwrap();
        let s = model.scores(array![2.5, 2.5].view()).unwrap();
        assert_eq!(s[2], f64::NEG_INFINITY);
    }

    #[test]
    fn scores_match_direct_density_evaluation() {
        // independent evaluation of the class-conditional Gaussian density
        fn density(mean: &[f64], var: f64, x: &[f64]) -> f64 {
            let d = mean.len() as f64;
            let sq: f64 = x
                .iter()
                .zip(mean)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (2.0 * std::f64::consts::PI * var).powf(-d / 2.0) * (-0.5 * sq / var).exp()
        }

        let data = blobs(&[(0.0, 0.0), (3.0, 1.0), (-2.0, 2.0)], 0.8, 60, 9);
        let model = fit(&data, GdaMode::Isotropic).unwrap();
        let x = array![0.7, -0.3];
        let scores = model.scores(x.view()).unwrap();

        // normalize both routes into posteriors and compare
        let mut direct: Vec<f64> = (0..3)
            .map(|c| {
                let class = model.class(c).unwrap();
                let var = match class.variance {
                    ClassVariance::Isotropic(v) => v,
                    _ => unreachable!(),
                };
                density(&class.mean, var, x.as_slice().unwrap()) * class.log_prior.exp()
            })
            .collect();
        let total: f64 = direct.iter().sum();
        for v in &mut direct {
            *v /= total;
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        for (ours, theirs) in exp.iter().map(|e| e / z).zip(direct) {
            assert_abs_diff_eq!(ours, theirs, epsilon = 1e-12);
        }
    }

    #[test]
    fn prior_dominates_equal_likelihoods() {
        // class 0 has 9x the rows of class 1, same distribution
        let features = Array2::from_shape_fn((100, 1), |(i, _)| (i % 10) as f64 * 0.01);
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 90)).collect();
        let data = Dataset::from_parts(features, labels).unwrap();
        let model = fit(&data, GdaMode::Isotropic).unwrap();
        assert_eq!(model.predict(array![0.05].view()).unwrap(), 0);
    }

    #[test]
    fn training_accuracy_near_bayes_rate_on_separated_blobs() {
        // Monte-Carlo estimate of the Bayes rate for 3 well-separated
        // equal-prior isotropic Gaussians, then compare training accuracy.
        let centers = [(0.0, 0.0), (6.0, 0.0), (0.0, 6.0)];
        let data = blobs(&centers, 1.0, 1000, 21);
        let model = fit(&data, GdaMode::Isotropic).unwrap();
        let preds = model.predict_batch(data.features()).unwrap();
        let acc = preds
            .iter()
            .zip(data.labels())
            .filter(|(p, t)| p == t)
            .count() as f64
            / preds.len() as f64;

        // Bayes rule with the true densities on the same draws
        let bayes_correct = data
            .features()
            .rows()
            .into_iter()
            .zip(data.labels())
            .filter(|(row, &label)| {
                let best = (0..3)
                    .map(|c| {
                        let dx = row[0] - centers[c].0;
                        let dy = row[1] - centers[c].1;
                        -(dx * dx + dy * dy)
                    })
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap()
                    .0;
                best == label
            })
            .count() as f64;
        let bayes_rate = bayes_correct / data.n_samples() as f64;
        assert!(
            acc >= bayes_rate - 0.02,
            "acc {acc} below bayes {bayes_rate} - 0.02"
        );
    }

    #[test]
    fn diagonal_mode_tracks_anisotropy() {
        // stretched class along x; diagonal mode should capture it
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let t = (i as f64 / 200.0 - 0.5) * 2.0;
            features.extend_from_slice(&[t * 10.0, t.sin() * 0.1]);
            labels.push(0);
            features.extend_from_slice(&[t * 0.1, 5.0 + t.sin() * 0.1]);
            labels.push(1);
        }
        let data = Dataset::from_parts(
            Array2::from_shape_vec((400, 2), features).unwrap(),
            labels,
        )
        .unwrap();
        let model = fit(&data, GdaMode::Diagonal).unwrap();
        // a point far along x but at y=0 is still class 0 under diagonal spreads
        assert_eq!(model.predict(array![8.0, 0.0].view()).unwrap(), 0);
    }
}
