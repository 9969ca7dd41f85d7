//! Base-classifier abstraction and four from-scratch implementations.
//!
//! The rectification engine treats its base classifier as a black box: it
//! only needs `fit` on a labeled dataset, `predict`, and per-class scores.
//! Fitting goes through [`ClassifierSpec`] so the engine can create a fresh
//! instance per cross-validation fold.

mod gda;
mod knn;
mod mlp;
mod svm;
mod tree;

pub use gda::{GdaMode, GdaModel};
pub use knn::KnnModel;
pub use mlp::MlpModel;
pub use svm::LinearSvmModel;
pub use tree::TreeModel;

use std::path::Path;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// A fitted multi-class classifier.
///
/// `predict` must equal the argmax of `scores` with ties broken toward the
/// smallest class id, for every implementation.
pub trait Classifier {
    fn n_classes(&self) -> usize;

    fn dim(&self) -> usize;

    /// Per-class scores, higher = more confident. Not comparable across
    /// models; within one model the ordering is what matters.
    fn scores(&self, x: ArrayView1<'_, f64>) -> Result<Vec<f64>>;

    fn predict(&self, x: ArrayView1<'_, f64>) -> Result<usize> {
        Ok(argmax_tiebreak(&self.scores(x)?))
    }

    fn predict_batch(&self, xs: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        xs.rows().into_iter().map(|row| self.predict(row)).collect()
    }
}

/// Index of the maximum score; ties and NaNs resolve to the smallest id.
pub fn argmax_tiebreak(scores: &[f64]) -> usize {
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &s) in scores.iter().enumerate() {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Classifier configuration: the factory the engine fits fresh per fold.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierSpec {
    Gda {
        #[serde(default)]
        mode: GdaMode,
    },
    LinearSvm {
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_epochs")]
        epochs: usize,
    },
    Knn {
        #[serde(default = "default_k_nn")]
        k: usize,
    },
    Tree {
        #[serde(default = "default_max_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
    },
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
        #[serde(default = "default_mlp_epochs")]
        epochs: usize,
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
    },
}

fn default_lambda() -> f64 {
    1e-4
}
fn default_epochs() -> usize {
    30
}
fn default_k_nn() -> usize {
    5
}
fn default_max_depth() -> usize {
    12
}
fn default_min_leaf() -> usize {
    2
}
fn default_hidden() -> Vec<usize> {
    vec![64, 32]
}
fn default_mlp_epochs() -> usize {
    60
}
fn default_learning_rate() -> f64 {
    0.05
}

impl ClassifierSpec {
    /// Fits a fresh model. `seed` drives any stochastic training; GDA, k-NN
    /// and the tree ignore it.
    pub fn fit(&self, train: &Dataset, seed: u64) -> Result<Model> {
        match self {
            ClassifierSpec::Gda { mode } => Ok(Model::Gda(gda::fit(train, *mode)?)),
            ClassifierSpec::LinearSvm { lambda, epochs } => Ok(Model::LinearSvm(svm::fit(
                train, *lambda, *epochs, seed,
            )?)),
            ClassifierSpec::Knn { k } => Ok(Model::Knn(knn::fit(train, *k)?)),
            ClassifierSpec::Tree {
                max_depth,
                min_leaf,
            } => Ok(Model::Tree(tree::fit(train, *max_depth, *min_leaf)?)),
            ClassifierSpec::Mlp {
                hidden,
                epochs,
                learning_rate,
            } => Ok(Model::Mlp(mlp::fit(
                train,
                hidden,
                *epochs,
                *learning_rate,
                seed,
            )?)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Gda { .. } => "gda",
            ClassifierSpec::LinearSvm { .. } => "linear_svm",
            ClassifierSpec::Knn { .. } => "knn",
            ClassifierSpec::Tree { .. } => "tree",
            ClassifierSpec::Mlp { .. } => "mlp",
        }
    }
}

/// A fitted model of any supported kind. Serializes to a self-describing
/// JSON document tagged with the model kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Gda(GdaModel),
    LinearSvm(LinearSvmModel),
    Knn(KnnModel),
    Tree(TreeModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Model> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(file)?)
    }
}

impl Classifier for Model {
    fn n_classes(&self) -> usize {
        match self {
            Model::Gda(m) => m.n_classes(),
            Model::LinearSvm(m) => m.n_classes(),
            Model::Knn(m) => m.n_classes(),
            Model::Tree(m) => m.n_classes(),
            Model::Mlp(m) => m.n_classes(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Model::Gda(m) => m.dim(),
            Model::LinearSvm(m) => m.dim(),
            Model::Knn(m) => m.dim(),
            Model::Tree(m) => m.dim(),
            Model::Mlp(m) => m.dim(),
        }
    }

    fn scores(&self, x: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        match self {
            Model::Gda(m) => m.scores(x),
            Model::LinearSvm(m) => m.scores(x),
            Model::Knn(m) => m.scores(x),
            Model::Tree(m) => m.scores(x),
            Model::Mlp(m) => m.scores(x),
        }
    }
}

pub(crate) fn check_dim(expected: usize, x: ArrayView1<'_, f64>) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_gaussian, GaussianComponent, GaussianMixtureSpec};
    use proptest::prelude::*;

    pub(crate) fn blobs(centers: &[(f64, f64)], variance: f64, n: usize, seed: u64) -> Dataset {
        let weight = 1.0 / centers.len() as f64;
        let spec = GaussianMixtureSpec {
            components: centers
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| GaussianComponent {
                    mean: vec![x, y],
                    variance,
                    weight,
                    class_id: i,
                })
                .collect(),
            seed,
        };
        generate_gaussian(&spec, n).unwrap()
    }

    #[test]
    fn argmax_prefers_smallest_on_tie() {
        assert_eq!(argmax_tiebreak(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax_tiebreak(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), 0);
    }

    #[test]
    fn model_json_round_trip_preserves_predictions() {
        let data = blobs(&[(0.0, 0.0), (5.0, 5.0), (-5.0, 5.0)], 0.5, 30, 3);
        for spec in [
            ClassifierSpec::Gda {
                mode: GdaMode::Isotropic,
            },
            ClassifierSpec::LinearSvm {
                lambda: 1e-3,
                epochs: 20,
            },
            ClassifierSpec::Knn { k: 3 },
            ClassifierSpec::Tree {
                max_depth: 6,
                min_leaf: 1,
            },
            ClassifierSpec::Mlp {
                hidden: vec![8],
                epochs: 10,
                learning_rate: 0.05,
            },
        ] {
            let model = spec.fit(&data, 7).unwrap();
            let file = tempfile::NamedTempFile::new().unwrap();
            model.save_json(file.path()).unwrap();
            let loaded = Model::load_json(file.path()).unwrap();
            let before = model.predict_batch(data.features()).unwrap();
            let after = loaded.predict_batch(data.features()).unwrap();
            assert_eq!(before, after, "{} predictions changed", spec.name());
        }
    }

    proptest! {
        // predict = argmax(scores) with smallest-id ties, for every model kind
        #[test]
        fn predict_matches_scores(seed in 0u64..50) {
            let data = blobs(&[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)], 1.0, 20, seed);
            let probe = blobs(&[(1.0, 1.0)], 4.0, 15, seed + 1);
            for spec in [
                ClassifierSpec::Gda { mode: GdaMode::Isotropic },
                ClassifierSpec::LinearSvm { lambda: 1e-3, epochs: 10 },
                ClassifierSpec::Knn { k: 4 },
                ClassifierSpec::Tree { max_depth: 5, min_leaf: 1 },
            ] {
                let model = spec.fit(&data, seed).unwrap();
                for row in probe.features().rows() {
                    let scores = model.scores(row).unwrap();
                    prop_assert_eq!(model.predict(row).unwrap(), argmax_tiebreak(&scores));
                }
            }
        }
    }
}
