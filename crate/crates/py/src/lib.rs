//! Python bindings: the dataset type, scenario construction, both
//! rectification engines, fitted models, and the evaluation metrics.
//!
//! Classifier configurations are passed as JSON strings, e.g.
//! `'{"kind": "gda"}'` or `'{"kind": "linear_svm", "lambda": 1e-4}'`.

use std::collections::BTreeSet;
use std::path::PathBuf;

use ndarray::Array2;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use openrect::classifiers::{Classifier, ClassifierSpec};
use openrect::dataset::{CsvOptions, LabelColumn};
use openrect::rtscv::{RtscvConfig, ValidationMode};

fn to_py_err(err: openrect::Error) -> PyErr {
    match err {
        openrect::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn features_from_rows(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let d = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("ragged feature rows"));
    }
    Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse_classifier(json: &str) -> PyResult<ClassifierSpec> {
    serde_json::from_str(json)
        .map_err(|e| PyValueError::new_err(format!("bad classifier spec: {e}")))
}

/// A dense feature matrix with integer class labels.
#[pyclass(name = "Dataset", from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: openrect::dataset::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(features: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<Self> {
        let features = features_from_rows(features)?;
        Ok(PyDataset {
            inner: openrect::dataset::Dataset::from_parts(features, labels)
                .map_err(to_py_err)?,
        })
    }

    /// Load a CSV file; returns the dataset and the label-token mapping.
    #[staticmethod]
    #[pyo3(signature = (path, label_column, has_header=false))]
    fn from_csv(
        path: PathBuf,
        label_column: usize,
        has_header: bool,
    ) -> PyResult<(Self, Vec<String>)> {
        let opts = CsvOptions {
            label_column: LabelColumn::Index(label_column),
            has_header,
        };
        let (data, map) = openrect::dataset::load_csv(&path, &opts).map_err(to_py_err)?;
        let names = (0..map.len())
            .map(|id| map.name_of(id).unwrap_or_default().to_string())
            .collect();
        Ok((PyDataset { inner: data }, names))
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    fn labels(&self) -> Vec<usize> {
        self.inner.labels().to_vec()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        self.inner
            .features()
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.n_samples()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n_samples={}, dim={}, n_classes={})",
            self.inner.n_samples(),
            self.inner.dim(),
            self.inner.n_classes()
        )
    }
}

/// An open-set split: train without the unknown classes, test with them
/// relabeled to `dummy_label`.
#[pyclass(name = "Scenario")]
struct PyScenario {
    #[pyo3(get)]
    train: PyDataset,
    #[pyo3(get)]
    test: PyDataset,
    #[pyo3(get)]
    dummy_label: usize,
    #[pyo3(get)]
    openness: f64,
}

/// A fitted model over `n_known + 1` classes.
#[pyclass(name = "Model")]
struct PyModel {
    inner: openrect::classifiers::Model,
}

#[pymethods]
impl PyModel {
    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    fn predict(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        let features = features_from_rows(features)?;
        self.inner.predict_batch(features.view()).map_err(to_py_err)
    }

    fn scores(&self, row: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner
            .scores(ndarray::aview1(&row))
            .map_err(to_py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_json(&path).map_err(to_py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel {
            inner: openrect::classifiers::Model::load_json(&path).map_err(to_py_err)?,
        })
    }
}

/// Result of a rectification run.
#[pyclass(name = "Outcome")]
struct PyOutcome {
    #[pyo3(get)]
    uu_sample_indices: Vec<usize>,
    #[pyo3(get)]
    cv_predictions: Vec<usize>,
    #[pyo3(get)]
    n_sample: usize,
    #[pyo3(get)]
    n_uu: usize,
    #[pyo3(get)]
    sample_test_indices: Vec<usize>,
    model: openrect::classifiers::Model,
}

#[pymethods]
impl PyOutcome {
    #[getter]
    fn model(&self) -> PyModel {
        PyModel {
            inner: self.model.clone(),
        }
    }
}

fn outcome_to_py(outcome: openrect::rtscv::RtscvOutcome) -> PyOutcome {
    PyOutcome {
        uu_sample_indices: outcome.uu_sample_indices,
        cv_predictions: outcome.cv_predictions,
        n_sample: outcome.diagnostics.n_sample,
        n_uu: outcome.diagnostics.n_uu,
        sample_test_indices: outcome.diagnostics.sample_test_indices,
        model: outcome.model,
    }
}

/// Draw a labeled Gaussian mixture. `components` is a list of
/// `(mean, variance, weight, class_id)` tuples.
#[pyfunction]
fn generate_gaussian(
    components: Vec<(Vec<f64>, f64, f64, usize)>,
    n_per_component: usize,
    seed: u64,
) -> PyResult<PyDataset> {
    let spec = openrect::dataset::GaussianMixtureSpec {
        components: components
            .into_iter()
            .map(
                |(mean, variance, weight, class_id)| openrect::dataset::GaussianComponent {
                    mean,
                    variance,
                    weight,
                    class_id,
                },
            )
            .collect(),
        seed,
    };
    Ok(PyDataset {
        inner: openrect::dataset::generate_gaussian(&spec, n_per_component)
            .map_err(to_py_err)?,
    })
}

/// Stratified open-set scenario: removes `uu_classes` from the training
/// side, keeps the test side complete.
#[pyfunction]
#[pyo3(signature = (data, uu_classes, split_fraction=0.5, seed=0))]
fn make_scenario(
    data: &PyDataset,
    uu_classes: Vec<usize>,
    split_fraction: f64,
    seed: u64,
) -> PyResult<PyScenario> {
    let uu: BTreeSet<usize> = uu_classes.into_iter().collect();
    let sc = openrect::dataset::make_scenario(&data.inner, &uu, split_fraction, seed)
        .map_err(to_py_err)?;
    let openness = sc.openness_readings().target_equals_train;
    Ok(PyScenario {
        train: PyDataset { inner: sc.train },
        test: PyDataset { inner: sc.test },
        dummy_label: sc.dummy_label,
        openness,
    })
}

fn engine_config(
    c: f64,
    k: usize,
    seed: u64,
    holdout: bool,
    holdout_fraction: f64,
) -> RtscvConfig {
    RtscvConfig {
        c,
        k,
        seed,
        mode: if holdout {
            ValidationMode::Holdout
        } else {
            ValidationMode::Kfold
        },
        holdout_fraction,
        ..Default::default()
    }
}

/// Rectify a base classifier against the test stream via cross-validation
/// relabeling of a random test sample.
#[pyfunction]
#[pyo3(signature = (train, test, classifier, c=0.1, k=3, seed=0, holdout=false, holdout_fraction=0.2))]
#[allow(clippy::too_many_arguments)]
fn rectify(
    train: &PyDataset,
    test: &PyDataset,
    classifier: &str,
    c: f64,
    k: usize,
    seed: u64,
    holdout: bool,
    holdout_fraction: f64,
) -> PyResult<PyOutcome> {
    let spec = parse_classifier(classifier)?;
    let cfg = engine_config(c, k, seed, holdout, holdout_fraction);
    let outcome =
        openrect::rtscv::rectify(&train.inner, &test.inner, &spec, &cfg).map_err(to_py_err)?;
    Ok(outcome_to_py(outcome))
}

/// Seeded-k-means alternative to the cross-validation phase.
#[pyfunction]
#[pyo3(signature = (train, test, classifier, c=0.1, seed=0))]
fn csi_rectify(
    train: &PyDataset,
    test: &PyDataset,
    classifier: &str,
    c: f64,
    seed: u64,
) -> PyResult<PyOutcome> {
    let spec = parse_classifier(classifier)?;
    let cfg = engine_config(c, 3, seed, false, 0.2);
    let outcome = openrect::csi::csi_rectify(&train.inner, &test.inner, &spec, &cfg)
        .map_err(to_py_err)?;
    Ok(outcome_to_py(outcome))
}

/// Fit a base classifier directly (the pre-rectified baseline).
#[pyfunction]
#[pyo3(signature = (train, classifier, seed=0))]
fn fit(train: &PyDataset, classifier: &str, seed: u64) -> PyResult<PyModel> {
    let spec = parse_classifier(classifier)?;
    Ok(PyModel {
        inner: spec.fit(&train.inner, seed).map_err(to_py_err)?,
    })
}

#[pyfunction]
fn macro_f_measure(truth: Vec<usize>, predicted: Vec<usize>, n_classes: usize) -> PyResult<f64> {
    openrect::metrics::macro_f_measure(&truth, &predicted, n_classes).map_err(to_py_err)
}

#[pyfunction]
fn classification_accuracy(
    truth: Vec<usize>,
    predicted: Vec<usize>,
    dummy: usize,
) -> PyResult<Option<f64>> {
    openrect::metrics::classification_accuracy(&truth, &predicted, dummy).map_err(to_py_err)
}

#[pyfunction]
fn detection_accuracy(
    truth: Vec<usize>,
    predicted: Vec<usize>,
    dummy: usize,
) -> PyResult<Option<f64>> {
    openrect::metrics::detection_accuracy(&truth, &predicted, dummy).map_err(to_py_err)
}

#[pyfunction]
fn auroc(scores: Vec<f64>, is_uu: Vec<bool>) -> PyResult<f64> {
    openrect::metrics::auroc(&scores, &is_uu).map_err(to_py_err)
}

#[pyfunction]
fn openness(
    n_train_classes: usize,
    n_test_classes: usize,
    n_target_classes: usize,
) -> PyResult<f64> {
    openrect::metrics::openness(n_train_classes, n_test_classes, n_target_classes)
        .map_err(to_py_err)
}

/// Project onto the top principal components; returns the projected dataset
/// and the explained-variance ratios.
#[pyfunction]
fn pca_project(data: &PyDataset, n_components: usize) -> PyResult<(PyDataset, Vec<f64>)> {
    let projection =
        openrect::experiment::pca_project(&data.inner, n_components).map_err(to_py_err)?;
    Ok((
        PyDataset {
            inner: projection.projected,
        },
        projection.explained_variance_ratio,
    ))
}

#[pymodule]
fn openrect_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyOutcome>()?;
    m.add_function(wrap_pyfunction!(generate_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(make_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(rectify, m)?)?;
    m.add_function(wrap_pyfunction!(csi_rectify, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(macro_f_measure, m)?)?;
    m.add_function(wrap_pyfunction!(classification_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(detection_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(auroc, m)?)?;
    m.add_function(wrap_pyfunction!(openness, m)?)?;
    m.add_function(wrap_pyfunction!(pca_project, m)?)?;
    Ok(())
}
