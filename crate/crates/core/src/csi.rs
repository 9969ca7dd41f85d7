//! Seeded k-means as a cheaper substitute for the cross-validation phase:
//! cluster the test sample with one center per known class (seeded at that
//! class's training mean) plus one center seeded at the sample mean, then
//! treat the sample-seeded cluster as the unknown class.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::classifiers::ClassifierSpec;
use crate::dataset::{augment, sample_test, Dataset, RowOrigin};
use crate::error::{Error, Result};
use crate::rtscv::{RtscvConfig, RtscvDiagnostics, RtscvOutcome};
use crate::{mix_seed, seed_tags};

pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Result of one seeded clustering run over the test sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeededKmeansResult {
    /// Cluster per sample row; cluster `m` (the count of known classes) is
    /// the unknown cluster.
    pub assignments: Vec<usize>,
    /// Final centers, one row per cluster.
    pub centers: Array2<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Lloyd iterations from the prescribed seeding. Clusters keep the identity
/// of their seed: cluster `i < m` is known class `i`, cluster `m` is the
/// unknown cluster. Empty clusters retain their previous center. Ties in
/// distance go to the smallest cluster id. No randomness anywhere.
pub fn seeded_kmeans(
    sample: ArrayView2<'_, f64>,
    known_class_means: &[Array1<f64>],
    max_iter: usize,
    tol: f64,
) -> Result<SeededKmeansResult> {
    if sample.nrows() == 0 {
        return Err(Error::EmptyInput("sample"));
    }
    if known_class_means.is_empty() {
        return Err(Error::EmptyInput("known class means"));
    }
    let d = sample.ncols();
    if known_class_means.iter().any(|m| m.len() != d) {
        return Err(Error::DimMismatch {
            expected: d,
            got: known_class_means
                .iter()
                .find(|m| m.len() != d)
                .map(|m| m.len())
                .unwrap_or(0),
        });
    }
    if !(tol >= 0.0) {
        return Err(Error::invalid("tol", "must be non-negative"));
    }
    let m = known_class_means.len();
    let k = m + 1;

    let mut centers = Array2::<f64>::zeros((k, d));
    for (i, mean) in known_class_means.iter().enumerate() {
        centers.row_mut(i).assign(mean);
    }
    let sample_mean = sample
        .mean_axis(ndarray::Axis(0))
        .expect("non-empty sample");
    centers.row_mut(m).assign(&sample_mean);

    let assign = |centers: &Array2<f64>| -> Vec<usize> {
        sample
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for c in 0..k {
                    let dist: f64 = centers
                        .row(c)
                        .iter()
                        .zip(row.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    if dist < best_d {
                        best_d = dist;
                        best = c;
                    }
                }
                best
            })
            .collect()
    };

    let mut assignments = assign(&centers);
    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        // update step; empty clusters keep their center
        let mut next = centers.clone();
        let mut counts = vec![0usize; k];
        let mut sums = Array2::<f64>::zeros((k, d));
        for (row, &c) in assignments.iter().enumerate() {
            counts[c] += 1;
            let mut target = sums.row_mut(c);
            target += &sample.row(row);
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mut row = next.row_mut(c);
                row.assign(&(&sums.row(c) / counts[c] as f64));
            }
        }
        // relative center movement
        let scale = 1.0
            + centers
                .rows()
                .into_iter()
                .map(|r| r.dot(&r).sqrt())
                .fold(0.0f64, f64::max);
        let movement = centers
            .rows()
            .into_iter()
            .zip(next.rows())
            .map(|(a, b)| {
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max);
        centers = next;
        assignments = assign(&centers);
        if movement <= tol * scale {
            converged = true;
            break;
        }
    }

    Ok(SeededKmeansResult {
        assignments,
        centers,
        iterations,
        converged,
    })
}

/// Drop-in alternative to [`crate::rtscv::rectify`] that replaces the
/// cross-validation phase with seeded k-means over the sample. The outcome
/// type is shared so both engines can be compared on equal footing.
pub fn csi_rectify(
    train: &Dataset,
    test: &Dataset,
    classifier: &ClassifierSpec,
    cfg: &RtscvConfig,
) -> Result<RtscvOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    if test.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    let ts = sample_test(test, cfg.c, mix_seed(cfg.seed, seed_tags::SAMPLE))?;
    let dummy = train.n_classes();
    let aug = augment(train, &ts.sample, dummy)?;

    let mut known_means = Vec::with_capacity(dummy);
    for class in 0..dummy {
        let mean = train.class_mean(class).ok_or(Error::InsufficientData {
            class,
            count: 0,
        })?;
        known_means.push(mean);
    }
    let clustering = seeded_kmeans(
        ts.sample.features(),
        &known_means,
        DEFAULT_MAX_ITER,
        DEFAULT_TOL,
    )?;

    // cluster identity doubles as the relabeling prediction
    let mut cv_predictions = Vec::with_capacity(aug.data.n_samples());
    let mut uu_sample_indices = Vec::new();
    let mut uu_rows = Vec::new();
    for row in 0..aug.data.n_samples() {
        match aug.origin(row) {
            RowOrigin::Train { index } => cv_predictions.push(train.labels()[index]),
            RowOrigin::Sample { index } => {
                let cluster = clustering.assignments[index];
                cv_predictions.push(cluster);
                if cluster == dummy {
                    uu_sample_indices.push(index);
                    uu_rows.push(row);
                }
            }
        }
    }

    let uu_features = aug.data.subset(&uu_rows);
    let uu_set = Dataset::new(
        uu_features.features().to_owned(),
        vec![dummy; uu_rows.len()],
        dummy + 1,
    )?;
    let rectified_train = train.vstack(&uu_set, dummy + 1)?;
    let model = classifier.fit(&rectified_train, mix_seed(cfg.seed, seed_tags::FINAL_FIT))?;

    let diagnostics = RtscvDiagnostics {
        n_train: train.n_samples(),
        n_sample: ts.sample.n_samples(),
        n_uu: uu_rows.len(),
        fold_sizes: vec![clustering.iterations],
        stratified: true,
        sample_test_indices: ts.sample_indices,
        ..Default::default()
    };

    Ok(RtscvOutcome {
        model,
        uu_sample_indices,
        rectified_train,
        cv_predictions,
        diagnostics,
    })
}
