//! The rectification engine: sample the test stream, adjoin the sample to
//! the training set as a dummy class, re-label it by cross-validation (or a
//! single holdout split), and refit on the training set plus the rows that
//! kept the dummy label. Also hosts the sample-rate and fold-count searches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, ClassifierSpec, Model};
use crate::dataset::{
    augment, kfold_indices, sample_test, stratified_split_indices, AugmentedDataset, Dataset,
    RowOrigin,
};
use crate::error::{Error, Result};
use crate::metrics::macro_f_measure;
use crate::{mix_seed, seed_tags};

/// How the relabeling predictions are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    #[default]
    Kfold,
    Holdout,
}

/// Engine hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RtscvConfig {
    /// Fraction of the test set drawn into the dummy class.
    pub c: f64,
    /// Cross-validation folds (kfold mode).
    pub k: usize,
    pub seed: u64,
    pub mode: ValidationMode,
    /// Held-out share of the augmented set (holdout mode).
    pub holdout_fraction: f64,
    /// When true (default), only sample-origin rows can enter the unknown
    /// set. The literal reading, which can also re-label original training
    /// rows, is kept for ablation.
    pub restrict_uu_to_sample: bool,
}

impl Default for RtscvConfig {
    fn default() -> Self {
        RtscvConfig {
            c: 0.1,
            k: 3,
            seed: 0,
            mode: ValidationMode::Kfold,
            holdout_fraction: 0.2,
            restrict_uu_to_sample: true,
        }
    }
}

impl RtscvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(Error::invalid("c", format!("{} outside (0,1]", self.c)));
        }
        match self.mode {
            ValidationMode::Kfold => {
                if self.k < 2 {
                    return Err(Error::invalid("k", format!("{} < 2", self.k)));
                }
            }
            ValidationMode::Holdout => {
                if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
                    return Err(Error::invalid(
                        "holdout_fraction",
                        format!("{} outside (0,1)", self.holdout_fraction),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Bookkeeping from one engine run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RtscvDiagnostics {
    pub n_train: usize,
    pub n_sample: usize,
    pub n_uu: usize,
    /// Validation-set sizes per fold (kfold) or the held-out size (holdout).
    pub fold_sizes: Vec<usize>,
    /// Folds whose training portion carried no dummy rows.
    pub folds_without_dummy: Vec<usize>,
    /// Folds degenerate to a single class; their validation rows received
    /// that class without a fit.
    pub degenerate_folds: Vec<usize>,
    pub stratified: bool,
    /// Original-training rows that were predicted as the dummy class.
    pub train_origin_uu: usize,
    /// Row indices of the original test set that formed the sample.
    pub sample_test_indices: Vec<usize>,
}

/// The rectified model plus everything needed to audit the run.
#[derive(Debug)]
pub struct RtscvOutcome {
    /// Final model over `n_known + 1` classes.
    pub model: Model,
    /// Indices into the test sample that kept the dummy label.
    pub uu_sample_indices: Vec<usize>,
    /// The training set the final model was fitted on.
    pub rectified_train: Dataset,
    /// Out-of-fold prediction per augmented row.
    pub cv_predictions: Vec<usize>,
    pub diagnostics: RtscvDiagnostics,
}

/// Runs the full rectification pipeline. Deterministic under `cfg.seed`.
pub fn rectify(
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
    if train.dim() != test.dim() {
        return Err(Error::DimMismatch {
            expected: train.dim(),
            got: test.dim(),
        });
    }

    let ts = sample_test(test, cfg.c, mix_seed(cfg.seed, seed_tags::SAMPLE))?;
    let dummy = train.n_classes();
    let aug = augment(train, &ts.sample, dummy)?;

    let (cv_predictions, mut diagnostics) = match cfg.mode {
        ValidationMode::Kfold => cv_relabel(&aug, classifier, cfg.k, cfg.seed)?,
        ValidationMode::Holdout => {
            holdout_relabel(&aug, classifier, cfg.holdout_fraction, cfg.seed)?
        }
    };

    let mut uu_sample_indices = Vec::new();
    let mut uu_rows = Vec::new();
    let mut train_origin_uu = 0usize;
    for (row, &pred) in cv_predictions.iter().enumerate() {
        if pred != dummy {
            continue;
        }
        match aug.origin(row) {
            RowOrigin::Sample { index } => {
                uu_sample_indices.push(index);
                uu_rows.push(row);
            }
            RowOrigin::Train { .. } => {
                train_origin_uu += 1;
                if !cfg.restrict_uu_to_sample {
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
    let rectified_train = train
        .vstack(&uu_set, dummy + 1)
        .expect("dims match by construction");
    let model = classifier.fit(
        &rectified_train,
        mix_seed(cfg.seed, seed_tags::FINAL_FIT),
    )?;

    diagnostics.n_train = train.n_samples();
    diagnostics.n_sample = ts.sample.n_samples();
    diagnostics.n_uu = uu_rows.len();
    diagnostics.train_origin_uu = train_origin_uu;
    diagnostics.sample_test_indices = ts.sample_indices;

    Ok(RtscvOutcome {
        model,
        uu_sample_indices,
        rectified_train,
        cv_predictions,
        diagnostics,
    })
}

/// Out-of-fold predictions for every augmented row. Folds fit fresh
/// classifier instances and run in parallel; results merge by fold index.
pub fn cv_relabel(
    aug: &AugmentedDataset,
    classifier: &ClassifierSpec,
    k: usize,
    seed: u64,
) -> Result<(Vec<usize>, RtscvDiagnostics)> {
    let n = aug.data.n_samples();
    let plan = kfold_indices(
        n,
        k,
        aug.data.labels(),
        mix_seed(seed, seed_tags::FOLDS),
    )?;

    struct FoldOutcome {
        valid_idx: Vec<usize>,
        preds: Vec<usize>,
        no_dummy: bool,
        degenerate: bool,
    }

    let fold_results: Vec<Result<FoldOutcome>> = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(fold_id, fold)| {
            let fit_data = aug.data.subset(&fold.train_idx);
            let no_dummy = fit_data.class_counts()[aug.dummy_label] == 0;
            let present: Vec<usize> = fit_data
                .class_counts()
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(class, _)| class)
                .collect();
            if present.len() < 2 {
                // degenerate fold: predict the only class present
                return Ok(FoldOutcome {
                    valid_idx: fold.valid_idx.clone(),
                    preds: vec![present[0]; fold.valid_idx.len()],
                    no_dummy,
                    degenerate: true,
                });
            }
            let model = classifier.fit(
                &fit_data,
                mix_seed(seed, seed_tags::FOLD_FIT + fold_id as u64),
            )?;
            let preds = model.predict_batch(aug.data.subset(&fold.valid_idx).features())?;
            Ok(FoldOutcome {
                valid_idx: fold.valid_idx.clone(),
                preds,
                no_dummy,
                degenerate: false,
            })
        })
        .collect();

    let mut predictions = vec![usize::MAX; n];
    let mut diagnostics = RtscvDiagnostics {
        stratified: plan.stratified,
        ..Default::default()
    };
    for (fold_id, result) in fold_results.into_iter().enumerate() {
        let fold = result?;
        diagnostics.fold_sizes.push(fold.valid_idx.len());
        if fold.no_dummy {
            diagnostics.folds_without_dummy.push(fold_id);
        }
        if fold.degenerate {
            diagnostics.degenerate_folds.push(fold_id);
        }
        for (&row, &pred) in fold.valid_idx.iter().zip(&fold.preds) {
            predictions[row] = pred;
        }
    }
    debug_assert!(predictions.iter().all(|&p| p != usize::MAX));
    Ok((predictions, diagnostics))
}

/// Single-split variant: only held-out rows receive predictions; the rest
/// keep their augmented label (sample rows stay in the dummy class).
pub fn holdout_relabel(
    aug: &AugmentedDataset,
    classifier: &ClassifierSpec,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, RtscvDiagnostics)> {
    let (fit_idx, held_idx) = stratified_split_indices(
        aug.data.labels(),
        1.0 - holdout_fraction,
        mix_seed(seed, seed_tags::SPLIT),
    )?;
    if fit_idx.is_empty() || held_idx.is_empty() {
        return Err(Error::invalid(
            "holdout_fraction",
            "split left one side empty",
        ));
    }
    let fit_data = aug.data.subset(&fit_idx);
    let no_dummy = fit_data.class_counts()[aug.dummy_label] == 0;
    let mut predictions = aug.data.labels().to_vec();
    let present = fit_data.class_counts().iter().filter(|&&c| c > 0).count();
    let mut diagnostics = RtscvDiagnostics {
        fold_sizes: vec![held_idx.len()],
        stratified: true,
        ..Default::default()
    };
    if no_dummy {
        diagnostics.folds_without_dummy.push(0);
    }
    if present < 2 {
        diagnostics.degenerate_folds.push(0);
        return Ok((predictions, diagnostics));
    }
    let model = classifier.fit(&fit_data, mix_seed(seed, seed_tags::FOLD_FIT))?;
    let preds = model.predict_batch(aug.data.subset(&held_idx).features())?;
    for (&row, &pred) in held_idx.iter().zip(&preds) {
        predictions[row] = pred;
    }
    Ok((predictions, diagnostics))
}

/// One point of a sample-rate search curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRateSearch {
    pub best_c: f64,
    /// `(c, known-origin misclassification fraction)` per candidate.
    pub curve: Vec<(f64, f64)>,
}

/// Tolerance band (in proxy units) within which a larger sample rate is
/// preferred over a marginally lower misclassification proxy.
const SAMPLE_RATE_TOLERANCE: f64 = 0.005;

/// Scores each candidate sample rate by the fraction of original-training
/// rows that the relabeling phase pushed into the dummy class, then picks
/// the largest rate within half a point of the minimum (more unknown
/// representatives at equal known-data cost).
pub fn search_sample_rate(
    train: &Dataset,
    test: &Dataset,
    classifier: &ClassifierSpec,
    candidate_rates: &[f64],
    k: usize,
    seed: u64,
) -> Result<SampleRateSearch> {
    if candidate_rates.is_empty() {
        return Err(Error::EmptyInput("candidate_rates"));
    }
    let mut curve = Vec::with_capacity(candidate_rates.len());
    for &c in candidate_rates {
        let ts = sample_test(test, c, mix_seed(seed, seed_tags::SAMPLE))?;
        let aug = augment(train, &ts.sample, train.n_classes())?;
        let (preds, _) = cv_relabel(&aug, classifier, k, seed)?;
        let dummy = train.n_classes();
        let misclassified = preds
            .iter()
            .enumerate()
            .filter(|&(row, &p)| {
                p == dummy && matches!(aug.origin(row), RowOrigin::Train { .. })
            })
            .count();
        curve.push((c, misclassified as f64 / train.n_samples() as f64));
    }
    let min_proxy = curve.iter().map(|&(_, p)| p).fold(f64::INFINITY, f64::min);
    let best_c = curve
        .iter()
        .filter(|&&(_, p)| p <= min_proxy + SAMPLE_RATE_TOLERANCE)
        .map(|&(c, _)| c)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SampleRateSearch { best_c, curve })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldSearch {
    pub best_k: usize,
    /// `(k, macro F on the validation slice plus test remainder)`.
    pub curve: Vec<(usize, f64)>,
}

/// Scores each fold count by the rectified model's macro F-measure over a
/// held-out slice of the training distribution plus the unsampled test rows.
///
/// `test` must carry scenario-style labels (unknown rows labeled
/// `train.n_classes()`).
pub fn search_folds(
    train: &Dataset,
    test: &Dataset,
    classifier: &ClassifierSpec,
    c: f64,
    candidate_ks: &[usize],
    seed: u64,
) -> Result<FoldSearch> {
    if candidate_ks.is_empty() {
        return Err(Error::EmptyInput("candidate_ks"));
    }
    let (fit_idx, val_idx) = stratified_split_indices(
        train.labels(),
        0.8,
        mix_seed(seed, seed_tags::VALIDATION),
    )?;
    let fit_train = train.subset(&fit_idx);
    let val_slice = train.subset(&val_idx);
    let dummy = fit_train.n_classes();

    let mut curve = Vec::with_capacity(candidate_ks.len());
    for &k in candidate_ks {
        let cfg = RtscvConfig {
            c,
            k,
            seed,
            mode: ValidationMode::Kfold,
            ..RtscvConfig::default()
        };
        let outcome = rectify(&fit_train, test, classifier, &cfg)?;
        let remainder_idx: Vec<usize> = {
            let sampled: std::collections::HashSet<usize> = outcome
                .diagnostics
                .sample_test_indices
                .iter()
                .copied()
                .collect();
            (0..test.n_samples()).filter(|i| !sampled.contains(i)).collect()
        };
        let remainder = test.subset(&remainder_idx);

        let mut truth: Vec<usize> = val_slice.labels().to_vec();
        truth.extend_from_slice(remainder.labels());
        let mut preds = outcome.model.predict_batch(val_slice.features())?;
        preds.extend(outcome.model.predict_batch(remainder.features())?);
        let score = macro_f_measure(&truth, &preds, dummy + 1)?;
        curve.push((k, score));
    }
    let best_k = curve
        .iter()
        .fold((0usize, f64::NEG_INFINITY), |acc, &(k, s)| {
            if s > acc.1 {
                (k, s)
            } else {
                acc
            }
        })
        .0;
    Ok(FoldSearch { best_k, curve })
}
