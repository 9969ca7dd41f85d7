//! Dataset representation, synthetic generation, and open-set scenario
//! construction: class removal, test sampling, dummy-class augmentation,
//! and fold splitting.

mod csv_io;

pub use csv_io::{load_csv, write_dataset_csv, CsvOptions, LabelColumn, LabelMap};

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mix_seed;

/// A dense feature matrix with one integer class label per row.
///
/// Labels are dense `0..n_classes`; `n_classes` is the size of the label
/// space, which may exceed the number of labels actually present (an
/// augmented set keeps its dummy class even when no row carries it).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    /// Builds a dataset with an explicit label-space size.
    pub fn new(features: Array2<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::invalid(
                "labels",
                format!(
                    "feature rows ({}) != label count ({})",
                    features.nrows(),
                    labels.len()
                ),
            ));
        }
        if features.ncols() == 0 {
            return Err(Error::invalid("features", "zero feature dimensions"));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::invalid(
                "labels",
                format!("label {bad} outside label space 0..{n_classes}"),
            ));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features", "non-finite feature value"));
        }
        Ok(Dataset {
            features,
            labels,
            n_classes,
        })
    }

    /// Builds a dataset whose label space is inferred as `max(label) + 1`.
    pub fn from_parts(features: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(features, labels, n_classes)
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn is_empty(&self) -> bool {
        self.n_samples() == 0
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let features = self.features.select(Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset {
            features,
            labels,
            n_classes: self.n_classes,
        }
    }

    /// Per-class row counts over the full label space.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row indices per class.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut idx = vec![Vec::new(); self.n_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            idx[l].push(i);
        }
        idx
    }

    /// Sample mean of one class, or `None` if the class is empty.
    pub fn class_mean(&self, class: usize) -> Option<Array1<f64>> {
        let mut sum = Array1::<f64>::zeros(self.dim());
        let mut n = 0usize;
        for (i, &l) in self.labels.iter().enumerate() {
            if l == class {
                sum += &self.features.row(i);
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Stacks `self` over `other`; labels are taken as-is.
    pub fn vstack(&self, other: &Dataset, n_classes: usize) -> Result<Dataset> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let features = ndarray::concatenate(Axis(0), &[self.features(), other.features()])
            .expect("dims checked");
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Dataset::new(features, labels, n_classes)
    }
}

/// One Gaussian component of a synthetic mixture. Several components may
/// share a `class_id`, giving that class multiple clusters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: Vec<f64>,
    pub variance: f64,
    pub weight: f64,
    pub class_id: usize,
}

/// A synthetic isotropic Gaussian mixture with per-component class ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianMixtureSpec {
    pub components: Vec<GaussianComponent>,
    pub seed: u64,
}

impl GaussianMixtureSpec {
    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.mean.len())
    }

    pub fn n_classes(&self) -> usize {
        self.components
            .iter()
            .map(|c| c.class_id + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::EmptyInput("mixture components"));
        }
        let d = self.dim();
        let mut weight_sum = 0.0;
        let mut seen = BTreeSet::new();
        for (i, c) in self.components.iter().enumerate() {
            if c.mean.len() != d {
                return Err(Error::DimMismatch {
                    expected: d,
                    got: c.mean.len(),
                });
            }
            if !(c.variance > 0.0) {
                return Err(Error::invalid(
                    "variance",
                    format!("component {i} has non-positive variance {}", c.variance),
                ));
            }
            if !(0.0..=1.0).contains(&c.weight) {
                return Err(Error::invalid(
                    "weight",
                    format!("component {i} weight {} outside [0,1]", c.weight),
                ));
            }
            weight_sum += c.weight;
            seen.insert(c.class_id);
        }
        if (weight_sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "weight",
                format!("component weights sum to {weight_sum}, expected 1"),
            ));
        }
        // class ids must be dense so generated labels satisfy the Dataset invariant
        let n_classes = self.n_classes();
        if seen.len() != n_classes {
            return Err(Error::invalid(
                "class_id",
                format!("class ids must cover 0..{n_classes} without gaps"),
            ));
        }
        Ok(())
    }
}

/// Draws `n_per_component` rows from every component of `spec`.
///
/// Each component uses its own seeded stream, so editing one component's
/// parameters leaves every other component's draws untouched (the level
/// sweeps rely on this coupling).
pub fn generate_gaussian(spec: &GaussianMixtureSpec, n_per_component: usize) -> Result<Dataset> {
    spec.validate()?;
    if n_per_component == 0 {
        return Err(Error::invalid("n_per_component", "must be >= 1"));
    }
    let d = spec.dim();
    let n_total = n_per_component * spec.components.len();
    let mut features = Array2::<f64>::zeros((n_total, d));
    let mut labels = Vec::with_capacity(n_total);
    let normal = StandardNormal;
    for (ci, comp) in spec.components.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, ci as u64 + 11));
        let sd = comp.variance.sqrt();
        for r in 0..n_per_component {
            let row = ci * n_per_component + r;
            for j in 0..d {
                let z: f64 = normal.sample(&mut rng);
                features[[row, j]] = comp.mean[j] + sd * z;
            }
            labels.push(comp.class_id);
        }
    }
    Dataset::new(features, labels, spec.n_classes())
}

/// An open-set split: training data restricted to the known classes, test
/// data covering known and unknown-unknown classes alike.
///
/// Known classes are re-labeled densely `0..n_known` in ascending original
/// id; every u.u. class maps to the single id `dummy_label == n_known`, the
/// ground-truth "unknown" label used throughout evaluation.
#[derive(Debug, Clone)]
pub struct OpenSetScenario {
    pub train: Dataset,
    pub test: Dataset,
    /// Original ids of the retained classes.
    pub known_class_ids: BTreeSet<usize>,
    /// Original ids of the removed classes.
    pub uu_class_ids: BTreeSet<usize>,
    /// `train.n_classes()`; the id u.u. rows carry in `test`.
    pub dummy_label: usize,
}

/// The openness of a scenario under the two label-count readings the
/// square-root formula admits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OpennessReadings {
    /// Target classes taken equal to the training classes; the reading
    /// that reproduces the standard benchmark percentages.
    pub target_equals_train: f64,
    /// Target classes taken as the full class count (known + u.u.).
    pub target_equals_all: f64,
}

impl OpenSetScenario {
    pub fn n_known(&self) -> usize {
        self.known_class_ids.len()
    }

    /// Openness under both count conventions; see [`crate::metrics::openness`].
    pub fn openness_readings(&self) -> OpennessReadings {
        let m = self.n_known();
        let total = m + self.uu_class_ids.len();
        OpennessReadings {
            target_equals_train: crate::metrics::openness(m, total, m).unwrap_or(0.0),
            target_equals_all: crate::metrics::openness(m, total, total).unwrap_or(0.0),
        }
    }
}

/// Splits `full` into a stratified train/test pair and removes the listed
/// classes from the training side, leaving the test side untouched.
///
/// `split_fraction` is the per-class share that goes to training. Rows of
/// u.u. classes that would have landed in training are discarded.
pub fn make_scenario(
    full: &Dataset,
    uu_class_ids: &BTreeSet<usize>,
    split_fraction: f64,
    seed: u64,
) -> Result<OpenSetScenario> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::invalid(
            "split_fraction",
            format!("{split_fraction} outside (0,1)"),
        ));
    }
    let present: BTreeSet<usize> = full.labels().iter().copied().collect();
    if let Some(&bad) = uu_class_ids.iter().find(|c| !present.contains(c)) {
        return Err(Error::invalid(
            "uu_class_ids",
            format!("class {bad} not present in dataset"),
        ));
    }
    if uu_class_ids.len() >= present.len() {
        return Err(Error::invalid(
            "uu_class_ids",
            "no known classes would remain",
        ));
    }

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (class, members) in full.class_indices().into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let mut members = members;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1000 + class as u64));
        members.shuffle(&mut rng);
        let n_train = ((split_fraction * members.len() as f64) + 0.5).floor() as usize;
        let n_train = n_train.min(members.len());
        if !uu_class_ids.contains(&class) {
            train_idx.extend_from_slice(&members[..n_train]);
        }
        test_idx.extend_from_slice(&members[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    split_scenario_parts(full.subset(&train_idx), full.subset(&test_idx), uu_class_ids)
}

/// Builds a scenario from an already-split train/test pair (the UCI datasets
/// ship official splits): u.u. classes are dropped from `train_full` and the
/// test set is used unchanged.
pub fn make_scenario_from_pair(
    train_full: &Dataset,
    test: &Dataset,
    uu_class_ids: &BTreeSet<usize>,
) -> Result<OpenSetScenario> {
    let present: BTreeSet<usize> = train_full.labels().iter().copied().collect();
    if uu_class_ids.len() >= present.len() {
        return Err(Error::invalid(
            "uu_class_ids",
            "no known classes would remain",
        ));
    }
    let keep: Vec<usize> = (0..train_full.n_samples())
        .filter(|&i| !uu_class_ids.contains(&train_full.labels()[i]))
        .collect();
    split_scenario_parts(train_full.subset(&keep), test.clone(), uu_class_ids)
}

fn split_scenario_parts(
    train_orig: Dataset,
    test_orig: Dataset,
    uu_class_ids: &BTreeSet<usize>,
) -> Result<OpenSetScenario> {
    let known_class_ids: BTreeSet<usize> = train_orig.labels().iter().copied().collect();
    debug_assert!(known_class_ids.is_disjoint(uu_class_ids));
    let n_known = known_class_ids.len();
    let dummy = n_known;

    let relabel = |l: usize| -> usize {
        if uu_class_ids.contains(&l) {
            dummy
        } else {
            known_class_ids.iter().position(|&k| k == l).expect("known")
        }
    };

    let train_labels: Vec<usize> = train_orig.labels().iter().map(|&l| relabel(l)).collect();
    let test_labels: Vec<usize> = test_orig.labels().iter().map(|&l| relabel(l)).collect();
    let train = Dataset::new(train_orig.features().to_owned(), train_labels, n_known)?;
    let test = Dataset::new(test_orig.features().to_owned(), test_labels, n_known + 1)?;
    Ok(OpenSetScenario {
        train,
        test,
        known_class_ids,
        uu_class_ids: uu_class_ids.clone(),
        dummy_label: dummy,
    })
}

/// A uniform without-replacement test sample and its complement.
#[derive(Debug, Clone)]
pub struct TestSample {
    pub sample: Dataset,
    pub remainder: Dataset,
    /// Ascending row indices into the original test set.
    pub sample_indices: Vec<usize>,
    pub remainder_indices: Vec<usize>,
}

/// Samples `round(c * |test|)` rows (at least one) uniformly without
/// replacement; deterministic under `seed`.
pub fn sample_test(test: &Dataset, c: f64, seed: u64) -> Result<TestSample> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::invalid("c", format!("{c} outside (0,1]")));
    }
    if test.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    let n = test.n_samples();
    // round-half-up, clamped to [1, n]
    let n_sample = (((c * n as f64) + 0.5).floor() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut sample_indices: Vec<usize> = order[..n_sample].to_vec();
    let mut remainder_indices: Vec<usize> = order[n_sample..].to_vec();
    sample_indices.sort_unstable();
    remainder_indices.sort_unstable();
    Ok(TestSample {
        sample: test.subset(&sample_indices),
        remainder: test.subset(&remainder_indices),
        sample_indices,
        remainder_indices,
    })
}

/// Where a row of an augmented training set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowOrigin {
    /// Row `index` of the original training set.
    Train { index: usize },
    /// Row `index` of the test sample.
    Sample { index: usize },
}

/// The training set with the dummy-labeled test sample appended, keeping
/// per-row provenance for the relabeling step.
#[derive(Debug, Clone)]
pub struct AugmentedDataset {
    pub data: Dataset,
    origins: Vec<RowOrigin>,
    pub dummy_label: usize,
}

impl AugmentedDataset {
    pub fn origin(&self, row: usize) -> RowOrigin {
        self.origins[row]
    }

    pub fn origins(&self) -> &[RowOrigin] {
        &self.origins
    }

    pub fn n_sample_rows(&self) -> usize {
        self.origins
            .iter()
            .filter(|o| matches!(o, RowOrigin::Sample { .. }))
            .count()
    }
}

/// Appends `sample` to `train` under the next free label id.
///
/// `dummy_label` must equal `train.n_classes()`; the result's label space is
/// one larger than the training set's even if the sample is empty.
pub fn augment(train: &Dataset, sample: &Dataset, dummy_label: usize) -> Result<AugmentedDataset> {
    if dummy_label != train.n_classes() {
        return Err(Error::invalid(
            "dummy_label",
            format!(
                "must be the next free class id {} (got {dummy_label})",
                train.n_classes()
            ),
        ));
    }
    if sample.n_samples() > 0 && sample.dim() != train.dim() {
        return Err(Error::DimMismatch {
            expected: train.dim(),
            got: sample.dim(),
        });
    }
    let relabeled = Dataset::new(
        sample.features().to_owned(),
        vec![dummy_label; sample.n_samples()],
        dummy_label + 1,
    )?;
    let data = train.vstack(&relabeled, dummy_label + 1)?;
    let mut origins: Vec<RowOrigin> = (0..train.n_samples())
        .map(|index| RowOrigin::Train { index })
        .collect();
    origins.extend((0..sample.n_samples()).map(|index| RowOrigin::Sample { index }));
    Ok(AugmentedDataset {
        data,
        origins,
        dummy_label,
    })
}

/// One cross-validation fold.
#[derive(Debug, Clone)]
pub struct Fold {
    pub train_idx: Vec<usize>,
    pub valid_idx: Vec<usize>,
}

/// A disjoint covering fold assignment.
#[derive(Debug, Clone)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
    /// False when some class had fewer than `k` members and the plan fell
    /// back to an unstratified split.
    pub stratified: bool,
}

/// Splits `0..n` into `k` folds, stratified by `stratify_labels` when every
/// class has at least `k` members.
///
/// Validation sets are disjoint, cover all indices, and per-fold class
/// counts differ by at most one sample.
pub fn kfold_indices(
    n: usize,
    k: usize,
    stratify_labels: &[usize],
    seed: u64,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid("k", format!("{k} < 2")));
    }
    if k > n {
        return Err(Error::invalid("k", format!("{k} exceeds sample count {n}")));
    }
    if stratify_labels.len() != n {
        return Err(Error::invalid("stratify_labels", "length != n"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = stratify_labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in stratify_labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let stratified = by_class.iter().all(|m| m.is_empty() || m.len() >= k);

    let mut valid: Vec<Vec<usize>> = vec![Vec::new(); k];
    if stratified {
        // Deal each class round-robin; the rotating offset balances fold sizes.
        let mut offset = 0usize;
        for members in &mut by_class {
            members.shuffle(&mut rng);
            for (j, &idx) in members.iter().enumerate() {
                valid[(offset + j) % k].push(idx);
            }
            offset = (offset + members.len()) % k;
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for (j, &idx) in order.iter().enumerate() {
            valid[j % k].push(idx);
        }
    }

    let folds = valid
        .into_iter()
        .map(|mut v| {
            v.sort_unstable();
            let in_valid: std::collections::HashSet<usize> = v.iter().copied().collect();
            let train_idx = (0..n).filter(|i| !in_valid.contains(i)).collect();
            Fold {
                train_idx,
                valid_idx: v,
            }
        })
        .collect();
    Ok(FoldPlan { folds, stratified })
}

/// Stratified two-way split of a dataset's row indices; `fraction` goes to
/// the first part. Used for holdout validation and search scoring.
pub fn stratified_split_indices(
    labels: &[usize],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(
            "fraction",
            format!("{fraction} outside (0,1)"),
        ));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (class, members) in by_class.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 2000 + class as u64));
        members.shuffle(&mut rng);
        let n_first = ((fraction * members.len() as f64) + 0.5).floor() as usize;
        let n_first = n_first.min(members.len());
        first.extend_from_slice(&members[..n_first]);
        second.extend_from_slice(&members[n_first..]);
    }
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}
