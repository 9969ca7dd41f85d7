//! Open-set evaluation metrics: openness, macro F-measure, known-class and
//! detection accuracies, AUROC, and the confusion matrix they all reduce to.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major confusion matrix; entry `(true, predicted)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<usize>,
    pub n_classes: usize,
}

impl ConfusionMatrix {
    pub fn from_labels(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::EmptyInput("labels"));
        }
        if truth.len() != predicted.len() {
            return Err(Error::invalid(
                "predicted",
                format!("length {} != truth length {}", predicted.len(), truth.len()),
            ));
        }
        let mut counts = vec![0usize; n_classes * n_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= n_classes || p >= n_classes {
                return Err(Error::invalid(
                    "labels",
                    format!("label ({t},{p}) outside 0..{n_classes}"),
                ));
            }
            counts[t * n_classes + p] += 1;
        }
        Ok(ConfusionMatrix { counts, n_classes })
    }

    pub fn get(&self, truth: usize, predicted: usize) -> usize {
        self.counts[truth * self.n_classes + predicted]
    }

    pub fn row_sum(&self, truth: usize) -> usize {
        (0..self.n_classes).map(|p| self.get(truth, p)).sum()
    }

    pub fn col_sum(&self, predicted: usize) -> usize {
        (0..self.n_classes).map(|t| self.get(t, predicted)).sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Unweighted mean of per-class F-measures, zero where a class has no
    /// true or predicted rows.
    pub fn macro_f_measure(&self) -> f64 {
        let mut sum = 0.0;
        for c in 0..self.n_classes {
            let tp = self.get(c, c) as f64;
            let fp = (self.col_sum(c) - self.get(c, c)) as f64;
            let fn_ = (self.row_sum(c) - self.get(c, c)) as f64;
            let denom = 2.0 * tp + fp + fn_;
            if denom > 0.0 {
                sum += 2.0 * tp / denom;
            }
        }
        sum / self.n_classes as f64
    }

    /// Accuracy over rows whose true class is a known class (< `dummy`).
    pub fn classification_accuracy(&self, dummy: usize) -> Option<f64> {
        let mut correct = 0usize;
        let mut total = 0usize;
        for c in 0..self.n_classes.min(dummy) {
            correct += self.get(c, c);
            total += self.row_sum(c);
        }
        (total > 0).then(|| correct as f64 / total as f64)
    }

    /// Fraction of true-dummy rows predicted as the dummy class.
    pub fn detection_accuracy(&self, dummy: usize) -> Option<f64> {
        if dummy >= self.n_classes {
            return None;
        }
        let total = self.row_sum(dummy);
        (total > 0).then(|| self.get(dummy, dummy) as f64 / total as f64)
    }

    /// Overall accuracy, known and unknown strata combined.
    pub fn overall_accuracy(&self) -> f64 {
        let correct: usize = (0..self.n_classes).map(|c| self.get(c, c)).sum();
        correct as f64 / self.total() as f64
    }
}

/// Openness of a class layout: `1 - sqrt(2 * train / (test + target))`.
///
/// All counts must be positive. A radicand above one (more training classes
/// than the formula admits) clamps to zero openness.
pub fn openness(
    n_train_classes: usize,
    n_test_classes: usize,
    n_target_classes: usize,
) -> Result<f64> {
    if n_train_classes == 0 || n_test_classes == 0 || n_target_classes == 0 {
        return Err(Error::invalid("class counts", "must all be >= 1"));
    }
    let radicand = 2.0 * n_train_classes as f64 / (n_test_classes + n_target_classes) as f64;
    if radicand >= 1.0 {
        return Ok(0.0);
    }
    Ok(1.0 - radicand.sqrt())
}

/// Macro F over the full label space `0..n_classes` (the unknown class is a
/// class like any other).
pub fn macro_f_measure(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<f64> {
    Ok(ConfusionMatrix::from_labels(truth, predicted, n_classes)?.macro_f_measure())
}

pub fn classification_accuracy(
    truth: &[usize],
    predicted: &[usize],
    dummy: usize,
) -> Result<Option<f64>> {
    let n_classes = dummy + 1;
    Ok(ConfusionMatrix::from_labels(truth, predicted, n_classes)?
        .classification_accuracy(dummy))
}

pub fn detection_accuracy(
    truth: &[usize],
    predicted: &[usize],
    dummy: usize,
) -> Result<Option<f64>> {
    let n_classes = dummy + 1;
    Ok(ConfusionMatrix::from_labels(truth, predicted, n_classes)?.detection_accuracy(dummy))
}

/// AUROC as the Mann-Whitney statistic: the probability that a random
/// unknown sample scores above a random known sample, ties counted half.
///
/// Computed from tie-averaged ranks; exactly equal to the pairwise count.
pub fn auroc(scores: &[f64], is_uu: &[bool]) -> Result<f64> {
    if scores.len() != is_uu.len() {
        return Err(Error::invalid("is_uu", "length mismatch with scores"));
    }
    let n_uu = is_uu.iter().filter(|&&u| u).count();
    let n_known = is_uu.len() - n_uu;
    if n_uu == 0 || n_known == 0 {
        return Err(Error::invalid(
            "is_uu",
            "both strata must be non-empty for AUROC",
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores", "NaN score"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // tie-averaged ranks (1-based); rank sums stay exact in f64
    let mut rank_sum_uu = 0.0f64;
    let mut i = 0usize;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if is_uu[idx] {
                rank_sum_uu += rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_uu - (n_uu * (n_uu + 1)) as f64 / 2.0;
    Ok(u / (n_uu as f64 * n_known as f64))
}

/// All metrics for one experiment cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub openness: f64,
    pub macro_f: f64,
    pub classification_acc: Option<f64>,
    pub detection_acc: Option<f64>,
    pub auroc: Option<f64>,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    /// Builds a report from ground truth (`dummy = n_classes - 1` marks
    /// unknowns), predictions, and optional per-row unknown-ness scores.
    pub fn from_predictions(
        truth: &[usize],
        predicted: &[usize],
        uu_scores: Option<&[f64]>,
        n_classes: usize,
        openness: f64,
    ) -> Result<Self> {
        let confusion = ConfusionMatrix::from_labels(truth, predicted, n_classes)?;
        let dummy = n_classes - 1;
        let auroc_value = match uu_scores {
            Some(scores) => {
                let is_uu: Vec<bool> = truth.iter().map(|&t| t == dummy).collect();
                let both = is_uu.iter().any(|&u| u) && is_uu.iter().any(|&u| !u);
                both.then(|| auroc(scores, &is_uu)).transpose()?
            }
            None => None,
        };
        Ok(EvalReport {
            openness,
            macro_f: confusion.macro_f_measure(),
            classification_acc: confusion.classification_accuracy(dummy),
            detection_acc: confusion.detection_accuracy(dummy),
            auroc: auroc_value,
            confusion,
        })
    }
}
