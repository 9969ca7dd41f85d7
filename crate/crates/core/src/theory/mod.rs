//! Closed-form evaluators for the Gaussian-analysis performance guarantees:
//! class-conditional likelihoods, cross-likelihood expectations, expected
//! squared Mahalanobis distances, and the sufficient-condition checks for
//! correct relabeling under maximum-likelihood, Bayes, and
//! minimum-Mahalanobis-distance decision rules.
//!
//! Everything here assumes isotropic class covariances `sigma^2 * I`; the
//! likelihood additionally comes in a diagonal-covariance variant.

pub mod mc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837877066409345483560659472811;

/// An isotropic Gaussian class: mean, variance, its share of the test set
/// (`mixture_weight`), and its prior in the augmented training set
/// (`train_prior`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianClassSpec {
    pub mean: Vec<f64>,
    pub variance: f64,
    #[serde(default)]
    pub mixture_weight: f64,
    #[serde(default)]
    pub train_prior: f64,
}

impl GaussianClassSpec {
    pub fn new(mean: Vec<f64>, variance: f64) -> Self {
        GaussianClassSpec {
            mean,
            variance,
            mixture_weight: 0.0,
            train_prior: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.is_empty() {
            return Err(Error::EmptyInput("mean"));
        }
        if !(self.variance > 0.0) {
            return Err(Error::invalid(
                "variance",
                format!("{} must be positive", self.variance),
            ));
        }
        for (name, v) in [
            ("mixture_weight", self.mixture_weight),
            ("train_prior", self.train_prior),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid("spec", format!("{name} {v} outside [0,1]")));
            }
        }
        Ok(())
    }
}

/// Outcome of one sufficient-condition check: `satisfied == (lhs >= rhs)`.
///
/// `vacuous` marks conditions whose bound degenerates (the competing term is
/// non-positive) so the conclusion holds regardless of the geometry.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub margin: f64,
    pub vacuous: bool,
}

impl TheoremVerdict {
    fn compare(lhs: f64, rhs: f64) -> Self {
        TheoremVerdict {
            lhs,
            rhs,
            satisfied: lhs >= rhs,
            margin: lhs - rhs,
            vacuous: false,
        }
    }

    fn vacuous(lhs: f64) -> Self {
        TheoremVerdict {
            lhs,
            rhs: f64::NEG_INFINITY,
            satisfied: true,
            margin: f64::INFINITY,
            vacuous: true,
        }
    }

    /// The conjunction of several per-class conditions, keeping the binding
    /// (minimum-margin) pair as the reported numbers.
    pub fn all(verdicts: impl IntoIterator<Item = TheoremVerdict>) -> Option<TheoremVerdict> {
        let mut binding: Option<TheoremVerdict> = None;
        for v in verdicts {
            binding = Some(match binding {
                None => v,
                Some(b) if v.margin < b.margin => v,
                Some(b) => b,
            });
        }
        binding.map(|b| TheoremVerdict {
            satisfied: b.satisfied,
            ..b
        })
    }
}

fn sq_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Isotropic Gaussian density of `x` under `spec`.
pub fn likelihood(spec: &GaussianClassSpec, x: &[f64]) -> f64 {
    log_likelihood(spec, x).exp()
}

/// Log-density; preferred for large dimensions.
pub fn log_likelihood(spec: &GaussianClassSpec, x: &[f64]) -> f64 {
    assert_eq!(spec.dim(), x.len(), "dimension mismatch");
    let d = spec.dim() as f64;
    -0.5 * (d * (LN_2PI + spec.variance.ln()) + sq_distance(&spec.mean, x) / spec.variance)
}

/// Density under a diagonal covariance given per-dimension variances.
pub fn likelihood_diagonal(mean: &[f64], variances: &[f64], x: &[f64]) -> f64 {
    assert_eq!(mean.len(), variances.len());
    assert_eq!(mean.len(), x.len());
    let mut log = 0.0;
    for ((m, v), xi) in mean.iter().zip(variances).zip(x) {
        log += -0.5 * (LN_2PI + v.ln() + (xi - m) * (xi - m) / v);
    }
    log.exp()
}

/// Mixture density `sum_i weight_i * L_i(x)`; weights must sum to one.
pub fn mixture_likelihood(specs: &[GaussianClassSpec], x: &[f64]) -> Result<f64> {
    let total: f64 = specs.iter().map(|s| s.mixture_weight).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(
            "mixture_weight",
            format!("weights sum to {total}, expected 1"),
        ));
    }
    Ok(specs
        .iter()
        .map(|s| s.mixture_weight * likelihood(s, x))
        .sum())
}

/// Squared Mahalanobis distance `||x - mean||^2 / variance`.
pub fn mahalanobis_sq(spec: &GaussianClassSpec, x: &[f64]) -> f64 {
    assert_eq!(spec.dim(), x.len(), "dimension mismatch");
    sq_distance(&spec.mean, x) / spec.variance
}

/// `E_{x ~ source}[L_target(x)]`: the Gaussian density of the target mean
/// under `N(source_mean, (sigma_s^2 + sigma_t^2) I)`.
pub fn expected_cross_likelihood(
    source: &GaussianClassSpec,
    target: &GaussianClassSpec,
) -> f64 {
    assert_eq!(source.dim(), target.dim());
    let d = source.dim() as f64;
    let var = source.variance + target.variance;
    let log = -0.5 * (d * (LN_2PI + var.ln()) + sq_distance(&source.mean, &target.mean) / var);
    log.exp()
}

/// `E_{x ~ source}[D^2(x, target)] = d * s_var/t_var + ||means||^2 / t_var`.
pub fn mmd_expected(source: &GaussianClassSpec, target: &GaussianClassSpec, d: usize) -> f64 {
    assert_eq!(source.dim(), d);
    assert_eq!(target.dim(), d);
    d as f64 * source.variance / target.variance
        + sq_distance(&source.mean, &target.mean) / target.variance
}

/// Maximum-likelihood condition for a known-class sample to prefer its own
/// class over any single competitor:
/// `||mu_k - mu_i||^2 >= d (s_k^2 + s_i^2) ln(2 s_k^2 / (s_k^2 + s_i^2))`.
pub fn mle_condition(
    known_k: &GaussianClassSpec,
    other_i: &GaussianClassSpec,
    d: usize,
) -> TheoremVerdict {
    assert_eq!(known_k.dim(), d);
    assert_eq!(other_i.dim(), d);
    let var_sum = known_k.variance + other_i.variance;
    let lhs = sq_distance(&known_k.mean, &other_i.mean);
    let rhs = d as f64 * var_sum * (2.0 * known_k.variance / var_sum).ln();
    TheoremVerdict::compare(lhs, rhs)
}

/// Maximum-likelihood condition for an unknown-class sample to prefer the
/// sample class over known class `k`:
/// `||mu_k - mu_u||^2 / (s_k^2 + s_u^2) >= 2 ln((1 - P(X_k)) / P(X_u)) + d ln(2 s_u^2 / (s_k^2 + s_u^2))`.
pub fn mle_condition_uu(
    known_k: &GaussianClassSpec,
    uu: &GaussianClassSpec,
    d: usize,
) -> Result<TheoremVerdict> {
    assert_eq!(known_k.dim(), d);
    assert_eq!(uu.dim(), d);
    if uu.mixture_weight <= 0.0 {
        return Err(Error::invalid("mixture_weight", "P(X_u) must be positive"));
    }
    if known_k.mixture_weight >= 1.0 {
        return Err(Error::invalid("mixture_weight", "P(X_k) must be below 1"));
    }
    let var_sum = known_k.variance + uu.variance;
    let lhs = sq_distance(&known_k.mean, &uu.mean) / var_sum;
    let rhs = 2.0 * ((1.0 - known_k.mixture_weight) / uu.mixture_weight).ln()
        + d as f64 * (2.0 * uu.variance / var_sum).ln();
    Ok(TheoremVerdict::compare(lhs, rhs))
}

/// Bayes condition for a known-class sample against competitor `i`:
/// `||mu_k - mu_i||^2 / (s_k^2 + s_i^2) >= 2 ln(P'(X_s)/P'(X_k)) + d ln(2 s_k^2 / (s_k^2 + s_i^2))`.
pub fn bayes_condition(
    known_k: &GaussianClassSpec,
    other_i: &GaussianClassSpec,
    sample_prior: f64,
    known_prior: f64,
    d: usize,
) -> Result<TheoremVerdict> {
    check_prior("sample_prior", sample_prior)?;
    check_prior("known_prior", known_prior)?;
    let var_sum = known_k.variance + other_i.variance;
    let lhs = sq_distance(&known_k.mean, &other_i.mean) / var_sum;
    let rhs = 2.0 * (sample_prior / known_prior).ln()
        + d as f64 * (2.0 * known_k.variance / var_sum).ln();
    Ok(TheoremVerdict::compare(lhs, rhs))
}

/// Bayes condition for an unknown-class sample. The log argument
/// `(P'(X_k) - P'(X_s) P(X_k)) / (P'(X_s) P(X_u))` can be non-positive, in
/// which case the conclusion is vacuously satisfied.
pub fn bayes_condition_uu(
    known_k: &GaussianClassSpec,
    uu: &GaussianClassSpec,
    sample_prior: f64,
    known_prior: f64,
    d: usize,
) -> Result<TheoremVerdict> {
    check_prior("sample_prior", sample_prior)?;
    check_prior("known_prior", known_prior)?;
    if uu.mixture_weight <= 0.0 {
        return Err(Error::invalid("mixture_weight", "P(X_u) must be positive"));
    }
    let var_sum = known_k.variance + uu.variance;
    let lhs = sq_distance(&known_k.mean, &uu.mean) / var_sum;
    let numerator = known_prior - sample_prior * known_k.mixture_weight;
    if numerator <= 0.0 {
        return Ok(TheoremVerdict::vacuous(lhs));
    }
    let rhs = 2.0 * (numerator / (sample_prior * uu.mixture_weight)).ln()
        + d as f64 * (2.0 * uu.variance / var_sum).ln();
    Ok(TheoremVerdict::compare(lhs, rhs))
}

fn check_prior(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::invalid(name, format!("{value} outside (0,1)")));
    }
    Ok(())
}

/// Mahalanobis condition for a known-class sample to sit closer to its own
/// class than to the sample class:
/// `||mu_k - mu_s||^2 >= d s_s^2 (1 - s_k^2 / s_s^2)`.
pub fn mmd_condition(
    known_k: &GaussianClassSpec,
    sample_s: &GaussianClassSpec,
    d: usize,
) -> TheoremVerdict {
    let lhs = sq_distance(&known_k.mean, &sample_s.mean);
    let rhs = d as f64 * sample_s.variance * (1.0 - known_k.variance / sample_s.variance);
    TheoremVerdict::compare(lhs, rhs)
}

/// Mahalanobis condition for an unknown-class sample to sit closer to the
/// sample class than to known class `k`:
/// `||mu_u - mu_k||^2/s_k^2 - ||mu_u - mu_s||^2/s_s^2 >= d (s_u^2/s_s^2 - s_u^2/s_k^2)`.
pub fn mmd_condition_uu(
    uu: &GaussianClassSpec,
    known_k: &GaussianClassSpec,
    sample_s: &GaussianClassSpec,
    d: usize,
) -> TheoremVerdict {
    let lhs = sq_distance(&uu.mean, &known_k.mean) / known_k.variance
        - sq_distance(&uu.mean, &sample_s.mean) / sample_s.variance;
    let rhs =
        d as f64 * (uu.variance / sample_s.variance - uu.variance / known_k.variance);
    TheoremVerdict::compare(lhs, rhs)
}

/// Isotropic moment-matched summary of the test mixture: the sample class's
/// mean is the weighted mean of all components and its variance is
/// `trace(mixture covariance) / d`.
pub fn fit_sample_mixture(
    known: &[GaussianClassSpec],
    uu: &GaussianClassSpec,
) -> Result<GaussianClassSpec> {
    let specs: Vec<&GaussianClassSpec> = known.iter().chain(std::iter::once(uu)).collect();
    let total: f64 = specs.iter().map(|s| s.mixture_weight).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(
            "mixture_weight",
            format!("weights sum to {total}, expected 1"),
        ));
    }
    let d = uu.dim();
    let mut mean = vec![0.0; d];
    for s in &specs {
        assert_eq!(s.dim(), d, "dimension mismatch");
        for (m, v) in mean.iter_mut().zip(&s.mean) {
            *m += s.mixture_weight * v;
        }
    }
    let mut variance = 0.0;
    for s in &specs {
        variance += s.mixture_weight * (s.variance + sq_distance(&s.mean, &mean) / d as f64);
    }
    Ok(GaussianClassSpec {
        mean,
        variance,
        mixture_weight: 1.0,
        train_prior: 0.0,
    })
}
