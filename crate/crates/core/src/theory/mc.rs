//! Seeded Monte-Carlo oracles for the expectation identities behind the
//! closed-form evaluators. Draws stream one vector at a time; estimates
//! carry a standard error from a Welford accumulator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::GaussianClassSpec;

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Sample mean, sample variance (of the underlying values), and the standard
/// error of the mean.
#[derive(Debug, Clone, Copy)]
pub struct McMoments {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub n: usize,
}

struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn new() -> Self {
        Welford {
            n: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Streams `n` draws from `source` through `f`, returning mean and moments.
pub fn mc_moments(
    source: &GaussianClassSpec,
    n: usize,
    seed: u64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> McMoments {
    let d = source.dim();
    let sd = source.variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut x = vec![0.0; d];
    let mut acc = Welford::new();
    for _ in 0..n {
        for (xi, mi) in x.iter_mut().zip(&source.mean) {
            let z: f64 = normal.sample(&mut rng);
            *xi = mi + sd * z;
        }
        acc.push(f(&x));
    }
    McMoments {
        mean: acc.mean,
        variance: acc.variance(),
        std_error: acc.std_error(),
        n: acc.n,
    }
}

fn to_estimate(m: McMoments) -> McEstimate {
    McEstimate {
        mean: m.mean,
        std_error: m.std_error,
        n: m.n,
    }
}

/// `E_{x ~ source}[f(x) - g(x)]` on paired draws; the standard error is that
/// of the paired difference.
pub fn mc_paired_gap(
    source: &GaussianClassSpec,
    n: usize,
    seed: u64,
    mut f: impl FnMut(&[f64]) -> f64,
    mut g: impl FnMut(&[f64]) -> f64,
) -> McEstimate {
    to_estimate(mc_moments(source, n, seed, |x| f(x) - g(x)))
}

/// Monte-Carlo `E_{x ~ source}[L_target(x)]`.
pub fn mc_expected_likelihood(
    source: &GaussianClassSpec,
    target: &GaussianClassSpec,
    n: usize,
    seed: u64,
) -> McEstimate {
    to_estimate(mc_moments(source, n, seed, |x| super::likelihood(target, x)))
}

/// Monte-Carlo `E_{x ~ source}[D^2(x, target)]` with full moments (the
/// in-class case is chi-squared with `d` degrees of freedom).
pub fn mc_mahalanobis_moments(
    source: &GaussianClassSpec,
    target: &GaussianClassSpec,
    n: usize,
    seed: u64,
) -> McMoments {
    mc_moments(source, n, seed, |x| super::mahalanobis_sq(target, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{expected_cross_likelihood, mmd_expected, GaussianClassSpec};

    fn spec(mean: &[f64], variance: f64) -> GaussianClassSpec {
        GaussianClassSpec::new(mean.to_vec(), variance)
    }

    #[test]
    fn cross_likelihood_matches_closed_form() {
        let source = spec(&[0.5, -0.5], 1.2);
        let target = spec(&[1.0, 0.0], 0.8);
        let est = mc_expected_likelihood(&source, &target, 200_000, 11);
        let exact = expected_cross_likelihood(&source, &target);
        assert!(
            (est.mean - exact).abs() < 4.0 * est.std_error,
            "mc {} vs exact {exact} (se {})",
            est.mean,
            est.std_error
        );
        assert!((est.mean - exact).abs() / exact < 0.01);
    }

    #[test]
    fn mahalanobis_in_class_is_chi_squared() {
        let s = spec(&[1.0, 2.0, 3.0], 2.0);
        let m = mc_mahalanobis_moments(&s, &s, 200_000, 3);
        assert!((m.mean - 3.0).abs() / 3.0 < 0.02, "mean {}", m.mean);
        assert!((m.variance - 6.0).abs() / 6.0 < 0.02, "var {}", m.variance);
    }

    #[test]
    fn mmd_cross_matches_closed_form() {
        let source = spec(&[2.0, 0.0], 1.0);
        let target = spec(&[0.0, 0.0], 2.0);
        let m = mc_mahalanobis_moments(&source, &target, 200_000, 5);
        let exact = mmd_expected(&source, &target, 2);
        assert!((m.mean - exact).abs() / exact < 0.01);
    }

    #[test]
    fn paired_gap_tracks_sign() {
        let source = spec(&[0.0], 1.0);
        let near = spec(&[0.5], 1.0);
        let far = spec(&[5.0], 1.0);
        let gap = mc_paired_gap(
            &source,
            100_000,
            9,
            |x| crate::theory::likelihood(&near, x),
            |x| crate::theory::likelihood(&far, x),
        );
        assert!(gap.mean > 3.0 * gap.std_error);
    }

    #[test]
    fn estimates_are_deterministic() {
        let s = spec(&[0.0, 1.0], 1.0);
        let a = mc_expected_likelihood(&s, &s, 10_000, 42);
        let b = mc_expected_likelihood(&s, &s, 10_000, 42);
        assert_eq!(a.mean, b.mean);
    }
}
