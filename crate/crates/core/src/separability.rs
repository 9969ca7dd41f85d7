//! Scatter matrices and the J1 trace-ratio separability criterion, plus the
//! sweep that relates achieved separability to rectified-model accuracy.
//!
//! Two reference conventions exist and are not interchangeable: within the
//! known classes the reference is the unweighted mean of the known class
//! means, while against the unknown class the reference is the unknown mean
//! and the within-class scatter is the unknown covariance alone. Callers
//! pick the mode explicitly.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, ClassifierSpec};
use crate::dataset::{generate_gaussian, make_scenario, Dataset, GaussianMixtureSpec};
use crate::error::{Error, Result};
use crate::rtscv::{rectify, RtscvConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatterMode {
    KnownVsKnown,
    KnownVsUu,
}

/// Between- and within-class scatter with their J1 combination.
#[derive(Debug, Clone)]
pub struct ScatterSummary {
    pub s_b: Array2<f64>,
    pub s_w: Array2<f64>,
    pub j1: f64,
    pub mode: ScatterMode,
}

/// `sum_i w_i (mu_i - reference)(mu_i - reference)^T`.
pub fn between_scatter(
    means: &[Array1<f64>],
    weights: &[f64],
    reference: &Array1<f64>,
) -> Result<Array2<f64>> {
    if means.len() != weights.len() {
        return Err(Error::invalid("weights", "length mismatch with means"));
    }
    let d = reference.len();
    let mut s = Array2::<f64>::zeros((d, d));
    for (mean, &w) in means.iter().zip(weights) {
        if mean.len() != d {
            return Err(Error::DimMismatch {
                expected: d,
                got: mean.len(),
            });
        }
        let delta = mean - reference;
        for r in 0..d {
            for c in 0..d {
                s[[r, c]] += w * delta[r] * delta[c];
            }
        }
    }
    Ok(s)
}

/// `sum_i w_i Sigma_i`.
pub fn within_scatter(covs: &[Array2<f64>], weights: &[f64]) -> Result<Array2<f64>> {
    if covs.is_empty() {
        return Err(Error::EmptyInput("covariances"));
    }
    if covs.len() != weights.len() {
        return Err(Error::invalid("weights", "length mismatch with covariances"));
    }
    let d = covs[0].nrows();
    let mut s = Array2::<f64>::zeros((d, d));
    for (cov, &w) in covs.iter().zip(weights) {
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimMismatch {
                expected: d,
                got: cov.nrows(),
            });
        }
        s.scaled_add(w, cov);
    }
    Ok(s)
}

/// `J1 = 1 + trace(S_b) / trace(S_w)`.
pub fn j1(s_b: &Array2<f64>, s_w: &Array2<f64>) -> Result<f64> {
    let trace_w: f64 = s_w.diag().sum();
    if trace_w <= 0.0 {
        return Err(Error::SingularScatter);
    }
    let trace_b: f64 = s_b.diag().sum();
    Ok(1.0 + trace_b / trace_w)
}

impl ScatterSummary {
    /// Scatter computed from the generating mixture itself. Weights are the
    /// component weights renormalized over the classes the mode includes.
    pub fn from_spec(
        spec: &GaussianMixtureSpec,
        mode: ScatterMode,
        uu_class_ids: &BTreeSet<usize>,
    ) -> Result<Self> {
        spec.validate()?;
        let d = spec.dim();
        let known: Vec<_> = spec
            .components
            .iter()
            .filter(|c| !uu_class_ids.contains(&c.class_id))
            .collect();
        let unknown: Vec<_> = spec
            .components
            .iter()
            .filter(|c| uu_class_ids.contains(&c.class_id))
            .collect();
        if known.is_empty() {
            return Err(Error::EmptyInput("known components"));
        }
        let known_means: Vec<Array1<f64>> = known
            .iter()
            .map(|c| Array1::from_vec(c.mean.clone()))
            .collect();
        let known_total: f64 = known.iter().map(|c| c.weight).sum();
        let known_weights: Vec<f64> = known.iter().map(|c| c.weight / known_total).collect();
        let iso = |variance: f64| Array2::<f64>::eye(d) * variance;

        let (s_b, s_w) = match mode {
            ScatterMode::KnownVsKnown => {
                let reference = {
                    let mut sum = Array1::<f64>::zeros(d);
                    for m in &known_means {
                        sum += m;
                    }
                    sum / known_means.len() as f64
                };
                let covs: Vec<Array2<f64>> =
                    known.iter().map(|c| iso(c.variance)).collect();
                (
                    between_scatter(&known_means, &known_weights, &reference)?,
                    within_scatter(&covs, &known_weights)?,
                )
            }
            ScatterMode::KnownVsUu => {
                if unknown.is_empty() {
                    return Err(Error::EmptyInput("unknown components"));
                }
                let uu_total: f64 = unknown.iter().map(|c| c.weight).sum();
                // mean and isotropic covariance of the unknown mixture
                let mut reference = Array1::<f64>::zeros(d);
                for c in &unknown {
                    let m = Array1::from_vec(c.mean.clone());
                    reference.scaled_add(c.weight / uu_total, &m);
                }
                let mut uu_var = 0.0;
                for c in &unknown {
                    let m = Array1::from_vec(c.mean.clone());
                    let delta = &m - &reference;
                    uu_var +=
                        c.weight / uu_total * (c.variance + delta.dot(&delta) / d as f64);
                }
                (
                    between_scatter(&known_means, &known_weights, &reference)?,
                    iso(uu_var),
                )
            }
        };
        let j1 = j1(&s_b, &s_w)?;
        Ok(ScatterSummary { s_b, s_w, j1, mode })
    }

    /// Scatter estimated from data with population (divide-by-n) covariances
    /// and class frequencies as weights. `uu_class_ids` refer to labels of
    /// `data`.
    pub fn from_data(
        data: &Dataset,
        mode: ScatterMode,
        uu_class_ids: &BTreeSet<usize>,
    ) -> Result<Self> {
        let d = data.dim();
        let by_class = data.class_indices();
        let mut known_means = Vec::new();
        let mut known_covs = Vec::new();
        let mut known_counts = Vec::new();
        let mut uu_rows: Vec<usize> = Vec::new();
        for (class, members) in by_class.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            if uu_class_ids.contains(&class) {
                uu_rows.extend_from_slice(members);
            } else {
                let (mean, cov) = mean_and_cov(data, members);
                known_means.push(mean);
                known_covs.push(cov);
                known_counts.push(members.len());
            }
        }
        if known_means.is_empty() {
            return Err(Error::EmptyInput("known classes"));
        }
        let known_total: f64 = known_counts.iter().sum::<usize>() as f64;
        let known_weights: Vec<f64> = known_counts
            .iter()
            .map(|&c| c as f64 / known_total)
            .collect();

        let (s_b, s_w) = match mode {
            ScatterMode::KnownVsKnown => {
                let mut reference = Array1::<f64>::zeros(d);
                for m in &known_means {
                    reference += m;
                }
                reference /= known_means.len() as f64;
                (
                    between_scatter(&known_means, &known_weights, &reference)?,
                    within_scatter(&known_covs, &known_weights)?,
                )
            }
            ScatterMode::KnownVsUu => {
                if uu_rows.is_empty() {
                    return Err(Error::EmptyInput("unknown rows"));
                }
                let (reference, uu_cov) = mean_and_cov(data, &uu_rows);
                (
                    between_scatter(&known_means, &known_weights, &reference)?,
                    uu_cov,
                )
            }
        };
        let j1 = j1(&s_b, &s_w)?;
        Ok(ScatterSummary { s_b, s_w, j1, mode })
    }
}

fn mean_and_cov(data: &Dataset, rows: &[usize]) -> (Array1<f64>, Array2<f64>) {
    let d = data.dim();
    let n = rows.len() as f64;
    let mut mean = Array1::<f64>::zeros(d);
    for &i in rows {
        mean += &data.row(i);
    }
    mean /= n;
    let mut cov = Array2::<f64>::zeros((d, d));
    for &i in rows {
        let delta = &data.row(i) - &mean;
        for r in 0..d {
            for c in 0..d {
                cov[[r, c]] += delta[r] * delta[c];
            }
        }
    }
    cov /= n; // population covariance
    (mean, cov)
}

/// Which part of the mixture a sweep perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTarget {
    Known,
    Uu,
}

/// What the sweep scales: mean positions (about the relevant centroid) or
/// component variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepQuantity {
    MeanSpread,
    Covariance,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepAxis {
    pub target: SweepTarget,
    pub quantity: SweepQuantity,
}

/// One separability sweep point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub level: f64,
    pub j1: f64,
    /// Combined accuracy over known and unknown strata on held-out test rows.
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct SeparabilitySweep {
    pub points: Vec<SweepPoint>,
    /// Levels dropped because their scatter was degenerate, with the reason.
    pub skipped: Vec<(f64, String)>,
}

/// Applies `axis` at `level` to a copy of the base mixture.
pub fn scale_spec(
    base: &GaussianMixtureSpec,
    uu_class_ids: &BTreeSet<usize>,
    axis: SweepAxis,
    level: f64,
) -> GaussianMixtureSpec {
    let mut spec = base.clone();
    let d = base.dim();
    let known: Vec<&crate::dataset::GaussianComponent> = base
        .components
        .iter()
        .filter(|c| !uu_class_ids.contains(&c.class_id))
        .collect();
    let centroid: Vec<f64> = {
        let mut sum = vec![0.0; d];
        for c in &known {
            for (s, m) in sum.iter_mut().zip(&c.mean) {
                *s += m;
            }
        }
        sum.into_iter().map(|s| s / known.len() as f64).collect()
    };
    for comp in &mut spec.components {
        let is_uu = uu_class_ids.contains(&comp.class_id);
        let touched = match axis.target {
            SweepTarget::Known => !is_uu,
            SweepTarget::Uu => is_uu,
        };
        if !touched {
            continue;
        }
        match axis.quantity {
            SweepQuantity::MeanSpread => {
                for (m, c) in comp.mean.iter_mut().zip(&centroid) {
                    *m = c + level * (*m - c);
                }
            }
            SweepQuantity::Covariance => {
                comp.variance *= level;
            }
        }
    }
    spec
}

/// For each level: perturb the mixture, regenerate data, rectify, and record
/// the achieved J1 (spec-side) against combined held-out accuracy.
#[allow(clippy::too_many_arguments)]
pub fn sweep_separability(
    base: &GaussianMixtureSpec,
    uu_class_ids: &BTreeSet<usize>,
    axis: SweepAxis,
    levels: &[f64],
    classifier: &ClassifierSpec,
    cfg: &RtscvConfig,
    n_per_component: usize,
    split_fraction: f64,
) -> Result<SeparabilitySweep> {
    if levels.is_empty() {
        return Err(Error::EmptyInput("levels"));
    }
    let mode = match axis.target {
        SweepTarget::Known => ScatterMode::KnownVsKnown,
        SweepTarget::Uu => ScatterMode::KnownVsUu,
    };
    let results: Vec<(f64, Result<SweepPoint>)> = levels
        .par_iter()
        .map(|&level| {
            let run = || -> Result<SweepPoint> {
                let spec = scale_spec(base, uu_class_ids, axis, level);
                let summary = ScatterSummary::from_spec(&spec, mode, uu_class_ids)?;
                let data = generate_gaussian(&spec, n_per_component)?;
                let sc = make_scenario(&data, uu_class_ids, split_fraction, cfg.seed)?;
                let outcome = rectify(&sc.train, &sc.test, classifier, cfg)?;
                let sampled: std::collections::HashSet<usize> = outcome
                    .diagnostics
                    .sample_test_indices
                    .iter()
                    .copied()
                    .collect();
                let held: Vec<usize> = (0..sc.test.n_samples())
                    .filter(|i| !sampled.contains(i))
                    .collect();
                let held_data = sc.test.subset(&held);
                let preds = outcome.model.predict_batch(held_data.features())?;
                let correct = preds
                    .iter()
                    .zip(held_data.labels())
                    .filter(|(p, t)| p == t)
                    .count();
                Ok(SweepPoint {
                    level,
                    j1: summary.j1,
                    accuracy: correct as f64 / held_data.n_samples() as f64,
                })
            };
            (level, run())
        })
        .collect();

    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (level, result) in results {
        match result {
            Ok(point) => points.push(point),
            Err(Error::SingularScatter) => {
                skipped.push((level, "singular within-class scatter".to_string()));
            }
            Err(other) => return Err(other),
        }
    }
    Ok(SeparabilitySweep { points, skipped })
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("series", "need two equal-length series"));
    }
    let rank = |vals: &[f64]| -> Vec<f64> {
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let mut ranks = vec![0.0; vals.len()];
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && vals[order[j + 1]] == vals[order[i]] {
                j += 1;
            }
            let r = (i + 1 + j + 1) as f64 / 2.0;
            for &idx in &order[i..=j] {
                ranks[idx] = r;
            }
            i = j + 1;
        }
        ranks
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::invalid("series", "constant ranks"));
    }
    Ok(cov / (vx * vy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::GaussianComponent;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn between_scatter_equal_means_is_zero() {
        let means = vec![array![1.0, 2.0], array![1.0, 2.0]];
        let s = between_scatter(&means, &[0.5, 0.5], &array![1.0, 2.0]).unwrap();
        assert_eq!(s, Array2::<f64>::zeros((2, 2)));
    }

    #[test]
    fn between_scatter_unit_axis_pair() {
        let means = vec![array![1.0, 0.0], array![-1.0, 0.0]];
        let s = between_scatter(&means, &[0.5, 0.5], &array![0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(s[[0, 0]], 1.0);
        assert_abs_diff_eq!(s[[0, 1]], 0.0);
        assert_abs_diff_eq!(s[[1, 1]], 0.0);
    }

    #[test]
    fn scatter_matches_naive_loop() {
        let means = vec![array![1.0, 2.0], array![-0.5, 0.3], array![2.0, -1.0]];
        let weights = [0.2, 0.5, 0.3];
        let reference = array![0.4, 0.1];
        let s = between_scatter(&means, &weights, &reference).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let mut expected = 0.0;
                for (m, &w) in means.iter().zip(&weights) {
                    expected += w * (m[r] - reference[r]) * (m[c] - reference[c]);
                }
                assert_abs_diff_eq!(s[[r, c]], expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn within_scatter_single_and_isotropic() {
        let cov = array![[2.0, 0.1], [0.1, 1.0]];
        let s = within_scatter(std::slice::from_ref(&cov), &[1.0]).unwrap();
        assert_eq!(s, cov);
        let iso = Array2::<f64>::eye(2) * 3.0;
        let s2 = within_scatter(&[iso.clone(), iso.clone()], &[0.5, 0.5]).unwrap();
        assert_eq!(s2, iso);
    }

    #[test]
    fn j1_identities() {
        let zero = Array2::<f64>::zeros((2, 2));
        let eye = Array2::<f64>::eye(2);
        assert_abs_diff_eq!(j1(&zero, &eye).unwrap(), 1.0);
        assert_abs_diff_eq!(j1(&eye, &eye).unwrap(), 2.0);
        assert!(matches!(j1(&eye, &zero), Err(Error::SingularScatter)));
    }

    #[test]
    fn j1_scale_invariant() {
        let s_b = array![[3.0, 0.5], [0.5, 1.0]];
        let s_w = array![[1.0, 0.0], [0.0, 2.0]];
        let base = j1(&s_b, &s_w).unwrap();
        let alpha2 = 7.3f64;
        let scaled = j1(&(&s_b * alpha2), &(&s_w * alpha2)).unwrap();
        assert_abs_diff_eq!(base, scaled, epsilon = 1e-12);
    }

    fn demo_spec() -> GaussianMixtureSpec {
        GaussianMixtureSpec {
            components: vec![
                GaussianComponent {
                    mean: vec![3.0, 0.0],
                    variance: 0.5,
                    weight: 0.4,
                    class_id: 0,
                },
                GaussianComponent {
                    mean: vec![-3.0, 0.0],
                    variance: 0.5,
                    weight: 0.4,
                    class_id: 1,
                },
                GaussianComponent {
                    mean: vec![0.0, 9.0],
                    variance: 1.0,
                    weight: 0.2,
                    class_id: 2,
                },
            ],
            seed: 5,
        }
    }

    #[test]
    fn trace_identity_holds() {
        let uu = BTreeSet::from([2]);
        let s = ScatterSummary::from_spec(&demo_spec(), ScatterMode::KnownVsKnown, &uu).unwrap();
        let combined = &s.s_b + &s.s_w;
        let direct: f64 = combined.diag().sum();
        let split: f64 = s.s_b.diag().sum() + s.s_w.diag().sum();
        assert_abs_diff_eq!(direct, split, epsilon = 1e-12);
    }

    #[test]
    fn scatter_psd_by_gershgorin() {
        let uu = BTreeSet::from([2]);
        for mode in [ScatterMode::KnownVsKnown, ScatterMode::KnownVsUu] {
            let s = ScatterSummary::from_spec(&demo_spec(), mode, &uu).unwrap();
            for m in [&s.s_b, &s.s_w] {
                for r in 0..m.nrows() {
                    let off: f64 = (0..m.ncols())
                        .filter(|&c| c != r)
                        .map(|c| m[[r, c]].abs())
                        .sum();
                    assert!(
                        m[[r, r]] >= -1e-9 - off,
                        "gershgorin bound violated in mode {mode:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn empirical_scatter_tracks_spec() {
        let spec = demo_spec();
        let uu = BTreeSet::from([2]);
        let data = generate_gaussian(&spec, 35_000).unwrap();
        for mode in [ScatterMode::KnownVsKnown, ScatterMode::KnownVsUu] {
            let from_spec = ScatterSummary::from_spec(&spec, mode, &uu).unwrap();
            let from_data = ScatterSummary::from_data(&data, mode, &uu).unwrap();
            let tb_spec: f64 = from_spec.s_b.diag().sum();
            let tb_data: f64 = from_data.s_b.diag().sum();
            let tw_spec: f64 = from_spec.s_w.diag().sum();
            let tw_data: f64 = from_data.s_w.diag().sum();
            assert!(
                (tb_spec - tb_data).abs() / tb_spec < 0.02,
                "{mode:?} between trace {tb_spec} vs {tb_data}"
            );
            assert!(
                (tw_spec - tw_data).abs() / tw_spec < 0.02,
                "{mode:?} within trace {tw_spec} vs {tw_data}"
            );
        }
    }

    #[test]
    fn spearman_basics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(spearman(&xs, &[2.0, 4.0, 6.0, 8.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(spearman(&xs, &[8.0, 6.0, 4.0, 2.0]).unwrap(), -1.0);
    }

    #[test]
    fn scale_spec_moves_the_right_components() {
        let base = demo_spec();
        let uu = BTreeSet::from([2]);
        let spread = scale_spec(
            &base,
            &uu,
            SweepAxis {
                target: SweepTarget::Known,
                quantity: SweepQuantity::MeanSpread,
            },
            2.0,
        );
        // centroid of knowns is the origin; means double
        assert_abs_diff_eq!(spread.components[0].mean[0], 6.0);
        assert_abs_diff_eq!(spread.components[2].mean[1], 9.0); // untouched

        let wider = scale_spec(
            &base,
            &uu,
            SweepAxis {
                target: SweepTarget::Uu,
                quantity: SweepQuantity::Covariance,
            },
            4.0,
        );
        assert_abs_diff_eq!(wider.components[2].variance, 4.0);
        assert_abs_diff_eq!(wider.components[0].variance, 0.5);
    }
}
