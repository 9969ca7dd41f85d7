//! PCA by power iteration with deflation, for down-sampling image-derived
//! feature tables before ingestion.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

const POWER_TOL: f64 = 1e-13;
const POWER_MAX_ITER: usize = 20_000;

#[derive(Debug, Clone)]
pub struct PcaProjection {
    pub projected: Dataset,
    /// One principal axis per row.
    pub components: Array2<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub mean: Array1<f64>,
}

/// Projects onto the top `n_components` principal axes of the population
/// covariance. Deterministic: the iteration starts from a fixed seeded
/// vector per component.
pub fn pca_project(data: &Dataset, n_components: usize) -> Result<PcaProjection> {
    let d = data.dim();
    if n_components == 0 || n_components > d {
        return Err(Error::invalid(
            "n_components",
            format!("{n_components} outside 1..={d}"),
        ));
    }
    if data.n_samples() < 2 {
        return Err(Error::EmptyInput("pca input"));
    }
    let n = data.n_samples() as f64;
    let mean = data.features().mean_axis(ndarray::Axis(0)).unwrap();
    let mut cov = Array2::<f64>::zeros((d, d));
    for row in data.features().rows() {
        let delta = &row - &mean;
        for r in 0..d {
            for c in 0..d {
                cov[[r, c]] += delta[r] * delta[c];
            }
        }
    }
    cov /= n;
    let total_variance: f64 = cov.diag().sum();

    let mut components = Array2::<f64>::zeros((n_components, d));
    let mut eigenvalues = Vec::with_capacity(n_components);
    let mut deflated = cov.clone();
    for comp in 0..n_components {
        let (vector, value) = power_iteration(&deflated, &components, comp)?;
        for c in 0..d {
            components[[comp, c]] = vector[c];
        }
        eigenvalues.push(value.max(0.0));
        // deflate
        for r in 0..d {
            for c in 0..d {
                deflated[[r, c]] -= value * vector[r] * vector[c];
            }
        }
    }

    let centered = {
        let mut x = data.features().to_owned();
        for mut row in x.rows_mut() {
            row -= &mean;
        }
        x
    };
    let projected_features = centered.dot(&components.t());
    let projected = Dataset::new(
        projected_features,
        data.labels().to_vec(),
        data.n_classes(),
    )?;
    let explained_variance_ratio = eigenvalues
        .iter()
        .map(|&v| if total_variance > 0.0 { v / total_variance } else { 0.0 })
        .collect();
    Ok(PcaProjection {
        projected,
        components,
        explained_variance_ratio,
        mean,
    })
}

/// Leading eigenpair of `matrix`, re-orthogonalized against the rows of
/// `previous[..n_previous]` each step. Falls back to completing the basis
/// when the residual spectrum is numerically zero.
fn power_iteration(
    matrix: &Array2<f64>,
    previous: &Array2<f64>,
    n_previous: usize,
) -> Result<(Array1<f64>, f64)> {
    let d = matrix.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACE5 + n_previous as u64);
    let mut v = Array1::from_shape_fn(d, |_| rng.random_range(-1.0..1.0));
    orthogonalize(&mut v, previous, n_previous);
    let norm = v.dot(&v).sqrt();
    if norm < 1e-12 {
        return complete_basis(previous, n_previous, d);
    }
    v /= norm;

    let mut eigenvalue = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let mut next = matrix.dot(&v);
        orthogonalize(&mut next, previous, n_previous);
        let norm = next.dot(&next).sqrt();
        if norm < 1e-14 {
            // residual matrix is (numerically) zero on this subspace
            return complete_basis(previous, n_previous, d);
        }
        next /= norm;
        let delta = (&next - &v).dot(&(&next - &v)).sqrt();
        let flipped = (&next + &v).dot(&(&next + &v)).sqrt();
        v = next;
        eigenvalue = v.dot(&matrix.dot(&v));
        if delta.min(flipped) < POWER_TOL {
            break;
        }
    }
    Ok((v, eigenvalue))
}

fn orthogonalize(v: &mut Array1<f64>, previous: &Array2<f64>, n_previous: usize) {
    for p in 0..n_previous {
        let basis = previous.row(p);
        let dot = v.dot(&basis);
        for (vi, bi) in v.iter_mut().zip(basis) {
            *vi -= dot * bi;
        }
    }
}

/// Any unit vector orthogonal to the found components (zero eigenvalue).
fn complete_basis(
    previous: &Array2<f64>,
    n_previous: usize,
    d: usize,
) -> Result<(Array1<f64>, f64)> {
    for axis in 0..d {
        let mut candidate = Array1::<f64>::zeros(d);
        candidate[axis] = 1.0;
        orthogonalize(&mut candidate, previous, n_previous);
        let norm = candidate.dot(&candidate).sqrt();
        if norm > 1e-8 {
            return Ok((candidate / norm, 0.0));
        }
    }
    Err(Error::invalid("pca", "could not complete the basis"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_one_data_reconstructs_exactly() {
        // points on the line y = 2x
        let features = Array2::from_shape_fn((20, 2), |(i, j)| {
            let t = i as f64 - 10.0;
            if j == 0 {
                t
            } else {
                2.0 * t
            }
        });
        let data = Dataset::from_parts(features, vec![0; 20]).unwrap();
        let pca = pca_project(&data, 1).unwrap();
        assert_abs_diff_eq!(pca.explained_variance_ratio[0], 1.0, epsilon = 1e-10);
        // reconstruction error is zero
        for i in 0..20 {
            let score = pca.projected.features()[[i, 0]];
            let rebuilt_x = pca.mean[0] + score * pca.components[[0, 0]];
            let rebuilt_y = pca.mean[1] + score * pca.components[[0, 1]];
            assert_abs_diff_eq!(rebuilt_x, data.features()[[i, 0]], epsilon = 1e-9);
            assert_abs_diff_eq!(rebuilt_y, data.features()[[i, 1]], epsilon = 1e-9);
        }
    }

    #[test]
    fn full_projection_preserves_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let features = Array2::from_shape_fn((40, 5), |_| rng.random_range(-2.0..2.0));
        let data = Dataset::from_parts(features, vec![0; 40]).unwrap();
        let pca = pca_project(&data, 5).unwrap();
        for i in [0usize, 7, 13] {
            for j in [3usize, 22, 39] {
                let orig: f64 = (&data.row(i) - &data.row(j))
                    .iter()
                    .map(|v| v * v)
                    .sum();
                let proj: f64 = (&pca.projected.row(i) - &pca.projected.row(j))
                    .iter()
                    .map(|v| v * v)
                    .sum();
                assert_abs_diff_eq!(orig, proj, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn matches_jacobi_eigensolver_on_16d() {
        // oracle: dense Jacobi eigendecomposition of the covariance
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = 16;
        let features = Array2::from_shape_fn((300, d), |(_, j)| {
            rng.random_range(-1.0..1.0) * (1.0 + j as f64 * 0.3)
        });
        let data = Dataset::from_parts(features, vec![0; 300]).unwrap();
        let pca = pca_project(&data, 5).unwrap();

        // covariance for the oracle
        let n = data.n_samples() as f64;
        let mean = data.features().mean_axis(ndarray::Axis(0)).unwrap();
        let mut cov = Array2::<f64>::zeros((d, d));
        for row in data.features().rows() {
            let delta = &row - &mean;
            for r in 0..d {
                for c in 0..d {
                    cov[[r, c]] += delta[r] * delta[c] / n;
                }
            }
        }
        let (values, vectors) = jacobi_eigen(cov.clone(), 200);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

        for comp in 0..5 {
            let ours = pca.components.row(comp);
            let oracle = vectors.column(order[comp]);
            let cosine = ours.dot(&oracle).abs();
            assert!(
                cosine > 1.0 - 1e-6,
                "component {comp} misaligned: |cos| = {cosine}"
            );
        }
    }

    #[test]
    fn rejects_too_many_components() {
        let data = Dataset::from_parts(array![[1.0, 2.0], [0.0, 1.0]], vec![0, 0]).unwrap();
        assert!(pca_project(&data, 3).is_err());
        assert!(pca_project(&data, 0).is_err());
    }

    /// Cyclic Jacobi rotations; returns (eigenvalues, eigenvector columns).
    fn jacobi_eigen(mut a: Array2<f64>, sweeps: usize) -> (Vec<f64>, Array2<f64>) {
        let d = a.nrows();
        let mut v = Array2::<f64>::eye(d);
        for _ in 0..sweeps {
            let mut off = 0.0;
            for p in 0..d {
                for q in p + 1..d {
                    off += a[[p, q]].abs();
                }
            }
            if off < 1e-14 {
                break;
            }
            for p in 0..d {
                for q in p + 1..d {
                    if a[[p, q]].abs() < 1e-18 {
                        continue;
                    }
                    let theta = 0.5 * (a[[q, q]] - a[[p, p]]) / a[[p, q]];
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a[[k, p]];
                        let akq = a[[k, q]];
                        a[[k, p]] = c * akp - s * akq;
                        a[[k, q]] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = a[[p, k]];
                        let aqk = a[[q, k]];
                        a[[p, k]] = c * apk - s * aqk;
                        a[[q, k]] = s * apk + c * aqk;
                    }
                    for k in 0..d {
                        let vkp = v[[k, p]];
                        let vkq = v[[k, q]];
                        v[[k, p]] = c * vkp - s * vkq;
                        v[[k, q]] = s * vkp + c * vkq;
                    }
                }
            }
        }
        ((0..d).map(|i| a[[i, i]]).collect(), v)
    }
}
