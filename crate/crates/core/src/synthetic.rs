//! Shipped synthetic benchmark families: ten 2-D Gaussian known classes on
//! a ring plus one (or two) unknown clusters, in a few separability regimes.

use crate::dataset::{GaussianComponent, GaussianMixtureSpec};

/// Ten known classes evenly spaced on a circle, plus unknown clusters.
///
/// Component weights are the intended test-set shares: uniform over all
/// components.
pub fn ring_mixture(
    n_known: usize,
    radius: f64,
    known_variance: f64,
    uu_clusters: &[(f64, f64, f64)], // (x, y, variance)
    seed: u64,
) -> GaussianMixtureSpec {
    let total = n_known + uu_clusters.len();
    let weight = 1.0 / total as f64;
    let mut components: Vec<GaussianComponent> = (0..n_known)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / n_known as f64;
            GaussianComponent {
                mean: vec![radius * angle.cos(), radius * angle.sin()],
                variance: known_variance,
                weight,
                class_id: i,
            }
        })
        .collect();
    for &(x, y, variance) in uu_clusters {
        components.push(GaussianComponent {
            mean: vec![x, y],
            variance,
            weight,
            class_id: n_known, // all unknown clusters share one class id
        });
    }
    GaussianMixtureSpec { components, seed }
}

/// High-separability benchmark: tight knowns, one far unknown cluster.
pub fn benchmark_high_j1(seed: u64) -> GaussianMixtureSpec {
    ring_mixture(10, 8.0, 0.5, &[(25.0, 25.0, 1.0)], seed)
}

/// Moderate-separability variant: noticeable class overlap and a nearer
/// unknown cluster, the regime where the sample rate genuinely trades off.
pub fn benchmark_moderate(seed: u64) -> GaussianMixtureSpec {
    ring_mixture(10, 4.0, 1.0, &[(10.0, 10.0, 2.0)], seed)
}

/// Sample-rate sweep benchmark: a two-cluster unknown class that few-shot
/// dummy fits model poorly (small rates miss a cluster) and enough known
/// overlap that large rates leak known rows into the dummy class. With a
/// margin-based base model the performance curve peaks strictly inside the
/// usual rate grid.
pub fn benchmark_sweep(seed: u64) -> GaussianMixtureSpec {
    ring_mixture(
        10,
        5.0,
        0.8,
        &[(11.0, 11.0, 2.0), (-11.0, 11.0, 2.0)],
        seed,
    )
}

/// Geometry where seeded k-means and cross-validation should agree: compact
/// knowns near the origin, one compact unknown cluster far enough out that
/// the sample mean is its nearest seed.
pub fn benchmark_csi_single(seed: u64) -> GaussianMixtureSpec {
    ring_mixture(10, 2.5, 0.3, &[(40.0, 40.0, 1.0)], seed)
}

/// Geometry where seeded k-means degrades: two unknown clusters on opposite
/// sides pull the sample mean to the middle, so neither cluster is nearest
/// to the sample-seeded center.
pub fn benchmark_csi_double(seed: u64) -> GaussianMixtureSpec {
    ring_mixture(
        10,
        2.5,
        0.3,
        &[(40.0, 40.0, 1.0), (-40.0, -40.0, 1.0)],
        seed,
    )
}

/// The unknown class id used by every ring benchmark.
pub const RING_UU_CLASS: usize = 10;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmarks_validate() {
        for spec in [
            benchmark_high_j1(1),
            benchmark_moderate(1),
            benchmark_sweep(1),
            benchmark_csi_single(1),
            benchmark_csi_double(1),
        ] {
            spec.validate().unwrap();
            assert_eq!(spec.n_classes(), 11);
            assert_eq!(spec.dim(), 2);
        }
    }
}
