//! RBF kernel, median-heuristic bandwidth and Gram matrices.

use crate::error::{Error, Result};
use crate::particles::ParticleSet;

/// Smallest bandwidth the median heuristic returns.
pub const H_MIN: f64 = 1e-6;

/// `k(x, y) = exp(-||x - y||^2 / h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfKernel {
    h: f64,
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::argument(format!(
            "kernel arguments differ in dimension ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

impl RbfKernel {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::argument(format!("bandwidth must be positive, got {h}")));
        }
        Ok(RbfKernel { h })
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn eval_sq(&self, sq_dist: f64) -> f64 {
        (-sq_dist / self.h).exp()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_pair(x, y)?;
        Ok(self.eval_sq(sq_dist(x, y)))
    }

    /// `∇_x k(x, y) = -(2/h) (x - y) k(x, y)`.
    pub fn grad_first_arg(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_pair(x, y)?;
        let c = -2.0 / self.h * self.eval_sq(sq_dist(x, y));
        Ok(x.iter().zip(y).map(|(a, b)| c * (a - b)).collect())
    }

    /// Full `M x M` Gram matrix, row-major. Each unordered pair is evaluated
    /// once, so the result is exactly symmetric.
    pub fn gram(&self, particles: &ParticleSet) -> Vec<f64> {
        let m = particles.m();
        let mut g = vec![0.0; m * m];
        for i in 0..m {
            g[i * m + i] = 1.0;
            for j in i + 1..m {
                let k = self.eval_sq(sq_dist(particles.row(i), particles.row(j)));
                g[i * m + j] = k;
                g[j * m + i] = k;
            }
        }
        g
    }
}

/// Squared distances of all unordered pairs `i < j`, row by row.
pub fn pairwise_sq_dists(particles: &ParticleSet) -> Vec<f64> {
    let m = particles.m();
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        let xi = particles.row(i);
        for j in i + 1..m {
            out.push(sq_dist(xi, particles.row(j)));
        }
    }
    out
}

/// `med^2 / ln M`, `med` the median pairwise Euclidean distance, clamped
/// below at [`H_MIN`].
pub fn median_bandwidth(particles: &ParticleSet) -> Result<f64> {
    if particles.m() < 2 {
        return Err(Error::argument("median heuristic needs at least two particles"));
    }
    let mut sq = pairwise_sq_dists(particles);
    Ok(bandwidth_from_sq_dists(&mut sq, particles.m()))
}

/// Median heuristic over precomputed squared distances; reorders `sq`.
pub(crate) fn bandwidth_from_sq_dists(sq: &mut [f64], m: usize) -> f64 {
    let med = median_of_sqrt(sq);
    (med * med / (m as f64).ln()).max(H_MIN)
}

/// Median of `sqrt(sq)`; even counts average the two middle distances.
fn median_of_sqrt(sq: &mut [f64]) -> f64 {
    let n = sq.len();
    let mid = n / 2;
    let (lower, upper, _) = sq.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = upper.sqrt();
    if n % 2 == 1 {
        hi
    } else {
        let lo = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max).sqrt();
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set1d(xs: &[f64]) -> ParticleSet {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        ParticleSet::from_rows(&rows).unwrap()
    }

    #[test]
    fn bandwidth_two_points() {
        let h = median_bandwidth(&set1d(&[0.0, 2.0])).unwrap();
        assert!((h - 4.0 / 2f64.ln()).abs() < 1e-12);
        assert!((h - 5.7708).abs() < 1e-4);
    }

    #[test]
    fn bandwidth_three_points() {
        let h = median_bandwidth(&set1d(&[0.0, 1.0, 2.0])).unwrap();
        assert!((h - 1.0 / 3f64.ln()).abs() < 1e-12);
        assert!((h - 0.9102).abs() < 1e-4);
    }

    #[test]
    fn bandwidth_even_count_averages_middle() {
        // 4 points -> 6 distances {1,1,1,2,2,3}; middle pair (1,2) -> med 1.5
        let h = median_bandwidth(&set1d(&[0.0, 1.0, 2.0, 3.0])).unwrap();
        assert!((h - 2.25 / 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cloud_clamps() {
        assert_eq!(median_bandwidth(&set1d(&[1.5; 5])).unwrap(), H_MIN);
    }

    #[test]
    fn single_particle_rejected() {
        assert!(median_bandwidth(&set1d(&[0.0])).is_err());
    }

    #[test]
    fn eval_examples() {
        let k = RbfKernel::new(2.0).unwrap();
        assert_eq!(k.eval(&[0.3, 0.1], &[0.3, 0.1]).unwrap(), 1.0);
        assert!((k.eval(&[0.0, 0.0], &[1.0, 1.0]).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(k.eval(&[0.0], &[0.0, 1.0]).is_err());
        assert!(RbfKernel::new(0.0).is_err());
    }

    #[test]
    fn grad_examples() {
        let k = RbfKernel::new(1.0).unwrap();
        assert_eq!(k.grad_first_arg(&[0.4, 2.0], &[0.4, 2.0]).unwrap(), vec![0.0, 0.0]);
        let g = k.grad_first_arg(&[1.0], &[0.0]).unwrap();
        assert!((g[0] + 2.0 * (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn gram_of_single_particle() {
        let k = RbfKernel::new(1.0).unwrap();
        assert_eq!(k.gram(&set1d(&[3.0])), vec![1.0]);
    }
}
