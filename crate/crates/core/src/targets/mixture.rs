use rand_distr::{Distribution, Normal};

use super::ScoreModel;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// One-dimensional Gaussian mixture with possibly unnormalized weights.
///
/// Only ratios of the weights enter the score, so the weights are stored as
/// given and never renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture1D {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub weights: Vec<f64>,
    /// Mean and standard deviation of the Gaussian the particles start from.
    pub init: Option<(f64, f64)>,
}

impl GaussianMixture1D {
    pub fn new(means: Vec<f64>, variances: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if means.is_empty() || means.len() != variances.len() || means.len() != weights.len() {
            return Err(Error::argument(
                "mixture needs equally many (non-zero) means, variances and weights",
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0)) || variances.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::argument(
                "mixture weights and variances must be positive",
            ));
        }
        Ok(GaussianMixture1D {
            means,
            variances,
            weights,
            init: None,
        })
    }

    /// `(3/4) N(-2, 1) + (3/4) N(2.5, 1)`, particles started from `N(-2, 1)`.
    pub fn benchmark() -> Self {
        GaussianMixture1D {
            means: vec![-2.0, 2.5],
            variances: vec![1.0, 1.0],
            weights: vec![0.75, 0.75],
            init: Some((-2.0, 1.0)),
        }
    }

    pub fn with_init(mut self, mean: f64, std: f64) -> Self {
        self.init = Some((mean, std));
        self
    }

    /// Per-component log of `w_c N(x; mu_c, var_c)` up to the shared `-ln(2 pi)/2`.
    fn log_terms(&self, x: f64) -> impl Iterator<Item = f64> + '_ {
        self.means
            .iter()
            .zip(&self.variances)
            .zip(&self.weights)
            .map(move |((&mu, &var), &w)| {
                let z = x - mu;
                w.ln() - 0.5 * var.ln() - 0.5 * z * z / var
            })
    }

    pub fn log_density_at(&self, x: f64) -> f64 {
        let max = self.log_terms(x).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = self.log_terms(x).map(|l| (l - max).exp()).sum();
        max + sum.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    /// `d/dx log p(x)`, evaluated through normalized responsibilities.
    pub fn score_at(&self, x: f64) -> f64 {
        let max = self.log_terms(x).fold(f64::NEG_INFINITY, f64::max);
        let mut num = 0.0;
        let mut den = 0.0;
        for ((l, &mu), &var) in self.log_terms(x).zip(&self.means).zip(&self.variances) {
            let r = (l - max).exp();
            num += r * (mu - x) / var;
            den += r;
        }
        num / den
    }

    /// Normalized density, for plotting against particle histograms.
    pub fn density(&self, x: f64) -> f64 {
        let total: f64 = self.weights.iter().sum();
        self.log_density_at(x).exp() / total
    }

    /// One draw from the normalized mixture.
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        let total: f64 = self.weights.iter().sum();
        let u: f64 = rand::Rng::random::<f64>(rng) * total;
        let mut acc = 0.0;
        let mut c = self.weights.len() - 1;
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                c = i;
                break;
            }
        }
        let normal = Normal::new(self.means[c], self.variances[c].sqrt()).expect("positive variance");
        normal.sample(rng)
    }
}

impl ScoreModel for GaussianMixture1D {
    fn dim(&self) -> usize {
        1
    }

    fn sample_initial(&self, rng: &mut Rng, out: &mut [f64]) -> Result<()> {
        let (mean, std) = self
            .init
            .ok_or_else(|| Error::config("mixture has no initial distribution"))?;
        let normal = Normal::new(mean, std).map_err(|e| Error::config(e.to_string()))?;
        out[0] = normal.sample(rng);
        Ok(())
    }

    fn log_density(&self, x: &[f64], _batch: Option<&[usize]>) -> Result<f64> {
        super::check_dim(1, x.len())?;
        Ok(self.log_density_at(x[0]))
    }

    fn score(&self, x: &[f64], _batch: Option<&[usize]>, out: &mut [f64]) -> Result<()> {
        super::check_dim(1, x.len())?;
        out[0] = self.score_at(x[0]);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(m: &GaussianMixture1D, x: f64) -> f64 {
        let h = 1e-5;
        (m.log_density_at(x + h) - m.log_density_at(x - h)) / (2.0 * h)
    }

    #[test]
    fn zero_score_at_midpoint() {
        let m = GaussianMixture1D::benchmark();
        assert!(m.score_at(0.25).abs() < 1e-14);
    }

    #[test]
    fn left_tail_dominated_by_left_component() {
        let m = GaussianMixture1D::benchmark();
        assert!((m.score_at(-10.0) - 8.0).abs() < 1e-6);
    }

    #[test]
    fn matches_finite_differences() {
        let m = GaussianMixture1D::benchmark();
        for x in [-3.0, 0.0, 1.0, 3.0] {
            let s = m.score_at(x);
            let rel = (s - fd(&m, x)).abs() / s.abs().max(1e-12);
            assert!(rel < 1e-6, "x={x}: score {s}, fd {}", fd(&m, x));
        }
    }

    #[test]
    fn antisymmetric_about_midpoint() {
        let m = GaussianMixture1D::benchmark();
        for delta in [0.1, 0.7, 1.3, 4.0, 9.5] {
            let a = m.score_at(0.25 + delta);
            let b = m.score_at(0.25 - delta);
            assert!((a + b).abs() < 1e-10, "delta={delta}: {a} vs {b}");
        }
    }

    #[test]
    fn weight_rescaling_leaves_score_unchanged() {
        let base = GaussianMixture1D::benchmark();
        let mut scaled = base.clone();
        scaled.weights = vec![0.75 * 13.0, 0.75 * 13.0];
        for x in [-5.0, -2.0, 0.0, 0.3, 2.5, 6.0] {
            assert!((base.score_at(x) - scaled.score_at(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_init_is_config_error() {
        let m = GaussianMixture1D::new(vec![0.0], vec![1.0], vec![1.0]).unwrap();
        let mut rng = crate::rng::RngSeed(1).rng(crate::rng::Stream::Init);
        assert!(matches!(
            m.sample_initial(&mut rng, &mut [0.0]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn normalized_density_integrates_to_one() {
        let m = GaussianMixture1D::benchmark();
        let n = 4001;
        let (lo, hi) = (-12.0, 12.0);
        let dx = (hi - lo) / (n - 1) as f64;
        let integral: f64 = (0..n)
            .map(|i| {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                w * m.density(lo + i as f64 * dx)
            })
            .sum::<f64>()
            * dx;
        assert!((integral - 1.0).abs() < 1e-6);
    }
}
