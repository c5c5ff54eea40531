//! Target distributions, exposed to the sampler only through their score.

mod bnn;
mod gaussian;
pub mod logreg;
mod mixture;

pub use bnn::{BayesNN, BnnLayout};
pub use gaussian::DiagGaussian;
pub use logreg::BayesLogReg;
pub use mixture::GaussianMixture1D;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// A target density known through `∇ log p`.
///
/// `batch` selects a subset of the data for models with a likelihood; the
/// likelihood term is then rescaled by `N / |batch|`. `None` means the full
/// dataset. Data-free models ignore it.
pub trait ScoreModel: Send + Sync {
    fn dim(&self) -> usize;

    /// Number of data points in the likelihood, if any.
    fn data_len(&self) -> Option<usize> {
        None
    }

    /// Writes one draw from the initial distribution into `out`.
    fn sample_initial(&self, _rng: &mut Rng, _out: &mut [f64]) -> Result<()> {
        Err(Error::config("model has no initial distribution"))
    }

    /// Unnormalized log density; only used by diagnostics and tests.
    fn log_density(&self, x: &[f64], batch: Option<&[usize]>) -> Result<f64>;

    fn score(&self, x: &[f64], batch: Option<&[usize]>, out: &mut [f64]) -> Result<()>;
}

/// Resolves a batch against `n` data points; returns the likelihood scale.
pub(crate) fn batch_scale(batch: Option<&[usize]>, n: usize) -> Result<f64> {
    match batch {
        None => Ok(1.0),
        Some([]) => Err(Error::argument("empty data batch")),
        Some(b) => {
            if let Some(&bad) = b.iter().find(|&&i| i >= n) {
                return Err(Error::argument(format!(
                    "batch index {bad} out of range for {n} data points"
                )));
            }
            Ok(n as f64 / b.len() as f64)
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::argument(format!(
            "dimension mismatch: expected {expected}, got {got}"
        )));
    }
    Ok(())
}

/// Applies `f` to each selected data index.
#[inline]
pub(crate) fn for_each_index(batch: Option<&[usize]>, n: usize, mut f: impl FnMut(usize)) {
    match batch {
        None => (0..n).for_each(&mut f),
        Some(b) => b.iter().copied().for_each(&mut f),
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}
