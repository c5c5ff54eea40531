use rand_distr::{Distribution, StandardNormal};

use super::ScoreModel;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// `N(mean, diag(var))`. Particles start from `N(mean, diag(init_var))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGaussian {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub init_var: Vec<f64>,
}

impl DiagGaussian {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != var.len() {
            return Err(Error::argument("mean and variance lengths differ"));
        }
        if var.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::argument("variances must be positive"));
        }
        let init_var = var.clone();
        Ok(DiagGaussian {
            mean,
            var,
            init_var,
        })
    }

    pub fn standard(d: usize) -> Self {
        Self::new(vec![0.0; d], vec![1.0; d]).expect("valid")
    }
}

impl ScoreModel for DiagGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn sample_initial(&self, rng: &mut Rng, out: &mut [f64]) -> Result<()> {
        for ((o, &mu), &v) in out.iter_mut().zip(&self.mean).zip(&self.init_var) {
            let z: f64 = StandardNormal.sample(rng);
            *o = mu + v.sqrt() * z;
        }
        Ok(())
    }

    fn log_density(&self, x: &[f64], _batch: Option<&[usize]>) -> Result<f64> {
        super::check_dim(self.dim(), x.len())?;
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.var)
            .map(|((&x, &mu), &v)| -0.5 * (x - mu) * (x - mu) / v)
            .sum())
    }

    fn score(&self, x: &[f64], _batch: Option<&[usize]>, out: &mut [f64]) -> Result<()> {
        super::check_dim(self.dim(), x.len())?;
        for (((o, &x), &mu), &v) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.var) {
            *o = (mu - x) / v;
        }
        Ok(())
    }
}
