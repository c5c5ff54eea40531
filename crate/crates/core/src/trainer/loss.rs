//! Training losses and evaluation metrics.

use crate::error::{Error, Result};
use crate::kernels::{sq_dist, RbfKernel};
use crate::matrix::Matrix;

/// Mean of `k(z_i, w_j)` over all pairs, diagonal included.
fn mean_kernel(z: &Matrix, w: &Matrix, kernel: &RbfKernel) -> f64 {
    let mut acc = 0.0;
    for i in 0..z.rows() {
        let zi = z.row(i);
        for j in 0..w.rows() {
            acc += kernel.eval_sq(sq_dist(zi, w.row(j)));
        }
    }
    acc / (z.rows() * w.rows()) as f64
}

/// Same as [`mean_kernel`] for `Z = W`, visiting each unordered pair once.
fn mean_kernel_self(z: &Matrix, kernel: &RbfKernel) -> f64 {
    let n = z.rows();
    let mut off = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            off += kernel.eval_sq(sq_dist(z.row(i), z.row(j)));
        }
    }
    (n as f64 + 2.0 * off) / (n * n) as f64
}

/// Biased (V-statistic) squared MMD: `<X,X> - 2<X,Y> + <Y,Y>`.
pub fn mmd(x: &Matrix, y: &Matrix, kernel: &RbfKernel) -> Result<f64> {
    if x.rows() == 0 || y.rows() == 0 {
        return Err(Error::argument("MMD needs non-empty sample sets"));
    }
    if x.cols() != y.cols() {
        return Err(Error::argument("MMD sample sets differ in dimension"));
    }
    Ok(mean_kernel_self(x, kernel) - 2.0 * mean_kernel(x, y, kernel) + mean_kernel_self(y, kernel))
}

/// `k'(x, x') = exp(-||x - x'||^2 / 2)`, the MMD kernel of the mixture task.
pub fn mmd_kernel() -> RbfKernel {
    RbfKernel::new(2.0).expect("positive")
}

pub const PROB_CLAMP: f64 = 1e-12;

/// Mean binary cross-entropy with labels in {0, 1}; probabilities are
/// clamped to `[1e-12, 1 - 1e-12]`.
pub fn cross_entropy(labels01: &[f64], probs: &[f64]) -> Result<f64> {
    if labels01.len() != probs.len() || labels01.is_empty() {
        return Err(Error::argument(format!(
            "cross-entropy needs equal non-zero lengths, got {} and {}",
            labels01.len(),
            probs.len()
        )));
    }
    let total: f64 = labels01
        .iter()
        .zip(probs)
        .map(|(&t, &p)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            t * p.ln() + (1.0 - t) * (1.0 - p).ln()
        })
        .sum();
    Ok(-total / labels01.len() as f64)
}

pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() || y.is_empty() {
        return Err(Error::argument(format!(
            "squared error needs equal non-zero lengths, got {} and {}",
            y.len(),
            y_hat.len()
        )));
    }
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    mse(y, y_hat).map(f64::sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_flat(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn mmd_of_identical_sets_vanishes() {
        let x = col(&[0.3, -1.2, 2.2, 0.3]);
        assert!(mmd(&x, &x, &mmd_kernel()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mmd_singletons_closed_form() {
        let v = mmd(&col(&[0.0]), &col(&[2.0]), &mmd_kernel()).unwrap();
        assert!((v - 2.0 * (1.0 - (-2f64).exp())).abs() < 1e-12);
        assert!((v - 1.7293).abs() < 1e-4);
    }

    #[test]
    fn mmd_rejects_empty() {
        assert!(mmd(&Matrix::zeros(0, 1), &col(&[1.0]), &mmd_kernel()).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        assert!((cross_entropy(&[1.0, 0.0, 1.0], &[0.5; 3]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((cross_entropy(&[1.0], &[0.9]).unwrap() + 0.9f64.ln()).abs() < 1e-15);
        assert!(cross_entropy(&[1.0], &[0.5, 0.5]).is_err());
        let perfect = cross_entropy(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(perfect > 0.0 && perfect < 1e-11);
        let a = cross_entropy(&[1.0], &[0.6]).unwrap();
        let b = cross_entropy(&[1.0], &[0.7]).unwrap();
        assert!(b < a);
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        let base = rmse(&[0.5, -1.0, 2.0], &[0.0, 1.0, 1.0]).unwrap();
        let scaled = rmse(&[-1.5, 3.0, -6.0], &[0.0, -3.0, -3.0]).unwrap();
        assert!((scaled - 3.0 * base).abs() < 1e-12);
        assert!(rmse(&[1.0], &[]).is_err());
    }
}
