//! Invariant checks runnable from a release binary.
//!
//! Each check builds its own small fixture from a fixed seed and compares
//! the library against a closed form or a finite-difference estimate.

use rand::Rng as _;

use crate::engine::{chebyshev_steps, svgd_iterate, ChebyshevOrder, StepSchedule, SteinWorkspace};
use crate::error::Result;
use crate::kernels::{median_bandwidth, RbfKernel};
use crate::matrix::Matrix;
use crate::particles::{init_particles, ParticleSet};
use crate::rng::{RngSeed, Stream};
use crate::targets::{BayesLogReg, BayesNN, DiagGaussian, GaussianMixture1D, ScoreModel};
use crate::trainer::{grad_params, mmd, unfolded_loss, LossSpec, ParamKind, UnfoldProblem};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lift<T>(r: Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn random_set(m: usize, d: usize, seed: u64) -> ParticleSet {
    let mut rng = RngSeed(seed).rng(Stream::Init);
    let data = (0..m * d).map(|_| rng.random_range(-2.0..2.0)).collect();
    ParticleSet::from_flat(m, d, data).expect("finite")
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

fn kernel_gram() -> Result<(), String> {
    let p = random_set(30, 3, 1);
    let k = RbfKernel::new(lift(median_bandwidth(&p))?).map_err(|e| e.to_string())?;
    let g = k.gram(&p);
    let m = p.m();
    for i in 0..m {
        ensure(g[i * m + i] == 1.0, || format!("diagonal {i} is {}", g[i * m + i]))?;
        for j in 0..m {
            ensure(g[i * m + j] == g[j * m + i], || format!("asymmetric at ({i}, {j})"))?;
        }
    }
    // Cholesky of G + 1e-8 I exists iff the smallest eigenvalue exceeds -1e-8.
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * m + k] * l[j * m + k]).sum();
            if i == j {
                let v = g[i * m + i] + 1e-8 - s;
                ensure(v > 0.0, || format!("Gram matrix not PSD at pivot {i}"))?;
                l[i * m + i] = v.sqrt();
            } else {
                l[i * m + j] = (g[i * m + j] - s) / l[j * m + j];
            }
        }
    }
    Ok(())
}

fn kernel_gradient() -> Result<(), String> {
    let k = RbfKernel::new(1.3).map_err(|e| e.to_string())?;
    let p = random_set(2, 4, 2);
    let (x, y) = (p.row(0), p.row(1));
    let g = lift(k.grad_first_arg(x, y))?;
    for i in 0..x.len() {
        let h = 1e-5;
        let (mut a, mut b) = (x.to_vec(), x.to_vec());
        a[i] += h;
        b[i] -= h;
        let fd = (lift(k.eval(&a, y))? - lift(k.eval(&b, y))?) / (2.0 * h);
        ensure(rel_err(fd, g[i]) < 1e-6, || format!("component {i}: {} vs fd {fd}", g[i]))?;
    }
    Ok(())
}

fn score_matches_fd(model: &dyn ScoreModel, x: &[f64], tol: f64) -> Result<(), String> {
    let mut s = vec![0.0; x.len()];
    lift(model.score(x, None, &mut s))?;
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1.0);
        let (mut a, mut b) = (x.to_vec(), x.to_vec());
        a[i] += h;
        b[i] -= h;
        let fd = (lift(model.log_density(&a, None))? - lift(model.log_density(&b, None))?) / (2.0 * h);
        let scale = s.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        ensure((fd - s[i]).abs() / scale < tol, || format!("component {i}: {} vs fd {fd}", s[i]))?;
    }
    Ok(())
}

fn scores() -> Result<(), String> {
    let mix = GaussianMixture1D::benchmark();
    for x in [-3.0, 0.0, 1.0, 3.0] {
        score_matches_fd(&mix, &[x], 1e-6)?;
    }
    let mut rng = RngSeed(3).rng(Stream::Dataset);
    let x = Matrix::from_flat(20, 3, (0..60).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("shape");
    let t = (0..20).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
    let blr = lift(BayesLogReg::with_default_prior(x.clone(), t))?;
    let p: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    score_matches_fd(&blr, &p, 1e-5)?;
    let y = (0..20).map(|i| (i as f64 * 0.3).sin()).collect();
    let bnn = lift(BayesNN::with_hidden_width(x, y, 4))?;
    let w: Vec<f64> = (0..bnn.dim()).map(|_| rng.random_range(-0.5..0.5)).collect();
    score_matches_fd(&bnn, &w, 1e-4)
}

fn single_particle_reduction() -> Result<(), String> {
    let var = vec![0.5, 2.0, 4.0];
    let model = lift(DiagGaussian::new(vec![0.0; 3], var.clone()))?;
    let x0 = [1.0, -2.0, 0.5];
    let mut p = lift(ParticleSet::from_rows(&[x0]))?;
    let eps = 0.1;
    let mut sched = lift(StepSchedule::fixed(eps))?;
    lift(svgd_iterate(&mut p, &model, &mut sched, None, &mut SteinWorkspace::new()))?;
    for i in 0..3 {
        let want = x0[i] - eps * x0[i] / var[i];
        ensure((p.row(0)[i] - want).abs() < 1e-12, || format!("component {i}: {} vs {want}", p.row(0)[i]))?;
    }
    Ok(())
}

fn mmd_identities() -> Result<(), String> {
    let k = RbfKernel::new(2.0).map_err(|e| e.to_string())?;
    let p = random_set(15, 2, 4);
    let x = Matrix::from_flat(15, 2, p.as_slice().to_vec()).expect("shape");
    let y = Matrix::from_flat(8, 2, random_set(8, 2, 5).as_slice().to_vec()).expect("shape");
    let self_mmd = lift(mmd(&x, &x, &k))?;
    ensure(self_mmd.abs() < 1e-12, || format!("mmd(X, X) = {self_mmd}"))?;
    let (xy, yx) = (lift(mmd(&x, &y, &k))?, lift(mmd(&y, &x, &k))?);
    ensure((xy - yx).abs() < 1e-12, || format!("asymmetric: {xy} vs {yx}"))?;
    let a = 2.0;
    let single = lift(mmd(&Matrix::from_flat(1, 1, vec![0.0]).expect("1x1"), &Matrix::from_flat(1, 1, vec![a]).expect("1x1"), &k))?;
    let want = 2.0 * (1.0 - (-a * a / 2.0f64).exp());
    ensure((single - want).abs() < 1e-10, || format!("singleton {single} vs {want}"))
}

/// Worst contraction `max_l prod_t |1 - s_t l|` over `[l1, ln]`.
fn worst_contraction(steps: &[f64], l1: f64, ln: f64) -> f64 {
    (0..=10_000)
        .map(|i| {
            let l = l1 + (ln - l1) * i as f64 / 10_000.0;
            steps.iter().map(|s| (1.0 - s * l).abs()).product::<f64>()
        })
        .fold(0.0, f64::max)
}

fn chebyshev_contraction() -> Result<(), String> {
    // lambda_1 = 1, lambda_n = 4 via alpha = 1, beta = sqrt(3).
    let steps = lift(chebyshev_steps(1.0, 3f64.sqrt(), 4, ChebyshevOrder::Reversed))?;
    let cheb = worst_contraction(&steps, 1.0, 4.0);
    let constant = (1..=2000)
        .map(|i| worst_contraction(&[i as f64 * 1e-3; 4], 1.0, 4.0))
        .fold(f64::INFINITY, f64::min);
    ensure(cheb + 1e-3 < constant, || format!("Chebyshev {cheb} vs best constant {constant}"))
}

fn unfolded_gradient() -> Result<(), String> {
    // One particle on N(0, v) for one step: x1 = x0 (1 - eps / v), and the
    // MMD against a single reference r has a closed-form derivative.
    let v = 2.0;
    let r = 0.7;
    let problem = UnfoldProblem {
        model: Box::new(lift(DiagGaussian::new(vec![0.0], vec![v]))?),
        particles: 1,
        score_batch: None,
        loss: LossSpec::Mmd {
            reference: Matrix::from_flat(1, 1, vec![r]).expect("1x1"),
            sample_size: None,
            kernel: RbfKernel::new(2.0).map_err(|e| e.to_string())?,
        },
    };
    let item = RngSeed(11);
    let x0 = lift(init_particles(problem.model.as_ref(), 1, item))?.row(0)[0];
    let eps = 0.3;
    let x1 = x0 * (1.0 - eps / v);
    let dk = -(x1 - r) * (-(x1 - r) * (x1 - r) / 2.0f64).exp();
    let want = -2.0 * dk * (-x0 / v);
    let got = lift(grad_params(&problem, &ParamKind::Learned, &[eps], 1, &[item]))?[0];
    ensure(rel_err(got, want) < 1e-4, || format!("gradient {got} vs closed form {want}"))?;
    let loss = lift(unfolded_loss(&problem, &ParamKind::Learned, &[eps], 1, item))?;
    let want_loss = 2.0 * (1.0 - (-(x1 - r) * (x1 - r) / 2.0f64).exp());
    ensure((loss - want_loss).abs() < 1e-12, || format!("loss {loss} vs {want_loss}"))
}

/// Runs every check, in a fixed order.
pub fn run_all() -> Vec<Check> {
    let checks: [(&'static str, fn() -> Result<(), String>); 7] = [
        ("kernel gram symmetric, unit diagonal, PSD", kernel_gram),
        ("kernel gradient matches finite differences", kernel_gradient),
        ("model scores match finite differences", scores),
        ("single particle reduces to gradient ascent", single_particle_reduction),
        ("MMD identities", mmd_identities),
        ("Chebyshev steps beat the best constant step", chebyshev_contraction),
        ("unfolded gradient matches closed form", unfolded_gradient),
    ];
    checks
        .iter()
        .map(|&(name, f)| Check { name, outcome: f() })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all() {
            assert!(c.outcome.is_ok(), "{}: {:?}", c.name, c.outcome);
        }
    }
}
