use rand::seq::index;
use rayon::prelude::*;

use super::loss::{cross_entropy, mmd, mse};
use crate::engine::{svgd_iterate, BatchSampler, ChebyshevOrder, StepSchedule, SteinWorkspace};
use crate::error::{Error, Result};
use crate::kernels::RbfKernel;
use crate::matrix::Matrix;
use crate::particles::{init_particles, ParticleSet};
use crate::rng::{RngSeed, Stream};
use crate::targets::{logreg, BnnLayout, ScoreModel};

/// How trainable parameters become a step schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// One step per unfolded iteration.
    Learned,
    /// `(alpha, beta)` mapped through the Chebyshev steps of period `period`.
    Chebyshev { period: usize, order: ChebyshevOrder },
}

impl ParamKind {
    pub fn schedule(&self, params: &[f64]) -> Result<StepSchedule> {
        match *self {
            ParamKind::Learned => StepSchedule::learned(params.to_vec()),
            ParamKind::Chebyshev { period, order } => match params {
                &[alpha, beta] => StepSchedule::chebyshev(alpha, beta, period, order),
                _ => Err(Error::argument("Chebyshev schedule takes exactly (alpha, beta)")),
            },
        }
    }

    /// Unfolding length `T`.
    pub fn period(&self, params: &[f64]) -> usize {
        match *self {
            ParamKind::Learned => params.len(),
            ParamKind::Chebyshev { period, .. } => period,
        }
    }

    /// Number of leading parameters that influence a depth-`depth` unfolding.
    pub fn active(&self, params: &[f64], depth: usize) -> usize {
        match self {
            ParamKind::Learned => depth.min(params.len()),
            ParamKind::Chebyshev { .. } => params.len(),
        }
    }
}

/// Loss evaluated on the particles an unfolded sampler outputs.
#[derive(Debug, Clone)]
pub enum LossSpec {
    /// MMD against reference samples; `sample_size` draws a fresh subset per
    /// item (all references when `None`).
    Mmd {
        reference: Matrix,
        sample_size: Option<usize>,
        kernel: RbfKernel,
    },
    /// Cross-entropy of the posterior predictive on `{0,1}` labels.
    CrossEntropy {
        x: Matrix,
        labels01: Vec<f64>,
        subsample: Option<usize>,
    },
    /// Mean squared error of the network's posterior predictive mean.
    SquaredError {
        layout: BnnLayout,
        x: Matrix,
        y: Vec<f64>,
        subsample: Option<usize>,
    },
}

fn pick(n: usize, size: Option<usize>, seed: RngSeed) -> Option<Vec<usize>> {
    match size {
        Some(s) if s < n => {
            let mut rng = seed.rng(Stream::Reference);
            let mut idx = index::sample(&mut rng, n, s).into_vec();
            idx.sort_unstable();
            Some(idx)
        }
        _ => None,
    }
}

impl LossSpec {
    pub fn evaluate(&self, particles: &ParticleSet, item: RngSeed) -> Result<f64> {
        match self {
            LossSpec::Mmd {
                reference,
                sample_size,
                kernel,
            } => {
                let out = Matrix::from_flat(particles.m(), particles.d(), particles.as_slice().to_vec())?;
                match pick(reference.rows(), *sample_size, item) {
                    Some(idx) => mmd(&out, &reference.select_rows(&idx), kernel),
                    None => mmd(&out, reference, kernel),
                }
            }
            LossSpec::CrossEntropy {
                x,
                labels01,
                subsample,
            } => match pick(x.rows(), *subsample, item) {
                Some(idx) => {
                    let xs = x.select_rows(&idx);
                    let ts: Vec<f64> = idx.iter().map(|&i| labels01[i]).collect();
                    cross_entropy(&ts, &logreg::predict_proba(particles, &xs)?)
                }
                None => cross_entropy(labels01, &logreg::predict_proba(particles, x)?),
            },
            LossSpec::SquaredError {
                layout,
                x,
                y,
                subsample,
            } => {
                if particles.d() != layout.dim() {
                    return Err(Error::argument("particles do not match network layout"));
                }
                let rows: Vec<usize> = pick(x.rows(), *subsample, item).unwrap_or_else(|| (0..x.rows()).collect());
                let m = particles.m() as f64;
                let (pred, truth): (Vec<f64>, Vec<f64>) = rows
                    .iter()
                    .map(|&n| {
                        let p = particles
                            .rows()
                            .map(|w| layout.forward_unchecked(w, x.row(n)))
                            .sum::<f64>()
                            / m;
                        (p, y[n])
                    })
                    .unzip();
                mse(&truth, &pred)
            }
        }
    }
}

/// A sampler to unfold plus the loss its output is judged by.
pub struct UnfoldProblem {
    pub model: Box<dyn ScoreModel>,
    pub particles: usize,
    pub score_batch: Option<usize>,
    pub loss: LossSpec,
}

impl UnfoldProblem {
    /// Runs `depth` SVGD iterations from the item's initialization under
    /// `schedule` and returns the output particles.
    pub fn unfold(&self, schedule: &mut StepSchedule, depth: usize, item: RngSeed) -> Result<ParticleSet> {
        let mut particles = init_particles(self.model.as_ref(), self.particles, item)?;
        let mut batches = BatchSampler::new(self.model.as_ref(), self.score_batch, item);
        let mut ws = SteinWorkspace::new();
        for _ in 0..depth {
            let batch = batches.next_batch();
            svgd_iterate(&mut particles, self.model.as_ref(), schedule, batch.as_deref(), &mut ws)?;
        }
        Ok(particles)
    }
}

/// Loss after unfolding `depth` iterations with the schedule built from
/// `params`; a pure function of `(params, item)`.
pub fn unfolded_loss(
    problem: &UnfoldProblem,
    kind: &ParamKind,
    params: &[f64],
    depth: usize,
    item: RngSeed,
) -> Result<f64> {
    let period = kind.period(params);
    if depth == 0 || depth > period {
        return Err(Error::argument(format!(
            "unfolding depth {depth} outside [1, {period}]"
        )));
    }
    let mut schedule = kind.schedule(params)?;
    let out = problem.unfold(&mut schedule, depth, item)?;
    problem.loss.evaluate(&out, item)
}

/// Mean [`unfolded_loss`] over a minibatch of item seeds.
pub fn batch_loss(
    problem: &UnfoldProblem,
    kind: &ParamKind,
    params: &[f64],
    depth: usize,
    items: &[RngSeed],
) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::argument("empty minibatch"));
    }
    let losses: Vec<f64> = items
        .par_iter()
        .map(|&s| unfolded_loss(problem, kind, params, depth, s))
        .collect::<Result<_>>()?;
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    if !mean.is_finite() {
        return Err(Error::NonFiniteLoss(format!("minibatch loss {mean} at depth {depth}")));
    }
    Ok(mean)
}

/// Finite-difference step for a parameter of magnitude `p`.
pub fn fd_step(p: f64) -> f64 {
    (1e-4 * p.abs()).max(1e-6)
}

/// Central finite-difference gradient of the minibatch loss. The same item
/// seeds are used on both sides of every difference. Parameters that do not
/// reach depth `depth` get an exact zero.
pub fn grad_params(
    problem: &UnfoldProblem,
    kind: &ParamKind,
    params: &[f64],
    depth: usize,
    items: &[RngSeed],
) -> Result<Vec<f64>> {
    grad_params_with_step(problem, kind, params, depth, items, fd_step)
}

pub fn grad_params_with_step(
    problem: &UnfoldProblem,
    kind: &ParamKind,
    params: &[f64],
    depth: usize,
    items: &[RngSeed],
    step: impl Fn(f64) -> f64 + Sync,
) -> Result<Vec<f64>> {
    let active = kind.active(params, depth);
    let probes: Vec<(usize, f64)> = (0..active)
        .flat_map(|i| {
            let h = step(params[i]);
            [(i, h), (i, -h)]
        })
        .collect();
    let values: Vec<f64> = probes
        .par_iter()
        .map(|&(i, delta)| {
            let mut shifted = params.to_vec();
            shifted[i] += delta;
            batch_loss(problem, kind, &shifted, depth, items)
        })
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; params.len()];
    for i in 0..active {
        let h = probes[2 * i].1;
        grad[i] = (values[2 * i] - values[2 * i + 1]) / (2.0 * h);
    }
    Ok(grad)
}
