//! The SVGD iteration and its step-size schedules.

mod schedule;
mod stein;

pub use schedule::{chebyshev_steps, ChebyshevOrder, ChebyshevSchedule, RmsProp, StepSchedule, StepSize};
pub use stein::{stein_direction, SteinDirection, SteinWorkspace};

use rand::seq::index;

use crate::error::{Error, Result};
use crate::particles::ParticleSet;
use crate::rng::{Rng, RngSeed, Stream};
use crate::targets::ScoreModel;

/// One SVGD update of all particles from the same snapshot; increments
/// `particles.iter`. On error the particles are left untouched.
pub fn svgd_iterate(
    particles: &mut ParticleSet,
    model: &dyn ScoreModel,
    schedule: &mut StepSchedule,
    batch: Option<&[usize]>,
    ws: &mut SteinWorkspace,
) -> Result<()> {
    stein::compute_into(particles, model, batch, ws)?;
    let dir = ws.direction.as_ref().expect("direction computed");
    let t = particles.iter;
    let step = schedule.step_size(t, dir);

    let phi = dir.as_slice();
    let x = particles.as_slice();
    let updated: Vec<f64> = match step {
        StepSize::Scalar(e) => x.iter().zip(phi).map(|(x, p)| x + e * p).collect(),
        StepSize::Elementwise(e) => x
            .iter()
            .zip(phi)
            .zip(e)
            .map(|((x, p), e)| x + e * p)
            .collect(),
    };
    if let Some(pos) = updated.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            particle: pos / particles.d(),
            what: format!("update at iteration {t} is not finite"),
        });
    }
    particles.as_mut_slice().copy_from_slice(&updated);
    particles.iter += 1;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub iterations: usize,
    /// Observe every `metric_interval` iterations (and at iteration 0).
    pub metric_interval: usize,
    /// Data points per score evaluation; `None` uses the whole dataset.
    pub score_batch: Option<usize>,
}

impl RunOptions {
    pub fn new(iterations: usize) -> Self {
        RunOptions {
            iterations,
            metric_interval: 1,
            score_batch: None,
        }
    }
}

/// Draws score minibatches for data-backed models.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    rng: Rng,
    size: Option<usize>,
    data_len: Option<usize>,
}

impl BatchSampler {
    pub fn new(model: &dyn ScoreModel, size: Option<usize>, seed: RngSeed) -> Self {
        BatchSampler {
            rng: seed.rng(Stream::ScoreBatch),
            size,
            data_len: model.data_len(),
        }
    }

    /// Next batch, or `None` when the full data (or no data) is used.
    pub fn next_batch(&mut self) -> Option<Vec<usize>> {
        match (self.data_len, self.size) {
            (Some(n), Some(b)) if b < n => {
                let mut idx = index::sample(&mut self.rng, n, b).into_vec();
                idx.sort_unstable();
                Some(idx)
            }
            _ => None,
        }
    }
}

/// Runs `opts.iterations` SVGD updates, calling `observe` at iteration 0 and
/// after every `metric_interval`-th update. Returns `(iteration, value)` pairs.
pub fn run<T, F>(
    particles: &mut ParticleSet,
    model: &dyn ScoreModel,
    schedule: &mut StepSchedule,
    opts: &RunOptions,
    seed: RngSeed,
    mut observe: F,
) -> Result<Vec<(usize, T)>>
where
    F: FnMut(&ParticleSet) -> Result<T>,
{
    if opts.metric_interval == 0 {
        return Err(Error::argument("metric interval must be at least 1"));
    }
    let mut batches = BatchSampler::new(model, opts.score_batch, seed);
    let mut ws = SteinWorkspace::new();
    let mut out = Vec::with_capacity(opts.iterations / opts.metric_interval + 1);
    out.push((particles.iter, observe(particles)?));
    for step in 1..=opts.iterations {
        let batch = batches.next_batch();
        svgd_iterate(particles, model, schedule, batch.as_deref(), &mut ws)?;
        if step % opts.metric_interval == 0 {
            out.push((particles.iter, observe(particles)?));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{DiagGaussian, GaussianMixture1D};

    #[test]
    fn zero_step_is_identity() {
        let model = GaussianMixture1D::benchmark();
        let mut p = ParticleSet::from_rows(&[vec![-1.0], vec![0.5], vec![2.0]]).unwrap();
        let before = p.clone();
        let mut sched = StepSchedule::fixed(0.0).unwrap();
        svgd_iterate(&mut p, &model, &mut sched, None, &mut SteinWorkspace::new()).unwrap();
        assert_eq!(p.as_slice(), before.as_slice());
        assert_eq!(p.iter, 1);
    }

    #[test]
    fn single_particle_standard_normal() {
        let model = DiagGaussian::standard(1);
        let mut p = ParticleSet::from_rows(&[vec![2.0]]).unwrap();
        let mut sched = StepSchedule::fixed(0.5).unwrap();
        svgd_iterate(&mut p, &model, &mut sched, None, &mut SteinWorkspace::new()).unwrap();
        assert_eq!(p.row(0), &[1.0]);
    }

    #[test]
    fn single_particle_direction_is_score() {
        let model = GaussianMixture1D::benchmark();
        let p = ParticleSet::from_rows(&[vec![0.9]]).unwrap();
        let dir = stein_direction(&p, &model, None).unwrap();
        assert_eq!(dir.row(0)[0], model.score_at(0.9));
    }

    #[test]
    fn symmetric_pair_gives_antisymmetric_direction() {
        let model = DiagGaussian::standard(1);
        for c in [0.1, 0.8, 2.5] {
            let p = ParticleSet::from_rows(&[vec![-c], vec![c]]).unwrap();
            let dir = stein_direction(&p, &model, None).unwrap();
            assert!((dir.row(0)[0] + dir.row(1)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn run_observes_on_interval() {
        let model = GaussianMixture1D::benchmark();
        let mut p = crate::particles::init_particles(&model, 10, RngSeed(3)).unwrap();
        let mut sched = StepSchedule::fixed(0.1).unwrap();
        let opts = RunOptions {
            iterations: 23,
            metric_interval: 5,
            score_batch: None,
        };
        let snaps = run(&mut p, &model, &mut sched, &opts, RngSeed(3), |p| Ok(p.iter)).unwrap();
        let iters: Vec<usize> = snaps.iter().map(|s| s.0).collect();
        assert_eq!(iters, vec![0, 5, 10, 15, 20]);
        assert_eq!(snaps.len(), 23 / 5 + 1);
    }

    #[test]
    fn zero_iterations_single_snapshot() {
        let model = GaussianMixture1D::benchmark();
        let mut p = crate::particles::init_particles(&model, 4, RngSeed(1)).unwrap();
        let before = p.clone();
        let mut sched = StepSchedule::fixed(0.1).unwrap();
        let snaps = run(&mut p, &model, &mut sched, &RunOptions::new(0), RngSeed(1), |_| Ok(())).unwrap();
        assert_eq!(snaps.len(), 1);
        assert_eq!(p, before);
    }

    #[test]
    fn non_finite_update_leaves_particles() {
        let model = DiagGaussian::standard(1);
        let mut p = ParticleSet::from_rows(&[vec![1e300], vec![-1e300]]).unwrap();
        let before = p.clone();
        let mut sched = StepSchedule::fixed(1e10).unwrap();
        let err = svgd_iterate(&mut p, &model, &mut sched, None, &mut SteinWorkspace::new());
        assert!(matches!(err, Err(Error::Numerical { .. })));
        assert_eq!(p, before);
    }
}
