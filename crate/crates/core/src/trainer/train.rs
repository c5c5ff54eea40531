use rand::Rng as _;

use super::adam::{Adam, LossRecord, TrainState};
use super::unfold::{batch_loss, grad_params, ParamKind, UnfoldProblem};
use crate::engine::ChebyshevOrder;
use crate::error::{Error, Result};
use crate::rng::{RngSeed, Stream};

/// Lower bound for learned steps after each update.
pub const STEP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Unfolding length `T`.
    pub period: usize,
    pub epochs: usize,
    /// Items per minibatch.
    pub batch: usize,
    pub lr: f64,
    /// Initial step for every unfolded iteration (DUSVGD).
    pub init_step: f64,
    /// Initial `(alpha, beta)` (C-DUSVGD).
    pub init_chebyshev: (f64, f64),
    pub order: ChebyshevOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub kind: ParamKind,
    pub params: Vec<f64>,
    pub history: Vec<LossRecord>,
}

fn minibatch(seed: RngSeed, counter: u64, size: usize) -> Vec<RngSeed> {
    let mut rng = seed.rng(Stream::TrainEpoch(counter));
    (0..size).map(|_| RngSeed(rng.random())).collect()
}

fn validate(cfg: &TrainConfig) -> Result<()> {
    if cfg.period == 0 {
        return Err(Error::config("unfolding length T must be at least 1"));
    }
    if cfg.batch == 0 {
        return Err(Error::config("minibatch size must be at least 1"));
    }
    if !(cfg.lr >= 0.0) {
        return Err(Error::config("learning rate must be non-negative"));
    }
    Ok(())
}

/// Incremental training of `T` step sizes: for depth `1..=T`, `E` epochs of
/// Adam on the loss after `depth` unfolded iterations.
pub fn train_dusvgd(problem: &UnfoldProblem, cfg: &TrainConfig, seed: RngSeed) -> Result<TrainOutcome> {
    validate(cfg)?;
    if !(cfg.init_step > 0.0) {
        return Err(Error::config("initial step must be positive"));
    }
    let kind = ParamKind::Learned;
    let adam = Adam::new(cfg.lr);
    let mut state = TrainState::new(vec![cfg.init_step; cfg.period]).with_floor(STEP_FLOOR);
    let mut counter = 0;
    for depth in 1..=cfg.period {
        for epoch in 1..=cfg.epochs {
            let items = minibatch(seed, counter, cfg.batch);
            counter += 1;
            let loss = batch_loss(problem, &kind, &state.params, depth, &items)?;
            let grad = grad_params(problem, &kind, &state.params, depth, &items)?;
            state.adam_update(&grad, &adam)?;
            state.history.push(LossRecord { depth, epoch, loss });
        }
    }
    Ok(TrainOutcome {
        kind,
        params: state.params,
        history: state.history,
    })
}

/// Trains `(alpha, beta)` on the loss after the full `T` iterations.
pub fn train_cdusvgd(problem: &UnfoldProblem, cfg: &TrainConfig, seed: RngSeed) -> Result<TrainOutcome> {
    validate(cfg)?;
    let kind = ParamKind::Chebyshev {
        period: cfg.period,
        order: cfg.order,
    };
    let adam = Adam::new(cfg.lr);
    let (a0, b0) = cfg.init_chebyshev;
    let mut state = TrainState::new(vec![a0, b0]);
    kind.schedule(&state.params)?;
    for epoch in 1..=cfg.epochs {
        let items = minibatch(seed, epoch as u64 - 1, cfg.batch);
        let loss = batch_loss(problem, &kind, &state.params, cfg.period, &items)?;
        let grad = grad_params(problem, &kind, &state.params, cfg.period, &items)?;
        state.adam_update(&grad, &adam)?;
        state.history.push(LossRecord {
            depth: cfg.period,
            epoch,
            loss,
        });
    }
    Ok(TrainOutcome {
        kind,
        params: state.params,
        history: state.history,
    })
}
