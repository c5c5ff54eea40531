use std::f64::consts::PI;

use super::SteinDirection;
use crate::error::{Error, Result};

/// Order in which the Chebyshev steps are visited within one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChebyshevOrder {
    /// Largest step first: cosine argument `(2(T - t) - 1) π / 2T`.
    #[default]
    Reversed,
    /// Smallest step first: cosine argument `(2t + 1) π / 2T`.
    Forward,
}

impl std::str::FromStr for ChebyshevOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reversed" => Ok(ChebyshevOrder::Reversed),
            "forward" => Ok(ChebyshevOrder::Forward),
            other => Err(Error::config(format!("unknown Chebyshev order `{other}`"))),
        }
    }
}

impl std::fmt::Display for ChebyshevOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ChebyshevOrder::Reversed => "reversed",
            ChebyshevOrder::Forward => "forward",
        })
    }
}

/// Chebyshev step sizes for eigenvalue bounds `λ₁ = α²`, `λₙ = α² + β²`.
///
/// Step `t` is the reciprocal of a root of the degree-`T` Chebyshev
/// polynomial shifted onto `[λ₁, λₙ]`.
pub fn chebyshev_steps(alpha: f64, beta: f64, period: usize, order: ChebyshevOrder) -> Result<Vec<f64>> {
    if period == 0 {
        return Err(Error::argument("Chebyshev period must be at least 1"));
    }
    if alpha == 0.0 && beta == 0.0 {
        return Err(Error::argument("alpha = beta = 0 gives a zero eigenvalue range"));
    }
    let lo = alpha * alpha;
    let hi = lo + beta * beta;
    let (center, radius) = (0.5 * (hi + lo), 0.5 * (hi - lo));
    let tt = period as f64;
    let steps: Vec<f64> = (0..period)
        .map(|t| {
            let k = match order {
                ChebyshevOrder::Reversed => 2.0 * (tt - t as f64) - 1.0,
                ChebyshevOrder::Forward => 2.0 * t as f64 + 1.0,
            };
            1.0 / (center + radius * (k * PI / (2.0 * tt)).cos())
        })
        .collect();
    if steps.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::argument(format!(
            "Chebyshev steps not positive for alpha={alpha}, beta={beta}"
        )));
    }
    Ok(steps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub step: f64,
    pub decay: f64,
    pub floor: f64,
    acc: Vec<f64>,
    buf: Vec<f64>,
}

impl RmsProp {
    pub fn new(step: f64, decay: f64, floor: f64) -> Result<Self> {
        if !(step > 0.0) || !(decay > 0.0 && decay < 1.0) || !(floor > 0.0) {
            return Err(Error::argument(
                "RMSProp needs step > 0, decay in (0, 1), floor > 0",
            ));
        }
        Ok(RmsProp {
            step,
            decay,
            floor,
            acc: Vec::new(),
            buf: Vec::new(),
        })
    }

    /// Resets the squared-direction accumulator.
    pub fn reset(&mut self) {
        self.acc.clear();
    }

    fn update(&mut self, direction: &[f64]) -> &[f64] {
        if self.acc.len() != direction.len() {
            self.acc = vec![0.0; direction.len()];
            self.buf = vec![0.0; direction.len()];
        }
        for ((v, s), &g) in self.acc.iter_mut().zip(self.buf.iter_mut()).zip(direction) {
            *v = self.decay * *v + (1.0 - self.decay) * g * g;
            *s = self.step / (v.sqrt() + self.floor);
        }
        &self.buf
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevSchedule {
    pub alpha: f64,
    pub beta: f64,
    pub order: ChebyshevOrder,
    steps: Vec<f64>,
}

impl ChebyshevSchedule {
    pub fn new(alpha: f64, beta: f64, period: usize, order: ChebyshevOrder) -> Result<Self> {
        let steps = chebyshev_steps(alpha, beta, period, order)?;
        Ok(ChebyshevSchedule {
            alpha,
            beta,
            order,
            steps,
        })
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }
}

/// Policy producing the step size of iteration `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule {
    Fixed(f64),
    RmsProp(RmsProp),
    /// One trained step per iteration, reused with period `len`.
    Learned(Vec<f64>),
    /// Chebyshev steps from two trained scalars, reused with period `T`.
    Chebyshev(ChebyshevSchedule),
}

/// Step applied to the Stein direction: shared scalar or one per entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize<'a> {
    Scalar(f64),
    Elementwise(&'a [f64]),
}

impl StepSchedule {
    pub fn fixed(step: f64) -> Result<Self> {
        if !(step >= 0.0 && step.is_finite()) {
            return Err(Error::argument(format!("fixed step must be >= 0, got {step}")));
        }
        Ok(StepSchedule::Fixed(step))
    }

    pub fn learned(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::argument("learned schedule needs at least one step"));
        }
        if steps.iter().any(|s| !s.is_finite()) {
            return Err(Error::argument("learned steps must be finite"));
        }
        Ok(StepSchedule::Learned(steps))
    }

    pub fn chebyshev(alpha: f64, beta: f64, period: usize, order: ChebyshevOrder) -> Result<Self> {
        Ok(StepSchedule::Chebyshev(ChebyshevSchedule::new(
            alpha, beta, period, order,
        )?))
    }

    /// Period for periodic schedules.
    pub fn period(&self) -> Option<usize> {
        match self {
            StepSchedule::Learned(s) => Some(s.len()),
            StepSchedule::Chebyshev(c) => Some(c.steps.len()),
            _ => None,
        }
    }

    /// Step for iteration `t`. RMSProp folds `direction` into its state.
    pub fn step_size(&mut self, t: usize, direction: &SteinDirection) -> StepSize<'_> {
        match self {
            StepSchedule::Fixed(e) => StepSize::Scalar(*e),
            StepSchedule::Learned(s) => StepSize::Scalar(s[t % s.len()]),
            StepSchedule::Chebyshev(c) => StepSize::Scalar(c.steps[t % c.steps.len()]),
            StepSchedule::RmsProp(r) => StepSize::Elementwise(r.update(direction.as_slice())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(v: &[f64]) -> SteinDirection {
        SteinDirection::from_flat(v.len(), 1, v.to_vec())
    }

    #[test]
    fn learned_indexes_modulo_period() {
        let mut s = StepSchedule::learned(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.step_size(4, &dir(&[0.0])), StepSize::Scalar(2.0));
        assert_eq!(s.step_size(2, &dir(&[0.0])), StepSize::Scalar(3.0));
    }

    #[test]
    fn fixed_ignores_iteration() {
        let mut s = StepSchedule::fixed(0.1).unwrap();
        for t in [0, 7, 1000] {
            assert_eq!(s.step_size(t, &dir(&[5.0])), StepSize::Scalar(0.1));
        }
    }

    #[test]
    fn rmsprop_first_call() {
        let (eps0, rho, delta, g) = (0.1, 0.9, 1e-8, -3.0f64);
        let mut s = StepSchedule::RmsProp(RmsProp::new(eps0, rho, delta).unwrap());
        let expected = eps0 / ((1.0 - rho).sqrt() * g.abs() + delta);
        match s.step_size(0, &dir(&[g])) {
            StepSize::Elementwise(v) => assert!((v[0] - expected).abs() < 1e-12 * expected),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn chebyshev_flat_when_beta_zero() {
        let steps = chebyshev_steps(2.0, 0.0, 5, ChebyshevOrder::Reversed).unwrap();
        assert!(steps.iter().all(|&s| (s - 0.25).abs() < 1e-15));
    }

    #[test]
    fn chebyshev_single_step() {
        let (a, b) = (0.7f64, 1.9f64);
        let steps = chebyshev_steps(a, b, 1, ChebyshevOrder::Reversed).unwrap();
        assert!((steps[0] - 2.0 / (2.0 * a * a + b * b)).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_two_steps_reversed() {
        // 1 / (1.5 + 0.5 cos(3π/4)), 1 / (1.5 + 0.5 cos(π/4))
        let steps = chebyshev_steps(1.0, 1.0, 2, ChebyshevOrder::Reversed).unwrap();
        assert!((steps[0] - 0.872_260_419_102_717).abs() < 1e-12);
        assert!((steps[1] - 0.539_504_286_779_635_9).abs() < 1e-12);
        let fwd = chebyshev_steps(1.0, 1.0, 2, ChebyshevOrder::Forward).unwrap();
        assert_eq!(fwd, vec![steps[1], steps[0]]);
    }

    #[test]
    fn chebyshev_rejects_degenerate() {
        assert!(chebyshev_steps(0.0, 0.0, 3, ChebyshevOrder::Reversed).is_err());
        assert!(chebyshev_steps(1.0, 1.0, 0, ChebyshevOrder::Reversed).is_err());
        assert!(chebyshev_steps(0.0, 1.0, 3, ChebyshevOrder::Reversed).is_ok());
    }

    #[test]
    fn chebyshev_even_in_parameters() {
        let base = chebyshev_steps(0.3, 1.1, 7, ChebyshevOrder::Reversed).unwrap();
        for (a, b) in [(-0.3, 1.1), (0.3, -1.1), (-0.3, -1.1)] {
            assert_eq!(chebyshev_steps(a, b, 7, ChebyshevOrder::Reversed).unwrap(), base);
        }
    }
}
