use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One `(epoch, depth, loss)` record of the training history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub depth: usize,
    pub epoch: usize,
    pub loss: f64,
}

/// Trainable parameters with their Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub params: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
    pub step: u64,
    pub history: Vec<LossRecord>,
    /// Lower bound enforced after every update, if any.
    pub floor: Option<f64>,
}

impl TrainState {
    pub fn new(params: Vec<f64>) -> Self {
        let n = params.len();
        TrainState {
            params,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            history: Vec::new(),
            floor: None,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = Some(floor);
        self
    }

    /// Bias-corrected Adam step, then projection onto `[floor, ∞)`.
    pub fn adam_update(&mut self, grad: &[f64], adam: &Adam) -> Result<()> {
        if grad.len() != self.params.len() {
            return Err(Error::argument("gradient length differs from parameter count"));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss("gradient has non-finite entries".into()));
        }
        self.step += 1;
        let c1 = 1.0 - adam.beta1.powi(self.step as i32);
        let c2 = 1.0 - adam.beta2.powi(self.step as i32);
        for (((p, m), v), &g) in self
            .params
            .iter_mut()
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
            .zip(grad)
        {
            *m = adam.beta1 * *m + (1.0 - adam.beta1) * g;
            *v = adam.beta2 * *v + (1.0 - adam.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= adam.lr * m_hat / (v_hat.sqrt() + adam.eps);
            if let Some(f) = self.floor {
                *p = p.max(f);
            }
        }
        Ok(())
    }
}
