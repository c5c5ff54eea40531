use rand_distr::{Distribution, Gamma, Normal};

use super::{batch_scale, check_dim, for_each_index, ScoreModel};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::particles::ParticleSet;
use crate::rng::Rng;

pub const HIDDEN_WIDTH: usize = 50;

/// Offsets of each parameter block inside a flattened particle.
///
/// `[W_hid (H x K, row-major) | b_hid (H) | w_out (H) | b_out | ln lambda | ln gamma]`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BnnLayout {
    pub inputs: usize,
    pub hidden: usize,
}

impl BnnLayout {
    pub fn w_hid(&self) -> std::ops::Range<usize> {
        0..self.hidden * self.inputs
    }
    pub fn b_hid(&self) -> std::ops::Range<usize> {
        let s = self.hidden * self.inputs;
        s..s + self.hidden
    }
    pub fn w_out(&self) -> std::ops::Range<usize> {
        let s = self.hidden * (self.inputs + 1);
        s..s + self.hidden
    }
    pub fn b_out(&self) -> usize {
        self.hidden * (self.inputs + 2)
    }
    /// Count of network weights, biases included.
    pub fn num_weights(&self) -> usize {
        self.b_out() + 1
    }
    pub fn log_lambda(&self) -> usize {
        self.num_weights()
    }
    pub fn log_gamma(&self) -> usize {
        self.num_weights() + 1
    }
    pub fn dim(&self) -> usize {
        self.num_weights() + 2
    }

    /// Network output; `weights` must hold at least `num_weights()` values.
    #[inline]
    pub fn forward_unchecked(&self, weights: &[f64], x: &[f64]) -> f64 {
        let k = self.inputs;
        let w_hid = &weights[self.w_hid()];
        let b_hid = &weights[self.b_hid()];
        let w_out = &weights[self.w_out()];
        let mut out = weights[self.b_out()];
        for j in 0..self.hidden {
            let pre = b_hid[j] + dot(&w_hid[j * k..(j + 1) * k], x);
            if pre > 0.0 {
                out += w_out[j] * pre;
            }
        }
        out
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Posterior of a one-hidden-layer ReLU regression network with Gamma
/// priors on the weight precision `lambda` and noise precision `gamma`.
///
/// Both precisions are carried as logarithms; the Gamma priors read
/// `p(v) ∝ v^(a-1) exp(-v / b)`.
#[derive(Debug, Clone)]
pub struct BayesNN {
    x: Matrix,
    y: Vec<f64>,
    layout: BnnLayout,
    pub a_lambda: f64,
    pub b_lambda: f64,
    pub a_gamma: f64,
    pub b_gamma: f64,
}

impl BayesNN {
    /// Width-50 network, `a = 1`, `b = 0.01` for both precisions.
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        Self::with_hidden_width(x, y, HIDDEN_WIDTH)
    }

    pub fn with_hidden_width(x: Matrix, y: Vec<f64>, hidden: usize) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::argument(format!(
                "{} input rows but {} targets",
                x.rows(),
                y.len()
            )));
        }
        if x.rows() == 0 || x.cols() == 0 || hidden == 0 {
            return Err(Error::argument("network needs data, inputs and hidden units"));
        }
        Ok(BayesNN {
            layout: BnnLayout {
                inputs: x.cols(),
                hidden,
            },
            x,
            y,
            a_lambda: 1.0,
            b_lambda: 0.01,
            a_gamma: 1.0,
            b_gamma: 0.01,
        })
    }

    pub fn layout(&self) -> BnnLayout {
        self.layout
    }

    pub fn inputs(&self) -> &Matrix {
        &self.x
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    /// Network output for one input; `weights` may be a full particle.
    pub fn forward(&self, weights: &[f64], x: &[f64]) -> Result<f64> {
        if weights.len() != self.layout.num_weights() && weights.len() != self.layout.dim() {
            return Err(Error::argument(format!(
                "weight vector of length {} does not fit layout with {} weights",
                weights.len(),
                self.layout.num_weights()
            )));
        }
        check_dim(self.layout.inputs, x.len())?;
        Ok(self.layout.forward_unchecked(weights, x))
    }

    /// Posterior predictive mean over particles, per row of `x`.
    pub fn predict(&self, particles: &ParticleSet, x: &Matrix) -> Result<Vec<f64>> {
        check_dim(self.layout.dim(), particles.d())?;
        check_dim(self.layout.inputs, x.cols())?;
        let m = particles.m() as f64;
        Ok((0..x.rows())
            .map(|n| {
                particles
                    .rows()
                    .map(|p| self.layout.forward_unchecked(p, x.row(n)))
                    .sum::<f64>()
                    / m
            })
            .collect())
    }
}

impl ScoreModel for BayesNN {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn data_len(&self) -> Option<usize> {
        Some(self.x.rows())
    }

    fn sample_initial(&self, rng: &mut Rng, out: &mut [f64]) -> Result<()> {
        let cfg = |e: rand_distr::GammaError| Error::config(e.to_string());
        let lambda: f64 = Gamma::new(self.a_lambda, self.b_lambda)
            .map_err(cfg)?
            .sample(rng)
            .max(f64::MIN_POSITIVE);
        let gamma: f64 = Gamma::new(self.a_gamma, self.b_gamma)
            .map_err(cfg)?
            .sample(rng)
            .max(f64::MIN_POSITIVE);
        let normal = Normal::new(0.0, lambda.sqrt().recip()).map_err(|e| Error::config(e.to_string()))?;
        let l = self.layout;
        for w in &mut out[..l.num_weights()] {
            *w = normal.sample(rng);
        }
        out[l.log_lambda()] = lambda.ln();
        out[l.log_gamma()] = gamma.ln();
        Ok(())
    }

    fn log_density(&self, p: &[f64], batch: Option<&[usize]>) -> Result<f64> {
        check_dim(self.dim(), p.len())?;
        let l = self.layout;
        let n = self.x.rows();
        let scale = batch_scale(batch, n)?;
        let (s_lambda, s_gamma) = (p[l.log_lambda()], p[l.log_gamma()]);
        let (lambda, gamma) = (s_lambda.exp(), s_gamma.exp());
        let nw = l.num_weights();
        let sq: f64 = p[..nw].iter().map(|v| v * v).sum();
        let mut log_p = 0.5 * nw as f64 * s_lambda - 0.5 * lambda * sq
            + self.a_lambda * s_lambda
            - lambda / self.b_lambda
            + self.a_gamma * s_gamma
            - gamma / self.b_gamma;
        let mut lik = 0.0;
        for_each_index(batch, n, |i| {
            let r = self.y[i] - l.forward_unchecked(p, self.x.row(i));
            lik += 0.5 * s_gamma - 0.5 * gamma * r * r;
        });
        log_p += scale * lik;
        Ok(log_p)
    }

    fn score(&self, p: &[f64], batch: Option<&[usize]>, out: &mut [f64]) -> Result<()> {
        check_dim(self.dim(), p.len())?;
        let l = self.layout;
        let n = self.x.rows();
        let scale = batch_scale(batch, n)?;
        let k = l.inputs;
        let (s_lambda, s_gamma) = (p[l.log_lambda()], p[l.log_gamma()]);
        let (lambda, gamma) = (s_lambda.exp(), s_gamma.exp());
        let nw = l.num_weights();

        out.fill(0.0);
        let w_hid = &p[l.w_hid()];
        let b_hid = &p[l.b_hid()];
        let w_out = &p[l.w_out()];
        let b_out = p[l.b_out()];

        let mut act = vec![0.0; l.hidden];
        let mut sq_resid = 0.0;
        let mut count = 0usize;
        {
            let (g_w_hid, rest) = out.split_at_mut(l.hidden * k);
            let (g_b_hid, rest) = rest.split_at_mut(l.hidden);
            let (g_w_out, rest) = rest.split_at_mut(l.hidden);
            let g_b_out = &mut rest[0];
            for_each_index(batch, n, |i| {
                let x = self.x.row(i);
                let mut f = b_out;
                for j in 0..l.hidden {
                    let pre = b_hid[j] + dot(&w_hid[j * k..(j + 1) * k], x);
                    act[j] = pre;
                    if pre > 0.0 {
                        f += w_out[j] * pre;
                    }
                }
                let r = self.y[i] - f;
                sq_resid += r * r;
                count += 1;
                let coef = scale * gamma * r;
                *g_b_out += coef;
                for j in 0..l.hidden {
                    let pre = act[j];
                    if pre > 0.0 {
                        g_w_out[j] += coef * pre;
                        let back = coef * w_out[j];
                        g_b_hid[j] += back;
                        for (g, &xv) in g_w_hid[j * k..(j + 1) * k].iter_mut().zip(x) {
                            *g += back * xv;
                        }
                    }
                }
            });
        }

        let mut sq_w = 0.0;
        for (g, &w) in out[..nw].iter_mut().zip(&p[..nw]) {
            *g -= lambda * w;
            sq_w += w * w;
        }
        out[l.log_lambda()] =
            0.5 * nw as f64 - 0.5 * lambda * sq_w + self.a_lambda - lambda / self.b_lambda;
        out[l.log_gamma()] = scale * (0.5 * count as f64 - 0.5 * gamma * sq_resid) + self.a_gamma
            - gamma / self.b_gamma;
        Ok(())
    }
}
