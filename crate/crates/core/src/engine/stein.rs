use crate::error::{Error, Result};
use crate::kernels::{bandwidth_from_sq_dists, sq_dist, H_MIN};
use crate::particles::ParticleSet;
use crate::targets::ScoreModel;

/// `φ(x_i)` for every particle, `M x d` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SteinDirection {
    data: Vec<f64>,
    m: usize,
    d: usize,
}

impl SteinDirection {
    pub fn from_flat(m: usize, d: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), m * d);
        SteinDirection { data, m, d }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Reusable buffers for repeated direction evaluations.
#[derive(Debug, Default, Clone)]
pub struct SteinWorkspace {
    scores: Vec<f64>,
    sq: Vec<f64>,
    scratch: Vec<f64>,
    pub(crate) direction: Option<SteinDirection>,
    /// Bandwidth used by the last evaluation.
    pub bandwidth: f64,
}

impl SteinWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn direction(&self) -> Option<&SteinDirection> {
        self.direction.as_ref()
    }
}

/// `φ(x_i) = (1/M) Σ_j [k(x_j, x_i) ∇log p(x_j) + ∇_{x_j} k(x_j, x_i)]`,
/// with the bandwidth from the median heuristic on the current particles.
pub fn stein_direction(
    particles: &ParticleSet,
    model: &dyn ScoreModel,
    batch: Option<&[usize]>,
) -> Result<SteinDirection> {
    let mut ws = SteinWorkspace::new();
    compute_into(particles, model, batch, &mut ws)?;
    Ok(ws.direction.take().expect("direction computed"))
}

pub(crate) fn compute_into(
    particles: &ParticleSet,
    model: &dyn ScoreModel,
    batch: Option<&[usize]>,
    ws: &mut SteinWorkspace,
) -> Result<()> {
    let (m, d) = (particles.m(), particles.d());
    if model.dim() != d {
        return Err(Error::argument(format!(
            "model dimension {} does not match particle dimension {d}",
            model.dim()
        )));
    }

    ws.scores.resize(m * d, 0.0);
    for (i, s) in ws.scores.chunks_exact_mut(d).enumerate() {
        model.score(particles.row(i), batch, s)?;
        if let Some(c) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                particle: i,
                what: format!("score coordinate {c} is {}", s[c]),
            });
        }
    }

    ws.sq.clear();
    for i in 0..m {
        for j in i + 1..m {
            ws.sq.push(sq_dist(particles.row(i), particles.row(j)));
        }
    }
    let h = if m >= 2 {
        ws.scratch.clear();
        ws.scratch.extend_from_slice(&ws.sq);
        bandwidth_from_sq_dists(&mut ws.scratch, m)
    } else {
        H_MIN
    };
    ws.bandwidth = h;

    let mut phi = match ws.direction.take() {
        Some(dir) if dir.m == m && dir.d == d => dir.data,
        _ => vec![0.0; m * d],
    };
    // self terms: k(x_i, x_i) = 1 and zero kernel gradient
    phi.copy_from_slice(&ws.scores);
    let two_over_h = 2.0 / h;
    let mut pair = 0;
    for i in 0..m {
        for j in i + 1..m {
            let k = (-ws.sq[pair] / h).exp();
            pair += 1;
            if k == 0.0 {
                continue;
            }
            let (xi, xj) = (particles.row(i), particles.row(j));
            let (head, tail) = phi.split_at_mut(j * d);
            let phi_i = &mut head[i * d..(i + 1) * d];
            let phi_j = &mut tail[..d];
            let si = &ws.scores[i * d..(i + 1) * d];
            let sj = &ws.scores[j * d..(j + 1) * d];
            for c in 0..d {
                let repulse = two_over_h * (xi[c] - xj[c]);
                phi_i[c] += k * (sj[c] + repulse);
                phi_j[c] += k * (si[c] - repulse);
            }
        }
    }
    let inv_m = 1.0 / m as f64;
    phi.iter_mut().for_each(|v| *v *= inv_m);
    if let Some(pos) = phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            particle: pos / d,
            what: "Stein direction is not finite".into(),
        });
    }
    ws.direction = Some(SteinDirection { data: phi, m, d });
    Ok(())
}
