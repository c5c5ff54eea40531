//! Particle-set state.

use crate::error::{Error, Result};
use crate::rng::{RngSeed, Stream};
use crate::targets::ScoreModel;

/// `m` particles of dimension `d`, stored dense row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    data: Vec<f64>,
    m: usize,
    d: usize,
    /// Number of SVGD updates applied so far.
    pub iter: usize,
}

impl ParticleSet {
    pub fn zeros(m: usize, d: usize) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::argument(format!(
                "particle set needs m >= 1 and d >= 1, got m={m}, d={d}"
            )));
        }
        Ok(ParticleSet {
            data: vec![0.0; m * d],
            m,
            d,
            iter: 0,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut set = Self::zeros(m, d)?;
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::argument(format!(
                    "row {i} has length {}, expected {d}",
                    r.len()
                )));
            }
            set.row_mut(i).copy_from_slice(r);
        }
        set.check_finite()?;
        Ok(set)
    }

    pub fn from_flat(m: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != m * d {
            return Err(Error::argument(format!(
                "flat buffer has {} entries, expected {m}x{d}",
                data.len()
            )));
        }
        let mut set = Self::zeros(m, d)?;
        set.data = data;
        set.check_finite()?;
        Ok(set)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Errors with the index of the first particle holding NaN or Inf.
    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(pos) => Err(Error::Numerical {
                particle: pos / self.d,
                what: format!("coordinate {} is {}", pos % self.d, self.data[pos]),
            }),
        }
    }
}

/// Draws `m` particles i.i.d. from the model's initial distribution.
pub fn init_particles(model: &dyn ScoreModel, m: usize, seed: RngSeed) -> Result<ParticleSet> {
    let mut set = ParticleSet::zeros(m, model.dim())?;
    let mut rng = seed.rng(Stream::Init);
    for i in 0..m {
        model.sample_initial(&mut rng, set.row_mut(i))?;
    }
    set.check_finite()?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_shapes() {
        assert!(ParticleSet::zeros(0, 1).is_err());
        assert!(ParticleSet::zeros(1, 0).is_err());
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(ParticleSet::from_rows(&rows).is_err());
    }

    #[test]
    fn finiteness_reports_particle_index() {
        let mut p = ParticleSet::zeros(3, 2).unwrap();
        p.row_mut(2)[1] = f64::NAN;
        match p.check_finite() {
            Err(Error::Numerical { particle, .. }) => assert_eq!(particle, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
