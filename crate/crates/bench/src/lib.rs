//! Seeded fixtures shared by the benchmarks in `benches/`.

use dusvgd_core::data::{synthetic_logistic, synthetic_regression};
use dusvgd_core::targets::{BayesLogReg, BayesNN, GaussianMixture1D};
use dusvgd_core::{init_particles, ParticleSet, RngSeed, ScoreModel};

pub fn mixture() -> GaussianMixture1D {
    GaussianMixture1D::benchmark()
}

pub fn logreg(n: usize) -> BayesLogReg {
    let (x, t) = synthetic_logistic(n, RngSeed(0));
    BayesLogReg::with_default_prior(x.with_constant_column(1.0), t).expect("valid labels")
}

pub fn bnn(n: usize, inputs: usize) -> BayesNN {
    let (x, y) = synthetic_regression(n, inputs, RngSeed(0));
    BayesNN::new(x, y).expect("valid data")
}

pub fn particles(model: &dyn ScoreModel, m: usize) -> ParticleSet {
    init_particles(model, m, RngSeed(1)).expect("model has an initial distribution")
}
