//! Deep-unfolding training of SVGD step sizes.

mod adam;
pub mod loss;
mod train;
mod unfold;

pub use adam::{Adam, LossRecord, TrainState};
pub use loss::{cross_entropy, mmd, mmd_kernel, mse, rmse};
pub use train::{train_cdusvgd, train_dusvgd, TrainConfig, TrainOutcome, STEP_FLOOR};
pub use unfold::{
    batch_loss, fd_step, grad_params, grad_params_with_step, unfolded_loss, LossSpec, ParamKind,
    UnfoldProblem,
};
