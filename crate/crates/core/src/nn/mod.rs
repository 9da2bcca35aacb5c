//! Small deterministic dense-network engine: one-hidden-layer ReLU MLPs with
//! hand-written backpropagation, Adam, cosine annealing and early stopping.

mod matrix;
mod mlp;
mod ops;
mod optim;

pub use matrix::{argmax, Matrix};
pub use mlp::{glorot_bound, init_params, MlpDims, MlpForward, MlpParams};
pub use ops::{log_sum_exp, relu, sigmoid, softmax, softmax_inplace, softmax_rows};
pub use optim::{cosine_lr, AdamState, EarlyStopState, LrSchedule, ScheduleKind};

/// A model whose trainable state is an ordered list of flat tensors.
/// Gradients use the same type and layout as the parameters.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}
