//! Reference evaluator over dense `f64` tensors, plus loop-nest oracles.

mod eval;
pub mod io;
mod oracle;
mod tensor;

use rand::Rng;

pub use eval::{evaluate, shape_env_of, EvalError, TensorEnv};
pub use oracle::{oracle_conv2d, oracle_matmul, oracle_maxpool, OracleError};
pub use tensor::{all_close, close, for_each_index, max_abs_diff, strides, LengthMismatch, Tensor};

use crate::ir::ShapeEnv;

/// Relative tolerance for equivalence checks; rewrites may reassociate sums.
pub const REL_TOL: f64 = 1e-10;
/// Absolute floor under [`REL_TOL`].
pub const ABS_TOL: f64 = 1e-12;

/// One uniform [-1, 1] tensor per entry of `shapes`.
pub fn random_env(shapes: &ShapeEnv, rng: &mut impl Rng) -> TensorEnv {
    shapes
        .iter()
        .map(|(name, dims)| (name.to_string(), Tensor::random(dims, rng)))
        .collect()
}
