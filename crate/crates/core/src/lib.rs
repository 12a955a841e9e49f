//! An access-pattern tensor IR with shape inference, a reference
//! interpreter, an e-graph rewrite engine and a library of accelerator
//! mapping rewrites (systolic arrays, im2col, matmul blocking).

pub mod egraph;
pub mod extract;
pub mod interp;
pub mod ir;
pub mod kernels;
pub mod rewrites;
pub mod cli;

pub use ir::{AccessPatternShape, Expr, Op, Operator, ShapeEnv};
