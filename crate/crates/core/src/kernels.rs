//! Common ML kernels written in the IR. Inputs are always named
//! `activations` and `weights`.

use crate::ir::{Expr, Operator};

fn activations() -> Expr {
    Expr::tensor("activations")
}

fn weights() -> Expr {
    Expr::tensor("weights")
}

/// `activations: (M, N)`, `weights: (N, O)`; result `((M, O), ())`.
pub fn matmul() -> Expr {
    Expr::compute(
        Operator::DotProd,
        Expr::cart_prod(
            Expr::access(activations(), 1),
            Expr::transpose(Expr::access(weights(), 1), [1, 0]),
        ),
    )
}

/// `activations: (N, C, H, W)`, `weights: (O, C, Kh, Kw)`; result in NOHW
/// layout.
pub fn conv2d(channels: usize, kh: usize, kw: usize, sh: usize, sw: usize) -> Expr {
    let windows = Expr::windows(Expr::access(activations(), 1), [channels, kh, kw], [1, sh, sw]);
    let dot = Expr::compute(
        Operator::DotProd,
        Expr::cart_prod(windows, Expr::access(weights(), 1)),
    );
    Expr::transpose(Expr::squeeze(dot, 1), [0, 3, 1, 2])
}

/// `activations: (N, C, H, W)`; result `((N, C, H', W'), ())`.
pub fn maxpool(kh: usize, kw: usize, sh: usize, sw: usize) -> Expr {
    Expr::compute(
        Operator::ReduceMax,
        Expr::windows(Expr::access(activations(), 2), [kh, kw], [sh, sw]),
    )
}
