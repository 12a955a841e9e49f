use super::{class_has, shape_of, Build, RewriteRule, RuleSet, RuleSetName};
use crate::ir::{Op, Operator};

/// Slice-concat exploration and the rules that move `concat` outward
/// through `cartProd` and `compute dotProd`. Dims larger than `block` are
/// halved, so repeated saturation splits down to `block`.
pub fn rules_blocking(block: usize) -> RuleSet {
    assert!(block >= 1, "block size must be positive");
    RuleSet {
        name: RuleSetName::Blocking,
        rules: vec![
            slice_concat(block),
            cartprod_concat_right(),
            cartprod_concat_left(),
            cartprod_concat_both(),
            dotprod_concat_access(),
            dotprod_concat_reduce(),
        ],
    }
}

fn slice_concat(block: usize) -> RewriteRule {
    RewriteRule::new("blocking-slice-concat", "?a", move |g, _, s| {
        let a = s.class("a");
        let class = g.class(a);
        // slices nest in increasing dim order; without this every
        // permutation of the same tiling gets its own chain
        let max_sliced = class
            .nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Slice { dim, .. } => Some(dim),
                _ => None,
            })
            .max();
        let mut out = Vec::new();
        for (d, &extent) in class.shape.dims().iter().enumerate() {
            if extent <= block || extent % 2 != 0 {
                continue;
            }
            if max_sliced.is_some_and(|m| m > d) || class_has(g, a, |op| *op == Op::Concat(d)) {
                continue;
            }
            let half = extent / 2;
            let lo = Build::node(Op::Slice { dim: d, lo: 0, hi: half }, vec![Build::Class(a)]);
            let hi = Build::node(Op::Slice { dim: d, lo: half, hi: extent }, vec![Build::Class(a)]);
            out.push(Build::node(Op::Concat(d), vec![lo, hi]));
        }
        out
    })
}

fn cartprod(a: Build, b: Build) -> Build {
    Build::node(Op::CartProd, vec![a, b])
}

fn dot(a: Build) -> Build {
    Build::node(Op::Compute(Operator::DotProd), vec![a])
}

fn cartprod_concat_right() -> RewriteRule {
    RewriteRule::new(
        "blocking-cartprod-concat-right",
        "(cartProd ?a (concat ?b0 ?b1 ?dim))",
        |g, _, s| {
            let new_dim = shape_of(g, s, "a").n_access() + s.nat("dim");
            let a = Build::Class(s.class("a"));
            vec![Build::node(
                Op::Concat(new_dim),
                vec![
                    cartprod(a.clone(), Build::Class(s.class("b0"))),
                    cartprod(a, Build::Class(s.class("b1"))),
                ],
            )]
        },
    )
    .with_condition(|g, _, s| s.nat("dim") < shape_of(g, s, "b0").n_access())
}

/// Mirror of the right-operand rule. Without it a split of the left
/// operand's access dim never reaches the top of the term.
fn cartprod_concat_left() -> RewriteRule {
    RewriteRule::new(
        "blocking-cartprod-concat-left",
        "(cartProd (concat ?a0 ?a1 ?dim) ?b)",
        |_, _, s| {
            let b = Build::Class(s.class("b"));
            vec![Build::node(
                Op::Concat(s.nat("dim")),
                vec![
                    cartprod(Build::Class(s.class("a0")), b.clone()),
                    cartprod(Build::Class(s.class("a1")), b),
                ],
            )]
        },
    )
    .with_condition(|g, _, s| s.nat("dim") < shape_of(g, s, "a0").n_access())
}

fn cartprod_concat_both() -> RewriteRule {
    RewriteRule::new(
        "blocking-cartprod-concat-both",
        "(cartProd (concat ?a0 ?a1 ?dim0) (concat ?a2 ?a3 ?dim1))",
        |g, _, s| {
            let (n0, n2) = (shape_of(g, s, "a0").n_access(), shape_of(g, s, "a2").n_access());
            let Some(j) = s.nat("dim0").checked_sub(n0) else { return vec![] };
            vec![Build::node(
                Op::Concat(n0 + n2 + 1 + j),
                vec![
                    cartprod(Build::Class(s.class("a0")), Build::Class(s.class("a2"))),
                    cartprod(Build::Class(s.class("a1")), Build::Class(s.class("a3"))),
                ],
            )]
        },
    )
    .with_condition(|g, _, s| {
        let (a0, a1, a2, a3) = (
            shape_of(g, s, "a0"),
            shape_of(g, s, "a1"),
            shape_of(g, s, "a2"),
            shape_of(g, s, "a3"),
        );
        let (d0, d1) = (s.nat("dim0"), s.nat("dim1"));
        d0 >= a0.n_access()
            && d1 >= a2.n_access()
            && d0 - a0.n_access() == d1 - a2.n_access()
            && a0.compute == a2.compute
            && a1.compute == a3.compute
    })
}

fn dotprod_concat_access() -> RewriteRule {
    RewriteRule::new(
        "blocking-dotprod-concat-access",
        "(compute dotProd (concat ?a0 ?a1 ?dim))",
        |_, _, s| {
            vec![Build::node(
                Op::Concat(s.nat("dim")),
                vec![dot(Build::Class(s.class("a0"))), dot(Build::Class(s.class("a1")))],
            )]
        },
    )
    .with_condition(|g, _, s| s.nat("dim") < shape_of(g, s, "a0").n_access())
}

fn dotprod_concat_reduce() -> RewriteRule {
    RewriteRule::new(
        "blocking-dotprod-concat-reduce",
        "(compute dotProd (concat ?a0 ?a1 ?dim))",
        |_, _, s| {
            let pair = Build::node(
                Op::Pair,
                vec![dot(Build::Class(s.class("a0"))), dot(Build::Class(s.class("a1")))],
            );
            vec![Build::node(Op::Compute(Operator::ReduceSum), vec![pair])]
        },
    )
    // the first compute dim is the tuple dim; splitting it is not a
    // partial dot product
    .with_condition(|g, _, s| s.nat("dim") > shape_of(g, s, "a0").n_access())
}
