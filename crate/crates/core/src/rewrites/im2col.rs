use super::{class_has, lit_shape, shape_of, Build, RewriteRule, RuleSet, RuleSetName};
use crate::egraph::{EGraph, Id};
use crate::ir::{product, AccessPatternShape, Op, Operator};

/// Flatten-reshape exploration plus the two rules that move `reshape`
/// outward through `cartProd` and `compute dotProd`.
pub fn rules_im2col() -> RuleSet {
    RuleSet {
        name: RuleSetName::Im2col,
        rules: vec![flatten_reshape(), cartprod_reshape(), dotprod_reshape()],
    }
}

/// True when the class is, or already has, a flatten-reshape chain.
fn explored(g: &EGraph, id: Id) -> bool {
    let c = g.class(id);
    c.nodes.iter().any(|n| match n.op {
        Op::Flatten => true,
        Op::Reshape(_) => class_has(g, n.children[0], |op| *op == Op::Flatten),
        _ => false,
    })
}

fn flatten_reshape() -> RewriteRule {
    RewriteRule::new("im2col-flatten-reshape", "?a", |g, _, s| {
        let a = s.class("a");
        let shape = g.shape(a).clone();
        let flat = Build::node(Op::Flatten, vec![Build::Class(a)]);
        vec![Build::node(Op::Reshape(shape), vec![flat])]
    })
    .with_condition(|g, _, s| !explored(g, s.class("a")))
}

fn cartprod_reshape() -> RewriteRule {
    RewriteRule::new(
        "im2col-cartprod-reshape",
        "(cartProd (reshape ?a0 ?s0) (reshape ?a1 ?s1))",
        |_, _, s| {
            let (s0, s1) = (lit_shape(s, "s0"), lit_shape(s, "s1"));
            let mut compute = vec![2];
            compute.extend_from_slice(&s0.compute);
            let new_shape = AccessPatternShape::new([s0.access.as_slice(), &s1.access].concat(), compute);
            let cp = Build::node(Op::CartProd, vec![Build::Class(s.class("a0")), Build::Class(s.class("a1"))]);
            vec![Build::node(Op::Reshape(new_shape), vec![cp])]
        },
    )
    .with_condition(|g, _, s| {
        lit_shape(s, "s0").compute == lit_shape(s, "s1").compute
            && shape_of(g, s, "a0").compute == shape_of(g, s, "a1").compute
    })
}

fn dotprod_reshape() -> RewriteRule {
    RewriteRule::new(
        "im2col-dotprod-reshape",
        "(compute dotProd (reshape ?a ?shape))",
        |_, _, s| {
            let new_shape = AccessPatternShape::new(lit_shape(s, "shape").access.clone(), []);
            let dp = Build::node(Op::Compute(Operator::DotProd), vec![Build::Class(s.class("a"))]);
            vec![Build::node(Op::Reshape(new_shape), vec![dp])]
        },
    )
    .with_condition(|g, _, s| {
        let target = &lit_shape(s, "shape").compute;
        let inner = &shape_of(g, s, "a").compute;
        match (target.split_first(), inner.split_first()) {
            (Some((t0, trest)), Some((i0, irest))) => t0 == i0 && product(trest) == product(irest),
            _ => false,
        }
    })
}
