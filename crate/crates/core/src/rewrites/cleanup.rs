use super::{lit_shape, shape_of, Build, RewriteRule, RuleSet, RuleSetName};

/// Shape-preserving simplifications.
pub fn rules_cleanup() -> RuleSet {
    let rules = vec![
        RewriteRule::template("cleanup-access-access", "(access (access ?a ?m) ?n)", "(access ?a ?n)"),
        RewriteRule::new("cleanup-transpose-inverse", "(transpose (transpose ?a ?p) ?q)", |_, _, s| {
            vec![Build::Class(s.class("a"))]
        })
        .with_condition(|_, _, s| {
            let p = s.lit("p").as_list().unwrap();
            let q = s.lit("q").as_list().unwrap();
            p.len() == q.len() && q.iter().enumerate().all(|(k, &qk)| p.get(qk) == Some(&k))
        }),
        RewriteRule::new("cleanup-reshape-identity", "(reshape ?a ?s)", |_, _, s| {
            vec![Build::Class(s.class("a"))]
        })
        .with_condition(|g, _, s| shape_of(g, s, "a") == lit_shape(s, "s")),
        RewriteRule::new("cleanup-flatten-identity", "(flatten ?a)", |_, _, s| {
            vec![Build::Class(s.class("a"))]
        })
        .with_condition(|g, _, s| {
            let a = shape_of(g, s, "a");
            a.access.len() <= 1 && a.compute.len() <= 1
        }),
    ];
    RuleSet {
        name: RuleSetName::Cleanup,
        rules,
    }
}
