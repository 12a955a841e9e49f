//! Shared helpers for the integration tests: random well-shaped rule
//! instances and a way to materialize a rule's right-hand side as an Expr.

#![allow(dead_code)]

pub mod ops;
pub mod oracles;

use std::path::PathBuf;

use apir::egraph::{Build, EGraph, Id, RewriteRule};
use apir::extract::{default_cost_model, extract};
use apir::ir::{product, AccessPatternShape, Expr, Operator, ShapeEnv};
use apir::rewrites::{rule_set, rule_systolic_array, RuleParams, RuleSetName};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

pub fn read_corpus(name: &str) -> String {
    std::fs::read_to_string(corpus(name)).unwrap()
}

/// Every rule of every set, built with default parameters.
pub fn all_rule_names() -> Vec<String> {
    RuleSetName::ALL
        .iter()
        .flat_map(|&n| rule_set(n, &RuleParams::default()).rules)
        .map(|r| r.name)
        .collect()
}

pub fn find_rule(set: RuleSetName, params: &RuleParams, name: &str) -> RewriteRule {
    rule_set(set, params)
        .rules
        .into_iter()
        .find(|r| r.name == name)
        .unwrap_or_else(|| panic!("no rule {name} in {set}"))
}

/// Random program fragments over fresh tensors.
pub struct Gen {
    pub rng: ChaCha8Rng,
    pub env: ShapeEnv,
    next: usize,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            env: ShapeEnv::new(),
            next: 0,
        }
    }

    pub fn dims(&mut self, min_rank: usize, max_rank: usize, max_dim: usize) -> Vec<usize> {
        let r = self.rng.gen_range(min_rank..=max_rank);
        (0..r).map(|_| self.rng.gen_range(1..=max_dim)).collect()
    }

    fn fresh(&mut self, dims: &[usize]) -> Expr {
        let name = format!("t{}", self.next);
        self.next += 1;
        self.env.insert(name.clone(), dims.to_vec());
        Expr::tensor(name)
    }

    pub fn perm(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(&mut self.rng);
        p
    }

    /// A term of exactly the access-pattern shape `(access, compute)`, built
    /// from a fresh tensor in one of a few disguises.
    pub fn leaf(&mut self, access: &[usize], compute: &[usize]) -> Expr {
        let want = [access, compute].concat();
        let n = access.len();
        match self.rng.gen_range(0..3) {
            1 if !want.is_empty() => {
                // output axis k reads input axis p[k]
                let p = self.perm(want.len());
                let mut input = vec![0; want.len()];
                for (k, &pk) in p.iter().enumerate() {
                    input[pk] = want[k];
                }
                let t = self.fresh(&input);
                Expr::transpose(Expr::access(t, n), p)
            }
            2 => {
                let t = self.fresh(&want);
                let m = self.rng.gen_range(0..=want.len());
                Expr::access(Expr::access(t, m), n)
            }
            _ => {
                let t = self.fresh(&want);
                Expr::access(t, n)
            }
        }
    }

    /// A random ordered factorization of `n` into at most 3 factors.
    pub fn factor(&mut self, n: usize) -> Vec<usize> {
        if n == 1 && self.rng.gen_bool(0.3) {
            return vec![];
        }
        let k = self.rng.gen_range(1..=3);
        let mut rest = n;
        let mut out = Vec::new();
        for _ in 1..k {
            let divs: Vec<usize> = (1..=rest).filter(|d| rest.is_multiple_of(*d)).collect();
            let d = *divs.choose(&mut self.rng).unwrap();
            out.push(d);
            rest /= d;
        }
        out.push(rest);
        out
    }

    fn with_dim(dims: &[usize], i: usize, v: usize) -> Vec<usize> {
        let mut d = dims.to_vec();
        d[i] = v;
        d
    }
}

/// A random left-hand side that the named rule should rewrite at its root,
/// together with the rule instance to use.
pub struct Instance {
    pub rule: RewriteRule,
    pub lhs: Expr,
    pub env: ShapeEnv,
}

pub fn random_instance(name: &str, seed: u64) -> Instance {
    let mut g = Gen::new(seed);
    let dot = |e| Expr::compute(Operator::DotProd, e);
    let (rule, lhs) = match name {
        "systolic-array" => {
            let (b, r, c) = (g.rng.gen_range(1..=5), g.rng.gen_range(1..=5), g.rng.gen_range(1..=5));
            let lhs = dot(Expr::cart_prod(g.leaf(&[b], &[r]), g.leaf(&[c], &[r])));
            (rule_systolic_array(r, c), lhs)
        }
        "im2col-flatten-reshape" => {
            let (a, c) = (g.dims(0, 3, 3), g.dims(0, 3, 3));
            let lhs = g.leaf(&a, &c);
            (im2col(name), lhs)
        }
        "im2col-cartprod-reshape" => {
            let c = g.dims(0, 2, 3);
            let (aa, ab) = (g.dims(0, 2, 3), g.dims(0, 2, 3));
            let (a0, a1) = (g.leaf(&aa, &c), g.leaf(&ab, &c));
            let cs = g.factor(product(&c));
            let s0 = AccessPatternShape::new(g.factor(product(&aa)), cs.clone());
            let s1 = AccessPatternShape::new(g.factor(product(&ab)), cs);
            let lhs = Expr::cart_prod(Expr::reshape(a0, s0), Expr::reshape(a1, s1));
            (im2col(name), lhs)
        }
        "im2col-dotprod-reshape" => {
            let t = g.rng.gen_range(2..=3);
            let (a, rest) = (g.dims(0, 2, 3), g.dims(0, 2, 3));
            let x = g.leaf(&a, &[&[t][..], &rest].concat());
            let shape = AccessPatternShape::new(g.factor(product(&a)), [vec![t], g.factor(product(&rest))].concat());
            (im2col(name), dot(Expr::reshape(x, shape)))
        }
        "blocking-slice-concat" => {
            let block = g.rng.gen_range(1..=3);
            let (a, c) = loop {
                let a: Vec<usize> = (0..g.rng.gen_range(0..=2)).map(|_| *[2, 3, 4, 6].choose(&mut g.rng).unwrap()).collect();
                let c: Vec<usize> = (0..g.rng.gen_range(0..=2)).map(|_| *[2, 3, 4, 6].choose(&mut g.rng).unwrap()).collect();
                if a.iter().chain(&c).any(|&d| d > block && d % 2 == 0) {
                    break (a, c);
                }
            };
            let lhs = g.leaf(&a, &c);
            (blocking(name, block), lhs)
        }
        "blocking-cartprod-concat-right" | "blocking-cartprod-concat-left" => {
            let c = g.dims(0, 2, 3);
            let aa = g.dims(0, 2, 3);
            let ab = g.dims(1, 2, 3);
            let d = g.rng.gen_range(0..ab.len());
            let e1 = g.rng.gen_range(1..=3);
            let b0 = g.leaf(&ab, &c);
            let b1 = g.leaf(&Gen::with_dim(&ab, d, e1), &c);
            let a = g.leaf(&aa, &c);
            let cat = Expr::concat(b0, b1, d);
            let lhs = if name.ends_with("right") {
                Expr::cart_prod(a, cat)
            } else {
                Expr::cart_prod(cat, a)
            };
            (blocking(name, 16), lhs)
        }
        "blocking-cartprod-concat-both" => {
            let c = g.dims(1, 2, 3);
            let j = g.rng.gen_range(0..c.len());
            let c1 = Gen::with_dim(&c, j, g.rng.gen_range(1..=3));
            let (aa, ab) = (g.dims(0, 2, 3), g.dims(0, 2, 3));
            let (a0, a1) = (g.leaf(&aa, &c), g.leaf(&aa, &c1));
            let (a2, a3) = (g.leaf(&ab, &c), g.leaf(&ab, &c1));
            let lhs = Expr::cart_prod(Expr::concat(a0, a1, aa.len() + j), Expr::concat(a2, a3, ab.len() + j));
            (blocking(name, 16), lhs)
        }
        "blocking-dotprod-concat-access" => {
            let a = g.dims(1, 2, 3);
            let c = [vec![g.rng.gen_range(2..=3)], g.dims(0, 2, 3)].concat();
            let d = g.rng.gen_range(0..a.len());
            let a1 = Gen::with_dim(&a, d, g.rng.gen_range(1..=3));
            let lhs = dot(Expr::concat(g.leaf(&a, &c), g.leaf(&a1, &c), d));
            (blocking(name, 16), lhs)
        }
        "blocking-dotprod-concat-reduce" => {
            let a = g.dims(0, 2, 3);
            let c = [vec![g.rng.gen_range(2..=3)], g.dims(1, 2, 3)].concat();
            let j = g.rng.gen_range(1..c.len());
            let c1 = Gen::with_dim(&c, j, g.rng.gen_range(1..=3));
            let lhs = dot(Expr::concat(g.leaf(&a, &c), g.leaf(&a, &c1), a.len() + j));
            (blocking(name, 16), lhs)
        }
        "cleanup-access-access" => {
            let (a, c) = (g.dims(0, 2, 3), g.dims(0, 2, 3));
            let r = a.len() + c.len();
            let (m, n) = (g.rng.gen_range(0..=r), g.rng.gen_range(0..=r));
            let x = g.leaf(&a, &c);
            (cleanup(name), Expr::access(Expr::access(x, m), n))
        }
        "cleanup-transpose-inverse" => {
            let (a, c) = (g.dims(0, 2, 3), g.dims(1, 2, 3));
            let p = g.perm(a.len() + c.len());
            let mut q = vec![0; p.len()];
            for (k, &pk) in p.iter().enumerate() {
                q[pk] = k;
            }
            let x = g.leaf(&a, &c);
            (cleanup(name), Expr::transpose(Expr::transpose(x, p), q))
        }
        "cleanup-reshape-identity" => {
            let (a, c) = (g.dims(0, 3, 3), g.dims(0, 3, 3));
            let x = g.leaf(&a, &c);
            (cleanup(name), Expr::reshape(x, AccessPatternShape::new(a, c)))
        }
        "cleanup-flatten-identity" => {
            let (a, c) = (g.dims(0, 1, 4), g.dims(0, 1, 4));
            let x = g.leaf(&a, &c);
            (cleanup(name), Expr::flatten(x))
        }
        other => panic!("no generator for rule {other}"),
    };
    Instance { rule, lhs, env: g.env }
}

fn im2col(name: &str) -> RewriteRule {
    find_rule(RuleSetName::Im2col, &RuleParams::default(), name)
}

fn blocking(name: &str, block: usize) -> RewriteRule {
    let params = RuleParams {
        block_size: block,
        ..Default::default()
    };
    find_rule(RuleSetName::Blocking, &params, name)
}

fn cleanup(name: &str) -> RewriteRule {
    find_rule(RuleSetName::Cleanup, &RuleParams::default(), name)
}

/// Turns a build into a term, reading existing classes back out of `g`.
pub fn build_to_expr(g: &EGraph, b: &Build) -> Expr {
    match b {
        Build::Class(id) => class_expr(g, *id),
        Build::Node(op, children) => Expr::new(op.clone(), children.iter().map(|c| build_to_expr(g, c)).collect()),
    }
}

fn class_expr(g: &EGraph, id: Id) -> Expr {
    extract(g, id, &default_cost_model()).unwrap().expr
}

/// Right-hand terms produced by `rule` for matches rooted at the top of
/// `lhs`, in a graph holding only `lhs`.
pub fn rhs_terms(rule: &RewriteRule, lhs: &Expr, env: &ShapeEnv, check_condition: bool) -> Vec<Expr> {
    let mut g = EGraph::new(env.clone());
    let root = g.add_expr(lhs).expect("lhs is well-shaped");
    let mut out = Vec::new();
    for (id, s) in rule.search(&g) {
        if id != g.find(root) {
            continue;
        }
        let builds = if check_condition {
            rule.apply(&g, id, &s)
        } else {
            rule.apply_unchecked(&g, id, &s)
        };
        out.extend(builds.iter().map(|b| build_to_expr(&g, b)));
    }
    out
}

pub struct RuleCheck {
    pub instances: usize,
    pub rewrites: usize,
    /// Largest elementwise |lhs - rhs| seen.
    pub max_abs_diff: f64,
}

/// Shape preservation and interpreter equivalence of one rule over `n`
/// random instances.
pub fn check_rule(name: &str, n: usize, seed: u64) -> Result<RuleCheck, String> {
    use apir::interp::{all_close, evaluate, max_abs_diff, random_env, ABS_TOL, REL_TOL};
    use apir::ir::infer_shape;
    let mut rewrites = 0;
    let mut worst = 0.0f64;
    for i in 0..n as u64 {
        let inst = random_instance(name, seed.wrapping_mul(1_000_003).wrapping_add(i));
        let lhs_shape = infer_shape(&inst.lhs, &inst.env).map_err(|e| format!("{name}: generated lhs {} is ill-shaped: {e}", inst.lhs))?;
        let rhs = rhs_terms(&inst.rule, &inst.lhs, &inst.env, true);
        if rhs.is_empty() {
            return Err(format!("{name}: did not fire on {}", inst.lhs));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let tensors = random_env(&inst.env, &mut rng);
        let want = evaluate(&inst.lhs, &tensors).map_err(|e| e.to_string())?;
        for r in rhs {
            let s = infer_shape(&r, &inst.env).map_err(|e| format!("{name}: rhs {r} ill-shaped: {e}"))?;
            if s != lhs_shape {
                return Err(format!("{name}: {} : {lhs_shape} rewrote to {r} : {s}", inst.lhs));
            }
            let got = evaluate(&r, &tensors).map_err(|e| e.to_string())?;
            worst = worst.max(max_abs_diff(&want, &got));
            if !all_close(&want, &got, REL_TOL, ABS_TOL) {
                return Err(format!("{name}: {} and {r} disagree", inst.lhs));
            }
            rewrites += 1;
        }
    }
    Ok(RuleCheck {
        instances: n,
        rewrites,
        max_abs_diff: worst,
    })
}
