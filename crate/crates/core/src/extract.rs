//! Bottom-up extraction of a cheapest term from an e-graph.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::egraph::{EGraph, ENode, Id};
use crate::ir::{Expr, Head, Op, Operator};

/// Per-construct costs. Compute nodes are charged per element of their
/// access dims: `compute_dot_prod_factor` for `dotProd`, the entry under
/// the operator's name for the reductions.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub head_costs: BTreeMap<String, f64>,
    pub compute_dot_prod_factor: f64,
}

pub fn default_cost_model() -> CostModel {
    let mut head_costs = BTreeMap::new();
    for h in Head::ALL {
        let c = match h {
            Head::Tensor => 0.0,
            Head::SystolicArray => 10.0,
            Head::Compute => continue,
            _ => 1.0,
        };
        head_costs.insert(h.name().to_string(), c);
    }
    head_costs.insert(Operator::ReduceSum.name().to_string(), 1.0);
    head_costs.insert(Operator::ReduceMax.name().to_string(), 1.0);
    CostModel {
        head_costs,
        compute_dot_prod_factor: 1000.0,
    }
}

impl Default for CostModel {
    fn default() -> Self {
        default_cost_model()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("expected `name=value`, got `{0}`")]
    Syntax(String),
    #[error("unknown cost key `{0}`")]
    UnknownKey(String),
    #[error("cost for `{0}` must be a non-negative number")]
    BadValue(String),
}

impl CostModel {
    /// Applies one `name=value` override. `dotProd` sets the per-element
    /// dot-product factor.
    pub fn set(&mut self, spec: &str) -> Result<(), CostError> {
        let (k, v) = spec.split_once('=').ok_or_else(|| CostError::Syntax(spec.to_string()))?;
        let (k, v) = (k.trim(), v.trim());
        let v: f64 = v
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| CostError::BadValue(k.to_string()))?;
        if k == Operator::DotProd.name() {
            self.compute_dot_prod_factor = v;
        } else if let Some(slot) = self.head_costs.get_mut(k) {
            *slot = v;
        } else {
            return Err(CostError::UnknownKey(k.to_string()));
        }
        Ok(())
    }

    /// Cost of one node, excluding its children. `access_elements` is the
    /// number of access-dim elements of the node's class.
    pub fn node_cost(&self, op: &Op, access_elements: usize) -> f64 {
        match op {
            Op::Compute(Operator::DotProd) => self.compute_dot_prod_factor * access_elements as f64,
            Op::Compute(o) => self.head_costs.get(o.name()).copied().unwrap_or(0.0) * access_elements as f64,
            _ => self.head_costs.get(op.head().name()).copied().unwrap_or(0.0),
        }
    }
}

impl FromStr for CostModel {
    type Err = CostError;

    /// `default` optionally followed by comma-separated overrides.
    fn from_str(s: &str) -> Result<Self, CostError> {
        let mut cm = default_cost_model();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty() && *p != "default") {
            cm.set(part)?;
        }
        Ok(cm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub expr: Expr,
    pub total_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("class {0} has no finite-cost term")]
    NoTerm(Id),
}

#[derive(Debug, Clone)]
struct Best {
    cost: f64,
    height: usize,
    node: ENode,
}

fn better(g: &EGraph, new: &Best, old: &Best) -> bool {
    match new.cost.total_cmp(&old.cost).then(new.height.cmp(&old.height)) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => {
            let canon = |n: &ENode| g.canonicalize(n).pretty();
            canon(&new.node) < canon(&old.node)
        }
    }
}

/// Picks a cheapest term for `root`. Ties go to the lower tree height, then
/// to the lexicographically smallest pretty-printed node.
pub fn extract(g: &EGraph, root: Id, cm: &CostModel) -> Result<ExtractionResult, ExtractError> {
    let n = g.classes().map(|c| c.id.index() + 1).max().unwrap_or(0);
    let mut best: Vec<Option<Best>> = vec![None; n];
    let mut changed = true;
    while changed {
        changed = false;
        for class in g.classes() {
            let elems = class.shape.access_elements();
            for node in &class.nodes {
                let mut cost = cm.node_cost(&node.op, elems);
                let mut height = 0;
                let mut ok = true;
                for &c in &node.children {
                    match &best[g.find(c).index()] {
                        Some(b) => {
                            cost += b.cost;
                            height = height.max(b.height);
                        }
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let cand = Best {
                    cost,
                    height: height + 1,
                    node: node.clone(),
                };
                let slot = &mut best[class.id.index()];
                if slot.as_ref().is_none_or(|old| better(g, &cand, old)) {
                    *slot = Some(cand);
                    changed = true;
                }
            }
        }
    }
    let root = g.find(root);
    let total_cost = best[root.index()].as_ref().ok_or(ExtractError::NoTerm(root))?.cost;
    Ok(ExtractionResult {
        expr: build(g, &best, root),
        total_cost,
    })
}

fn build(g: &EGraph, best: &[Option<Best>], id: Id) -> Expr {
    let b = best[g.find(id).index()].as_ref().expect("children of a chosen node have terms");
    Expr::new(
        b.node.op.clone(),
        b.node.children.iter().map(|&c| build(g, best, c)).collect(),
    )
}

impl fmt::Display for ExtractionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ; cost {}", self.expr, self.total_cost)
    }
}
