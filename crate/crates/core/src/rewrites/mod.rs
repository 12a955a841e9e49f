//! The accelerator-mapping rule library.

mod blocking;
mod cleanup;
mod im2col;
mod systolic;

use std::fmt;
use std::str::FromStr;

pub use crate::egraph::{Binding, Build, LitPattern, Pattern, RewriteRule, Subst};
pub use blocking::rules_blocking;
pub use cleanup::rules_cleanup;
pub use im2col::rules_im2col;
pub use systolic::{rule_systolic_array, rule_systolic_array_batched};

use crate::egraph::{EGraph, Id};
use crate::ir::AccessPatternShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleSetName {
    Systolic,
    Im2col,
    Blocking,
    Cleanup,
}

impl RuleSetName {
    pub const ALL: [RuleSetName; 4] = [
        RuleSetName::Systolic,
        RuleSetName::Im2col,
        RuleSetName::Blocking,
        RuleSetName::Cleanup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleSetName::Systolic => "systolic",
            RuleSetName::Im2col => "im2col",
            RuleSetName::Blocking => "blocking",
            RuleSetName::Cleanup => "cleanup",
        }
    }
}

impl fmt::Display for RuleSetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleSetName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        RuleSetName::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown rule set `{s}` (expected systolic, im2col, blocking or cleanup)"))
    }
}

/// Parameters shared by the rule sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleParams {
    pub array_rows: usize,
    pub array_cols: usize,
    /// Largest batch the systolic rule accepts. `None` means unbounded,
    /// except that [`select_rules`] substitutes the block size when the
    /// blocking set is selected.
    pub array_batch: Option<usize>,
    pub block_size: usize,
}

impl Default for RuleParams {
    fn default() -> Self {
        RuleParams {
            array_rows: 16,
            array_cols: 16,
            array_batch: None,
            block_size: 16,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RuleSet {
    pub name: RuleSetName,
    pub rules: Vec<RewriteRule>,
}

pub fn rule_set(name: RuleSetName, params: &RuleParams) -> RuleSet {
    match name {
        RuleSetName::Systolic => RuleSet {
            name,
            rules: vec![rule_systolic_array_batched(
                params.array_rows,
                params.array_cols,
                params.array_batch,
            )],
        },
        RuleSetName::Im2col => rules_im2col(),
        RuleSetName::Blocking => rules_blocking(params.block_size),
        RuleSetName::Cleanup => rules_cleanup(),
    }
}

/// Rules of every named set, in the order given, duplicates dropped.
pub fn select_rules(names: &[RuleSetName], params: &RuleParams) -> Vec<RewriteRule> {
    let mut params = params.clone();
    if params.array_batch.is_none() && names.contains(&RuleSetName::Blocking) {
        params.array_batch = Some(params.block_size);
    }
    let mut seen = Vec::new();
    let mut rules = Vec::new();
    for &n in names {
        if !seen.contains(&n) {
            seen.push(n);
            rules.extend(rule_set(n, &params).rules);
        }
    }
    rules
}

pub fn parse_rule_sets(list: &str) -> Result<Vec<RuleSetName>, String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn shape_of<'g>(g: &'g EGraph, s: &Subst, var: &str) -> &'g AccessPatternShape {
    g.shape(s.class(var))
}

fn lit_shape<'s>(s: &'s Subst, var: &str) -> &'s AccessPatternShape {
    s.lit(var).as_shape().unwrap_or_else(|| panic!("{var} is not a shape literal"))
}

fn class_has(g: &EGraph, id: Id, pred: impl Fn(&crate::ir::Op) -> bool) -> bool {
    g.class(id).nodes.iter().any(|n| pred(&n.op))
}
