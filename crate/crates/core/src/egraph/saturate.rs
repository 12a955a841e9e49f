use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::{Build, EGraph, EGraphError, Id, RewriteRule};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturationLimits {
    pub max_iterations: usize,
    pub max_nodes: usize,
    pub timeout: Duration,
}

impl Default for SaturationLimits {
    fn default() -> Self {
        SaturationLimits {
            max_iterations: 12,
            max_nodes: 1_000_000,
            timeout: Duration::from_secs(120),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Saturated,
    IterationLimit,
    NodeLimit,
    TimeLimit,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Saturated => "saturated",
            StopReason::IterationLimit => "iteration limit",
            StopReason::NodeLimit => "node limit",
            StopReason::TimeLimit => "time limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationStats {
    /// Matches whose condition held, per rule name.
    pub applied: Vec<(String, usize)>,
    pub nodes: usize,
    pub classes: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturationReport {
    /// Iterations that changed the graph.
    pub iterations: usize,
    pub nodes: usize,
    pub classes: usize,
    pub stop_reason: StopReason,
    pub elapsed: Duration,
    pub per_iteration: Vec<IterationStats>,
}

impl fmt::Display for SaturationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stopped: {} after {} iterations, {} e-nodes, {} e-classes, {:.3}s",
            self.stop_reason,
            self.iterations,
            self.nodes,
            self.classes,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rule `{rule}`: {source}")]
pub struct SaturationError {
    pub rule: String,
    #[source]
    pub source: EGraphError,
}

/// Runs rules to a fixpoint or until a limit trips.
///
/// Each iteration first collects the right-hand terms of every rule against
/// the same graph snapshot, then adds and unions them all, then rebuilds.
/// The node limit is also checked while applying, so one iteration cannot
/// overshoot it by much.
pub fn saturate(
    g: &mut EGraph,
    rules: &[RewriteRule],
    limits: &SaturationLimits,
) -> Result<SaturationReport, SaturationError> {
    let start = Instant::now();
    let mut per_iteration = Vec::new();
    let mut iterations = 0;
    let stop_reason = loop {
        if iterations >= limits.max_iterations {
            break StopReason::IterationLimit;
        }
        if start.elapsed() > limits.timeout {
            break StopReason::TimeLimit;
        }
        if g.node_count() > limits.max_nodes {
            break StopReason::NodeLimit;
        }

        let mut pending: Vec<(usize, Id, Vec<Build>)> = Vec::new();
        let mut applied = Vec::with_capacity(rules.len());
        let mut timed_out = false;
        for (ri, rule) in rules.iter().enumerate() {
            let mut n = 0;
            for (root, subst) in rule.search(g) {
                let builds = rule.apply(g, root, &subst);
                if !builds.is_empty() {
                    n += 1;
                    pending.push((ri, root, builds));
                }
            }
            applied.push((rule.name.clone(), n));
            if start.elapsed() > limits.timeout {
                timed_out = true;
                break;
            }
        }
        if timed_out {
            break StopReason::TimeLimit;
        }

        let (nodes_before, unions_before) = (g.node_count(), g.union_count());
        let mut hit_node_limit = false;
        'apply: for (ri, root, builds) in pending {
            for b in builds {
                let label = |source| SaturationError {
                    rule: rules[ri].name.clone(),
                    source,
                };
                let id = g.add_build(&b).map_err(label)?;
                g.union(root, id).map_err(label)?;
                if g.node_count() > limits.max_nodes {
                    hit_node_limit = true;
                    break 'apply;
                }
            }
        }
        g.rebuild().map_err(|source| SaturationError {
            rule: "<rebuild>".into(),
            source,
        })?;

        let changed = g.node_count() != nodes_before || g.union_count() != unions_before;
        if !changed {
            break StopReason::Saturated;
        }
        iterations += 1;
        let stats = IterationStats {
            applied,
            nodes: g.node_count(),
            classes: g.class_count(),
            elapsed: start.elapsed(),
        };
        log::debug!("iteration {iterations}: {} nodes, {} classes", stats.nodes, stats.classes);
        per_iteration.push(stats);
        if hit_node_limit {
            break StopReason::NodeLimit;
        }
    };
    Ok(SaturationReport {
        iterations,
        nodes: g.node_count(),
        classes: g.class_count(),
        stop_reason,
        elapsed: start.elapsed(),
        per_iteration,
    })
}
