//! E-graph over IR constructs with a shape analysis, e-matching and an
//! equality-saturation driver.

mod pattern;
mod saturate;
mod unionfind;

use std::collections::HashMap;
use std::fmt::{self, Write};

use thiserror::Error;

use crate::ir::{infer_op, AccessPatternShape, Expr, Head, Op, ShapeEnv, ShapeErrorKind};

pub use pattern::{Binding, Build, LitPattern, Pattern, RewriteRule, Subst, Var};
pub use saturate::{saturate, IterationStats, SaturationError, SaturationLimits, SaturationReport, StopReason};
use unionfind::UnionFind;

/// E-class identifier. Only meaningful relative to the graph that issued it;
/// resolve through [`EGraph::find`] before comparing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Id(u32);

impl Id {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for Id {
    fn from(i: usize) -> Id {
        Id(u32::try_from(i).expect("e-class id overflow"))
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A construct applied to e-classes. Literals are part of the node identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ENode {
    pub op: Op,
    pub children: Vec<Id>,
}

impl ENode {
    pub fn new(op: Op, children: Vec<Id>) -> ENode {
        assert_eq!(op.arity(), children.len(), "arity mismatch for {}", op.head());
        ENode { op, children }
    }

    pub fn leaf(op: Op) -> ENode {
        ENode::new(op, vec![])
    }

    pub fn head(&self) -> Head {
        self.op.head()
    }

    /// Surface syntax with child classes written as `#id`.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        self.op.write_with(&mut out, |i, out| {
            let _ = write!(out, "{}", self.children[i]);
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EGraphError {
    #[error("node {node} rejected: {kind}")]
    Shape { node: String, kind: ShapeErrorKind },
    #[error("cannot merge e-classes of shapes {left} and {right}")]
    AnalysisMismatch {
        left: AccessPatternShape,
        right: AccessPatternShape,
    },
}

#[derive(Debug, Clone)]
pub struct EClass {
    pub id: Id,
    pub nodes: Vec<ENode>,
    pub shape: AccessPatternShape,
    parents: Vec<(ENode, Id)>,
}

impl EClass {
    pub fn iter(&self) -> impl Iterator<Item = &ENode> {
        self.nodes.iter()
    }

    pub fn contains_head(&self, head: Head) -> bool {
        self.nodes.iter().any(|n| n.head() == head)
    }
}

#[derive(Debug, Clone)]
pub struct EGraph {
    env: ShapeEnv,
    uf: UnionFind,
    memo: HashMap<ENode, Id>,
    classes: Vec<Option<EClass>>,
    pending: Vec<Id>,
    unions: usize,
}

impl EGraph {
    pub fn new(env: ShapeEnv) -> EGraph {
        EGraph {
            env,
            uf: UnionFind::default(),
            memo: HashMap::new(),
            classes: Vec::new(),
            pending: Vec::new(),
            unions: 0,
        }
    }

    pub fn env(&self) -> &ShapeEnv {
        &self.env
    }

    pub fn find(&self, id: Id) -> Id {
        self.uf.find(id)
    }

    pub fn class(&self, id: Id) -> &EClass {
        let id = self.find(id);
        self.classes[id.index()].as_ref().expect("canonical class exists")
    }

    pub fn shape(&self, id: Id) -> &AccessPatternShape {
        &self.class(id).shape
    }

    /// Canonical classes in id order.
    pub fn classes(&self) -> impl Iterator<Item = &EClass> {
        self.classes.iter().flatten()
    }

    pub fn class_count(&self) -> usize {
        self.classes().count()
    }

    /// Distinct hashconsed nodes. Exact after [`EGraph::rebuild`].
    pub fn node_count(&self) -> usize {
        self.memo.len()
    }

    /// Number of effective unions performed so far.
    pub fn union_count(&self) -> usize {
        self.unions
    }

    pub fn canonicalize(&self, node: &ENode) -> ENode {
        ENode {
            op: node.op.clone(),
            children: node.children.iter().map(|&c| self.find(c)).collect(),
        }
    }

    pub fn lookup(&self, node: &ENode) -> Option<Id> {
        self.memo.get(&self.canonicalize(node)).map(|&id| self.find(id))
    }

    /// Shape the node would have, without inserting it.
    pub fn node_shape(&self, node: &ENode) -> Result<AccessPatternShape, EGraphError> {
        let shapes: Vec<&AccessPatternShape> = node.children.iter().map(|&c| self.shape(c)).collect();
        self.infer(&node.op, &shapes)
    }

    fn infer(&self, op: &Op, shapes: &[&AccessPatternShape]) -> Result<AccessPatternShape, EGraphError> {
        infer_op(op, shapes, &self.env).map_err(|kind| {
            let mut node = String::new();
            op.write_with(&mut node, |_, out| out.push('_'));
            EGraphError::Shape { node, kind }
        })
    }

    /// Inserts a node, returning the class that holds it. A node whose shape
    /// cannot be inferred is rejected and the graph is left unchanged.
    pub fn add(&mut self, node: ENode) -> Result<Id, EGraphError> {
        let node = self.canonicalize(&node);
        if let Some(&id) = self.memo.get(&node) {
            return Ok(self.find(id));
        }
        let shape = self.node_shape(&node)?;
        let id = self.uf.make_set();
        debug_assert_eq!(id.index(), self.classes.len());
        for &c in &node.children {
            let c = self.find(c);
            self.classes[c.index()]
                .as_mut()
                .unwrap()
                .parents
                .push((node.clone(), id));
        }
        self.memo.insert(node.clone(), id);
        self.classes.push(Some(EClass {
            id,
            nodes: vec![node],
            shape,
            parents: Vec::new(),
        }));
        Ok(id)
    }

    pub fn add_expr(&mut self, e: &Expr) -> Result<Id, EGraphError> {
        let children = e
            .children
            .iter()
            .map(|c| self.add_expr(c))
            .collect::<Result<Vec<_>, _>>()?;
        self.add(ENode::new(e.op.clone(), children))
    }

    /// Shape of a build tree, checked without touching the graph.
    pub fn build_shape(&self, b: &Build) -> Result<AccessPatternShape, EGraphError> {
        match b {
            Build::Class(id) => Ok(self.shape(*id).clone()),
            Build::Node(op, children) => {
                let shapes = children
                    .iter()
                    .map(|c| self.build_shape(c))
                    .collect::<Result<Vec<_>, _>>()?;
                let refs: Vec<&AccessPatternShape> = shapes.iter().collect();
                self.infer(op, &refs)
            }
        }
    }

    /// Adds every node of a build tree. The whole tree is shape-checked first,
    /// so a failure leaves the graph unchanged.
    pub fn add_build(&mut self, b: &Build) -> Result<Id, EGraphError> {
        self.build_shape(b)?;
        self.add_build_unchecked(b)
    }

    fn add_build_unchecked(&mut self, b: &Build) -> Result<Id, EGraphError> {
        match b {
            Build::Class(id) => Ok(self.find(*id)),
            Build::Node(op, children) => {
                let ids = children
                    .iter()
                    .map(|c| self.add_build_unchecked(c))
                    .collect::<Result<Vec<_>, _>>()?;
                self.add(ENode::new(op.clone(), ids))
            }
        }
    }

    /// Merges two classes. Their shapes must agree; a mismatch means some
    /// rewrite changed the type of a term and is reported as an error.
    pub fn union(&mut self, a: Id, b: Id) -> Result<Id, EGraphError> {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return Ok(a);
        }
        let (sa, sb) = (&self.class(a).shape, &self.class(b).shape);
        if sa != sb {
            return Err(EGraphError::AnalysisMismatch {
                left: sa.clone(),
                right: sb.clone(),
            });
        }
        let size = |id: Id| {
            let c = self.class(id);
            c.nodes.len() + c.parents.len()
        };
        // keep the larger class as root; ties go to the older id
        let (root, other) = if size(b) > size(a) { (b, a) } else { (a, b) };
        self.uf.union(root, other);
        let merged = self.classes[other.index()].take().unwrap();
        let r = self.classes[root.index()].as_mut().unwrap();
        r.nodes.extend(merged.nodes);
        r.parents.extend(merged.parents);
        self.pending.push(root);
        self.unions += 1;
        Ok(root)
    }

    /// Restores the congruence and hashcons invariants after unions.
    pub fn rebuild(&mut self) -> Result<(), EGraphError> {
        while !self.pending.is_empty() {
            let mut todo = std::mem::take(&mut self.pending);
            todo.iter_mut().for_each(|id| *id = self.find(*id));
            todo.sort_unstable();
            todo.dedup();
            for id in todo {
                self.repair(id)?;
            }
        }
        // a node reached through two merged children leaves a stale key
        // behind after the first repair; drop those
        let uf = &self.uf;
        self.memo.retain(|k, _| k.children.iter().all(|&c| uf.find(c) == c));
        for i in 0..self.classes.len() {
            let Some(mut class) = self.classes[i].take() else { continue };
            for n in class.nodes.iter_mut() {
                *n = self.canonicalize(n);
            }
            class.nodes.sort_unstable();
            class.nodes.dedup();
            self.classes[i] = Some(class);
        }
        Ok(())
    }

    fn repair(&mut self, id: Id) -> Result<(), EGraphError> {
        let id = self.find(id);
        let parents = match self.classes[id.index()].as_mut() {
            Some(c) => std::mem::take(&mut c.parents),
            None => return Ok(()),
        };
        for (node, _) in &parents {
            self.memo.remove(node);
        }
        let mut repaired: Vec<(ENode, Id)> = Vec::with_capacity(parents.len());
        for (node, pid) in parents {
            let node = self.canonicalize(&node);
            let pid = self.find(pid);
            let pid = match self.memo.insert(node.clone(), pid) {
                Some(old) => self.union(old, pid)?,
                None => pid,
            };
            repaired.push((node, pid));
        }
        repaired.sort_unstable();
        repaired.dedup_by(|a, b| a.0 == b.0);
        let id = self.find(id);
        let class = self.classes[id.index()].as_mut().unwrap();
        class.parents.extend(repaired);
        Ok(())
    }

    /// Verifies hashcons uniqueness, congruence and per-class shape
    /// consistency. Meant for tests; call after [`EGraph::rebuild`].
    pub fn check_invariants(&self) -> Result<(), String> {
        if !self.pending.is_empty() {
            return Err("pending unions; rebuild first".into());
        }
        let mut seen: HashMap<ENode, Id> = HashMap::new();
        for class in self.classes() {
            if self.find(class.id) != class.id {
                return Err(format!("class {} is not canonical", class.id));
            }
            for node in &class.nodes {
                let canon = self.canonicalize(node);
                if &canon != node {
                    return Err(format!("node {} in {} is not canonical", node.pretty(), class.id));
                }
                if let Some(other) = seen.insert(canon.clone(), class.id) {
                    if other != class.id {
                        return Err(format!("node {} in both {} and {}", node.pretty(), other, class.id));
                    }
                }
                match self.memo.get(&canon) {
                    Some(&m) if self.find(m) == class.id => {}
                    _ => return Err(format!("memo entry for {} does not point at {}", node.pretty(), class.id)),
                }
                match self.node_shape(node) {
                    Ok(s) if s == class.shape => {}
                    _ => return Err(format!("node {} disagrees with shape of {}", node.pretty(), class.id)),
                }
            }
        }
        if seen.len() != self.memo.len() {
            return Err(format!("memo holds {} nodes, classes hold {}", self.memo.len(), seen.len()));
        }
        Ok(())
    }

    /// One line per class: `id : shape : node*`. For debugging only.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for c in self.classes() {
            let nodes: Vec<String> = c.nodes.iter().map(ENode::pretty).collect();
            let _ = writeln!(out, "{} : {} : {}", c.id, c.shape, nodes.join(" "));
        }
        out
    }
}
