//! Patterns, e-matching and rewrite rules.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{EGraph, Id};
use crate::ir::parse::{check_name, parse_literal, parse_sexp, split_head};
use crate::ir::{Head, Literal, Op, ParseError, SExp, Slot};

/// Pattern variable, written `?name`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Var {
        Var(Arc::from(name.strip_prefix('?').unwrap_or(name)))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LitPattern {
    Fixed(Literal),
    Var(Var),
}

/// A term with variables in child and literal positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Var(Var),
    Node {
        head: Head,
        lits: Vec<LitPattern>,
        children: Vec<Pattern>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    Class(Id),
    Lit(Literal),
}

/// Variable bindings produced by a match.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst(Vec<(Var, Binding)>);

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn get(&self, var: &str) -> Option<&Binding> {
        let var = var.strip_prefix('?').unwrap_or(var);
        self.0.iter().find(|(v, _)| v.name() == var).map(|(_, b)| b)
    }

    /// Binds or rebinds `var`.
    pub fn insert(&mut self, var: &str, b: Binding) {
        let var = Var::new(var);
        match self.0.iter_mut().find(|(v, _)| *v == var) {
            Some(slot) => slot.1 = b,
            None => self.0.push((var, b)),
        }
    }

    pub fn with(mut self, var: &str, b: Binding) -> Subst {
        self.insert(var, b);
        self
    }

    /// Class bound to `var`. Panics if unbound or bound to a literal.
    pub fn class(&self, var: &str) -> Id {
        match self.get(var) {
            Some(Binding::Class(id)) => *id,
            other => panic!("{var} is not bound to a class: {other:?}"),
        }
    }

    /// Literal bound to `var`. Panics if unbound or bound to a class.
    pub fn lit(&self, var: &str) -> &Literal {
        match self.get(var) {
            Some(Binding::Lit(l)) => l,
            other => panic!("{var} is not bound to a literal: {other:?}"),
        }
    }

    pub fn nat(&self, var: &str) -> usize {
        self.lit(var).as_nat().unwrap_or_else(|| panic!("{var} is not a natural"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Binding)> {
        self.0.iter().map(|(v, b)| (v, b))
    }
}

/// Right-hand side term: existing classes plus new nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Build {
    Class(Id),
    Node(Op, Vec<Build>),
}

impl Build {
    pub fn node(op: Op, children: Vec<Build>) -> Build {
        assert_eq!(op.arity(), children.len(), "arity mismatch for {}", op.head());
        Build::Node(op, children)
    }
}

impl Pattern {
    pub fn parse(text: &str) -> Result<Pattern, ParseError> {
        from_sexp(&parse_sexp(text)?)
    }

    /// Variables in first-occurrence order.
    pub fn vars(&self) -> Vec<Var> {
        fn go(p: &Pattern, out: &mut Vec<Var>) {
            match p {
                Pattern::Var(v) => {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
                Pattern::Node { head, lits, children } => {
                    let (mut ci, mut li) = (0, 0);
                    for slot in head.layout() {
                        match slot {
                            Slot::Child => {
                                go(&children[ci], out);
                                ci += 1;
                            }
                            Slot::Lit(_) => {
                                if let LitPattern::Var(v) = &lits[li] {
                                    if !out.contains(v) {
                                        out.push(v.clone());
                                    }
                                }
                                li += 1;
                            }
                        }
                    }
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// All `(root class, bindings)` pairs matching this pattern, in class
    /// order.
    pub fn search(&self, g: &EGraph) -> Vec<(Id, Subst)> {
        let mut out = Vec::new();
        for class in g.classes() {
            for s in self.match_class(g, class.id, Subst::new()) {
                out.push((class.id, s));
            }
        }
        out
    }

    /// Matches rooted at one class, extending `subst`.
    pub fn match_class(&self, g: &EGraph, id: Id, subst: Subst) -> Vec<Subst> {
        let id = g.find(id);
        match self {
            Pattern::Var(v) => match subst.get(v.name()) {
                Some(Binding::Class(b)) if g.find(*b) == id => vec![subst],
                Some(_) => vec![],
                None => vec![subst.with(v.name(), Binding::Class(id))],
            },
            Pattern::Node { head, lits, children } => {
                let mut out = Vec::new();
                for node in g.class(id).nodes.iter().filter(|n| n.head() == *head) {
                    let Some(s) = bind_lits(lits, &node.op.literals(), subst.clone()) else {
                        continue;
                    };
                    let mut partial = vec![s];
                    for (cp, &cid) in children.iter().zip(&node.children) {
                        partial = partial
                            .into_iter()
                            .flat_map(|s| cp.match_class(g, cid, s))
                            .collect();
                        if partial.is_empty() {
                            break;
                        }
                    }
                    out.extend(partial);
                }
                out
            }
        }
    }

    /// Substitutes bindings. Panics on unbound variables or on literals
    /// that do not fit their construct.
    pub fn instantiate(&self, subst: &Subst) -> Build {
        match self {
            Pattern::Var(v) => Build::Class(subst.class(v.name())),
            Pattern::Node { head, lits, children } => {
                let lits: Vec<Literal> = lits
                    .iter()
                    .map(|l| match l {
                        LitPattern::Fixed(l) => l.clone(),
                        LitPattern::Var(v) => subst.lit(v.name()).clone(),
                    })
                    .collect();
                let op = Op::from_parts(*head, &lits)
                    .unwrap_or_else(|| panic!("literals {lits:?} do not fit {head}"));
                Build::node(op, children.iter().map(|c| c.instantiate(subst)).collect())
            }
        }
    }
}

fn bind_lits(pats: &[LitPattern], lits: &[Literal], mut s: Subst) -> Option<Subst> {
    for (p, l) in pats.iter().zip(lits) {
        match p {
            LitPattern::Fixed(f) if f == l => {}
            LitPattern::Fixed(_) => return None,
            LitPattern::Var(v) => match s.get(v.name()) {
                Some(Binding::Lit(b)) if b == l => {}
                Some(_) => return None,
                None => s.insert(v.name(), Binding::Lit(l.clone())),
            },
        }
    }
    Some(s)
}

fn is_var(s: &SExp) -> Option<Var> {
    match s {
        SExp::Atom(a, _) if a.len() > 1 && a.starts_with('?') => Some(Var::new(a)),
        _ => None,
    }
}

fn from_sexp(s: &SExp) -> Result<Pattern, ParseError> {
    if let Some(v) = is_var(s) {
        return Ok(Pattern::Var(v));
    }
    match s {
        SExp::Atom(name, pos) => {
            check_name(name, *pos)?;
            Ok(Pattern::Node {
                head: Head::Tensor,
                lits: vec![LitPattern::Fixed(Literal::Name(name.clone()))],
                children: vec![],
            })
        }
        SExp::List(items, pos) => {
            let (head, operands) = split_head(items, *pos)?;
            let mut lits = Vec::new();
            let mut children = Vec::new();
            for (slot, operand) in head.layout().iter().zip(operands) {
                match slot {
                    Slot::Child => children.push(from_sexp(operand)?),
                    Slot::Lit(kind) => lits.push(match is_var(operand) {
                        Some(v) => LitPattern::Var(v),
                        None => LitPattern::Fixed(parse_literal(*kind, operand)?),
                    }),
                }
            }
            Ok(Pattern::Node { head, lits, children })
        }
    }
}

impl FromStr for Pattern {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Pattern, ParseError> {
        Pattern::parse(s)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var(v) => write!(f, "{v}"),
            Pattern::Node { head: Head::Tensor, lits, .. } => match &lits[0] {
                LitPattern::Fixed(Literal::Name(n)) => f.write_str(n),
                LitPattern::Var(v) => write!(f, "{v}"),
                LitPattern::Fixed(l) => write!(f, "{l:?}"),
            },
            Pattern::Node { head, lits, children } => {
                write!(f, "({head}")?;
                let (mut ci, mut li) = (0, 0);
                for slot in head.layout() {
                    f.write_str(" ")?;
                    match slot {
                        Slot::Child => {
                            write!(f, "{}", children[ci])?;
                            ci += 1;
                        }
                        Slot::Lit(kind) => {
                            match &lits[li] {
                                LitPattern::Var(v) => write!(f, "{v}")?,
                                LitPattern::Fixed(l) => {
                                    let mut s = String::new();
                                    l.fmt_as(*kind, &mut s);
                                    f.write_str(&s)?;
                                }
                            }
                            li += 1;
                        }
                    }
                }
                f.write_str(")")
            }
        }
    }
}

pub type Condition = dyn Fn(&EGraph, Id, &Subst) -> bool + Send + Sync;
pub type Applier = dyn Fn(&EGraph, Id, &Subst) -> Vec<Build> + Send + Sync;

/// A named rewrite: a left-hand pattern, an optional side condition and a
/// builder producing zero or more right-hand terms per match.
#[derive(Clone)]
pub struct RewriteRule {
    pub name: String,
    pub lhs: Pattern,
    condition: Option<Arc<Condition>>,
    rhs: Arc<Applier>,
}

impl fmt::Debug for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RewriteRule")
            .field("name", &self.name)
            .field("lhs", &self.lhs.to_string())
            .field("conditional", &self.condition.is_some())
            .finish()
    }
}

impl RewriteRule {
    /// Panics if `lhs` does not parse; rule text is fixed at compile time.
    pub fn new(
        name: impl Into<String>,
        lhs: &str,
        rhs: impl Fn(&EGraph, Id, &Subst) -> Vec<Build> + Send + Sync + 'static,
    ) -> RewriteRule {
        let name = name.into();
        let lhs = Pattern::parse(lhs).unwrap_or_else(|e| panic!("rule {name}: bad lhs: {e}"));
        RewriteRule {
            name,
            lhs,
            condition: None,
            rhs: Arc::new(rhs),
        }
    }

    /// A rule whose right-hand side is a pattern over the left-hand side's
    /// variables.
    pub fn template(name: impl Into<String>, lhs: &str, rhs: &str) -> RewriteRule {
        let name = name.into();
        let rhs_pat = Pattern::parse(rhs).unwrap_or_else(|e| panic!("rule {name}: bad rhs: {e}"));
        let rule = RewriteRule::new(name, lhs, move |_, _, s| vec![rhs_pat.instantiate(s)]);
        let bound = rule.lhs.vars();
        for v in Pattern::parse(rhs).unwrap().vars() {
            assert!(bound.contains(&v), "rule {}: {v} unbound on the left", rule.name);
        }
        rule
    }

    pub fn with_condition(mut self, cond: impl Fn(&EGraph, Id, &Subst) -> bool + Send + Sync + 'static) -> RewriteRule {
        self.condition = Some(Arc::new(cond));
        self
    }

    pub fn search(&self, g: &EGraph) -> Vec<(Id, Subst)> {
        self.lhs.search(g)
    }

    pub fn condition_holds(&self, g: &EGraph, root: Id, s: &Subst) -> bool {
        self.condition.as_ref().is_none_or(|c| c(g, root, s))
    }

    /// Right-hand terms for one match; empty when the condition fails.
    pub fn apply(&self, g: &EGraph, root: Id, s: &Subst) -> Vec<Build> {
        if !self.condition_holds(g, root, s) {
            return vec![];
        }
        (self.rhs)(g, root, s)
    }

    /// Right-hand terms ignoring the condition. Used to show that a
    /// condition is necessary; the result may be ill-shaped.
    pub fn apply_unchecked(&self, g: &EGraph, root: Id, s: &Subst) -> Vec<Build> {
        (self.rhs)(g, root, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse, ShapeEnv};

    fn graph(text: &str, env: ShapeEnv) -> (EGraph, Id) {
        let mut g = EGraph::new(env);
        let id = g.add_expr(&parse(text).unwrap()).unwrap();
        (g, id)
    }

    #[test]
    fn parse_and_display() {
        for text in [
            "(compute dotProd (cartProd ?a0 ?a1))",
            "(concat ?a ?b ?dim)",
            "(transpose (access w 1) (list 1 0))",
            "(reshape ?x (accessShape (shape 2) (shape)))",
            "?x",
        ] {
            assert_eq!(Pattern::parse(text).unwrap().to_string(), text);
        }
        let p = Pattern::parse("(slice ?x ?d 0 ?hi)").unwrap();
        assert_eq!(p.vars().iter().map(Var::name).collect::<Vec<_>>(), ["x", "d", "hi"]);
        assert!(Pattern::parse("(access ?x)").is_err());
    }

    #[test]
    fn matches_with_literal_vars() {
        let env = ShapeEnv::new().with("a", [4, 6]);
        let (g, root) = graph("(slice (access a 1) 1 2 4)", env);
        let m = Pattern::parse("(slice ?x ?d ?lo ?hi)").unwrap().search(&g);
        assert_eq!(m.len(), 1);
        let (id, s) = &m[0];
        assert_eq!(*id, root);
        assert_eq!(s.nat("d"), 1);
        assert_eq!(s.nat("hi"), 4);
        assert!(Pattern::parse("(slice ?x 0 ?lo ?hi)").unwrap().search(&g).is_empty());
    }

    #[test]
    fn nonlinear_vars_compare_classes() {
        let env = ShapeEnv::new().with("a", [3, 3]).with("b", [3, 3]);
        let (g, _) = graph("(pair (access a 1) (access a 1))", env.clone());
        let p = Pattern::parse("(pair ?x ?x)").unwrap();
        assert_eq!(p.search(&g).len(), 1);
        let (mut g, _) = graph("(pair (access a 1) (access b 1))", env);
        assert!(p.search(&g).is_empty());
        let a = g.add_expr(&parse("(access a 1)").unwrap()).unwrap();
        let b = g.add_expr(&parse("(access b 1)").unwrap()).unwrap();
        g.union(a, b).unwrap();
        g.rebuild().unwrap();
        assert_eq!(p.search(&g).len(), 1);
    }

    #[test]
    fn instantiate_round_trip() {
        let env = ShapeEnv::new().with("a", [2, 5]);
        let (mut g, root) = graph("(access a 1)", env);
        let rule = RewriteRule::template("t", "(access ?x ?n)", "(transpose (transpose (access ?x ?n) (list 1 0)) (list 1 0))");
        let (id, s) = rule.search(&g).remove(0);
        let builds = rule.apply(&g, id, &s);
        let new = g.add_build(&builds[0]).unwrap();
        assert_eq!(g.shape(new), g.shape(root));
    }

    #[test]
    #[should_panic(expected = "unbound on the left")]
    fn template_rejects_unbound_rhs_vars() {
        RewriteRule::template("bad", "(flatten ?x)", "(pair ?x ?y)");
    }
}
