//! The access-pattern IR: shapes, constructs, surface syntax and shape
//! inference.

mod env;
pub(crate) mod parse;
mod shape;

use std::fmt;
use std::str::FromStr;

pub use env::{parse_shape_env, ShapeEnv};
pub use parse::{parse, parse_sexp, ParseError, SExp};
pub use shape::{infer_op, infer_shape, ShapeError, ShapeErrorKind};

/// Product of a dimension tuple; the empty product is 1.
pub fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// The type of every IR expression: a pair of dimension tuples. The access
/// dimensions are iterated over, the compute dimensions are what an operator
/// consumes at each access position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct AccessPatternShape {
    pub access: Vec<usize>,
    pub compute: Vec<usize>,
}

impl AccessPatternShape {
    pub fn new(access: impl Into<Vec<usize>>, compute: impl Into<Vec<usize>>) -> Self {
        AccessPatternShape {
            access: access.into(),
            compute: compute.into(),
        }
    }

    /// Splits a combined dimension list so that the first `n` dims are access dims.
    pub fn split(dims: &[usize], n: usize) -> Self {
        let (a, c) = dims.split_at(n);
        AccessPatternShape::new(a, c)
    }

    /// All dims, access first.
    pub fn dims(&self) -> Vec<usize> {
        let mut v = self.access.clone();
        v.extend_from_slice(&self.compute);
        v
    }

    pub fn rank(&self) -> usize {
        self.access.len() + self.compute.len()
    }

    /// Number of access dims, i.e. the split point in the combined list.
    pub fn n_access(&self) -> usize {
        self.access.len()
    }

    pub fn dim(&self, d: usize) -> Option<usize> {
        if d < self.access.len() {
            Some(self.access[d])
        } else {
            self.compute.get(d - self.access.len()).copied()
        }
    }

    pub fn is_access_dim(&self, d: usize) -> bool {
        d < self.access.len()
    }

    pub fn access_elements(&self) -> usize {
        product(&self.access)
    }
}

fn fmt_tuple(f: &mut fmt::Formatter<'_>, dims: &[usize]) -> fmt::Result {
    write!(f, "(")?;
    for (i, d) in dims.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{d}")?;
    }
    write!(f, ")")
}

impl fmt::Display for AccessPatternShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        fmt_tuple(f, &self.access)?;
        write!(f, ", ")?;
        fmt_tuple(f, &self.compute)?;
        write!(f, ")")
    }
}

/// Arithmetic performed by `compute` over the compute dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operator {
    DotProd,
    ReduceSum,
    ReduceMax,
}

impl Operator {
    pub const ALL: [Operator; 3] = [Operator::DotProd, Operator::ReduceSum, Operator::ReduceMax];

    pub fn name(self) -> &'static str {
        match self {
            Operator::DotProd => "dotProd",
            Operator::ReduceSum => "reduceSum",
            Operator::ReduceMax => "reduceMax",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operator {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Operator::ALL.into_iter().find(|o| o.name() == s).ok_or(())
    }
}

/// Construct tag without literals or children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    Tensor,
    Access,
    Transpose,
    CartProd,
    Windows,
    Slice,
    Squeeze,
    Flatten,
    Reshape,
    Pair,
    Concat,
    Compute,
    SystolicArray,
}

/// One slot of a construct's surface syntax.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Child,
    Lit(LitKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LitKind {
    Nat,
    /// `(list 1 0)`
    Perm,
    /// `(shape 3 3)`
    Dims,
    /// `(accessShape (shape ..) (shape ..))`
    ApShape,
    Operator,
}

impl Head {
    pub const ALL: [Head; 13] = [
        Head::Tensor,
        Head::Access,
        Head::Transpose,
        Head::CartProd,
        Head::Windows,
        Head::Slice,
        Head::Squeeze,
        Head::Flatten,
        Head::Reshape,
        Head::Pair,
        Head::Concat,
        Head::Compute,
        Head::SystolicArray,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Head::Tensor => "tensor",
            Head::Access => "access",
            Head::Transpose => "transpose",
            Head::CartProd => "cartProd",
            Head::Windows => "windows",
            Head::Slice => "slice",
            Head::Squeeze => "squeeze",
            Head::Flatten => "flatten",
            Head::Reshape => "reshape",
            Head::Pair => "pair",
            Head::Concat => "concat",
            Head::Compute => "compute",
            Head::SystolicArray => "systolicArray",
        }
    }

    pub fn from_name(s: &str) -> Option<Head> {
        Head::ALL
            .into_iter()
            .filter(|h| *h != Head::Tensor)
            .find(|h| h.name() == s)
    }

    pub(crate) fn layout(self) -> &'static [Slot] {
        use LitKind::*;
        use Slot::*;
        match self {
            Head::Tensor => &[],
            Head::Access => &[Child, Lit(Nat)],
            Head::Transpose => &[Child, Lit(Perm)],
            Head::CartProd => &[Child, Child],
            Head::Windows => &[Child, Lit(Dims), Lit(Dims)],
            Head::Slice => &[Child, Lit(Nat), Lit(Nat), Lit(Nat)],
            Head::Squeeze => &[Child, Lit(Nat)],
            Head::Flatten => &[Child],
            Head::Reshape => &[Child, Lit(ApShape)],
            Head::Pair => &[Child, Child],
            Head::Concat => &[Child, Child, Lit(Nat)],
            Head::Compute => &[Lit(Operator), Child],
            Head::SystolicArray => &[Lit(Nat), Lit(Nat), Child, Child],
        }
    }

    pub fn arity(self) -> usize {
        self.layout().iter().filter(|s| **s == Slot::Child).count()
    }

    /// Shape-manipulating constructs that perform no arithmetic.
    pub fn is_transformer(self) -> bool {
        !matches!(self, Head::Tensor | Head::Compute | Head::SystolicArray)
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A literal embedded in a construct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Name(String),
    Nat(usize),
    List(Vec<usize>),
    Shape(AccessPatternShape),
    Operator(Operator),
}

impl Literal {
    pub fn as_nat(&self) -> Option<usize> {
        match self {
            Literal::Nat(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[usize]> {
        match self {
            Literal::List(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_shape(&self) -> Option<&AccessPatternShape> {
        match self {
            Literal::Shape(s) => Some(s),
            _ => None,
        }
    }

    pub(crate) fn fmt_as(&self, kind: LitKind, out: &mut String) {
        use std::fmt::Write;
        let list = |out: &mut String, tag: &str, l: &[usize]| {
            out.push('(');
            out.push_str(tag);
            for d in l {
                let _ = write!(out, " {d}");
            }
            out.push(')');
        };
        match (self, kind) {
            (Literal::Nat(n), _) => {
                let _ = write!(out, "{n}");
            }
            (Literal::List(l), LitKind::Perm) => list(out, "list", l),
            (Literal::List(l), _) => list(out, "shape", l),
            (Literal::Shape(s), _) => {
                out.push_str("(accessShape ");
                list(out, "shape", &s.access);
                out.push(' ');
                list(out, "shape", &s.compute);
                out.push(')');
            }
            (Literal::Operator(o), _) => out.push_str(o.name()),
            (Literal::Name(n), _) => out.push_str(n),
        }
    }
}

/// A construct together with its literals, but without children.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Tensor(String),
    Access(usize),
    Transpose(Vec<usize>),
    CartProd,
    Windows { window: Vec<usize>, strides: Vec<usize> },
    Slice { dim: usize, lo: usize, hi: usize },
    Squeeze(usize),
    Flatten,
    Reshape(AccessPatternShape),
    Pair,
    Concat(usize),
    Compute(Operator),
    SystolicArray { rows: usize, cols: usize },
}

impl Op {
    pub fn head(&self) -> Head {
        match self {
            Op::Tensor(_) => Head::Tensor,
            Op::Access(_) => Head::Access,
            Op::Transpose(_) => Head::Transpose,
            Op::CartProd => Head::CartProd,
            Op::Windows { .. } => Head::Windows,
            Op::Slice { .. } => Head::Slice,
            Op::Squeeze(_) => Head::Squeeze,
            Op::Flatten => Head::Flatten,
            Op::Reshape(_) => Head::Reshape,
            Op::Pair => Head::Pair,
            Op::Concat(_) => Head::Concat,
            Op::Compute(_) => Head::Compute,
            Op::SystolicArray { .. } => Head::SystolicArray,
        }
    }

    pub fn arity(&self) -> usize {
        self.head().arity()
    }

    /// Literals in surface-syntax order.
    pub fn literals(&self) -> Vec<Literal> {
        use Literal as L;
        match self {
            Op::Tensor(n) => vec![L::Name(n.clone())],
            Op::Access(n) => vec![L::Nat(*n)],
            Op::Transpose(p) => vec![L::List(p.clone())],
            Op::Windows { window, strides } => {
                vec![L::List(window.clone()), L::List(strides.clone())]
            }
            Op::Slice { dim, lo, hi } => vec![L::Nat(*dim), L::Nat(*lo), L::Nat(*hi)],
            Op::Squeeze(d) => vec![L::Nat(*d)],
            Op::Reshape(s) => vec![L::Shape(s.clone())],
            Op::Concat(d) => vec![L::Nat(*d)],
            Op::Compute(o) => vec![L::Operator(*o)],
            Op::SystolicArray { rows, cols } => vec![L::Nat(*rows), L::Nat(*cols)],
            Op::CartProd | Op::Flatten | Op::Pair => vec![],
        }
    }

    /// Inverse of [`Op::head`] + [`Op::literals`]. Returns `None` when the
    /// literal list does not fit the head.
    pub fn from_parts(head: Head, lits: &[Literal]) -> Option<Op> {
        use Literal as L;
        Some(match (head, lits) {
            (Head::Tensor, [L::Name(n)]) => Op::Tensor(n.clone()),
            (Head::Access, [L::Nat(n)]) => Op::Access(*n),
            (Head::Transpose, [L::List(p)]) => Op::Transpose(p.clone()),
            (Head::CartProd, []) => Op::CartProd,
            (Head::Windows, [L::List(w), L::List(s)]) => Op::Windows {
                window: w.clone(),
                strides: s.clone(),
            },
            (Head::Slice, [L::Nat(d), L::Nat(l), L::Nat(h)]) => Op::Slice {
                dim: *d,
                lo: *l,
                hi: *h,
            },
            (Head::Squeeze, [L::Nat(d)]) => Op::Squeeze(*d),
            (Head::Flatten, []) => Op::Flatten,
            (Head::Reshape, [L::Shape(s)]) => Op::Reshape(s.clone()),
            (Head::Pair, []) => Op::Pair,
            (Head::Concat, [L::Nat(d)]) => Op::Concat(*d),
            (Head::Compute, [L::Operator(o)]) => Op::Compute(*o),
            (Head::SystolicArray, [L::Nat(r), L::Nat(c)]) => Op::SystolicArray { rows: *r, cols: *c },
            _ => return None,
        })
    }

    /// Writes the construct in surface syntax, using `child` to render the
    /// i-th child.
    pub(crate) fn write_with(&self, out: &mut String, mut child: impl FnMut(usize, &mut String)) {
        if let Op::Tensor(name) = self {
            out.push_str(name);
            return;
        }
        let head = self.head();
        let lits = self.literals();
        let (mut ci, mut li) = (0, 0);
        out.push('(');
        out.push_str(head.name());
        for slot in head.layout() {
            out.push(' ');
            match slot {
                Slot::Child => {
                    child(ci, out);
                    ci += 1;
                }
                Slot::Lit(kind) => {
                    lits[li].fmt_as(*kind, out);
                    li += 1;
                }
            }
        }
        out.push(')');
    }
}

/// An immutable IR term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr {
    pub op: Op,
    pub children: Vec<Expr>,
}

impl Expr {
    /// Panics if the child count does not match the construct's arity.
    pub fn new(op: Op, children: Vec<Expr>) -> Expr {
        assert_eq!(op.arity(), children.len(), "arity mismatch for {}", op.head());
        Expr { op, children }
    }

    pub fn tensor(name: impl Into<String>) -> Expr {
        Expr::new(Op::Tensor(name.into()), vec![])
    }

    pub fn access(e: Expr, n: usize) -> Expr {
        Expr::new(Op::Access(n), vec![e])
    }

    pub fn transpose(e: Expr, perm: impl Into<Vec<usize>>) -> Expr {
        Expr::new(Op::Transpose(perm.into()), vec![e])
    }

    pub fn cart_prod(a: Expr, b: Expr) -> Expr {
        Expr::new(Op::CartProd, vec![a, b])
    }

    pub fn windows(e: Expr, window: impl Into<Vec<usize>>, strides: impl Into<Vec<usize>>) -> Expr {
        Expr::new(
            Op::Windows {
                window: window.into(),
                strides: strides.into(),
            },
            vec![e],
        )
    }

    pub fn slice(e: Expr, dim: usize, lo: usize, hi: usize) -> Expr {
        Expr::new(Op::Slice { dim, lo, hi }, vec![e])
    }

    pub fn squeeze(e: Expr, dim: usize) -> Expr {
        Expr::new(Op::Squeeze(dim), vec![e])
    }

    pub fn flatten(e: Expr) -> Expr {
        Expr::new(Op::Flatten, vec![e])
    }

    pub fn reshape(e: Expr, shape: AccessPatternShape) -> Expr {
        Expr::new(Op::Reshape(shape), vec![e])
    }

    pub fn pair(a: Expr, b: Expr) -> Expr {
        Expr::new(Op::Pair, vec![a, b])
    }

    pub fn concat(a: Expr, b: Expr, dim: usize) -> Expr {
        Expr::new(Op::Concat(dim), vec![a, b])
    }

    pub fn compute(op: Operator, e: Expr) -> Expr {
        Expr::new(Op::Compute(op), vec![e])
    }

    pub fn systolic_array(rows: usize, cols: usize, activations: Expr, weights: Expr) -> Expr {
        Expr::new(Op::SystolicArray { rows, cols }, vec![activations, weights])
    }

    pub fn head(&self) -> Head {
        self.op.head()
    }

    /// Canonical single-line s-expression.
    pub fn pretty_print(&self) -> String {
        let mut out = String::new();
        self.write(&mut out);
        out
    }

    fn write(&self, out: &mut String) {
        self.op.write_with(out, |i, out| self.children[i].write(out));
    }

    /// Pre-order traversal.
    pub fn iter(&self) -> impl Iterator<Item = &Expr> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let e = stack.pop()?;
            stack.extend(e.children.iter().rev());
            Some(e)
        })
    }

    pub fn count(&self, pred: impl Fn(&Expr) -> bool) -> usize {
        self.iter().filter(|e| pred(e)).count()
    }

    pub fn tensor_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self
            .iter()
            .filter_map(|e| match &e.op {
                Op::Tensor(n) => Some(n.as_str()),
                _ => None,
            })
            .collect();
        names.sort_unstable();
        names.dedup();
        names
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty_print())
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing() {
        let t = Expr::tensor("t");
        assert_eq!(Expr::access(t.clone(), 0).pretty_print(), "(access t 0)");
        assert_eq!(
            Expr::transpose(t.clone(), [1, 0]).pretty_print(),
            "(transpose t (list 1 0))"
        );
        assert_eq!(
            Expr::windows(t.clone(), [3, 3], [1, 1]).pretty_print(),
            "(windows t (shape 3 3) (shape 1 1))"
        );
        assert_eq!(
            Expr::reshape(t.clone(), AccessPatternShape::new([4], [])).pretty_print(),
            "(reshape t (accessShape (shape 4) (shape)))"
        );
        assert_eq!(
            Expr::systolic_array(2, 3, t.clone(), t.clone()).pretty_print(),
            "(systolicArray 2 3 t t)"
        );
        assert_eq!(
            Expr::compute(Operator::ReduceMax, t).pretty_print(),
            "(compute reduceMax t)"
        );
    }

    #[test]
    fn shape_display() {
        assert_eq!(AccessPatternShape::new([16, 16], []).to_string(), "((16, 16), ())");
        assert_eq!(AccessPatternShape::new([4], [3]).to_string(), "((4), (3))");
    }

    #[test]
    fn parts_round_trip() {
        let ops = [
            Op::Tensor("x".into()),
            Op::Windows {
                window: vec![3],
                strides: vec![1],
            },
            Op::Reshape(AccessPatternShape::new([2], [3, 1])),
            Op::SystolicArray { rows: 4, cols: 2 },
            Op::Compute(Operator::DotProd),
        ];
        for op in ops {
            assert_eq!(Op::from_parts(op.head(), &op.literals()), Some(op));
        }
    }
}
