use std::fmt;

use thiserror::Error;

use super::{product, AccessPatternShape, Expr, Head, Op, Operator, ShapeEnv};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeErrorKind {
    #[error("{construct}: expected {expected}, got {got}")]
    Mismatch {
        construct: Head,
        expected: String,
        got: String,
    },
    #[error("unbound tensor `{0}`")]
    Unbound(String),
    #[error("transpose: {perm:?} is not a permutation of 0..{rank}")]
    InvalidPermutation { perm: Vec<usize>, rank: usize },
    #[error("{construct}: {msg}")]
    InvalidIndex { construct: Head, msg: String },
}

/// A shape failure together with the construct path from the root to the
/// offending node.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ShapeError {
    /// `(head, child index descended into)` from the root down; the last entry
    /// is the failing node and has no child index.
    pub path: Vec<(Head, Option<usize>)>,
    pub kind: ShapeErrorKind,
}

impl ShapeError {
    pub fn path_string(&self) -> String {
        self.path
            .iter()
            .map(|(h, i)| match i {
                Some(i) => format!("{h}[{i}]"),
                None => h.to_string(),
            })
            .collect::<Vec<_>>()
            .join(" > ")
    }
}

impl fmt::Display for ShapeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at {})", self.kind, self.path_string())
    }
}

fn mismatch(construct: Head, expected: impl fmt::Display, got: impl fmt::Display) -> ShapeErrorKind {
    ShapeErrorKind::Mismatch {
        construct,
        expected: expected.to_string(),
        got: got.to_string(),
    }
}

fn bad_index(construct: Head, msg: impl Into<String>) -> ShapeErrorKind {
    ShapeErrorKind::InvalidIndex {
        construct,
        msg: msg.into(),
    }
}

fn is_permutation(perm: &[usize], rank: usize) -> bool {
    let mut seen = vec![false; rank];
    perm.len() == rank
        && perm
            .iter()
            .all(|&p| p < rank && !std::mem::replace(&mut seen[p], true))
}

/// Shape of one construct given the shapes of its children.
pub fn infer_op(
    op: &Op,
    children: &[&AccessPatternShape],
    env: &ShapeEnv,
) -> Result<AccessPatternShape, ShapeErrorKind> {
    let head = op.head();
    debug_assert_eq!(children.len(), head.arity());
    let s = children.first().copied();
    Ok(match op {
        Op::Tensor(name) => {
            let dims = env
                .get(name)
                .ok_or_else(|| ShapeErrorKind::Unbound(name.clone()))?;
            AccessPatternShape::new([], dims)
        }
        Op::Access(n) => {
            let s = s.unwrap();
            if *n > s.rank() {
                return Err(bad_index(head, format!("cannot access {n} dims of a rank-{} pattern", s.rank())));
            }
            AccessPatternShape::split(&s.dims(), *n)
        }
        Op::Transpose(perm) => {
            let s = s.unwrap();
            if !is_permutation(perm, s.rank()) {
                return Err(ShapeErrorKind::InvalidPermutation {
                    perm: perm.clone(),
                    rank: s.rank(),
                });
            }
            let dims = s.dims();
            let permuted: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
            AccessPatternShape::split(&permuted, s.n_access())
        }
        Op::CartProd => {
            let (a, b) = (children[0], children[1]);
            if a.compute != b.compute {
                return Err(mismatch(
                    head,
                    format!("equal compute dims, left has {a}"),
                    format!("right {b}"),
                ));
            }
            let mut access = a.access.clone();
            access.extend_from_slice(&b.access);
            let mut compute = vec![2];
            compute.extend_from_slice(&a.compute);
            AccessPatternShape::new(access, compute)
        }
        Op::Windows { window, strides } => {
            let s = s.unwrap();
            if window.len() != s.compute.len() || strides.len() != s.compute.len() {
                return Err(mismatch(
                    head,
                    format!("window and strides of length {}", s.compute.len()),
                    format!("lengths {} and {}", window.len(), strides.len()),
                ));
            }
            let mut access = s.access.clone();
            for ((&b, &w), &st) in s.compute.iter().zip(window).zip(strides) {
                if w == 0 || st == 0 {
                    return Err(bad_index(head, "window and stride entries must be positive"));
                }
                if w > b {
                    return Err(mismatch(head, format!("window extent <= {b}"), w));
                }
                access.push((b - (w - 1)).div_ceil(st));
            }
            AccessPatternShape::new(access, window.clone())
        }
        Op::Slice { dim, lo, hi } => {
            let s = s.unwrap();
            let extent = s
                .dim(*dim)
                .ok_or_else(|| bad_index(head, format!("dim {dim} out of range for rank {}", s.rank())))?;
            if !(lo < hi && *hi <= extent) {
                return Err(bad_index(head, format!("bounds [{lo}, {hi}) invalid for extent {extent}")));
            }
            let mut dims = s.dims();
            dims[*dim] = hi - lo;
            AccessPatternShape::split(&dims, s.n_access())
        }
        Op::Squeeze(d) => {
            let s = s.unwrap();
            match s.dim(*d) {
                None => return Err(bad_index(head, format!("dim {d} out of range for rank {}", s.rank()))),
                Some(1) => {}
                Some(x) => return Err(mismatch(head, format!("dim {d} of extent 1"), x)),
            }
            let mut dims = s.dims();
            dims.remove(*d);
            let n = if s.is_access_dim(*d) { s.n_access() - 1 } else { s.n_access() };
            AccessPatternShape::split(&dims, n)
        }
        Op::Flatten => {
            let s = s.unwrap();
            let flat = |d: &[usize]| if d.is_empty() { vec![] } else { vec![product(d)] };
            AccessPatternShape::new(flat(&s.access), flat(&s.compute))
        }
        Op::Reshape(target) => {
            let s = s.unwrap();
            if product(&s.access) != product(&target.access) || product(&s.compute) != product(&target.compute) {
                return Err(mismatch(head, format!("a shape with the element counts of {s}"), target));
            }
            if target.dims().contains(&0) {
                return Err(bad_index(head, "dimensions must be positive"));
            }
            target.clone()
        }
        Op::Pair => {
            let (a, b) = (children[0], children[1]);
            if a != b {
                return Err(mismatch(head, a, b));
            }
            let mut compute = vec![2];
            compute.extend_from_slice(&a.compute);
            AccessPatternShape::new(a.access.clone(), compute)
        }
        Op::Concat(d) => {
            let (a, b) = (children[0], children[1]);
            if a.n_access() != b.n_access() || a.rank() != b.rank() {
                return Err(mismatch(head, a, b));
            }
            if *d >= a.rank() {
                return Err(bad_index(head, format!("dim {d} out of range for rank {}", a.rank())));
            }
            let (mut da, db) = (a.dims(), b.dims());
            for (i, (x, y)) in da.iter().zip(&db).enumerate() {
                if i != *d && x != y {
                    return Err(mismatch(head, format!("{a} except at dim {d}"), b));
                }
            }
            da[*d] += db[*d];
            AccessPatternShape::split(&da, a.n_access())
        }
        Op::Compute(operator) => {
            let s = s.unwrap();
            if *operator == Operator::DotProd {
                match s.compute.first() {
                    Some(&t) if t >= 2 => {}
                    _ => return Err(mismatch(head, "compute dims (t, ...) with t >= 2 for dotProd", s)),
                }
            }
            AccessPatternShape::new(s.access.clone(), [])
        }
        Op::SystolicArray { rows, cols } => {
            let (a, w) = (children[0], children[1]);
            if a.access.len() != 1 || a.compute != [*rows] {
                return Err(mismatch(head, format!("activations of shape ((batch), ({rows}))"), a));
            }
            if !w.access.is_empty() || w.compute != [*rows, *cols] {
                return Err(mismatch(head, format!("weights of shape ((), ({rows}, {cols}))"), w));
            }
            AccessPatternShape::new([a.access[0], *cols], [])
        }
    })
}

/// Shape of a whole expression.
pub fn infer_shape(e: &Expr, env: &ShapeEnv) -> Result<AccessPatternShape, ShapeError> {
    let mut shapes = Vec::with_capacity(e.children.len());
    for (i, c) in e.children.iter().enumerate() {
        match infer_shape(c, env) {
            Ok(s) => shapes.push(s),
            Err(mut err) => {
                err.path.insert(0, (e.head(), Some(i)));
                return Err(err);
            }
        }
    }
    let refs: Vec<&AccessPatternShape> = shapes.iter().collect();
    infer_op(&e.op, &refs, env).map_err(|kind| ShapeError {
        path: vec![(e.head(), None)],
        kind,
    })
}
