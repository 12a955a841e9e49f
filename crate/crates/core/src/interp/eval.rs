use std::collections::BTreeMap;

use thiserror::Error;

use super::tensor::Tensor;
#[cfg(test)]
use super::tensor::for_each_index;
use crate::ir::{infer_op, product, AccessPatternShape, Expr, Op, Operator, ShapeEnv, ShapeError};

/// Tensor name to value.
pub type TensorEnv = BTreeMap<String, Tensor>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound tensor `{0}`")]
    Unbound(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// The shape environment a tensor environment induces.
pub fn shape_env_of(env: &TensorEnv) -> ShapeEnv {
    env.iter().map(|(k, t)| (k.clone(), t.shape().to_vec())).collect()
}

/// Evaluates `e` over concrete tensors. The result's shape is the combined
/// dims of the inferred access-pattern shape.
pub fn evaluate(e: &Expr, env: &TensorEnv) -> Result<Tensor, EvalError> {
    for name in e.tensor_names() {
        if !env.contains_key(name) {
            return Err(EvalError::Unbound(name.to_string()));
        }
    }
    let shapes = shape_env_of(env);
    let (t, _) = eval(e, env, &shapes).map_err(|mut err| {
        err.path.reverse();
        err
    })?;
    Ok(t)
}

fn eval(e: &Expr, env: &TensorEnv, shapes: &ShapeEnv) -> Result<(Tensor, AccessPatternShape), ShapeError> {
    let mut vals = Vec::with_capacity(e.children.len());
    for (i, c) in e.children.iter().enumerate() {
        match eval(c, env, shapes) {
            Ok(v) => vals.push(v),
            Err(mut err) => {
                // path is built leaf-first here and reversed once at the top
                err.path.push((e.head(), Some(i)));
                return Err(err);
            }
        }
    }
    let child_shapes: Vec<&AccessPatternShape> = vals.iter().map(|(_, s)| s).collect();
    let out_shape = infer_op(&e.op, &child_shapes, shapes).map_err(|kind| ShapeError {
        path: vec![(e.head(), None)],
        kind,
    })?;
    let s = child_shapes.first().map(|s| (*s).clone());
    let mut vals = vals.into_iter().map(|(t, _)| t);
    let x = vals.next();
    let y = vals.next();
    let t = match &e.op {
        Op::Tensor(name) => env[name].clone(),
        Op::Access(_) | Op::Squeeze(_) | Op::Flatten | Op::Reshape(_) => x.unwrap().reshaped(out_shape.dims()),
        Op::Transpose(perm) => x.unwrap().permuted(perm),
        Op::Slice { dim, lo, hi } => x.unwrap().slice_axis(*dim, *lo, *hi),
        Op::Concat(d) => x.unwrap().concat(&y.unwrap(), *d),
        Op::CartProd => cart_prod(&x.unwrap(), &y.unwrap(), &out_shape),
        Op::Pair => pair(&x.unwrap(), &y.unwrap(), &out_shape),
        Op::Windows { window, strides } => windows(&x.unwrap(), &s.unwrap(), window, strides, &out_shape),
        Op::Compute(op) => compute(*op, &x.unwrap(), &s.unwrap()),
        Op::SystolicArray { rows, cols } => systolic(&x.unwrap(), &y.unwrap(), *rows, *cols),
    };
    debug_assert_eq!(t.shape(), out_shape.dims().as_slice());
    Ok((t, out_shape))
}

fn cart_prod(a: &Tensor, b: &Tensor, out: &AccessPatternShape) -> Tensor {
    let block = product(&out.compute[1..]);
    let (na, nb) = (a.len() / block, b.len() / block);
    let mut data = Vec::with_capacity(na * nb * 2 * block);
    for i in 0..na {
        for j in 0..nb {
            data.extend_from_slice(&a.data()[i * block..(i + 1) * block]);
            data.extend_from_slice(&b.data()[j * block..(j + 1) * block]);
        }
    }
    Tensor::new(out.dims(), data).expect("cartProd size")
}

fn pair(a: &Tensor, b: &Tensor, out: &AccessPatternShape) -> Tensor {
    let block = product(&out.compute[1..]);
    let n = a.len() / block;
    let mut data = Vec::with_capacity(2 * a.len());
    for i in 0..n {
        data.extend_from_slice(&a.data()[i * block..(i + 1) * block]);
        data.extend_from_slice(&b.data()[i * block..(i + 1) * block]);
    }
    Tensor::new(out.dims(), data).expect("pair size")
}

fn windows(
    x: &Tensor,
    input: &AccessPatternShape,
    _window: &[usize],
    strides: &[usize],
    out: &AccessPatternShape,
) -> Tensor {
    let na = input.n_access();
    let k = input.compute.len();
    let mut src = vec![0; x.rank()];
    Tensor::from_fn(out.dims(), |idx| {
        // idx = [a.., p.., q..]
        src[..na].copy_from_slice(&idx[..na]);
        for j in 0..k {
            src[na + j] = strides[j] * idx[na + j] + idx[na + k + j];
        }
        x.get(&src)
    })
}

fn compute(op: Operator, x: &Tensor, input: &AccessPatternShape) -> Tensor {
    let block = product(&input.compute);
    let data = x
        .data()
        .chunks(block)
        .map(|b| match op {
            Operator::ReduceSum => b.iter().fold(0.0, |acc, v| acc + v),
            Operator::ReduceMax => b.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Operator::DotProd => {
                let t = input.compute[0];
                let s = block / t;
                let mut acc = 0.0;
                for i in 0..s {
                    let mut p = b[i];
                    for j in 1..t {
                        p *= b[j * s + i];
                    }
                    acc += p;
                }
                acc
            }
        })
        .collect();
    Tensor::new(input.access.clone(), data).expect("compute size")
}

fn systolic(a: &Tensor, w: &Tensor, rows: usize, cols: usize) -> Tensor {
    let batch = a.shape()[0];
    let mut data = Vec::with_capacity(batch * cols);
    for i in 0..batch {
        for j in 0..cols {
            let mut acc = 0.0;
            for k in 0..rows {
                acc += a.data()[i * rows + k] * w.data()[k * cols + j];
            }
            data.push(acc);
        }
    }
    Tensor::new([batch, cols], data).expect("systolic size")
}
