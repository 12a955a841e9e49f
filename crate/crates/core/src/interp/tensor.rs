use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::ir::product;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("tensor of shape {shape:?} needs {expected} elements, got {got}")]
pub struct LengthMismatch {
    pub shape: Vec<usize>,
    pub expected: usize,
    pub got: usize,
}

/// Dense row-major array of `f64`. A rank-0 tensor holds one element.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<f64>) -> Result<Tensor, LengthMismatch> {
        let shape = shape.into();
        let expected = product(&shape);
        if data.len() != expected || shape.contains(&0) {
            return Err(LengthMismatch {
                shape,
                expected,
                got: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Tensor {
        let shape = shape.into();
        let n = product(&shape);
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    /// Builds a tensor by evaluating `f` at every multi-index in row-major order.
    pub fn from_fn(shape: impl Into<Vec<usize>>, mut f: impl FnMut(&[usize]) -> f64) -> Tensor {
        let shape = shape.into();
        let mut data = Vec::with_capacity(product(&shape));
        for_each_index(&shape, |idx| data.push(f(idx)));
        Tensor { shape, data }
    }

    /// Entries drawn uniformly from [-1, 1].
    pub fn random(shape: impl Into<Vec<usize>>, rng: &mut impl Rng) -> Tensor {
        let shape = shape.into();
        let data = (0..product(&shape)).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    /// Same data, new shape. Panics if the element counts differ.
    pub fn reshaped(self, shape: impl Into<Vec<usize>>) -> Tensor {
        let shape = shape.into();
        assert_eq!(product(&shape), self.data.len(), "reshape changes element count");
        Tensor { shape, data: self.data }
    }

    /// Output axis `k` reads input axis `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Tensor {
        let in_strides = self.strides();
        let out_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let read: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        for_each_index(&out_shape, |idx| {
            let off: usize = idx.iter().zip(&read).map(|(i, s)| i * s).sum();
            data.push(self.data[off]);
        });
        Tensor { shape: out_shape, data }
    }

    pub fn slice_axis(&self, axis: usize, lo: usize, hi: usize) -> Tensor {
        let outer = product(&self.shape[..axis]);
        let inner = product(&self.shape[axis + 1..]);
        let extent = self.shape[axis];
        let mut data = Vec::with_capacity(outer * (hi - lo) * inner);
        for o in 0..outer {
            let base = o * extent * inner;
            data.extend_from_slice(&self.data[base + lo * inner..base + hi * inner]);
        }
        let mut shape = self.shape.clone();
        shape[axis] = hi - lo;
        Tensor { shape, data }
    }

    /// Concatenation along `axis`; all other extents must agree.
    pub fn concat(&self, other: &Tensor, axis: usize) -> Tensor {
        let outer = product(&self.shape[..axis]);
        let inner = product(&self.shape[axis + 1..]);
        let (ea, eb) = (self.shape[axis] * inner, other.shape[axis] * inner);
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for o in 0..outer {
            data.extend_from_slice(&self.data[o * ea..(o + 1) * ea]);
            data.extend_from_slice(&other.data[o * eb..(o + 1) * eb]);
        }
        let mut shape = self.shape.clone();
        shape[axis] += other.shape[axis];
        Tensor { shape, data }
    }
}

impl fmt::Display for Tensor {
    /// The text tensor format: rank, dims, then one row of the last axis per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.shape.len())?;
        let dims: Vec<String> = self.shape.iter().map(ToString::to_string).collect();
        writeln!(f, "{}", dims.join(" "))?;
        let row = self.shape.last().copied().unwrap_or(1);
        for chunk in self.data.chunks(row) {
            let vals: Vec<String> = chunk.iter().map(|v| format!("{v:?}")).collect();
            writeln!(f, "{}", vals.join(" "))?;
        }
        Ok(())
    }
}

pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Calls `f` with every multi-index of `shape` in row-major order. A rank-0
/// shape yields the single empty index.
pub fn for_each_index(shape: &[usize], mut f: impl FnMut(&[usize])) {
    if shape.contains(&0) {
        return;
    }
    let mut idx = vec![0; shape.len()];
    loop {
        f(&idx);
        let mut k = shape.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < shape[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// `|a - b| <= max(abs, rel * max(|a|, |b|))`
pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    if a == b {
        return true;
    }
    let diff = (a - b).abs();
    diff <= abs.max(rel * a.abs().max(b.abs()))
}

/// Shapes equal and every element [`close`].
pub fn all_close(a: &Tensor, b: &Tensor, rel: f64, abs: f64) -> bool {
    a.shape == b.shape && a.data.iter().zip(&b.data).all(|(&x, &y)| close(x, y, rel, abs))
}

/// Largest elementwise absolute difference; infinite on shape mismatch.
pub fn max_abs_diff(a: &Tensor, b: &Tensor) -> f64 {
    if a.shape != b.shape {
        return f64::INFINITY;
    }
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
