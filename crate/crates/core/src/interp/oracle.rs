//! Brute-force kernel definitions, written as plain nested loops and kept
//! independent of the evaluator.

use thiserror::Error;

use super::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("expected a rank-{expected} {what}, got shape {got:?}")]
    Rank {
        what: &'static str,
        expected: usize,
        got: Vec<usize>,
    },
    #[error("inner dimensions differ: {0} vs {1}")]
    InnerMismatch(usize, usize),
    #[error("window {window:?} does not fit input {input:?}")]
    WindowTooLarge { window: Vec<usize>, input: Vec<usize> },
}

fn rank(t: &Tensor, what: &'static str, expected: usize) -> Result<(), OracleError> {
    if t.rank() != expected {
        return Err(OracleError::Rank {
            what,
            expected,
            got: t.shape().to_vec(),
        });
    }
    Ok(())
}

/// `R[i][j] = sum_k P[i][k] * Q[k][j]`
pub fn oracle_matmul(p: &Tensor, q: &Tensor) -> Result<Tensor, OracleError> {
    rank(p, "matrix", 2)?;
    rank(q, "matrix", 2)?;
    let (m, n) = (p.shape()[0], p.shape()[1]);
    let (n2, o) = (q.shape()[0], q.shape()[1]);
    if n != n2 {
        return Err(OracleError::InnerMismatch(n, n2));
    }
    let mut out = vec![0.0; m * o];
    for i in 0..m {
        for j in 0..o {
            let mut acc = 0.0;
            for k in 0..n {
                acc += p.get(&[i, k]) * q.get(&[k, j]);
            }
            out[i * o + j] = acc;
        }
    }
    Ok(Tensor::new([m, o], out).unwrap())
}

/// NCHW activations, OCHW weights, NOHW output.
pub fn oracle_conv2d(a: &Tensor, w: &Tensor, strides: (usize, usize)) -> Result<Tensor, OracleError> {
    rank(a, "activation tensor", 4)?;
    rank(w, "weight tensor", 4)?;
    let &[n, c, h, wd] = a.shape() else { unreachable!() };
    let &[o, c2, kh, kw] = w.shape() else { unreachable!() };
    if c != c2 {
        return Err(OracleError::InnerMismatch(c, c2));
    }
    if kh > h || kw > wd {
        return Err(OracleError::WindowTooLarge {
            window: vec![kh, kw],
            input: vec![h, wd],
        });
    }
    let (sh, sw) = strides;
    let oh = (h - kh) / sh + 1;
    let ow = (wd - kw) / sw + 1;
    let mut out = Vec::with_capacity(n * o * oh * ow);
    for b in 0..n {
        for f in 0..o {
            for x in 0..oh {
                for y in 0..ow {
                    let mut acc = 0.0;
                    for ch in 0..c {
                        for dx in 0..kh {
                            for dy in 0..kw {
                                acc += a.get(&[b, ch, sh * x + dx, sw * y + dy]) * w.get(&[f, ch, dx, dy]);
                            }
                        }
                    }
                    out.push(acc);
                }
            }
        }
    }
    Ok(Tensor::new([n, o, oh, ow], out).unwrap())
}

pub fn oracle_maxpool(
    a: &Tensor,
    window: (usize, usize),
    strides: (usize, usize),
) -> Result<Tensor, OracleError> {
    rank(a, "activation tensor", 4)?;
    let &[n, c, h, wd] = a.shape() else { unreachable!() };
    let (kh, kw) = window;
    if kh > h || kw > wd {
        return Err(OracleError::WindowTooLarge {
            window: vec![kh, kw],
            input: vec![h, wd],
        });
    }
    let (sh, sw) = strides;
    let oh = (h - kh) / sh + 1;
    let ow = (wd - kw) / sw + 1;
    let mut out = Vec::with_capacity(n * c * oh * ow);
    for b in 0..n {
        for ch in 0..c {
            for x in 0..oh {
                for y in 0..ow {
                    let mut m = f64::NEG_INFINITY;
                    for dx in 0..kh {
                        for dy in 0..kw {
                            m = m.max(a.get(&[b, ch, sh * x + dx, sw * y + dy]));
                        }
                    }
                    out.push(m);
                }
            }
        }
    }
    Ok(Tensor::new([n, c, oh, ow], out).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(shape: &[usize], v: &[f64]) -> Tensor {
        Tensor::new(shape, v.to_vec()).unwrap()
    }

    #[test]
    fn matmul_identity_and_small() {
        let id = t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        let q = t(&[2, 2], &[3.0, -1.0, 0.5, 7.0]);
        assert_eq!(oracle_matmul(&id, &q).unwrap(), q);
        let p = t(&[1, 3], &[1.0, 2.0, 3.0]);
        let q = t(&[3, 1], &[4.0, 5.0, 6.0]);
        assert_eq!(oracle_matmul(&p, &q).unwrap(), t(&[1, 1], &[32.0]));
        assert_eq!(oracle_matmul(&p, &p), Err(OracleError::InnerMismatch(3, 1)));
    }

    #[test]
    fn conv_degenerate_kernel_is_strided_copy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Tensor::random([2, 1, 5, 4], &mut rng);
        let w = t(&[1, 1, 1, 1], &[1.0]);
        let out = oracle_conv2d(&a, &w, (2, 1)).unwrap();
        assert_eq!(out.shape(), &[2, 1, 3, 4]);
        for b in 0..2 {
            for x in 0..3 {
                for y in 0..4 {
                    assert_eq!(out.get(&[b, 0, x, y]), a.get(&[b, 0, 2 * x, y]));
                }
            }
        }
    }

    #[test]
    fn conv_of_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Tensor::zeros([1, 2, 5, 5]);
        let w = Tensor::random([3, 2, 3, 3], &mut rng);
        let out = oracle_conv2d(&a, &w, (1, 1)).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
        assert!(oracle_conv2d(&a, &Tensor::zeros([3, 2, 6, 1]), (1, 1)).is_err());
    }

    #[test]
    fn maxpool_identity_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Tensor::random([1, 2, 4, 4], &mut rng);
        assert_eq!(oracle_maxpool(&a, (1, 1), (1, 1)).unwrap(), a);
        let c = Tensor::from_fn([1, 1, 5, 5], |_| 0.25);
        let out = oracle_maxpool(&c, (2, 3), (1, 2)).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.25));
        assert!(oracle_maxpool(&a, (5, 1), (1, 1)).is_err());
    }
}
