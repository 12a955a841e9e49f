//! Direct index-formula oracles, kept apart from the library's own.

use apir::interp::Tensor;

/// `out[i, j] = sum_k p[i, k] * q[k, j]`
pub fn matmul(p: &Tensor, q: &Tensor) -> Tensor {
    let (m, n, o) = (p.shape()[0], p.shape()[1], q.shape()[1]);
    assert_eq!(q.shape()[0], n);
    Tensor::from_fn([m, o], |ix| (0..n).map(|k| p.get(&[ix[0], k]) * q.get(&[k, ix[1]])).sum())
}

/// NCHW activations, OCHW weights, no padding.
pub fn conv2d(a: &Tensor, w: &Tensor, sh: usize, sw: usize) -> Tensor {
    let &[n, c, h, wd] = a.shape() else { panic!("rank") };
    let &[o, c2, kh, kw] = w.shape() else { panic!("rank") };
    assert_eq!(c, c2);
    let (oh, ow) = ((h - kh) / sh + 1, (wd - kw) / sw + 1);
    Tensor::from_fn([n, o, oh, ow], |ix| {
        let mut acc = 0.0;
        for ci in 0..c {
            for y in 0..kh {
                for x in 0..kw {
                    acc += a.get(&[ix[0], ci, ix[2] * sh + y, ix[3] * sw + x]) * w.get(&[ix[1], ci, y, x]);
                }
            }
        }
        acc
    })
}

/// Max over each `kh x kw` window of every channel.
pub fn maxpool(a: &Tensor, kh: usize, kw: usize, sh: usize, sw: usize) -> Tensor {
    let &[n, c, h, wd] = a.shape() else { panic!("rank") };
    let (oh, ow) = ((h - kh) / sh + 1, (wd - kw) / sw + 1);
    Tensor::from_fn([n, c, oh, ow], |ix| {
        let mut m = f64::NEG_INFINITY;
        for y in 0..kh {
            for x in 0..kw {
                m = m.max(a.get(&[ix[0], ix[1], ix[2] * sh + y, ix[3] * sw + x]));
            }
        }
        m
    })
}
