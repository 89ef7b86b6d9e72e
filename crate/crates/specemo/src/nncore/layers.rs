//! Layer kernels: 3x3 stride-1 convolution, 2x2 stride-2 max pooling,
//! ReLU, dense, flatten. Forward and backward are explicit pairs.
//!
//! Parallel loops split only across independent output slices (batch,
//! channel, or row granularity); every output element is accumulated by
//! exactly one task in a fixed order, so results are bit-identical for
//! any worker count.

use super::{shape_err, NnError, Scalar, Tensor};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Same,
    Valid,
}

impl Padding {
    fn pad(self) -> usize {
            match self {
            Padding::Same => 1,
            Padding::Valid => 0,
        }
    }
}

fn conv_dims(
    input: &[usize],
    weights: &[usize],
    bias_len: usize,
    padding: Padding,
) -> Result<(usize, usize, usize, usize, usize, usize, usize), NnError> {
    let [n, c, h, w] = *input else {
        return Err(shape_err("conv", format!("input must be NCHW, got {input:?}")));
    };
    let [o, wc, kh, kw] = *weights else {
        return Err(shape_err("conv", format!("weights must be OC33, got {weights:?}")));
    };
    if kh != 3 || kw != 3 {
        return Err(shape_err("conv", format!("kernel must be 3x3, got {kh}x{kw}")));
    }
    if wc != c {
        return Err(shape_err(
            "conv",
            format!("input has {c} channels, weights expect {wc}"),
        ));
    }
    if bias_len != o {
        return Err(shape_err(
            "conv",
            format!("bias length {bias_len} != out channels {o}"),
        ));
    }
    let pad = padding.pad();
    let (oh, ow) = (h + 2 * pad, w + 2 * pad);
    if oh < 3 || ow < 3 {
        return Err(shape_err(
            "conv",
            format!("spatial {h}x{w} too small for 3x3 {padding:?}"),
        ));
    }
    Ok((n, c, h, w, o, oh - 2, ow - 2))
}

/// Cross-correlation: out(n,o,y,x) = bias(o) + sum over (c,dy,dx) of
/// input(n,c,y+dy-pad,x+dx-pad) * weights(o,c,dy,dx), zero-padded
/// borders under `Same`.
pub fn conv_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    padding: Padding,
) -> Result<Tensor<T>, NnError> {
    let (n, c, h, w, o, oh, ow) = conv_dims(input.shape(), weights.shape(), bias.len(), padding)?;
    let pad = padding.pad() as isize;
    let mut out = Tensor::zeros(&[n, o, oh, ow]);

    let inp = input.data();
    let wts = weights.data();
    let b = bias.data();
    out.data_mut()
        .par_chunks_mut(oh * ow)
        .enumerate()
        .for_each(|(plane_idx, out_plane)| {
            let (ni, oi) = (plane_idx / o, plane_idx % o);
            out_plane.fill(b[oi]);
            for ci in 0..c {
                let in_plane = &inp[(ni * c + ci) * h * w..][..h * w];
                for dy in 0..3usize {
                    for dx in 0..3usize {
                        let wt = wts[((oi * c + ci) * 3 + dy) * 3 + dx];
                        let off_y = dy as isize - pad;
                        let off_x = dx as isize - pad;
                        let y0 = (-off_y).max(0) as usize;
                        let y1 = (h as isize - off_y).min(oh as isize) as usize;
                        let x0 = (-off_x).max(0) as usize;
                        let x1 = (w as isize - off_x).min(ow as isize) as usize;
                        for y in y0..y1 {
                            let iy = (y as isize + off_y) as usize;
                            let in_row = &in_plane[iy * w..][..w];
                            let out_row = &mut out_plane[y * ow..][..ow];
                            for x in x0..x1 {
                                let ix = (x as isize + off_x) as usize;
                                out_row[x] += wt * in_row[ix];
                            }
                        }
                    }
                }
            }
        });

    out.assert_finite("conv_forward");
    Ok(out)
}

/// Exact gradients of `conv_forward` with respect to input, weights,
/// and bias.
pub fn conv_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    input: &Tensor<T>,
    weights: &Tensor<T>,
    padding: Padding,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>), NnError> {
    let o_ch = weights.shape()[0];
    let (n, c, h, w, o, oh, ow) = conv_dims(input.shape(), weights.shape(), o_ch, padding)?;
    if grad_out.shape() != [n, o, oh, ow] {
        return Err(shape_err(
            "conv_backward",
            format!("grad_out {:?} != [{n}, {o}, {oh}, {ow}]", grad_out.shape()),
        ));
    }
    let pad = padding.pad() as isize;
    let go = grad_out.data();
    let inp = input.data();
    let wts = weights.data();

    let mut grad_input = Tensor::zeros(&[n, c, h, w]);
    grad_input
        .data_mut()
        .par_chunks_mut(h * w)
        .enumerate()
        .for_each(|(plane_idx, gi_plane)| {
            let (ni, ci) = (plane_idx / c, plane_idx % c);
            for oi in 0..o {
                let go_plane = &go[(ni * o + oi) * oh * ow..][..oh * ow];
                for dy in 0..3usize {
                    for dx in 0..3usize {
                        let wt = wts[((oi * c + ci) * 3 + dy) * 3 + dx];
                        let off_y = dy as isize - pad;
                        let off_x = dx as isize - pad;
                        let y0 = (-off_y).max(0) as usize;
                        let y1 = (h as isize - off_y).min(oh as isize) as usize;
                        let x0 = (-off_x).max(0) as usize;
                        let x1 = (w as isize - off_x).min(ow as isize) as usize;
                        for y in y0..y1 {
                            let iy = (y as isize + off_y) as usize;
                            let gi_row = &mut gi_plane[iy * w..][..w];
                            let go_row = &go_plane[y * ow..][..ow];
                            for x in x0..x1 {
                                let ix = (x as isize + off_x) as usize;
                                gi_row[ix] += wt * go_row[x];
                            }
                        }
                    }
                }
            }
        });

    let mut grad_weights = Tensor::zeros(&[o, c, 3, 3]);
    grad_weights
        .data_mut()
        .par_chunks_mut(c * 9)
        .enumerate()
        .for_each(|(oi, gw)| {
            for ci in 0..c {
                for dy in 0..3usize {
                    for dx in 0..3usize {
                        let off_y = dy as isize - pad;
                        let off_x = dx as isize - pad;
                        let y0 = (-off_y).max(0) as usize;
                        let y1 = (h as isize - off_y).min(oh as isize) as usize;
                        let x0 = (-off_x).max(0) as usize;
                        let x1 = (w as isize - off_x).min(ow as isize) as usize;
                        let mut acc = T::zero();
                        for ni in 0..n {
                            let go_plane = &go[(ni * o + oi) * oh * ow..][..oh * ow];
                            let in_plane = &inp[(ni * c + ci) * h * w..][..h * w];
                            for y in y0..y1 {
                                let iy = (y as isize + off_y) as usize;
                                let go_row = &go_plane[y * ow..][..ow];
                                let in_row = &in_plane[iy * w..][..w];
                                for x in x0..x1 {
                                    let ix = (x as isize + off_x) as usize;
                                    acc += go_row[x] * in_row[ix];
                                }
                            }
                        }
                        gw[(ci * 3 + dy) * 3 + dx] = acc;
                    }
                }
            }
        });

    let mut grad_bias = Tensor::zeros(&[o]);
    for oi in 0..o {
        let mut acc = T::zero();
        for ni in 0..n {
            for v in &go[(ni * o + oi) * oh * ow..][..oh * ow] {
                acc += *v;
            }
        }
        grad_bias.data_mut()[oi] = acc;
    }

    grad_input.assert_finite("conv_backward");
    grad_weights.assert_finite("conv_backward");
    Ok((grad_input, grad_weights, grad_bias))
}

/// 2x2 stride-2 max pooling. Ties break to the first index in row-major
/// window order. Returns the pooled tensor and the flat argmax index
/// (into the input data) per output element.
pub fn maxpool_forward<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>), NnError> {
    let [n, c, h, w] = *input.shape() else {
        return Err(shape_err("maxpool", format!("input must be NCHW, got {:?}", input.shape())));
    };
    if h % 2 != 0 || w % 2 != 0 {
        return Err(NnError::OddSpatialDim { h, w });
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(&[n, c, oh, ow]);
    let mut argmax = vec![0usize; n * c * oh * ow];
    let inp = input.data();

    out.data_mut()
        .par_chunks_mut(oh * ow)
        .zip(argmax.par_chunks_mut(oh * ow))
        .enumerate()
        .for_each(|(plane_idx, (out_plane, arg_plane))| {
            let base = plane_idx * h * w;
            for y in 0..oh {
                for x in 0..ow {
                    let mut best_idx = base + (2 * y) * w + 2 * x;
                    let mut best = inp[best_idx];
                    for (dy, dx) in [(0usize, 1usize), (1, 0), (1, 1)] {
                        let idx = base + (2 * y + dy) * w + 2 * x + dx;
                        if inp[idx] > best {
                            best = inp[idx];
                            best_idx = idx;
                        }
                    }
                    out_plane[y * ow + x] = best;
                    arg_plane[y * ow + x] = best_idx;
                }
            }
        });

    Ok((out, argmax))
}

/// Routes each output gradient to its argmax input position.
pub fn maxpool_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    argmax: &[usize],
    input_shape: &[usize],
) -> Result<Tensor<T>, NnError> {
    if grad_out.len() != argmax.len() {
        return Err(shape_err(
            "maxpool_backward",
            format!("grad_out has {} elements, argmax {}", grad_out.len(), argmax.len()),
        ));
    }
    let mut grad_input = Tensor::zeros(input_shape);
    let gi = grad_input.data_mut();
    for (g, &idx) in grad_out.data().iter().zip(argmax) {
        gi[idx] += *g;
    }
    Ok(grad_input)
}

/// Elementwise max(0, x).
pub fn relu_forward<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Subgradient 0 at exactly 0.
pub fn relu_backward<T: Scalar>(grad_out: &Tensor<T>, input: &Tensor<T>) -> Tensor<T> {
    debug_assert_eq!(grad_out.shape(), input.shape());
    let mut g = grad_out.clone();
    for (gv, &iv) in g.data_mut().iter_mut().zip(input.data()) {
        if iv <= T::zero() {
            *gv = T::zero();
        }
    }
    g
}

/// y = x W + b with x: [N, In], W: [In, Out], b: [Out].
pub fn dense_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let [n, i] = *x.shape() else {
        return Err(shape_err("dense", format!("input must be [N, In], got {:?}", x.shape())));
    };
    let [wi, o] = *w.shape() else {
        return Err(shape_err("dense", format!("weights must be [In, Out], got {:?}", w.shape())));
    };
    if wi != i || b.len() != o {
        return Err(shape_err(
            "dense",
            format!("x {:?} w {:?} b {:?}", x.shape(), w.shape(), b.shape()),
        ));
    }
    let mut y = Tensor::zeros(&[n, o]);
    let xd = x.data();
    let wd = w.data();
    let bd = b.data();
    y.data_mut()
        .par_chunks_mut(o)
        .enumerate()
        .for_each(|(ni, y_row)| {
            y_row.copy_from_slice(bd);
            let x_row = &xd[ni * i..][..i];
            for (ii, &xv) in x_row.iter().enumerate() {
                let w_row = &wd[ii * o..][..o];
                for (yv, &wv) in y_row.iter_mut().zip(w_row) {
                    *yv += xv * wv;
                }
            }
        });
    y.assert_finite("dense_forward");
    Ok(y)
}

pub fn dense_backward<T: Scalar>(
    grad_y: &Tensor<T>,
    x: &Tensor<T>,
    w: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>), NnError> {
    let [n, i] = *x.shape() else {
        return Err(shape_err("dense_backward", format!("x must be 2d, got {:?}", x.shape())));
    };
    let o = w.shape()[1];
    if grad_y.shape() != [n, o] || w.shape() != [i, o] {
        return Err(shape_err(
            "dense_backward",
            format!("grad_y {:?} x {:?} w {:?}", grad_y.shape(), x.shape(), w.shape()),
        ));
    }
    let gy = grad_y.data();
    let xd = x.data();
    let wd = w.data();

    let mut grad_x = Tensor::zeros(&[n, i]);
    grad_x
        .data_mut()
        .par_chunks_mut(i)
        .enumerate()
        .for_each(|(ni, gx_row)| {
            let gy_row = &gy[ni * o..][..o];
            for (ii, gx) in gx_row.iter_mut().enumerate() {
                let w_row = &wd[ii * o..][..o];
                let mut acc = T::zero();
                for (gv, wv) in gy_row.iter().zip(w_row) {
                    acc += *gv * *wv;
                }
                *gx = acc;
            }
        });

    let mut grad_w = Tensor::zeros(&[i, o]);
    grad_w
        .data_mut()
        .par_chunks_mut(o)
        .enumerate()
        .for_each(|(ii, gw_row)| {
            for ni in 0..n {
                let xv = xd[ni * i + ii];
                let gy_row = &gy[ni * o..][..o];
                for (gw, gv) in gw_row.iter_mut().zip(gy_row) {
                    *gw += xv * *gv;
                }
            }
        });

    let mut grad_b = Tensor::zeros(&[o]);
    let gb = grad_b.data_mut();
    for ni in 0..n {
        for (gb_v, gy_v) in gb.iter_mut().zip(&gy[ni * o..][..o]) {
            *gb_v += *gy_v;
        }
    }

    Ok((grad_x, grad_w, grad_b))
}

/// [N, ...] -> [N, product of the rest]. Data is already row-major, so
/// this is a reshape.
pub fn flatten<T: Scalar>(t: Tensor<T>) -> Result<Tensor<T>, NnError> {
    let Some((&n, rest)) = t.shape().split_first() else {
        return Err(shape_err("flatten", "rank-0 tensor".into()));
    };
    let flat: usize = rest.iter().product();
    t.reshaped(&[n, flat])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::grad_check;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn randn(shape: &[usize], seed: u64) -> Tensor<f64> {
        let mut rng = crate::seeded::rng_from_seed(seed);
        let n: usize = shape.iter().product();
        Tensor::from_vec(shape, (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()).unwrap()
    }

    #[test]
    fn identity_kernel_preserves_input() {
        let input = randn(&[2, 3, 4, 4], 1);
        let mut w = Tensor::<f64>::zeros(&[3, 3, 3, 3]);
        for c in 0..3 {
            // center tap of the matching channel
            let idx = ((c * 3 + c) * 3 + 1) * 3 + 1;
            w.data_mut()[idx] = 1.0;
        }
        let b = Tensor::zeros(&[3]);
        let out = conv_forward(&input, &w, &b, Padding::Same).unwrap();
        for (a, e) in out.data().iter().zip(input.data()) {
            assert_abs_diff_eq!(a, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn ones_kernel_counts_padded_neighborhood() {
        let input = Tensor::<f64>::filled(&[1, 1, 3, 3], 1.0);
        let w = Tensor::<f64>::filled(&[1, 1, 3, 3], 1.0);
        let b = Tensor::zeros(&[1]);
        let out = conv_forward(&input, &w, &b, Padding::Same).unwrap();
        let expect = [4.0, 6.0, 4.0, 6.0, 9.0, 6.0, 4.0, 6.0, 4.0];
        assert_eq!(out.data(), &expect);
    }

    #[test]
    fn zero_weights_yield_uniform_bias() {
        let input = randn(&[1, 2, 4, 4], 2);
        let w = Tensor::<f64>::zeros(&[3, 2, 3, 3]);
        let b = Tensor::from_vec(&[3], vec![0.7, 0.7, 0.7]).unwrap();
        let out = conv_forward(&input, &w, &b, Padding::Same).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn valid_padding_shrinks_by_two() {
        let input = randn(&[1, 1, 5, 6], 3);
        let w = randn(&[2, 1, 3, 3], 4);
        let b = Tensor::zeros(&[2]);
        let out = conv_forward(&input, &w, &b, Padding::Valid).unwrap();
        assert_eq!(out.shape(), &[1, 2, 3, 4]);
        // spot-check one element by direct summation
        let mut acc = 0.0;
        for dy in 0..3 {
            for dx in 0..3 {
                acc += input.data()[(1 + dy) * 6 + (2 + dx)] * w.data()[(1 * 3 + dy) * 3 + dx];
            }
        }
        assert_abs_diff_eq!(out.data()[1 * 3 * 4 + 1 * 4 + 2], acc, epsilon = 1e-12);
    }

    #[test]
    fn conv_shape_mismatches_are_rejected() {
        let input = randn(&[1, 2, 4, 4], 5);
        let w3ch = randn(&[1, 3, 3, 3], 6);
        let b = Tensor::zeros(&[1]);
        assert!(conv_forward(&input, &w3ch, &b, Padding::Same).is_err());
        let w5x5 = randn(&[1, 2, 5, 5], 7);
        assert!(conv_forward(&input, &w5x5, &b, Padding::Same).is_err());
    }

    #[test]
    fn conv_backward_zero_grad_gives_zeros() {
        let input = randn(&[1, 2, 4, 4], 8);
        let w = randn(&[2, 2, 3, 3], 9);
        let go = Tensor::<f64>::zeros(&[1, 2, 4, 4]);
        let (gi, gw, gb) = conv_backward(&go, &input, &w, Padding::Same).unwrap();
        assert!(gi.data().iter().all(|&v| v == 0.0));
        assert!(gw.data().iter().all(|&v| v == 0.0));
        assert!(gb.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_grad_bias_is_channel_sum() {
        let input = randn(&[2, 1, 4, 4], 10);
        let w = randn(&[2, 1, 3, 3], 11);
        let go = randn(&[2, 2, 4, 4], 12);
        let (_, _, gb) = conv_backward(&go, &input, &w, Padding::Same).unwrap();
        for o in 0..2 {
            let mut acc = 0.0;
            for n in 0..2 {
                acc += go.data()[(n * 2 + o) * 16..][..16].iter().sum::<f64>();
            }
            assert_abs_diff_eq!(gb.data()[o], acc, epsilon = 1e-12);
        }
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        for &padding in &[Padding::Same, Padding::Valid] {
            let input = randn(&[1, 2, 4, 4], 13);
            // random projection makes the loss a scalar with dense
            // dependence on every output element
            let proj_len = match padding {
                Padding::Same => 2 * 16,
                Padding::Valid => 2 * 4,
            };
            let proj = randn(&[proj_len], 14);
            let mut params = vec![randn(&[2, 2, 3, 3], 15), randn(&[2], 16)];
            let report = grad_check(
                &mut params,
                |p| {
                    let out = conv_forward(&input, &p[0], &p[1], padding).unwrap();
                    let loss: f64 = out.data().iter().zip(proj.data()).map(|(a, b)| a * b).sum();
                    (loss, 0)
                },
                |p| {
                    let go = proj.clone().reshaped(match padding {
                        Padding::Same => &[1, 2, 4, 4],
                        Padding::Valid => &[1, 2, 2, 2],
                    }).unwrap();
                    let (_, gw, gb) = conv_backward(&go, &input, &p[0], padding).unwrap();
                    vec![gw, gb]
                },
                1e-3,
                200,
                17,
            );
            assert!(
                report.max_rel_err < 1e-4,
                "{padding:?}: {}",
                report.max_rel_err
            );
        }
    }

    #[test]
    fn conv_grad_input_matches_finite_differences() {
        let w = randn(&[2, 2, 3, 3], 18);
        let b = randn(&[2], 19);
        let proj = randn(&[2 * 16], 20);
        let mut params = vec![randn(&[1, 2, 4, 4], 21)];
        let report = grad_check(
            &mut params,
            |p| {
                let out = conv_forward(&p[0], &w, &b, Padding::Same).unwrap();
                (out.data().iter().zip(proj.data()).map(|(a, c)| a * c).sum(), 0)
            },
            |p| {
                let go = proj.clone().reshaped(&[1, 2, 4, 4]).unwrap();
                let (gi, _, _) = conv_backward(&go, &p[0], &w, Padding::Same).unwrap();
                vec![gi]
            },
            1e-3,
            64,
            22,
        );
        assert!(report.max_rel_err < 1e-4, "{}", report.max_rel_err);
    }

    #[test]
    fn maxpool_takes_window_max_and_routes_gradient() {
        let input = Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (out, arg) = maxpool_forward(&input).unwrap();
        assert_eq!(out.data(), &[4.0]);
        assert_eq!(arg, vec![3]);
        let go = Tensor::from_vec(&[1, 1, 1, 1], vec![2.5]).unwrap();
        let gi = maxpool_backward(&go, &arg, &[1, 1, 2, 2]).unwrap();
        assert_eq!(gi.data(), &[0.0, 0.0, 0.0, 2.5]);
    }

    #[test]
    fn maxpool_ties_break_to_first_row_major_index() {
        let input = Tensor::from_vec(&[1, 1, 2, 2], vec![5.0, 5.0, 5.0, 5.0]).unwrap();
        let (_, arg) = maxpool_forward(&input).unwrap();
        assert_eq!(arg, vec![0]);
    }

    #[test]
    fn maxpool_rejects_odd_dims() {
        let input = Tensor::<f32>::zeros(&[1, 1, 3, 4]);
        assert!(matches!(
            maxpool_forward(&input),
            Err(NnError::OddSpatialDim { h: 3, w: 4 })
        ));
    }

    #[test]
    fn maxpool_halves_spatial_dims() {
        let input = randn(&[2, 3, 8, 6], 23);
        let (out, _) = maxpool_forward(&input).unwrap();
        assert_eq!(out.shape(), &[2, 3, 4, 3]);
    }

    #[test]
    fn relu_definition() {
        let x = Tensor::from_vec(&[3], vec![-3.0, 0.0, 2.0]).unwrap();
        let y = relu_forward(&x);
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
        let go = Tensor::from_vec(&[3], vec![1.0, 1.0, 1.0]).unwrap();
        let gi = relu_backward(&go, &x);
        assert_eq!(gi.data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn dense_identity() {
        let x = randn(&[2, 3], 24);
        let mut w = Tensor::<f64>::zeros(&[3, 3]);
        for i in 0..3 {
            w.data_mut()[i * 3 + i] = 1.0;
        }
        let b = Tensor::zeros(&[3]);
        let y = dense_forward(&x, &w, &b).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn dense_gradients_match_finite_differences() {
        let x = randn(&[3, 4], 25);
        let proj = randn(&[3 * 2], 26);
        let mut params = vec![randn(&[4, 2], 27), randn(&[2], 28)];
        let report = grad_check(
            &mut params,
            |p| {
                let y = dense_forward(&x, &p[0], &p[1]).unwrap();
                (y.data().iter().zip(proj.data()).map(|(a, b)| a * b).sum(), 0)
            },
            |p| {
                let go = proj.clone().reshaped(&[3, 2]).unwrap();
                let (_, gw, gb) = dense_backward(&go, &x, &p[0]).unwrap();
                vec![gw, gb]
            },
            1e-3,
            200,
            29,
        );
        // linear in the parameters: exact up to rounding
        assert!(report.max_rel_err < 1e-7, "{}", report.max_rel_err);
    }

    #[test]
    fn flatten_is_a_reshape() {
        let t = randn(&[2, 3, 2, 2], 30);
        let data = t.data().to_vec();
        let f = flatten(t).unwrap();
        assert_eq!(f.shape(), &[2, 12]);
        assert_eq!(f.data(), &data[..]);
    }
}
