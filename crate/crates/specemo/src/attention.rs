//! Additive attention gates over convolutional feature maps.
//!
//! A gate scores every spatial site of a tap against the global fc1
//! descriptor, softmaxes the scores into an attention map, and returns
//! the map-weighted sum of the site vectors. The attended classifier
//! stacks one gate on block 4 and one on block 5 and classifies the
//! concatenated descriptors; the maps themselves are exportable as
//! grayscale images. All backward passes are hand-derived.

use crate::nncore::{
    dense_backward, dense_forward, shape_err, NnError, Scalar, Tensor,
};
use crate::nncore::{Container, ContainerError, ContainerWriter};
use crate::raster::Raster;
use crate::seeded::{derive_seed, rng_from_seed};
use rand::Rng;

/// Whether a gate computes learned attention or is ablated to a
/// uniform map (exact spatial mean pooling).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateMode {
    Learned,
    UniformAblation,
}

/// One attention gate. No biases anywhere: the projections feed a
/// tanh, and the softmax over sites is shift-invariant in the scores.
#[derive(Debug, Clone)]
pub struct GateParams<T> {
    /// [channels, d] site projection (a 1x1 conv)
    pub proj_local: Tensor<T>,
    /// [fc_dim, d] global-descriptor projection
    pub proj_global: Tensor<T>,
    /// [d] scoring vector
    pub score: Tensor<T>,
}

impl<T: Scalar> GateParams<T> {
    pub fn channels(&self) -> usize {
        self.proj_local.shape()[0]
    }

    pub fn gate_dim(&self) -> usize {
        self.proj_local.shape()[1]
    }

    pub fn to_f64_params(&self) -> GateParams<f64> {
        GateParams {
            proj_local: self.proj_local.to_f64_tensor(),
            proj_global: self.proj_global.to_f64_tensor(),
            score: self.score.to_f64_tensor(),
        }
    }
}

/// Forward state one gate keeps for backward: the tanh outputs at
/// every site and the attention map itself.
#[derive(Debug, Clone)]
pub struct GateCache<T> {
    mode: GateMode,
    /// [n, sites, d] tanh activations (empty under ablation)
    tanh: Tensor<T>,
    /// [n, sites] attention map rows, each summing to 1
    pub map: Tensor<T>,
    grid_hw: (usize, usize),
}

impl<T: Scalar> GateCache<T> {
    /// Attention map of one batch item as a row of `sites` weights.
    pub fn map_row(&self, n: usize) -> &[T] {
        let sites = self.map.shape()[1];
        &self.map.data()[n * sites..(n + 1) * sites]
    }

    pub fn grid_hw(&self) -> (usize, usize) {
        self.grid_hw
    }
}

/// Gradients of one gate plus the gradients flowing back into its
/// inputs.
#[derive(Debug)]
pub struct GateGrads<T> {
    pub proj_local: Tensor<T>,
    pub proj_global: Tensor<T>,
    pub score: Tensor<T>,
    pub tap: Tensor<T>,
    pub global: Tensor<T>,
}

fn check_gate_inputs<T: Scalar>(
    params: &GateParams<T>,
    tap: &Tensor<T>,
    global: &Tensor<T>,
) -> Result<(usize, usize, usize, usize, usize, usize), NnError> {
    if tap.shape().len() != 4 {
        return Err(shape_err("gate", format!("tap must be NCHW, got {:?}", tap.shape())));
    }
    let (n, c, h, w) = (tap.shape()[0], tap.shape()[1], tap.shape()[2], tap.shape()[3]);
    let d = params.gate_dim();
    let f = params.proj_global.shape()[0];
    if params.proj_local.shape() != [c, d] {
        return Err(shape_err(
            "gate",
            format!("proj_local {:?} does not match tap channels {c} and d {d}", params.proj_local.shape()),
        ));
    }
    if params.proj_global.shape() != [f, d] || params.score.shape() != [d] {
        return Err(shape_err(
            "gate",
            format!(
                "proj_global {:?} / score {:?} inconsistent with d {d}",
                params.proj_global.shape(),
                params.score.shape()
            ),
        ));
    }
    if global.shape() != [n, f] {
        return Err(shape_err(
            "gate",
            format!("global {:?} must be [{n}, {f}]", global.shape()),
        ));
    }
    Ok((n, c, h, w, d, f))
}

/// Run one gate: scores e_i = score . tanh(Wl' l_i + Wg' g), map =
/// softmax(e), attended = sum_i map_i l_i. Returns the attended
/// descriptors [n, channels] and the cache.
pub fn gate_forward<T: Scalar>(
    params: &GateParams<T>,
    tap: &Tensor<T>,
    global: &Tensor<T>,
    mode: GateMode,
) -> Result<(Tensor<T>, GateCache<T>), NnError> {
    let (n, c, h, w, d, f) = check_gate_inputs(params, tap, global)?;
    let sites = h * w;
    let mut attended = Tensor::zeros(&[n, c]);

    if mode == GateMode::UniformAblation {
        // exact mean pooling: sum first, then one multiply per channel
        let inv = T::from_f64(1.0 / sites as f64);
        let mut map = Tensor::zeros(&[n, sites]);
        map.data_mut().fill(inv);
        for b in 0..n {
            for ch in 0..c {
                let plane = &tap.data()[((b * c) + ch) * sites..((b * c) + ch + 1) * sites];
                let mut sum = T::zero();
                for &v in plane {
                    sum += v;
                }
                attended.data_mut()[b * c + ch] = sum * inv;
            }
        }
        return Ok((
            attended,
            GateCache {
                mode,
                tanh: Tensor::zeros(&[n, 0, d]),
                map,
                grid_hw: (h, w),
            },
        ));
    }

    let mut tanh = Tensor::zeros(&[n, sites, d]);
    let mut map = Tensor::zeros(&[n, sites]);
    let wl = params.proj_local.data();
    let wg = params.proj_global.data();
    for b in 0..n {
        // global projection, shared by every site of this item
        let mut gproj = vec![T::zero(); d];
        let grow = &global.data()[b * f..(b + 1) * f];
        for (fi, &gv) in grow.iter().enumerate() {
            if gv != T::zero() {
                let wrow = &wg[fi * d..(fi + 1) * d];
                for k in 0..d {
                    gproj[k] += gv * wrow[k];
                }
            }
        }

        let mut scores = vec![T::zero(); sites];
        for i in 0..sites {
            let mut u = gproj.clone();
            for ch in 0..c {
                let lv = tap.data()[((b * c) + ch) * sites + i];
                if lv != T::zero() {
                    let wrow = &wl[ch * d..(ch + 1) * d];
                    for k in 0..d {
                        u[k] += lv * wrow[k];
                    }
                }
            }
            let trow = &mut tanh.data_mut()[(b * sites + i) * d..(b * sites + i + 1) * d];
            let mut e = T::zero();
            for k in 0..d {
                let t = u[k].tanh();
                trow[k] = t;
                e += params.score.data()[k] * t;
            }
            scores[i] = e;
        }

        // softmax over sites, max-subtracted
        let mut max = scores[0];
        for &s in &scores[1..] {
            if s > max {
                max = s;
            }
        }
        let mut total = T::zero();
        for s in scores.iter_mut() {
            *s = (*s - max).exp();
            total += *s;
        }
        let mrow = &mut map.data_mut()[b * sites..(b + 1) * sites];
        for (m, s) in mrow.iter_mut().zip(&scores) {
            *m = *s / total;
        }

        for ch in 0..c {
            let plane = &tap.data()[((b * c) + ch) * sites..((b * c) + ch + 1) * sites];
            let mut acc = T::zero();
            for (a, &v) in mrow.iter().zip(plane) {
                acc += *a * v;
            }
            attended.data_mut()[b * c + ch] = acc;
        }
    }
    attended.assert_finite("gate_forward attended");
    Ok((
        attended,
        GateCache {
            mode,
            tanh,
            map,
            grid_hw: (h, w),
        },
    ))
}

/// Backward through one gate given the loss gradient at the attended
/// descriptors.
pub fn gate_backward<T: Scalar>(
    params: &GateParams<T>,
    tap: &Tensor<T>,
    global: &Tensor<T>,
    cache: &GateCache<T>,
    grad_attended: &Tensor<T>,
) -> Result<GateGrads<T>, NnError> {
    let (n, c, h, w, d, f) = check_gate_inputs(params, tap, global)?;
    let sites = h * w;
    if grad_attended.shape() != [n, c] {
        return Err(shape_err(
            "gate_backward",
            format!("grad_attended {:?} must be [{n}, {c}]", grad_attended.shape()),
        ));
    }

    let mut g_wl = Tensor::zeros(&[c, d]);
    let mut g_wg = Tensor::zeros(&[f, d]);
    let mut g_score = Tensor::zeros(&[d]);
    let mut g_tap = Tensor::zeros(tap.shape());
    let mut g_global = Tensor::zeros(&[n, f]);

    if cache.mode == GateMode::UniformAblation {
        // attended = (sum_i l_i) / sites; parameters unused
        let inv = T::from_f64(1.0 / sites as f64);
        for b in 0..n {
            for ch in 0..c {
                let gv = grad_attended.data()[b * c + ch] * inv;
                let plane =
                    &mut g_tap.data_mut()[((b * c) + ch) * sites..((b * c) + ch + 1) * sites];
                for p in plane.iter_mut() {
                    *p = gv;
                }
            }
        }
        return Ok(GateGrads {
            proj_local: g_wl,
            proj_global: g_wg,
            score: g_score,
            tap: g_tap,
            global: g_global,
        });
    }

    let wl = params.proj_local.data();
    let wg = params.proj_global.data();
    for b in 0..n {
        let mrow = cache.map_row(b);
        let garow = &grad_attended.data()[b * c..(b + 1) * c];

        // dL/da_i = grad_attended . l_i, plus the direct a_i term on l_i
        let mut grad_a = vec![T::zero(); sites];
        for ch in 0..c {
            let gv = garow[ch];
            if gv == T::zero() {
                continue;
            }
            let plane = &tap.data()[((b * c) + ch) * sites..((b * c) + ch + 1) * sites];
            for (ga, &lv) in grad_a.iter_mut().zip(plane) {
                *ga += gv * lv;
            }
        }
        // softmax backward: de_i = a_i (ga_i - sum_j a_j ga_j)
        let mut dot = T::zero();
        for (a, ga) in mrow.iter().zip(&grad_a) {
            dot += *a * *ga;
        }
        let grad_e: Vec<T> = mrow
            .iter()
            .zip(&grad_a)
            .map(|(a, ga)| *a * (*ga - dot))
            .collect();

        // accumulate through u_i = tanh(.): du = ge_i * score * (1 - t^2)
        let mut gsum = vec![T::zero(); d];
        for i in 0..sites {
            let ge = grad_e[i];
            let trow = &cache.tanh.data()[(b * sites + i) * d..(b * sites + i + 1) * d];
            // score gradient: e_i = score . t_i
            if ge != T::zero() {
                for k in 0..d {
                    g_score.data_mut()[k] += ge * trow[k];
                }
            }
            let mut du = vec![T::zero(); d];
            for k in 0..d {
                du[k] = ge * params.score.data()[k] * (T::one() - trow[k] * trow[k]);
                gsum[k] += du[k];
            }
            // local projection and tap gradients
            for ch in 0..c {
                let lv = tap.data()[((b * c) + ch) * sites + i];
                let wrow = &wl[ch * d..(ch + 1) * d];
                let grow = &mut g_wl.data_mut()[ch * d..(ch + 1) * d];
                let mut back = T::zero();
                for k in 0..d {
                    grow[k] += lv * du[k];
                    back += wrow[k] * du[k];
                }
                g_tap.data_mut()[((b * c) + ch) * sites + i] = back + mrow[i] * garow[ch];
            }
        }
        // global projection: every site shares g, so grads use the site sum
        let grow = &global.data()[b * f..(b + 1) * f];
        for fi in 0..f {
            let wrow = &wg[fi * d..(fi + 1) * d];
            let grad_row = &mut g_wg.data_mut()[fi * d..(fi + 1) * d];
            let mut back = T::zero();
            for k in 0..d {
                grad_row[k] += grow[fi] * gsum[k];
                back += wrow[k] * gsum[k];
            }
            g_global.data_mut()[b * f + fi] = back;
        }
    }

    Ok(GateGrads {
        proj_local: g_wl,
        proj_global: g_wg,
        score: g_score,
        tap: g_tap,
        global: g_global,
    })
}

/// Weighted sum of site vectors under a fixed map; linear in the tap.
/// Used by ablations and by tests that freeze the map.
pub fn apply_map<T: Scalar>(tap: &Tensor<T>, map: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    if tap.shape().len() != 4 {
        return Err(shape_err("apply_map", format!("tap must be NCHW, got {:?}", tap.shape())));
    }
    let (n, c, h, w) = (tap.shape()[0], tap.shape()[1], tap.shape()[2], tap.shape()[3]);
    let sites = h * w;
    if map.shape() != [n, sites] {
        return Err(shape_err(
            "apply_map",
            format!("map {:?} must be [{n}, {sites}]", map.shape()),
        ));
    }
    let mut out = Tensor::zeros(&[n, c]);
    for b in 0..n {
        let mrow = &map.data()[b * sites..(b + 1) * sites];
        for ch in 0..c {
            let plane = &tap.data()[((b * c) + ch) * sites..((b * c) + ch + 1) * sites];
            let mut acc = T::zero();
            for (a, &v) in mrow.iter().zip(plane) {
                acc += *a * v;
            }
            out.data_mut()[b * c + ch] = acc;
        }
    }
    Ok(out)
}

/// Attended classifier: gates on the block-4 and block-5 taps, then a
/// dense head over the concatenated attended descriptors. The head
/// sees only those two descriptors.
#[derive(Debug, Clone)]
pub struct AmModel<T> {
    pub gate4: GateParams<T>,
    pub gate5: GateParams<T>,
    /// [c4 + c5, classes]
    pub head_w: Tensor<T>,
    pub head_b: Tensor<T>,
}

#[derive(Debug)]
pub struct AmForward<T> {
    pub logits: Tensor<T>,
    pub attended4: Tensor<T>,
    pub attended5: Tensor<T>,
    pub gate4: GateCache<T>,
    pub gate5: GateCache<T>,
    concat: Tensor<T>,
}

#[derive(Debug)]
pub struct AmGrads<T> {
    pub gate4: GateGrads<T>,
    pub gate5: GateGrads<T>,
    pub head_w: Tensor<T>,
    pub head_b: Tensor<T>,
    /// combined gradient flowing into fc1 from both gates
    pub global: Tensor<T>,
}

impl<T: Scalar> AmModel<T> {
    pub fn classes(&self) -> usize {
        self.head_w.shape()[1]
    }

    pub fn forward(
        &self,
        block4: &Tensor<T>,
        block5: &Tensor<T>,
        global: &Tensor<T>,
        mode: GateMode,
    ) -> Result<AmForward<T>, NnError> {
        let (att4, cache4) = gate_forward(&self.gate4, block4, global, mode)?;
        let (att5, cache5) = gate_forward(&self.gate5, block5, global, mode)?;
        let n = att4.shape()[0];
        let c4 = att4.shape()[1];
        let c5 = att5.shape()[1];
        let mut concat = Tensor::zeros(&[n, c4 + c5]);
        for b in 0..n {
            let row = &mut concat.data_mut()[b * (c4 + c5)..(b + 1) * (c4 + c5)];
            row[..c4].copy_from_slice(&att4.data()[b * c4..(b + 1) * c4]);
            row[c4..].copy_from_slice(&att5.data()[b * c5..(b + 1) * c5]);
        }
        let logits = dense_forward(&concat, &self.head_w, &self.head_b)?;
        Ok(AmForward {
            logits,
            attended4: att4,
            attended5: att5,
            gate4: cache4,
            gate5: cache5,
            concat,
        })
    }

    pub fn backward(
        &self,
        block4: &Tensor<T>,
        block5: &Tensor<T>,
        global: &Tensor<T>,
        fwd: &AmForward<T>,
        grad_logits: &Tensor<T>,
    ) -> Result<AmGrads<T>, NnError> {
        let (grad_concat, head_gw, head_gb) =
            dense_backward(grad_logits, &fwd.concat, &self.head_w)?;
        let n = grad_concat.shape()[0];
        let c4 = fwd.attended4.shape()[1];
        let c5 = fwd.attended5.shape()[1];
        let mut g_att4 = Tensor::zeros(&[n, c4]);
        let mut g_att5 = Tensor::zeros(&[n, c5]);
        for b in 0..n {
            let row = &grad_concat.data()[b * (c4 + c5)..(b + 1) * (c4 + c5)];
            g_att4.data_mut()[b * c4..(b + 1) * c4].copy_from_slice(&row[..c4]);
            g_att5.data_mut()[b * c5..(b + 1) * c5].copy_from_slice(&row[c4..]);
        }
        let gate4 = gate_backward(&self.gate4, block4, global, &fwd.gate4, &g_att4)?;
        let gate5 = gate_backward(&self.gate5, block5, global, &fwd.gate5, &g_att5)?;
        let mut combined = gate4.global.clone();
        for (a, b) in combined.data_mut().iter_mut().zip(gate5.global.data()) {
            *a += *b;
        }
        Ok(AmGrads {
            gate4,
            gate5,
            head_w: head_gw,
            head_b: head_gb,
            global: combined,
        })
    }

    pub fn to_f64_model(&self) -> AmModel<f64> {
        AmModel {
            gate4: self.gate4.to_f64_params(),
            gate5: self.gate5.to_f64_params(),
            head_w: self.head_w.to_f64_tensor(),
            head_b: self.head_b.to_f64_tensor(),
        }
    }
}

impl AmModel<f32> {
    pub fn write_into(&self, writer: &mut ContainerWriter) {
        let gate = |writer: &mut ContainerWriter, name: &str, g: &GateParams<f32>| {
            writer.add(&format!("am.{name}.proj_local"), &g.proj_local);
            writer.add(&format!("am.{name}.proj_global"), &g.proj_global);
            writer.add(&format!("am.{name}.score"), &g.score);
        };
        gate(writer, "gate4", &self.gate4);
        gate(writer, "gate5", &self.gate5);
        writer.add("am.head.weight", &self.head_w);
        writer.add("am.head.bias", &self.head_b);
    }

    pub fn read_from(&mut self, container: &Container) -> Result<(), ContainerError> {
        let gate = |name: &str, g: &GateParams<f32>| -> Result<GateParams<f32>, ContainerError> {
            Ok(GateParams {
                proj_local: container
                    .tensor(&format!("am.{name}.proj_local"), g.proj_local.shape())?,
                proj_global: container
                    .tensor(&format!("am.{name}.proj_global"), g.proj_global.shape())?,
                score: container.tensor(&format!("am.{name}.score"), g.score.shape())?,
            })
        };
        let gate4 = gate("gate4", &self.gate4)?;
        let gate5 = gate("gate5", &self.gate5)?;
        let head_w = container.tensor("am.head.weight", self.head_w.shape())?;
        let head_b = container.tensor("am.head.bias", self.head_b.shape())?;
        self.gate4 = gate4;
        self.gate5 = gate5;
        self.head_w = head_w;
        self.head_b = head_b;
        Ok(())
    }
}

fn he_uniform(rng: &mut rand_chacha::ChaCha8Rng, shape: &[usize], fan_in: usize) -> Tensor<f32> {
    let limit = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data: Vec<f32> = (0..n)
        .map(|_| ((rng.gen::<f64>() * 2.0 - 1.0) * limit) as f32)
        .collect();
    Tensor::from_vec(shape, data).expect("shape/data agree")
}

fn build_gate(channels: usize, fc_dim: usize, d: usize, seed: u64, label: &str) -> GateParams<f32> {
    let mut rng = rng_from_seed(derive_seed(seed, label));
    GateParams {
        proj_local: he_uniform(&mut rng, &[channels, d], channels),
        proj_global: he_uniform(&mut rng, &[fc_dim, d], fc_dim),
        score: he_uniform(&mut rng, &[d], d),
    }
}

/// Fresh attended classifier with He-uniform projections, zero head
/// bias. Deterministic for a given seed.
pub fn build_am(
    c4: usize,
    c5: usize,
    fc_dim: usize,
    gate_dim: usize,
    classes: usize,
    seed: u64,
) -> AmModel<f32> {
    assert!(classes >= 2, "attended classifier needs at least 2 classes");
    let mut rng = rng_from_seed(derive_seed(seed, "am.head"));
    AmModel {
        gate4: build_gate(c4, fc_dim, gate_dim, seed, "am.gate4"),
        gate5: build_gate(c5, fc_dim, gate_dim, seed, "am.gate5"),
        head_w: he_uniform(&mut rng, &[c4 + c5, classes], c4 + c5),
        head_b: Tensor::zeros(&[classes]),
    }
}

/// Render an attention map as a grayscale image: bilinear upsample of
/// the site grid to `out_hw`, then a min-max stretch. A constant map
/// has no contrast to stretch and renders mid-gray.
pub fn export_map(
    map_row: &[f32],
    grid_hw: (usize, usize),
    out_hw: (usize, usize),
) -> Result<Raster, crate::raster::RasterError> {
    let (gh, gw) = grid_hw;
    assert_eq!(map_row.len(), gh * gw, "map length must match its grid");
    let mut small = Raster::new(gh, gw)?;
    for y in 0..gh {
        for x in 0..gw {
            let v = map_row[y * gw + x];
            small.set(y, x, [v, v, v]);
        }
    }
    let mut big = small.resize_bilinear(out_hw.0, out_hw.1)?;
    let mut lo = f32::INFINITY;
    let mut hi = f32::NEG_INFINITY;
    for px in big.data() {
        lo = lo.min(*px);
        hi = hi.max(*px);
    }
    let span = hi - lo;
    for px in big.data_mut() {
        *px = if span <= 1e-12 {
            0.5
        } else {
            (*px - lo) / span
        };
    }
    Ok(big)
}
