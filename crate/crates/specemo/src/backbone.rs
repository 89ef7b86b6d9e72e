//! VGG-style convolutional feature extractor in two sizes: the full
//! 13-conv VGG-16 trunk and a desk-scale mini variant with the same
//! five-block shape. Exposes taps at the pre-pool activations of blocks
//! 4 and 5 (the attention sites) and at the first dense layer (the
//! deep-feature descriptor), and saves/loads weights through the
//! container format.

use crate::nncore::{
    conv_backward, conv_forward, dense_backward, dense_forward, flatten, maxpool_backward,
    maxpool_forward, relu_backward, relu_forward, Container, ContainerError, ContainerWriter,
    NnError, Padding, Scalar, Tensor,
};
use crate::seeded::{derive_seed, rng_from_seed};
use crate::spectro::SpecImage;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackboneError {
    #[error("input image is {found:?}, backbone expects {expected:?}")]
    InputSize {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("invalid backbone config: {reason}")]
    InvalidConfig { reason: String },
    #[error(transparent)]
    Kernel(#[from] NnError),
    #[error(transparent)]
    Container(#[from] ContainerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Full,
    Mini,
}

/// Architecture description: five conv blocks, each ending in a 2x2
/// pool, then one dense layer (fc1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneConfig {
    pub variant: Variant,
    pub block_channels: [usize; 5],
    pub convs_per_block: [usize; 5],
    pub input_hw: (usize, usize),
    pub fc_dim: usize,
    /// Per-channel value subtracted from [0,1] pixels before the first
    /// conv. Must match the preprocessing of any imported weights.
    pub input_mean: [f32; 3],
}

impl BackboneConfig {
    pub fn mini() -> BackboneConfig {
        BackboneConfig {
            variant: Variant::Mini,
            block_channels: [8, 16, 32, 64, 64],
            convs_per_block: [1, 1, 2, 2, 2],
            input_hw: (64, 64),
            fc_dim: 128,
            input_mean: [0.5; 3],
        }
    }

    pub fn full() -> BackboneConfig {
        BackboneConfig {
            variant: Variant::Full,
            block_channels: [64, 128, 256, 512, 512],
            convs_per_block: [2, 2, 3, 3, 3],
            input_hw: (224, 224),
            fc_dim: 4096,
            input_mean: [0.5; 3],
        }
    }

    pub fn of_variant(variant: Variant) -> BackboneConfig {
        match variant {
            Variant::Full => BackboneConfig::full(),
            Variant::Mini => BackboneConfig::mini(),
        }
    }

    pub fn validate(&self) -> Result<(), BackboneError> {
        let fail = |reason: String| Err(BackboneError::InvalidConfig { reason });
        if self.input_hw.0 % 32 != 0 || self.input_hw.1 % 32 != 0 {
            return fail(format!(
                "input {}x{} not divisible by 32 (five 2x2 pools)",
                self.input_hw.0, self.input_hw.1
            ));
        }
        if self.block_channels.iter().any(|&c| c == 0)
            || self.convs_per_block.iter().any(|&c| c == 0)
            || self.fc_dim == 0
        {
            return fail("channel counts, conv counts, and fc_dim must be positive".into());
        }
        Ok(())
    }

    pub fn n_convs(&self) -> usize {
        self.convs_per_block.iter().sum()
    }

    /// Flattened feature length entering fc1.
    pub fn flat_dim(&self) -> usize {
        self.block_channels[4] * (self.input_hw.0 / 32) * (self.input_hw.1 / 32)
    }

    /// (out_channels, in_channels) of each conv, in forward order.
    pub fn conv_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.n_convs());
        let mut in_ch = 3;
        for b in 0..5 {
            for _ in 0..self.convs_per_block[b] {
                shapes.push((self.block_channels[b], in_ch));
                in_ch = self.block_channels[b];
            }
        }
        shapes
    }

    /// Container name of conv `j` (0-based flat index): block and conv
    /// indices are 1-based, VGG style.
    pub fn conv_name(&self, flat_idx: usize) -> String {
        let mut rest = flat_idx;
        for b in 0..5 {
            if rest < self.convs_per_block[b] {
                return format!("block{}.conv{}", b + 1, rest + 1);
            }
            rest -= self.convs_per_block[b];
        }
        panic!("conv index {flat_idx} out of range");
    }

    pub fn param_count(&self) -> usize {
        let conv: usize = self
            .conv_shapes()
            .iter()
            .map(|&(o, i)| o * i * 9 + o)
            .sum();
        conv + self.flat_dim() * self.fc_dim + self.fc_dim
    }
}

#[derive(Debug, Clone)]
pub struct ConvLayer<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Activations the classifier heads consume: pre-pool activations of
/// blocks 4 and 5 (spatial input/8 and input/16) and the post-ReLU fc1
/// vector.
#[derive(Debug, Clone)]
pub struct FeatureTaps<T> {
    pub block4: Tensor<T>,
    pub block5: Tensor<T>,
    pub fc1: Tensor<T>,
}

/// Everything backward needs, retained from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// input to each conv, flat order
    conv_inputs: Vec<Tensor<T>>,
    /// pre-ReLU output of each conv, flat order
    conv_pre: Vec<Tensor<T>>,
    /// input to each of the 5 pools (post-ReLU, pre-pool)
    pool_inputs: Vec<Tensor<T>>,
    pool_argmax: Vec<Vec<usize>>,
    /// flattened block-5 pool output
    flat: Tensor<T>,
    fc1_pre: Tensor<T>,
    fc1_post: Tensor<T>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn taps(&self) -> FeatureTaps<T> {
        FeatureTaps {
            block4: self.pool_inputs[3].clone(),
            block5: self.pool_inputs[4].clone(),
            fc1: self.fc1_post.clone(),
        }
    }

    pub fn fc1(&self) -> &Tensor<T> {
        &self.fc1_post
    }

    pub fn block4(&self) -> &Tensor<T> {
        &self.pool_inputs[3]
    }

    pub fn block5(&self) -> &Tensor<T> {
        &self.pool_inputs[4]
    }

    /// ReLU masks and pool argmax choices folded into one hash; used by
    /// gradient checks to detect kink crossings.
    pub fn activation_signature(&self) -> u64 {
        let mut h = crate::nncore::SignatureHasher::new();
        for pre in &self.conv_pre {
            for &v in pre.data() {
                h.push((v > T::zero()) as u64);
            }
        }
        for arg in &self.pool_argmax {
            h.push_indices(arg);
        }
        for &v in self.fc1_pre.data() {
            h.push((v > T::zero()) as u64);
        }
        h.finish()
    }
}

/// Per-parameter gradients from one backward pass, aligned with the
/// backbone's layer order.
#[derive(Debug)]
pub struct BackboneGrads<T> {
    pub convs: Vec<(Tensor<T>, Tensor<T>)>,
    pub fc1_w: Tensor<T>,
    pub fc1_b: Tensor<T>,
    pub input: Tensor<T>,
}

#[derive(Debug, Clone)]
pub struct Backbone<T> {
    pub config: BackboneConfig,
    pub convs: Vec<ConvLayer<T>>,
    pub fc1_w: Tensor<T>,
    pub fc1_b: Tensor<T>,
}

/// He-uniform initialization: weights uniform in +-sqrt(6/fan_in),
/// biases zero. Deterministic for a given seed.
pub fn build(config: &BackboneConfig, seed: u64) -> Result<Backbone<f32>, BackboneError> {
    config.validate()?;
    let he_uniform = |rng: &mut rand_chacha::ChaCha8Rng, shape: &[usize], fan_in: usize| {
        let limit = (6.0 / fan_in as f64).sqrt();
        let n: usize = shape.iter().product();
        let data: Vec<f32> = (0..n)
            .map(|_| ((rng.gen::<f64>() * 2.0 - 1.0) * limit) as f32)
            .collect();
        Tensor::from_vec(shape, data).expect("shape/data agree")
    };

    let mut convs = Vec::with_capacity(config.n_convs());
    for (idx, (out_ch, in_ch)) in config.conv_shapes().into_iter().enumerate() {
        let mut rng = rng_from_seed(derive_seed(seed, &config.conv_name(idx)));
        convs.push(ConvLayer {
            weight: he_uniform(&mut rng, &[out_ch, in_ch, 3, 3], in_ch * 9),
            bias: Tensor::zeros(&[out_ch]),
        });
    }
    let mut rng = rng_from_seed(derive_seed(seed, "fc1"));
    let flat = config.flat_dim();
    Ok(Backbone {
        config: config.clone(),
        fc1_w: he_uniform(&mut rng, &[flat, config.fc_dim], flat),
        fc1_b: Tensor::zeros(&[config.fc_dim]),
        convs,
    })
}

impl<T: Scalar> Backbone<T> {
    /// Stack images into an NCHW batch with the configured per-channel
    /// mean subtracted.
    pub fn batch_from_images(&self, images: &[&SpecImage]) -> Result<Tensor<T>, BackboneError> {
        let (h, w) = self.config.input_hw;
        let mut data = Vec::with_capacity(images.len() * 3 * h * w);
        for img in images {
            let found = (img.pixels.height(), img.pixels.width());
            if found != (h, w) {
                return Err(BackboneError::InputSize {
                    expected: (h, w),
                    found,
                });
            }
            for c in 0..3 {
                let mean = self.config.input_mean[c];
                for y in 0..h {
                    for x in 0..w {
                        data.push(T::from_f64((img.pixels.get(y, x)[c] - mean) as f64));
                    }
                }
            }
        }
        Ok(Tensor::from_vec(&[images.len(), 3, h, w], data)?)
    }

    /// One pass over an NCHW batch, retaining everything backward needs.
    pub fn forward_batch(&self, input: &Tensor<T>) -> Result<ForwardCache<T>, BackboneError> {
        let (h, w) = self.config.input_hw;
        let n = input.shape().first().copied().unwrap_or(0);
        if input.shape() != [n, 3, h, w] || n == 0 {
            return Err(BackboneError::InputSize {
                expected: (h, w),
                found: (
                    input.shape().get(2).copied().unwrap_or(0),
                    input.shape().get(3).copied().unwrap_or(0),
                ),
            });
        }

        let mut conv_inputs = Vec::with_capacity(self.config.n_convs());
        let mut conv_pre = Vec::with_capacity(self.config.n_convs());
        let mut pool_inputs = Vec::with_capacity(5);
        let mut pool_argmax = Vec::with_capacity(5);

        let mut x = input.clone();
        let mut conv_idx = 0;
        for b in 0..5 {
            for _ in 0..self.config.convs_per_block[b] {
                let layer = &self.convs[conv_idx];
                conv_idx += 1;
                let pre = conv_forward(&x, &layer.weight, &layer.bias, Padding::Same)?;
                let post = relu_forward(&pre);
                conv_inputs.push(x);
                conv_pre.push(pre);
                x = post;
            }
            let (pooled, argmax) = maxpool_forward(&x)?;
            pool_inputs.push(x);
            pool_argmax.push(argmax);
            x = pooled;
        }

        let flat = flatten(x)?;
        let fc1_pre = dense_forward(&flat, &self.fc1_w, &self.fc1_b)?;
        let fc1_post = relu_forward(&fc1_pre);
        Ok(ForwardCache {
            conv_inputs,
            conv_pre,
            pool_inputs,
            pool_argmax,
            flat,
            fc1_pre,
            fc1_post,
        })
    }

    /// Convenience single-image forward.
    pub fn forward(&self, image: &SpecImage) -> Result<FeatureTaps<T>, BackboneError> {
        let batch = self.batch_from_images(&[image])?;
        Ok(self.forward_batch(&batch)?.taps())
    }

    /// Backward through the trunk. `grad_fc1` is the loss gradient at
    /// the post-ReLU fc1 vector. The optional injections are loss
    /// gradients at the pre-pool activations of blocks 4 and 5 (the
    /// attention taps); they are added to the pool-path gradient at
    /// those sites.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        grad_fc1: &Tensor<T>,
        inject_block4: Option<&Tensor<T>>,
        inject_block5: Option<&Tensor<T>>,
    ) -> Result<BackboneGrads<T>, BackboneError> {
        let grad_fc1_pre = relu_backward(grad_fc1, &cache.fc1_pre);
        let (grad_flat, fc1_gw, fc1_gb) = dense_backward(&grad_fc1_pre, &cache.flat, &self.fc1_w)?;

        let (h, w) = self.config.input_hw;
        let n = cache.flat.shape()[0];
        let c5 = self.config.block_channels[4];
        let mut grad = grad_flat.reshaped(&[n, c5, h / 32, w / 32])?;

        let mut conv_grads: Vec<(Tensor<T>, Tensor<T>)> = Vec::with_capacity(self.convs.len());
        let mut conv_idx = self.convs.len();
        for b in (0..5).rev() {
            let mut g = maxpool_backward(&grad, &cache.pool_argmax[b], cache.pool_inputs[b].shape())?;
            let inject = match b {
                3 => inject_block4,
                4 => inject_block5,
                _ => None,
            };
            if let Some(extra) = inject {
                if extra.shape() != g.shape() {
                    return Err(BackboneError::Kernel(NnError::ShapeMismatch {
                        op: "backward",
                        detail: format!(
                            "injected gradient {:?} does not match tap {:?}",
                            extra.shape(),
                            g.shape()
                        ),
                    }));
                }
                for (gv, ev) in g.data_mut().iter_mut().zip(extra.data()) {
                    *gv += *ev;
                }
            }
            for _ in 0..self.config.convs_per_block[b] {
                conv_idx -= 1;
                let grad_pre = relu_backward(&g, &cache.conv_pre[conv_idx]);
                let (gi, gw, gb) = conv_backward(
                    &grad_pre,
                    &cache.conv_inputs[conv_idx],
                    &self.convs[conv_idx].weight,
                    Padding::Same,
                )?;
                conv_grads.push((gw, gb));
                g = gi;
            }
            grad = g;
        }
        conv_grads.reverse();

        Ok(BackboneGrads {
            convs: conv_grads,
            fc1_w: fc1_gw,
            fc1_b: fc1_gb,
            input: grad,
        })
    }

    pub fn to_f64_model(&self) -> Backbone<f64> {
        Backbone {
            config: self.config.clone(),
            convs: self
                .convs
                .iter()
                .map(|l| ConvLayer {
                    weight: l.weight.to_f64_tensor(),
                    bias: l.bias.to_f64_tensor(),
                })
                .collect(),
            fc1_w: self.fc1_w.to_f64_tensor(),
            fc1_b: self.fc1_b.to_f64_tensor(),
        }
    }

    /// Parameters in fixed traversal order (convs, then fc1), paired
    /// with their container names.
    pub fn named_params(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (i, layer) in self.convs.iter().enumerate() {
            let base = self.config.conv_name(i);
            out.push((format!("{base}.weight"), &layer.weight));
            out.push((format!("{base}.bias"), &layer.bias));
        }
        out.push(("fc1.weight".to_string(), &self.fc1_w));
        out.push(("fc1.bias".to_string(), &self.fc1_b));
        out
    }
}

impl Backbone<f32> {
    pub fn save_weights(&self, path: impl AsRef<std::path::Path>) -> Result<(), ContainerError> {
        let mut writer = ContainerWriter::new();
        self.write_into(&mut writer);
        writer.write(path)
    }

    /// Add this backbone's tensors to a container being assembled.
    pub fn write_into(&self, writer: &mut ContainerWriter) {
        let variant = match self.config.variant {
            Variant::Full => "full",
            Variant::Mini => "mini",
        };
        writer.meta("backbone.variant", variant);
        for (name, t) in self.named_params() {
            writer.add(&name, t);
        }
    }

    pub fn load_weights(&mut self, path: impl AsRef<std::path::Path>) -> Result<(), ContainerError> {
        let container = Container::read(path)?;
        self.read_from(&container)
    }

    /// Replace all parameters from a parsed container, validating names
    /// and shapes.
    pub fn read_from(&mut self, container: &Container) -> Result<(), ContainerError> {
        let mut convs = Vec::with_capacity(self.convs.len());
        for (i, layer) in self.convs.iter().enumerate() {
            let base = self.config.conv_name(i);
            convs.push(ConvLayer {
                weight: container.tensor(&format!("{base}.weight"), layer.weight.shape())?,
                bias: container.tensor(&format!("{base}.bias"), layer.bias.shape())?,
            });
        }
        let fc1_w = container.tensor("fc1.weight", self.fc1_w.shape())?;
        let fc1_b = container.tensor("fc1.bias", self.fc1_b.shape())?;
        self.convs = convs;
        self.fc1_w = fc1_w;
        self.fc1_b = fc1_b;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster;
    use crate::spectro::SpectroParams;

    fn image_from_fn(hw: (usize, usize), f: impl Fn(usize, usize) -> [f32; 3]) -> SpecImage {
        let mut r = Raster::new(hw.0, hw.1).unwrap();
        for y in 0..hw.0 {
            for x in 0..hw.1 {
                r.set(y, x, f(y, x));
            }
        }
        SpecImage {
            pixels: r,
            params: SpectroParams::mini(),
            source_path: "test".into(),
        }
    }

    #[test]
    fn parameter_count_matches_closed_form() {
        let cfg = BackboneConfig::mini();
        let bb = build(&cfg, 1).unwrap();
        let actual: usize = bb.named_params().iter().map(|(_, t)| t.len()).sum();
        assert_eq!(actual, cfg.param_count());
        // closed form, written out independently of conv_shapes():
        // block convs (in -> out): 3->8, 8->16, 16->32, 32->32, 32->64,
        // 64->64, 64->64, 64->64; then fc1 64*2*2 -> 128
        let by_hand = (8 * 3 + 16 * 8 + 32 * 16 + 32 * 32 + 64 * 32 + 64 * 64 + 64 * 64 + 64 * 64)
            * 9
            + (8 + 16 + 32 + 32 + 64 + 64 + 64 + 64)
            + 256 * 128
            + 128;
        assert_eq!(cfg.param_count(), by_hand);
    }

    #[test]
    fn same_seed_builds_identical_weights() {
        let cfg = BackboneConfig::mini();
        let a = build(&cfg, 42).unwrap();
        let b = build(&cfg, 42).unwrap();
        for ((_, ta), (_, tb)) in a.named_params().iter().zip(b.named_params()) {
            assert_eq!(ta.data(), tb.data());
        }
        let c = build(&cfg, 43).unwrap();
        assert_ne!(a.convs[0].weight.data(), c.convs[0].weight.data());
    }

    #[test]
    fn full_variant_is_vgg16_shaped() {
        let cfg = BackboneConfig::full();
        assert_eq!(cfg.n_convs(), 13);
        assert_eq!(cfg.convs_per_block.len(), 5);
        let shapes = cfg.conv_shapes();
        assert_eq!(shapes[0], (64, 3));
        assert_eq!(shapes[12], (512, 512));
        assert_eq!(cfg.conv_name(0), "block1.conv1");
        assert_eq!(cfg.conv_name(12), "block5.conv3");
        assert_eq!(cfg.flat_dim(), 512 * 7 * 7);
    }

    #[test]
    fn tap_shapes_follow_the_divide_rule() {
        let bb = build(&BackboneConfig::mini(), 7).unwrap();
        let img = image_from_fn((64, 64), |y, x| [(y as f32) / 64.0, 0.3, (x as f32) / 64.0]);
        let taps = bb.forward(&img).unwrap();
        assert_eq!(taps.block4.shape(), &[1, 64, 8, 8]);
        assert_eq!(taps.block5.shape(), &[1, 64, 4, 4]);
        assert_eq!(taps.fc1.shape(), &[1, 128]);
    }

    #[test]
    fn wrong_input_size_is_rejected() {
        let bb = build(&BackboneConfig::mini(), 7).unwrap();
        let img = image_from_fn((32, 64), |_, _| [0.0; 3]);
        assert!(matches!(
            bb.forward(&img),
            Err(BackboneError::InputSize { .. })
        ));
    }

    #[test]
    fn zero_input_with_zero_biases_gives_zero_fc1() {
        let bb = build(&BackboneConfig::mini(), 3).unwrap();
        // pixels equal to the input mean scale to exactly zero
        let img = image_from_fn((64, 64), |_, _| [0.5; 3]);
        let taps = bb.forward(&img).unwrap();
        assert!(taps.fc1.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bias_chain_propagates_through_zero_weights() {
        let mut bb = build(&BackboneConfig::mini(), 3).unwrap();
        for layer in &mut bb.convs {
            layer.weight.data_mut().fill(0.0);
            layer.bias.data_mut().fill(0.25);
        }
        bb.fc1_w.data_mut().fill(0.0);
        bb.fc1_b.data_mut().fill(-1.0);
        let img = image_from_fn((64, 64), |y, x| [(y + x) as f32 / 128.0; 3]);
        let cache = bb.forward_batch(&bb.batch_from_images(&[&img]).unwrap()).unwrap();
        // every conv output is its own bias; pools preserve constants
        assert!(cache.block4().data().iter().all(|&v| v == 0.25));
        assert!(cache.block5().data().iter().all(|&v| v == 0.25));
        // fc1 pre-activation is its bias; ReLU clips the -1 to 0
        assert!(cache.fc1().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batch_forward_equals_per_item_forward() {
        let bb = build(&BackboneConfig::mini(), 11).unwrap();
        let a = image_from_fn((64, 64), |y, x| {
            [(y as f32) / 64.0, (x as f32) / 64.0, 0.2]
        });
        let b = image_from_fn((64, 64), |y, x| {
            [0.8, (y as f32 * x as f32) / 4096.0, 0.1]
        });
        let batch = bb.batch_from_images(&[&a, &b]).unwrap();
        let cache = bb.forward_batch(&batch).unwrap();
        let taps_a = bb.forward(&a).unwrap();
        let taps_b = bb.forward(&b).unwrap();
        let fc1 = cache.fc1();
        let k = fc1.shape()[1];
        assert_eq!(&fc1.data()[..k], taps_a.fc1.data());
        assert_eq!(&fc1.data()[k..], taps_b.fc1.data());
        // order does not matter per item
        let batch_rev = bb.batch_from_images(&[&b, &a]).unwrap();
        let cache_rev = bb.forward_batch(&batch_rev).unwrap();
        assert_eq!(&cache_rev.fc1().data()[k..], taps_a.fc1.data());
    }

    #[test]
    fn save_load_round_trip_preserves_forward_bits() {
        let bb = build(&BackboneConfig::mini(), 13).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bb.weights");
        bb.save_weights(&path).unwrap();

        let mut loaded = build(&BackboneConfig::mini(), 999).unwrap();
        loaded.load_weights(&path).unwrap();
        let img = image_from_fn((64, 64), |y, _| [y as f32 / 64.0; 3]);
        let a = bb.forward(&img).unwrap();
        let b = loaded.forward(&img).unwrap();
        assert_eq!(a.fc1.data(), b.fc1.data());
        assert_eq!(a.block4.data(), b.block4.data());
    }

    #[test]
    fn missing_and_mismatched_tensors_are_rejected() {
        let bb = build(&BackboneConfig::mini(), 17).unwrap();
        let mut writer = ContainerWriter::new();
        for (name, t) in bb.named_params().iter().skip(1) {
            writer.add(name, t);
        }
        let container = Container::from_bytes(&writer.bytes()).unwrap();
        let mut target = build(&BackboneConfig::mini(), 0).unwrap();
        match target.read_from(&container) {
            Err(ContainerError::MissingTensor { name }) => {
                assert_eq!(name, "block1.conv1.weight")
            }
            other => panic!("expected MissingTensor, got {other:?}"),
        }

        // transposed fc1 shape
        let mut writer = ContainerWriter::new();
        for (name, t) in bb.named_params() {
            if name == "fc1.weight" {
                let transposed =
                    Tensor::<f32>::zeros(&[t.shape()[1], t.shape()[0]]);
                writer.add(&name, &transposed);
            } else {
                writer.add(&name, t);
            }
        }
        let container = Container::from_bytes(&writer.bytes()).unwrap();
        assert!(matches!(
            target.read_from(&container),
            Err(ContainerError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn backward_shapes_align_with_parameters() {
        let bb = build(&BackboneConfig::mini(), 19).unwrap();
        let img = image_from_fn((64, 64), |y, x| [y as f32 / 64.0, 0.5, x as f32 / 64.0]);
        let batch = bb.batch_from_images(&[&img]).unwrap();
        let cache = bb.forward_batch(&batch).unwrap();
        let grad_fc1 = Tensor::filled(&[1, 128], 1.0f32);
        let grads = bb.backward(&cache, &grad_fc1, None, None).unwrap();
        assert_eq!(grads.convs.len(), bb.convs.len());
        for ((gw, gb), layer) in grads.convs.iter().zip(&bb.convs) {
            assert_eq!(gw.shape(), layer.weight.shape());
            assert_eq!(gb.shape(), layer.bias.shape());
        }
        assert_eq!(grads.fc1_w.shape(), bb.fc1_w.shape());
        assert_eq!(grads.input.shape(), batch.shape());
    }
}
