//! Epoch loop for the trunk-plus-head networks: seeded shuffling,
//! cross-entropy, two parameter groups (trunk and head rates), early
//! stopping on validation accuracy, best-checkpoint restore.

use super::{argmax_row, FcModel, HeadError, TrainConfig};
use crate::attention::{AmModel, GateMode};
use crate::backbone::{Backbone, BackboneGrads, ForwardCache};
use crate::nncore::{
    softmax_xent, Container, ContainerError, ContainerWriter, Optimizer, ParamGroup, Tensor,
};
use crate::seeded::{derive_seed, rng_from_seed};
use crate::spectro::SpecImage;
use rand::seq::SliceRandom;

#[derive(Debug, Clone)]
pub enum NetHead {
    Fc(FcModel<f32>),
    Am(AmModel<f32>),
}

/// A trunk with one trainable classifier head.
#[derive(Debug, Clone)]
pub struct Net {
    pub backbone: Backbone<f32>,
    pub head: NetHead,
}

#[derive(Debug, Clone)]
pub struct LabeledImage {
    pub image: SpecImage,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct EpochStats {
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// Attention-map health counters accumulated over every training and
/// validation forward of a run.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct MapStats {
    pub min_sum: f64,
    pub max_sum: f64,
    pub min_entry: f64,
    pub maps_seen: usize,
}

impl MapStats {
    fn new() -> MapStats {
        MapStats {
            min_sum: f64::INFINITY,
            max_sum: f64::NEG_INFINITY,
            min_entry: f64::INFINITY,
            maps_seen: 0,
        }
    }

    fn absorb(&mut self, map: &Tensor<f32>) {
        let sites = map.shape()[1];
        for row in map.data().chunks(sites) {
            let mut sum = 0.0f64;
            for &v in row {
                sum += v as f64;
                self.min_entry = self.min_entry.min(v as f64);
            }
            self.min_sum = self.min_sum.min(sum);
            self.max_sum = self.max_sum.max(sum);
            self.maps_seen += 1;
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// index into `epochs` of the restored checkpoint
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub map_stats: Option<MapStats>,
}

struct BatchEval {
    logits: Tensor<f32>,
    loss: f64,
    cache: ForwardCache<f32>,
    am_fwd: Option<crate::attention::AmForward<f32>>,
    fc_cache: Option<super::FcCache<f32>>,
}

impl Net {
    pub fn classes(&self) -> usize {
        match &self.head {
            NetHead::Fc(m) => m.classes(),
            NetHead::Am(m) => m.classes(),
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match &self.head {
            NetHead::Fc(_) => "fc",
            NetHead::Am(_) => "am",
        }
    }

    fn forward_with_loss(
        &self,
        batch: &Tensor<f32>,
        labels: &[usize],
        stats: Option<&mut MapStats>,
    ) -> Result<BatchEval, HeadError> {
        let cache = self.backbone.forward_batch(batch)?;
        let (logits, am_fwd, fc_cache) = match &self.head {
            NetHead::Fc(m) => {
                let (logits, fc_cache) = m.forward(cache.fc1())?;
                (logits, None, Some(fc_cache))
            }
            NetHead::Am(m) => {
                let fwd = m.forward(cache.block4(), cache.block5(), cache.fc1(), GateMode::Learned)?;
                if let Some(s) = stats {
                    s.absorb(&fwd.gate4.map);
                    s.absorb(&fwd.gate5.map);
                }
                (fwd.logits.clone(), Some(fwd), None)
            }
        };
        let (loss, _) = softmax_xent(&logits, labels)?;
        Ok(BatchEval {
            logits,
            loss: loss as f64,
            cache,
            am_fwd,
            fc_cache,
        })
    }

    /// Forward a batch of images; returns predicted labels and the raw
    /// logits (argmax ties go to the lower index).
    pub fn predict(&self, images: &[&SpecImage]) -> Result<(Vec<usize>, Tensor<f32>), HeadError> {
        let batch = self.backbone.batch_from_images(images)?;
        let cache = self.backbone.forward_batch(&batch)?;
        let logits = match &self.head {
            NetHead::Fc(m) => m.forward(cache.fc1())?.0,
            NetHead::Am(m) => {
                m.forward(cache.block4(), cache.block5(), cache.fc1(), GateMode::Learned)?
                    .logits
            }
        };
        let k = logits.shape()[1];
        let labels = logits
            .data()
            .chunks(k)
            .map(argmax_row)
            .collect();
        Ok((labels, logits))
    }

    /// Attention maps for a batch of images (attended head only):
    /// per image, the block-4 and block-5 map rows with their grids.
    #[allow(clippy::type_complexity)]
    pub fn attention_maps(
        &self,
        images: &[&SpecImage],
    ) -> Result<Option<Vec<(Vec<f32>, (usize, usize), Vec<f32>, (usize, usize))>>, HeadError> {
        let NetHead::Am(m) = &self.head else {
            return Ok(None);
        };
        let batch = self.backbone.batch_from_images(images)?;
        let cache = self.backbone.forward_batch(&batch)?;
        let fwd = m.forward(cache.block4(), cache.block5(), cache.fc1(), GateMode::Learned)?;
        let out = (0..images.len())
            .map(|i| {
                (
                    fwd.gate4.map_row(i).to_vec(),
                    fwd.gate4.grid_hw(),
                    fwd.gate5.map_row(i).to_vec(),
                    fwd.gate5.grid_hw(),
                )
            })
            .collect();
        Ok(Some(out))
    }

    pub fn write_into(&self, writer: &mut ContainerWriter) {
        writer.meta("head.mode", self.mode_name());
        self.backbone.write_into(writer);
        match &self.head {
            NetHead::Fc(m) => m.write_into(writer),
            NetHead::Am(m) => m.write_into(writer),
        }
    }

    pub fn read_from(&mut self, container: &Container) -> Result<(), ContainerError> {
        self.backbone.read_from(container)?;
        match &mut self.head {
            NetHead::Fc(m) => m.read_from(container),
            NetHead::Am(m) => m.read_from(container),
        }
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), ContainerError> {
        let mut writer = ContainerWriter::new();
        self.write_into(&mut writer);
        writer.write(path)
    }
}

/// Gather gradients in the fixed (trunk, head) group layout.
fn grads_for_step(
    net: &Net,
    labels: &[usize],
    eval: &BatchEval,
) -> Result<(Vec<Tensor<f32>>, Vec<Tensor<f32>>), HeadError> {
    let (_, grad_logits) = softmax_xent(&eval.logits, labels)?;
    let (trunk_grads, head_grads) = match &net.head {
        NetHead::Fc(m) => {
            let fc_cache = eval.fc_cache.as_ref().expect("fc forward cached");
            let g = m.backward(eval.cache.fc1(), fc_cache, &grad_logits)?;
            let bg = net.backbone.backward(&eval.cache, &g.features, None, None)?;
            (
                trunk_grad_list(bg),
                vec![g.hidden_w, g.hidden_b, g.out_w, g.out_b],
            )
        }
        NetHead::Am(m) => {
            let fwd = eval.am_fwd.as_ref().expect("am forward cached");
            let g = m.backward(
                eval.cache.block4(),
                eval.cache.block5(),
                eval.cache.fc1(),
                fwd,
                &grad_logits,
            )?;
            let bg = net.backbone.backward(
                &eval.cache,
                &g.global,
                Some(&g.gate4.tap),
                Some(&g.gate5.tap),
            )?;
            (
                trunk_grad_list(bg),
                vec![
                    g.gate4.proj_local,
                    g.gate4.proj_global,
                    g.gate4.score,
                    g.gate5.proj_local,
                    g.gate5.proj_global,
                    g.gate5.score,
                    g.head_w,
                    g.head_b,
                ],
            )
        }
    };
    Ok((trunk_grads, head_grads))
}

fn trunk_grad_list(bg: BackboneGrads<f32>) -> Vec<Tensor<f32>> {
    let mut out = Vec::with_capacity(bg.convs.len() * 2 + 2);
    for (gw, gb) in bg.convs {
        out.push(gw);
        out.push(gb);
    }
    out.push(bg.fc1_w);
    out.push(bg.fc1_b);
    out
}

fn apply_step(net: &mut Net, optimizer: &mut Optimizer, config: &TrainConfig, trunk_grads: Vec<Tensor<f32>>, head_grads: Vec<Tensor<f32>>) {
    let trunk_lr = if config.freeze_trunk { 0.0 } else { config.lr_trunk };
    let Net { backbone, head } = net;
    let mut trunk_params: Vec<&mut Tensor<f32>> = Vec::new();
    for layer in backbone.convs.iter_mut() {
        trunk_params.push(&mut layer.weight);
        trunk_params.push(&mut layer.bias);
    }
    trunk_params.push(&mut backbone.fc1_w);
    trunk_params.push(&mut backbone.fc1_b);

    let head_params: Vec<&mut Tensor<f32>> = match head {
        NetHead::Fc(m) => vec![&mut m.hidden_w, &mut m.hidden_b, &mut m.out_w, &mut m.out_b],
        NetHead::Am(m) => vec![
            &mut m.gate4.proj_local,
            &mut m.gate4.proj_global,
            &mut m.gate4.score,
            &mut m.gate5.proj_local,
            &mut m.gate5.proj_global,
            &mut m.gate5.score,
            &mut m.head_w,
            &mut m.head_b,
        ],
    };

    let mut groups = [
        ParamGroup {
            lr: trunk_lr,
            params: trunk_params,
            grads: trunk_grads,
        },
        ParamGroup {
            lr: config.lr_head,
            params: head_params,
            grads: head_grads,
        },
    ];
    optimizer.step(&mut groups);
}

fn accuracy_from_logits(logits: &Tensor<f32>, labels: &[usize]) -> usize {
    let k = logits.shape()[1];
    logits
        .data()
        .chunks(k)
        .zip(labels)
        .filter(|(row, &l)| argmax_row(row) == l)
        .count()
}

/// Loss and accuracy over a split without touching parameters.
fn evaluate(
    net: &Net,
    split: &[LabeledImage],
    batch_size: usize,
    stats: Option<&mut MapStats>,
) -> Result<(f64, f64), HeadError> {
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    let mut stats = stats;
    for chunk in split.chunks(batch_size) {
        let imgs: Vec<&SpecImage> = chunk.iter().map(|s| &s.image).collect();
        let labels: Vec<usize> = chunk.iter().map(|s| s.label).collect();
        let batch = net.backbone.batch_from_images(&imgs)?;
        let eval = net.forward_with_loss(&batch, &labels, stats.as_deref_mut())?;
        loss_sum += eval.loss * chunk.len() as f64;
        correct += accuracy_from_logits(&eval.logits, &labels);
    }
    Ok((
        loss_sum / split.len() as f64,
        correct as f64 / split.len() as f64,
    ))
}

/// Run the epoch loop and return the best-validation checkpoint with
/// its history. Deterministic for a fixed config and seed.
pub fn train_net(
    mut net: Net,
    train: &[LabeledImage],
    val: &[LabeledImage],
    config: &TrainConfig,
) -> Result<(Net, TrainHistory), HeadError> {
    config.validate()?;
    if train.is_empty() {
        return Err(HeadError::EmptySplit { which: "train" });
    }
    if val.is_empty() {
        return Err(HeadError::EmptySplit { which: "val" });
    }
    let track_maps = matches!(net.head, NetHead::Am(_));
    let mut map_stats = track_maps.then(MapStats::new);
    let mut optimizer = Optimizer::new(config.optimizer);
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(Net, usize, f64)> = None;
    let mut since_best = 0usize;

    let mut indices: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..config.epochs {
        let mut rng = rng_from_seed(derive_seed(config.seed, &format!("train/epoch/{epoch}")));
        indices.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in indices.chunks(config.batch_size) {
            let imgs: Vec<&SpecImage> = chunk.iter().map(|&i| &train[i].image).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| train[i].label).collect();
            let batch = net.backbone.batch_from_images(&imgs)?;
            let eval = net.forward_with_loss(&batch, &labels, map_stats.as_mut())?;
            loss_sum += eval.loss * chunk.len() as f64;
            correct += accuracy_from_logits(&eval.logits, &labels);
            let (trunk_grads, head_grads) = grads_for_step(&net, &labels, &eval)?;
            apply_step(&mut net, &mut optimizer, config, trunk_grads, head_grads);
        }

        let (val_loss, val_acc) = evaluate(&net, val, config.batch_size, map_stats.as_mut())?;
        history.push(EpochStats {
            train_loss: loss_sum / train.len() as f64,
            train_acc: correct as f64 / train.len() as f64,
            val_loss,
            val_acc,
        });

        let improved = best.as_ref().map_or(true, |(_, _, acc)| val_acc > *acc);
        if improved {
            best = Some((net.clone(), epoch, val_acc));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.early_stop_patience {
                break;
            }
        }
    }

    let (best_net, best_epoch, best_val_acc) = best.expect("at least one epoch ran");
    Ok((
        best_net,
        TrainHistory {
            epochs: history,
            best_epoch,
            best_val_acc,
            map_stats,
        },
    ))
}

/// fc1 descriptors for a set of images, in f64 rows for the SVM path.
pub fn extract_fc1(
    backbone: &Backbone<f32>,
    images: &[&SpecImage],
    batch_size: usize,
) -> Result<Tensor<f64>, HeadError> {
    assert!(batch_size > 0);
    let fc_dim = backbone.config.fc_dim;
    let mut data = Vec::with_capacity(images.len() * fc_dim);
    for chunk in images.chunks(batch_size) {
        let batch = backbone.batch_from_images(chunk)?;
        let cache = backbone.forward_batch(&batch)?;
        data.extend(cache.fc1().data().iter().map(|&v| v as f64));
    }
    Ok(Tensor::from_vec(&[images.len(), fc_dim], data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::build_am;
    use crate::backbone::{build, BackboneConfig, Variant};
    use crate::heads::build_fc;
    use crate::raster::Raster;
    use crate::spectro::SpectroParams;

    /// Pocket-size trunk so unit tests stay quick.
    fn tiny_config() -> BackboneConfig {
        BackboneConfig {
            variant: Variant::Mini,
            block_channels: [2, 2, 3, 4, 4],
            convs_per_block: [1, 1, 1, 1, 1],
            input_hw: (32, 32),
            fc_dim: 8,
            input_mean: [0.5; 3],
        }
    }

    /// Class k lights a distinct horizontal band.
    fn banded_image(class: usize, jitter: f32) -> SpecImage {
        let mut r = Raster::new(32, 32).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let lit = y >= class * 10 && y < class * 10 + 8;
                let v = if lit { 0.9 } else { 0.1 } + jitter * (x as f32 / 320.0);
                r.set(y, x, [v, v * 0.8, v * 0.5]);
            }
        }
        SpecImage {
            pixels: r,
            params: SpectroParams::mini(),
            source_path: format!("band{class}"),
        }
    }

    fn banded_set(per_class: usize, classes: usize) -> Vec<LabeledImage> {
        let mut out = Vec::new();
        for class in 0..classes {
            for j in 0..per_class {
                out.push(LabeledImage {
                    image: banded_image(class, j as f32 * 0.3),
                    label: class,
                });
            }
        }
        out
    }

    fn fc_net(seed: u64) -> Net {
        let cfg = tiny_config();
        Net {
            backbone: build(&cfg, seed).unwrap(),
            head: NetHead::Fc(build_fc(cfg.fc_dim, 6, 3, seed)),
        }
    }

    fn am_net(seed: u64) -> Net {
        let cfg = tiny_config();
        Net {
            backbone: build(&cfg, seed).unwrap(),
            head: NetHead::Am(build_am(
                cfg.block_channels[3],
                cfg.block_channels[4],
                cfg.fc_dim,
                4,
                3,
                seed,
            )),
        }
    }

    fn quick_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 4,
            seed: 5,
            ..TrainConfig::mini_scratch()
        }
    }

    #[test]
    fn frozen_trunk_stays_bit_identical() {
        let net = fc_net(1);
        let before: Vec<Vec<u32>> = net
            .backbone
            .named_params()
            .iter()
            .map(|(_, t)| t.data().iter().map(|v| v.to_bits()).collect())
            .collect();
        let train = banded_set(3, 3);
        let val = banded_set(1, 3);
        let config = TrainConfig {
            freeze_trunk: true,
            ..quick_config(2)
        };
        let (trained, _) = train_net(net, &train, &val, &config).unwrap();
        let after: Vec<Vec<u32>> = trained
            .backbone
            .named_params()
            .iter()
            .map(|(_, t)| t.data().iter().map(|v| v.to_bits()).collect())
            .collect();
        assert_eq!(before, after);
        // the head must still have moved
        let NetHead::Fc(m) = &trained.head else { unreachable!() };
        let fresh = build_fc(8, 6, 3, 1);
        assert_ne!(m.out_w.data(), fresh.out_w.data());
    }

    #[test]
    fn same_seed_and_config_reproduce_history_exactly() {
        let train = banded_set(3, 3);
        let val = banded_set(1, 3);
        let config = quick_config(3);
        let (net_a, hist_a) = train_net(fc_net(2), &train, &val, &config).unwrap();
        let (net_b, hist_b) = train_net(fc_net(2), &train, &val, &config).unwrap();
        assert_eq!(hist_a.epochs.len(), hist_b.epochs.len());
        for (a, b) in hist_a.epochs.iter().zip(&hist_b.epochs) {
            assert_eq!(a.train_loss, b.train_loss);
            assert_eq!(a.val_acc, b.val_acc);
        }
        for ((_, ta), (_, tb)) in net_a
            .backbone
            .named_params()
            .iter()
            .zip(net_b.backbone.named_params())
        {
            assert_eq!(ta.data(), tb.data());
        }
    }

    #[test]
    fn losses_fall_early_for_both_heads() {
        let train = banded_set(4, 3);
        let val = banded_set(1, 3);
        let config = quick_config(5);
        for net in [fc_net(3), am_net(3)] {
            let (_, hist) = train_net(net, &train, &val, &config).unwrap();
            let first = hist.epochs.first().unwrap().train_loss;
            let last = hist.epochs.last().unwrap().train_loss;
            assert!(
                last < first,
                "loss should fall over 5 epochs: {first} -> {last}"
            );
        }
    }

    #[test]
    fn attention_maps_stay_normalized_during_training() {
        let train = banded_set(3, 3);
        let val = banded_set(1, 3);
        let (_, hist) = train_net(am_net(7), &train, &val, &quick_config(3)).unwrap();
        let stats = hist.map_stats.expect("am mode tracks maps");
        assert!(stats.maps_seen > 0);
        assert!((stats.min_sum - 1.0).abs() < 1e-5, "min sum {}", stats.min_sum);
        assert!((stats.max_sum - 1.0).abs() < 1e-5, "max sum {}", stats.max_sum);
        assert!(stats.min_entry >= 0.0);
    }

    #[test]
    fn empty_splits_are_rejected() {
        let data = banded_set(2, 3);
        assert!(matches!(
            train_net(fc_net(1), &[], &data, &quick_config(1)),
            Err(HeadError::EmptySplit { which: "train" })
        ));
        assert!(matches!(
            train_net(fc_net(1), &data, &[], &quick_config(1)),
            Err(HeadError::EmptySplit { which: "val" })
        ));
    }

    #[test]
    fn prediction_is_pure() {
        let net = fc_net(9);
        let img = banded_image(1, 0.2);
        let (a, la) = net.predict(&[&img]).unwrap();
        let (b, lb) = net.predict(&[&img]).unwrap();
        assert_eq!(a, b);
        assert_eq!(la.data(), lb.data());
    }

    #[test]
    fn checkpoint_round_trip_preserves_predictions() {
        let train = banded_set(3, 3);
        let val = banded_set(1, 3);
        let (net, _) = train_net(am_net(4), &train, &val, &quick_config(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.weights");
        net.save(&path).unwrap();

        let mut restored = am_net(1234);
        let container = Container::read(&path).unwrap();
        restored.read_from(&container).unwrap();
        assert_eq!(container.meta_value("head.mode"), Some("am"));
        let img = banded_image(2, 0.1);
        assert_eq!(
            net.predict(&[&img]).unwrap().1.data(),
            restored.predict(&[&img]).unwrap().1.data()
        );
    }

    #[test]
    fn fc1_features_have_expected_shape() {
        let net = fc_net(6);
        let imgs = banded_set(2, 2);
        let refs: Vec<&SpecImage> = imgs.iter().map(|s| &s.image).collect();
        let feats = extract_fc1(&net.backbone, &refs, 3).unwrap();
        assert_eq!(feats.shape(), &[4, 8]);
        // purity: batch size must not change values
        let feats2 = extract_fc1(&net.backbone, &refs, 1).unwrap();
        for (a, b) in feats.data().iter().zip(feats2.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
