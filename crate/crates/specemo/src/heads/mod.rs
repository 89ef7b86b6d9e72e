//! Classifier heads over backbone features: a linear one-vs-rest SVM
//! on fc1 descriptors, a small softmax stack on fc1, and the attended
//! classifier, plus feature standardization and the training loops.

mod fc;
mod svc;
mod train;

pub use fc::{build_fc, FcCache, FcGrads, FcModel};
pub use svc::{svc_train, SvcClassReport, SvcConfig, SvcModel};
pub use train::{
    extract_fc1, train_net, EpochStats, LabeledImage, MapStats, Net, NetHead, TrainHistory,
};

use crate::backbone::BackboneError;
use crate::nncore::{NnError, Scalar, Tensor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HeadError {
    #[error("training requires at least two classes, found {found}")]
    SingleClass { found: usize },
    #[error("split has no {which} samples")]
    EmptySplit { which: &'static str },
    #[error("standardizer needs at least 2 rows, got {rows}")]
    TooFewRows { rows: usize },
    #[error(transparent)]
    Kernel(#[from] NnError),
    #[error(transparent)]
    Backbone(#[from] BackboneError),
}

/// Which classifier sits on the trunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadMode {
    Svc,
    Fc,
    Am,
}

/// Epoch-loop hyperparameters shared by the fc and attended heads.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: crate::nncore::OptimKind,
    /// learning rate for backbone parameters; 0 freezes the trunk
    pub lr_trunk: f64,
    pub lr_head: f64,
    pub seed: u64,
    /// epochs without a new best validation accuracy before stopping
    pub early_stop_patience: usize,
    pub freeze_trunk: bool,
}

impl TrainConfig {
    /// Desk-scale regime: the mini trunk trains from scratch.
    pub fn mini_scratch() -> TrainConfig {
        TrainConfig {
            epochs: 50,
            batch_size: 8,
            optimizer: crate::nncore::OptimKind::adam(),
            lr_trunk: 1e-3,
            lr_head: 1e-3,
            seed: 0,
            early_stop_patience: 10,
            freeze_trunk: false,
        }
    }

    /// Imported-weights regime: the whole trunk is unfrozen at a low
    /// learning rate while the head moves faster.
    pub fn finetune() -> TrainConfig {
        TrainConfig {
            lr_trunk: 1e-5,
            lr_head: 1e-4,
            ..TrainConfig::mini_scratch()
        }
    }

    pub fn validate(&self) -> Result<(), HeadError> {
        assert!(self.lr_head > 0.0, "lr_head must be positive");
        assert!(self.lr_trunk >= 0.0, "lr_trunk must be non-negative");
        assert!(self.epochs > 0 && self.batch_size > 0);
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig::mini_scratch()
    }
}

/// Per-dimension affine map fitted on a training split only.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Fit mean and population stddev per column. Constant columns are
/// floored at 1e-8 (and logged), so their standardized values are 0.
pub fn standardize_fit(features: &Tensor<f64>) -> Result<Standardizer, HeadError> {
    let (n, d) = (features.shape()[0], features.shape()[1]);
    if n < 2 {
        return Err(HeadError::TooFewRows { rows: n });
    }
    let mut mean = vec![0.0; d];
    for row in 0..n {
        for (m, v) in mean.iter_mut().zip(&features.data()[row * d..(row + 1) * d]) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut var = vec![0.0; d];
    for row in 0..n {
        for col in 0..d {
            let diff = features.data()[row * d + col] - mean[col];
            var[col] += diff * diff;
        }
    }
    let mut degenerate = 0usize;
    let std: Vec<f64> = var
        .iter()
        .map(|&v| {
            let s = (v / n as f64).sqrt();
            if s < 1e-8 {
                degenerate += 1;
                1e-8
            } else {
                s
            }
        })
        .collect();
    if degenerate > 0 {
        log::warn!("standardizer floored {degenerate} constant feature column(s)");
    }
    Ok(Standardizer { mean, std })
}

pub fn standardize_apply(standardizer: &Standardizer, features: &Tensor<f64>) -> Tensor<f64> {
    let d = standardizer.mean.len();
    assert_eq!(
        features.shape()[1],
        d,
        "feature width must match the fitted standardizer"
    );
    let n = features.shape()[0];
    let mut out = features.clone();
    for row in 0..n {
        for col in 0..d {
            let v = &mut out.data_mut()[row * d + col];
            *v = (*v - standardizer.mean[col]) / standardizer.std[col];
        }
    }
    out
}

/// Argmax with ties broken toward the lower class index.
pub fn argmax_row<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
