//! Experiment protocols. A fold plan partitions a corpus; each fold
//! trains on the complement's 70% sub-split, early-stops on the other
//! 30%, and tests on the held-out fold. Cross-corpus runs train once on
//! one corpus and test on another, keeping only normal-style neutral
//! clips in the test set. Every image load is tagged with its phase so
//! tests can prove training never touches held-out files.

mod folds;
mod metrics;

pub use folds::{make_folds, FoldKind, FoldPlan, FoldSplit};
pub use metrics::{
    aggregate_reports, compute_metrics, confusion_csv, confusion_heatmap, confusion_matrix,
    render_table, report_from_confusion, ClassMetrics, EvalReport, FoldStats,
};

use crate::audio::{load_wav, resample, AudioError, DatasetManifest, Emotion, CANONICAL_RATE_HZ};
use crate::backbone::{build, Backbone, BackboneConfig, BackboneError};
use crate::attention::build_am;
use crate::heads::{
    build_fc, extract_fc1, svc_train, train_net, HeadError, HeadMode, LabeledImage, Net, NetHead,
    SvcConfig, SvcModel, TrainConfig, TrainHistory,
};
use crate::nncore::{Container, ContainerError, ContainerWriter};
use crate::seeded::derive_seed;
use crate::spectro::{extract, SpecImage, SpectroError, SpectroParams};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("grouped folds need at least {needed} speakers, found {found}")]
    TooFewSpeakers { found: usize, needed: usize },
    #[error("class {label} has {count} sample(s); folding needs at least 2")]
    TooFewSamplesPerClass { label: String, count: usize },
    #[error("length mismatch: {truths} truths vs {preds} predictions")]
    LengthMismatch { truths: usize, preds: usize },
    #[error("label spaces incompatible: {detail}")]
    LabelSpaceMismatch { detail: String },
    #[error(transparent)]
    Head(#[from] HeadError),
    #[error(transparent)]
    Backbone(#[from] BackboneError),
    #[error(transparent)]
    Spectro(#[from] SpectroError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Container(#[from] ContainerError),
}

/// Why an image is being loaded. Protocol code tags every load so a
/// recording store can verify that no held-out file is read while its
/// fold trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadPhase {
    Adhoc,
    Train { fold: usize },
    Test { fold: usize },
}

/// Source of spectrogram images for the samples of one manifest.
pub trait ClipStore: Sync {
    fn manifest(&self) -> &DatasetManifest;
    fn image(&self, idx: usize, phase: LoadPhase) -> Result<SpecImage, EvalError>;

    fn len(&self) -> usize {
        self.manifest().samples.len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Loads audio from disk and extracts spectrograms on demand.
pub struct ExtractStore {
    manifest: DatasetManifest,
    params: SpectroParams,
}

impl ExtractStore {
    pub fn new(manifest: DatasetManifest, params: SpectroParams) -> ExtractStore {
        ExtractStore { manifest, params }
    }

    pub fn params(&self) -> &SpectroParams {
        &self.params
    }
}

impl ClipStore for ExtractStore {
    fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    fn image(&self, idx: usize, _phase: LoadPhase) -> Result<SpecImage, EvalError> {
        let sample = &self.manifest.samples[idx];
        let path = self.manifest.resolve(sample);
        let clip = load_wav(&path)?;
        let clip = resample(&clip, CANONICAL_RATE_HZ);
        Ok(extract(&clip, &self.params)?)
    }
}

/// All images held in memory. Spares repeated DSP when folds revisit
/// the same clips.
pub struct MemoryStore {
    manifest: DatasetManifest,
    images: Vec<SpecImage>,
}

impl MemoryStore {
    pub fn new(manifest: DatasetManifest, images: Vec<SpecImage>) -> MemoryStore {
        assert_eq!(
            manifest.samples.len(),
            images.len(),
            "one image per sample"
        );
        MemoryStore { manifest, images }
    }

    /// Extracts every clip once up front.
    pub fn precompute(store: &dyn ClipStore) -> Result<MemoryStore, EvalError> {
        let images = (0..store.len())
            .map(|i| store.image(i, LoadPhase::Adhoc))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MemoryStore {
            manifest: store.manifest().clone(),
            images,
        })
    }
}

impl ClipStore for MemoryStore {
    fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    fn image(&self, idx: usize, _phase: LoadPhase) -> Result<SpecImage, EvalError> {
        Ok(self.images[idx].clone())
    }
}

/// Full model recipe: trunk architecture, head kind, and training
/// hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub backbone: BackboneConfig,
    pub mode: HeadMode,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub svc: SvcConfig,
    /// attention gate projection width (attended head only)
    pub gate_dim: usize,
    /// hidden width of the softmax head
    pub fc_hidden: usize,
    /// optional pretrained trunk weights to start from
    #[serde(default)]
    pub trunk_weights: Option<PathBuf>,
}

impl ModelSpec {
    pub fn mini(mode: HeadMode) -> ModelSpec {
        ModelSpec {
            backbone: BackboneConfig::mini(),
            mode,
            train: TrainConfig::mini_scratch(),
            svc: SvcConfig::default(),
            gate_dim: 64,
            fc_hidden: 64,
            trunk_weights: None,
        }
    }

    pub fn full(mode: HeadMode) -> ModelSpec {
        ModelSpec {
            backbone: BackboneConfig::full(),
            mode,
            train: TrainConfig::finetune(),
            svc: SvcConfig::default(),
            gate_dim: 256,
            fc_hidden: 256,
            trunk_weights: None,
        }
    }
}

/// A fitted classifier: either a trainable net or a trunk plus linear
/// one-vs-rest classifiers on its fc1 features.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Net(Net),
    Svc {
        backbone: Backbone<f32>,
        model: SvcModel,
    },
}

impl TrainedModel {
    pub fn mode_name(&self) -> &'static str {
        match self {
            TrainedModel::Net(net) => net.mode_name(),
            TrainedModel::Svc { .. } => "svc",
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            TrainedModel::Net(net) => net.classes(),
            TrainedModel::Svc { model, .. } => model.classes(),
        }
    }

    pub fn predict_images(&self, images: &[&SpecImage]) -> Result<Vec<usize>, EvalError> {
        match self {
            TrainedModel::Net(net) => Ok(net.predict(images)?.0),
            TrainedModel::Svc { backbone, model } => {
                let features = extract_fc1(backbone, images, 16)?;
                Ok(model.predict(&features))
            }
        }
    }

    pub fn write_into(&self, writer: &mut ContainerWriter) {
        match self {
            TrainedModel::Net(net) => net.write_into(writer),
            TrainedModel::Svc { backbone, model } => {
                writer.meta("head.mode", "svc");
                backbone.write_into(writer);
                model.write_into(writer);
            }
        }
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), ContainerError> {
        let mut writer = ContainerWriter::new();
        self.write_into(&mut writer);
        writer.write(path)
    }

    /// Rebuilds the architecture from `spec` and loads the weights.
    pub fn read_from(
        spec: &ModelSpec,
        classes: usize,
        container: &Container,
    ) -> Result<TrainedModel, EvalError> {
        match spec.mode {
            HeadMode::Svc => {
                let mut backbone = build(&spec.backbone, 0)?;
                backbone.read_from(container)?;
                let model = SvcModel::read_from(container)?;
                Ok(TrainedModel::Svc { backbone, model })
            }
            _ => {
                let mut net = build_net(spec, classes, 0)?;
                net.read_from(container)?;
                Ok(TrainedModel::Net(net))
            }
        }
    }
}

/// Fresh net with seeded initialization (and optional pretrained trunk).
pub fn build_net(spec: &ModelSpec, classes: usize, seed: u64) -> Result<Net, EvalError> {
    let mut backbone = build(&spec.backbone, derive_seed(seed, "net/trunk"))?;
    if let Some(path) = &spec.trunk_weights {
        backbone.load_weights(path)?;
    }
    let fc_dim = spec.backbone.fc_dim;
    let head_seed = derive_seed(seed, "net/head");
    let head = match spec.mode {
        HeadMode::Fc => NetHead::Fc(build_fc(fc_dim, spec.fc_hidden, classes, head_seed)),
        HeadMode::Am => NetHead::Am(build_am(
            spec.backbone.block_channels[3],
            spec.backbone.block_channels[4],
            fc_dim,
            spec.gate_dim,
            classes,
            head_seed,
        )),
        HeadMode::Svc => {
            return Err(EvalError::LabelSpaceMismatch {
                detail: "svc mode has no trainable head; fit it via run_fold/cross_corpus".into(),
            })
        }
    };
    Ok(Net { backbone, head })
}

/// Forces every styled row to the NEUTRAL label, merging the five
/// speaking-style categories into one class. Styles stay recorded.
pub fn collapse_neutral(manifest: &DatasetManifest) -> DatasetManifest {
    let mut out = manifest.clone();
    for sample in &mut out.samples {
        if sample.style.is_some() {
            sample.label = Emotion::Neutral;
        }
    }
    out
}

/// Indices eligible as cross-corpus test rows: everything except
/// neutral clips spoken in a non-normal style.
pub fn normal_neutral_test_indices(manifest: &DatasetManifest) -> Vec<usize> {
    use crate::audio::Style;
    manifest
        .samples
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            s.label != Emotion::Neutral || s.style.map_or(true, |st| st == Style::Normal)
        })
        .map(|(i, _)| i)
        .collect()
}

fn class_index(classes: &[Emotion], label: Emotion) -> usize {
    classes
        .iter()
        .position(|&c| c == label)
        .expect("label present in class list")
}

fn label_names(classes: &[Emotion]) -> Vec<String> {
    classes.iter().map(|e| e.name().to_string()).collect()
}

/// One test-set decision, traceable back to its manifest row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub index: usize,
    pub fold: usize,
    pub truth: Emotion,
    pub pred: Emotion,
}

pub struct FoldOutcome {
    pub fold: usize,
    pub report: EvalReport,
    pub predictions: Vec<Prediction>,
    pub model: TrainedModel,
    pub history: Option<TrainHistory>,
}

pub struct CvOutcome {
    pub aggregate: EvalReport,
    pub folds: Vec<FoldOutcome>,
}

impl CvOutcome {
    pub fn predictions(&self) -> Vec<Prediction> {
        let mut all: Vec<Prediction> = self
            .folds
            .iter()
            .flat_map(|f| f.predictions.iter().cloned())
            .collect();
        all.sort_by_key(|p| p.index);
        all
    }
}

fn fit_model(
    spec: &ModelSpec,
    classes: &[Emotion],
    seed: u64,
    train: &[LabeledImage],
    val: &[LabeledImage],
) -> Result<(TrainedModel, Option<TrainHistory>), EvalError> {
    match spec.mode {
        HeadMode::Svc => {
            let mut backbone = build(&spec.backbone, derive_seed(seed, "net/trunk"))?;
            if let Some(path) = &spec.trunk_weights {
                backbone.load_weights(path)?;
            }
            let images: Vec<&SpecImage> = train.iter().map(|li| &li.image).collect();
            let features = extract_fc1(&backbone, &images, spec.train.batch_size.max(1))?;
            let labels: Vec<usize> = train.iter().map(|li| li.label).collect();
            let config = SvcConfig {
                seed: derive_seed(seed, "svc"),
                ..spec.svc
            };
            let (model, _) = svc_train(&features, &labels, classes.len(), &config)?;
            Ok((TrainedModel::Svc { backbone, model }, None))
        }
        _ => {
            let net = build_net(spec, classes.len(), seed)?;
            let config = TrainConfig {
                seed,
                ..spec.train.clone()
            };
            let (net, history) = train_net(net, train, val, &config)?;
            Ok((TrainedModel::Net(net), Some(history)))
        }
    }
}

fn load_set(
    store: &dyn ClipStore,
    classes: &[Emotion],
    indices: &[usize],
    phase: LoadPhase,
) -> Result<Vec<LabeledImage>, EvalError> {
    indices
        .iter()
        .map(|&i| {
            Ok(LabeledImage {
                image: store.image(i, phase)?,
                label: class_index(classes, store.manifest().samples[i].label),
            })
        })
        .collect()
}

/// Trains on one fold's complement and tests on the fold. The linear
/// classifier route uses the same 70% sub-split as the nets so every
/// head sees identical training data.
pub fn run_fold(
    store: &dyn ClipStore,
    plan: &FoldPlan,
    fold: usize,
    spec: &ModelSpec,
) -> Result<FoldOutcome, EvalError> {
    let manifest = store.manifest();
    let classes = manifest.present_labels();
    let split = plan.split(fold);
    let fold_seed = derive_seed(spec.train.seed, &format!("fold/{fold}"));

    let train_set = load_set(store, &classes, &split.train, LoadPhase::Train { fold })?;
    let val_set = load_set(store, &classes, &split.val, LoadPhase::Train { fold })?;
    let (model, history) = fit_model(spec, &classes, fold_seed, &train_set, &val_set)?;

    let test_set = load_set(store, &classes, &split.test, LoadPhase::Test { fold })?;
    let images: Vec<&SpecImage> = test_set.iter().map(|li| &li.image).collect();
    let preds = model.predict_images(&images)?;
    let truths: Vec<usize> = test_set.iter().map(|li| li.label).collect();

    let mut report = compute_metrics(&truths, &preds, &label_names(&classes))?;
    report.experiment = format!("fold-{fold}/{}", model.mode_name());
    let predictions = split
        .test
        .iter()
        .zip(&preds)
        .map(|(&index, &p)| Prediction {
            index,
            fold,
            truth: manifest.samples[index].label,
            pred: classes[p],
        })
        .collect();

    Ok(FoldOutcome {
        fold,
        report,
        predictions,
        model,
        history,
    })
}

/// Runs every fold of the plan and aggregates: the joint confusion is
/// the elementwise sum over folds, and fold statistics summarize the
/// per-fold accuracies.
pub fn run_cv(
    store: &dyn ClipStore,
    plan: &FoldPlan,
    spec: &ModelSpec,
) -> Result<CvOutcome, EvalError> {
    let names = label_names(&store.manifest().present_labels());
    let mut fold_outcomes = Vec::with_capacity(plan.k);
    for fold in 0..plan.k {
        fold_outcomes.push(run_fold(store, plan, fold, spec)?);
    }
    let reports: Vec<EvalReport> = fold_outcomes.iter().map(|f| f.report.clone()).collect();
    let mut aggregate = aggregate_reports(&reports, &names);
    aggregate.experiment = format!("cv-{}fold/{}", plan.k, fold_outcomes[0].model.mode_name());
    Ok(CvOutcome {
        aggregate,
        folds: fold_outcomes,
    })
}

pub struct CrossOutcome {
    pub report: EvalReport,
    pub predictions: Vec<Prediction>,
    pub model: TrainedModel,
    pub history: Option<TrainHistory>,
    /// test-manifest rows excluded by the normal-neutral filter
    pub excluded: usize,
}

/// Trains one model on a 70/30 split of the corpus and reports metrics
/// on the 30% side. That side also drives early stopping, so the
/// numbers are validation metrics, not a held-out test.
pub fn holdout(store: &dyn ClipStore, spec: &ModelSpec) -> Result<CrossOutcome, EvalError> {
    let manifest = store.manifest();
    let classes = manifest.present_labels();
    let seed = derive_seed(spec.train.seed, "holdout");
    let by_class = folds::group_by_class(manifest, None);
    let (train_idx, val_idx) = folds::seventy_thirty(&by_class, seed, "holdout/subsplit");

    let train_set = load_set(store, &classes, &train_idx, LoadPhase::Train { fold: 0 })?;
    let val_set = load_set(store, &classes, &val_idx, LoadPhase::Train { fold: 0 })?;
    let (model, history) = fit_model(spec, &classes, seed, &train_set, &val_set)?;

    let images: Vec<&SpecImage> = val_set.iter().map(|li| &li.image).collect();
    let preds = model.predict_images(&images)?;
    let truths: Vec<usize> = val_set.iter().map(|li| li.label).collect();
    let mut report = compute_metrics(&truths, &preds, &label_names(&classes))?;
    report.experiment = format!("holdout/{}", model.mode_name());
    let predictions = val_idx
        .iter()
        .zip(&preds)
        .map(|(&index, &p)| Prediction {
            index,
            fold: 0,
            truth: manifest.samples[index].label,
            pred: classes[p],
        })
        .collect();

    Ok(CrossOutcome {
        report,
        predictions,
        model,
        history,
        excluded: 0,
    })
}

/// Trains once on all of corpus A (with an internal 70/30 split for
/// early stopping) and tests on corpus B. Neutral test clips spoken in
/// a non-normal style are excluded; training keeps all styles.
pub fn cross_corpus(
    train_store: &dyn ClipStore,
    test_store: &dyn ClipStore,
    spec: &ModelSpec,
) -> Result<CrossOutcome, EvalError> {
    let train_manifest = train_store.manifest();
    let test_manifest = test_store.manifest();
    let classes = train_manifest.present_labels();

    let test_indices = normal_neutral_test_indices(test_manifest);
    let mut missing: Vec<&str> = test_indices
        .iter()
        .map(|&i| test_manifest.samples[i].label)
        .filter(|l| !classes.contains(l))
        .map(|l| l.name())
        .collect();
    missing.sort_unstable();
    missing.dedup();
    if !missing.is_empty() {
        return Err(EvalError::LabelSpaceMismatch {
            detail: format!(
                "test corpus {} has labels [{}] never seen while training on {}",
                test_manifest.name,
                missing.join(", "),
                train_manifest.name
            ),
        });
    }

    let seed = derive_seed(spec.train.seed, "cross");
    let by_class = folds::group_by_class(train_manifest, None);
    let (train_idx, val_idx) = folds::seventy_thirty(&by_class, seed, "cross/subsplit");

    let train_set = load_set(train_store, &classes, &train_idx, LoadPhase::Train { fold: 0 })?;
    let val_set = load_set(train_store, &classes, &val_idx, LoadPhase::Train { fold: 0 })?;
    let (model, history) = fit_model(spec, &classes, seed, &train_set, &val_set)?;

    let test_set = load_set(test_store, &classes, &test_indices, LoadPhase::Test { fold: 0 })?;
    let images: Vec<&SpecImage> = test_set.iter().map(|li| &li.image).collect();
    let preds = model.predict_images(&images)?;
    let truths: Vec<usize> = test_set.iter().map(|li| li.label).collect();

    let mut report = compute_metrics(&truths, &preds, &label_names(&classes))?;
    report.experiment = format!(
        "cross/{}-to-{}/{}",
        train_manifest.name,
        test_manifest.name,
        model.mode_name()
    );
    let predictions = test_indices
        .iter()
        .zip(&preds)
        .map(|(&index, &p)| Prediction {
            index,
            fold: 0,
            truth: test_manifest.samples[index].label,
            pred: classes[p],
        })
        .collect();

    Ok(CrossOutcome {
        report,
        predictions,
        model,
        history,
        excluded: test_manifest.samples.len() - test_indices.len(),
    })
}
