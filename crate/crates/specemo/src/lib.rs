//! Speech emotion recognition from rendered Mel-spectrogram images.
//!
//! The pipeline turns a speech clip into a square RGB spectrogram image,
//! pushes it through a small VGG-style convolutional backbone, and
//! classifies the resulting features with one of three heads:
//!
//! * `svc`: a linear one-vs-rest SVM over standardized fc1 features,
//! * `fc`: a fully connected softmax head trained jointly,
//! * `am`: the fc head plus two additive attention gates over the last
//!   two convolutional blocks, which also yield inspectable heatmaps.
//!
//! Everything downstream of the WAV bytes is deterministic: seeds are
//! derived from a single master seed, parallel reductions are ordered,
//! and artifacts are byte-identical across re-runs and thread counts.
//!
//! The `examples/` directory is the front door: each example is a
//! runnable walkthrough of one capability (corpus synthesis, spectrogram
//! extraction, gradient checking, training each head, speaker-grouped
//! cross-validation, cross-corpus transfer). The `specemo` binary wraps
//! the same entry points behind subcommands for scripted use.

pub mod attention;
pub mod audio;
pub mod backbone;
pub mod cli;
pub mod digest;
pub mod eval;
pub mod heads;
pub mod nncore;
pub mod raster;
pub mod seeded;
pub mod spectro;

pub use audio::{AudioClip, DatasetManifest, Emotion, LabeledSample, Style};
pub use spectro::{SpecImage, SpectroParams};
