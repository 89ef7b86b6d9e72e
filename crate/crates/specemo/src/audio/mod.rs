//! Audio ingestion: WAV decoding, band-limited resampling to the 16 kHz
//! canonical rate, dataset manifests, and a seeded synthetic corpus
//! generator for desk-scale experiments.

mod manifest;
mod resample;
mod synth;
mod wav;

pub use manifest::{load_manifest, save_manifest};
pub use resample::resample;
pub use synth::{synth_dataset, SynthSpec};
pub use wav::{load_wav, parse_wav, wav_bytes_16bit, write_wav};

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Every clip is resampled to this rate on ingestion, making spectrogram
/// parameters corpus-independent.
pub const CANONICAL_RATE_HZ: u32 = 16_000;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("{path}: not a valid RIFF/WAVE file")]
    MalformedHeader { path: String },
    #[error("{path}: unsupported WAV encoding ({detail})")]
    UnsupportedEncoding { path: String, detail: String },
    #[error("{path}: WAV contains zero audio frames")]
    EmptyAudio { path: String },
    #[error("manifest {path}: missing required column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("manifest row {row}: unknown label `{value}`")]
    UnknownLabel { row: usize, value: String },
    #[error("manifest row {row}: unknown style `{value}`")]
    UnknownStyle { row: usize, value: String },
    #[error("manifest row {row}: style `{style}` on non-neutral label {label}")]
    StyleOnNonNeutral {
        row: usize,
        style: String,
        label: String,
    },
    #[error("manifest row {row}: empty speaker id")]
    EmptySpeaker { row: usize },
    #[error("manifest: duplicate path `{path}`")]
    DuplicatePath { path: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl AudioError {
    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        AudioError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// Mono PCM audio, samples in [-1,1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate_hz: u32,
    pub source_path: String,
}

impl AudioClip {
    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// The closed label set, in canonical order. All fold construction,
/// confusion matrices, and report rows use this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Disgust,
    Fear,
    Joy,
    Neutral,
    Sadness,
    Surprise,
}

impl Emotion {
    pub const ALL: [Emotion; 7] = [
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Joy,
        Emotion::Neutral,
        Emotion::Sadness,
        Emotion::Surprise,
    ];

    pub fn index(self) -> usize {
        Emotion::ALL
            .iter()
            .position(|&e| e == self)
            .expect("member of ALL")
    }

    /// Canonical lowercase name used in manifests and report JSON.
    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Neutral => "neutral",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
        }
    }

    /// Case-insensitive parse. `happiness` is accepted as an alias of
    /// `joy`: the two corpora name the same emotion differently.
    pub fn parse(s: &str) -> Option<Emotion> {
        match s.trim().to_ascii_lowercase().as_str() {
            "anger" => Some(Emotion::Anger),
            "disgust" => Some(Emotion::Disgust),
            "fear" => Some(Emotion::Fear),
            "joy" | "happiness" => Some(Emotion::Joy),
            "neutral" => Some(Emotion::Neutral),
            "sadness" => Some(Emotion::Sadness),
            "surprise" => Some(Emotion::Surprise),
            _ => None,
        }
    }
}

impl std::fmt::Display for Emotion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Speaking style of a neutral clip. Only NEUTRAL samples carry one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Fast,
    Slow,
    Soft,
    Loud,
    Normal,
}

impl Style {
    pub const ALL: [Style; 5] = [
        Style::Normal,
        Style::Fast,
        Style::Slow,
        Style::Soft,
        Style::Loud,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Style::Fast => "fast",
            Style::Slow => "slow",
            Style::Soft => "soft",
            Style::Loud => "loud",
            Style::Normal => "normal",
        }
    }

    /// Parses a style cell. Empty and `none` mean no style.
    pub fn parse(s: &str) -> Result<Option<Style>, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "none" => Ok(None),
            "fast" => Ok(Some(Style::Fast)),
            "slow" => Ok(Some(Style::Slow)),
            "soft" => Ok(Some(Style::Soft)),
            "loud" => Ok(Some(Style::Loud)),
            "normal" => Ok(Some(Style::Normal)),
            _ => Err(()),
        }
    }
}

impl std::fmt::Display for Style {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One dataset row: a clip path (relative to the manifest), its label,
/// the speaker, and the optional neutral speaking style.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub path: String,
    pub label: Emotion,
    pub speaker_id: String,
    pub style: Option<Style>,
}

/// A dataset: a name, the directory paths are relative to, and the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub root: PathBuf,
    pub samples: Vec<LabeledSample>,
}

impl DatasetManifest {
    /// The ordered label set shared by every dataset.
    pub fn label_set(&self) -> [Emotion; 7] {
        Emotion::ALL
    }

    /// Absolute path of a sample's audio file.
    pub fn resolve(&self, sample: &LabeledSample) -> PathBuf {
        self.root.join(&sample.path)
    }

    /// Distinct speaker ids in first-appearance order.
    pub fn speakers(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.samples {
            if !out.contains(&s.speaker_id.as_str()) {
                out.push(&s.speaker_id);
            }
        }
        out
    }

    /// Labels that actually occur in the manifest, in canonical order.
    pub fn present_labels(&self) -> Vec<Emotion> {
        Emotion::ALL
            .into_iter()
            .filter(|e| self.samples.iter().any(|s| s.label == *e))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emotion_order_is_fixed() {
        let names: Vec<&str> = Emotion::ALL.iter().map(|e| e.name()).collect();
        assert_eq!(
            names,
            ["anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise"]
        );
        for (i, e) in Emotion::ALL.iter().enumerate() {
            assert_eq!(e.index(), i);
        }
    }

    #[test]
    fn happiness_is_joy() {
        assert_eq!(Emotion::parse("HAPPINESS"), Some(Emotion::Joy));
        assert_eq!(Emotion::parse("Joy"), Some(Emotion::Joy));
        assert_eq!(Emotion::parse("boredom"), None);
    }

    #[test]
    fn style_parse_accepts_none_and_empty() {
        assert_eq!(Style::parse(""), Ok(None));
        assert_eq!(Style::parse("none"), Ok(None));
        assert_eq!(Style::parse("LOUD"), Ok(Some(Style::Loud)));
        assert!(Style::parse("whisper").is_err());
    }
}
