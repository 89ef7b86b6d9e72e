//! Experiment configuration file. JSON with an explicit schema version;
//! the content digest of the resolved config is stamped into every
//! artifact a run emits.

use super::CliError;
use crate::digest::sha256_hex;
use crate::eval::{FoldKind, ModelSpec};
use crate::spectro::SpectroParams;
use crate::audio::CANONICAL_RATE_HZ;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// manifest CSV of the corpus to extract from / train on
    pub manifest: PathBuf,
    /// second corpus for cross-corpus runs
    #[serde(default)]
    pub test_manifest: Option<PathBuf>,
    /// merge styled rows into the single NEUTRAL class on load
    #[serde(default)]
    pub collapse_neutral: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub kind: FoldKind,
    pub k: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> EvalConfig {
        EvalConfig {
            kind: FoldKind::BySpeaker,
            k: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub dataset: DatasetConfig,
    pub spectro: SpectroParams,
    pub model: ModelSpec,
    #[serde(default)]
    pub eval: EvalConfig,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig, CliError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| CliError::Config {
            key: "--config".into(),
            detail: format!("{}: {e}", path.display()),
        })?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Config {
            key: "--config".into(),
            detail: format!("{}: {e}", path.display()),
        })
    }

    /// Applies command-line overrides. The seed replaces every seed in
    /// the config so one flag controls the whole run.
    pub fn apply_overrides(&mut self, out: Option<&Path>, seed: Option<u64>) {
        if let Some(out) = out {
            self.output_dir = out.to_path_buf();
        }
        if let Some(seed) = seed {
            self.eval.seed = seed;
            self.model.train.seed = seed;
            self.model.svc.seed = seed;
        }
    }

    /// Content digest of the resolved config (after overrides).
    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, detail: String| {
            Err(CliError::Config {
                key: key.into(),
                detail,
            })
        };
        if self.schema_version != SCHEMA_VERSION {
            return bad(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            );
        }
        if self.dataset.manifest.as_os_str().is_empty() {
            return bad("dataset.manifest", "path is empty".into());
        }
        if !self.dataset.manifest.exists() {
            return bad(
                "dataset.manifest",
                format!("{} does not exist", self.dataset.manifest.display()),
            );
        }
        if let Some(t) = &self.dataset.test_manifest {
            if !t.exists() {
                return bad(
                    "dataset.test_manifest",
                    format!("{} does not exist", t.display()),
                );
            }
        }
        if let Err(e) = self.spectro.validate(CANONICAL_RATE_HZ) {
            return bad("spectro", e.to_string());
        }
        if let Err(e) = self.model.backbone.validate() {
            return bad("model.backbone", e.to_string());
        }
        if self.model.train.epochs == 0 {
            return bad("model.train.epochs", "must be at least 1".into());
        }
        if self.model.train.batch_size == 0 {
            return bad("model.train.batch_size", "must be at least 1".into());
        }
        if self.eval.k < 2 {
            return bad("eval.k", format!("needs at least 2 folds, found {}", self.eval.k));
        }
        if self.output_dir.as_os_str().is_empty() {
            return bad("output_dir", "path is empty".into());
        }
        Ok(())
    }
}
