//! Implementations behind the binary's subcommands. Every run writes
//! its artifacts under `output_dir/<run-id>`; the run id carries a
//! timestamp but file contents never do, so re-runs with one config
//! produce byte-identical artifacts.

use super::cache::ExtractCache;
use super::config::ExperimentConfig;
use super::CliError;
use crate::attention::export_map;
use crate::audio::{
    load_manifest, parse_wav, resample, synth_dataset, DatasetManifest, Emotion, SynthSpec,
    CANONICAL_RATE_HZ,
};
use crate::digest::sha256_hex;
use crate::eval::{
    collapse_neutral, confusion_csv, confusion_heatmap, cross_corpus, holdout, make_folds,
    render_table, run_cv, ClipStore, CrossOutcome, EvalReport, ExtractStore, MemoryStore,
    Prediction, TrainedModel,
};
use crate::heads::HeadMode;
use crate::nncore::{Container, ContainerWriter};
use crate::spectro::extract;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Fresh run directory `<output_dir>/<unix-seconds>-<digest prefix>`.
fn make_run_dir(config: &ExperimentConfig, digest: &str) -> Result<PathBuf, CliError> {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .expect("clock after epoch")
        .as_secs();
    let base = format!("{secs}-{}", &digest[..12]);
    for attempt in 0.. {
        let name = if attempt == 0 {
            base.clone()
        } else {
            format!("{base}.{attempt}")
        };
        let dir = config.output_dir.join(&name);
        if !dir.exists() {
            std::fs::create_dir_all(&dir)?;
            return Ok(dir);
        }
    }
    unreachable!()
}

fn start_run(config: &ExperimentConfig) -> Result<(PathBuf, String), CliError> {
    config.validate()?;
    let digest = config.digest();
    let dir = make_run_dir(config, &digest)?;
    write_json(&dir.join("config.json"), config)?;
    Ok((dir, digest))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(std::fs::write(path, text)?)
}

fn load_dataset(path: &Path, collapse: bool) -> Result<DatasetManifest, CliError> {
    let manifest = load_manifest(path)?;
    Ok(if collapse {
        collapse_neutral(&manifest)
    } else {
        manifest
    })
}

/// Loads the corpus and extracts every spectrogram up front; folds then
/// revisit images without repeating the DSP.
fn build_store(config: &ExperimentConfig, manifest_path: &Path) -> Result<MemoryStore, CliError> {
    let manifest = load_dataset(manifest_path, config.dataset.collapse_neutral)?;
    let extract = ExtractStore::new(manifest, config.spectro.clone());
    Ok(MemoryStore::precompute(&extract)?)
}

fn write_predictions(
    path: &Path,
    predictions: &[Prediction],
    manifest: &DatasetManifest,
    digest: &str,
) -> Result<(), CliError> {
    let mut out = format!("# config_digest={digest}\nindex,path,fold,truth,pred\n");
    for p in predictions {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.index,
            manifest.samples[p.index].path,
            p.fold,
            p.truth.name(),
            p.pred.name()
        ));
    }
    Ok(std::fs::write(path, out)?)
}

fn save_model(path: &Path, model: &TrainedModel, digest: &str) -> Result<(), CliError> {
    let mut writer = ContainerWriter::new();
    writer.meta("config.digest", digest);
    model.write_into(&mut writer);
    Ok(writer.write(path)?)
}

fn write_table(path: &Path, report: &EvalReport) -> Result<String, CliError> {
    let table = format!(
        "# config_digest={}\n{}",
        report.config_digest,
        render_table(report)
    );
    std::fs::write(path, &table)?;
    Ok(table)
}

pub struct ExtractSummary {
    pub run_dir: PathBuf,
    pub images: usize,
    pub cached: usize,
    pub failed: Vec<(String, String)>,
}

/// Renders one spectrogram image per clip plus an index CSV. Cached by
/// (audio digest, parameter digest); failures are collected so one bad
/// file never aborts the batch.
pub fn cmd_extract(config: &ExperimentConfig) -> Result<ExtractSummary, CliError> {
    use rayon::prelude::*;

    let (run_dir, digest) = start_run(config)?;
    let manifest = load_dataset(&config.dataset.manifest, config.dataset.collapse_neutral)?;
    let params_digest = sha256_hex(&serde_json::to_vec(&config.spectro)?);
    let mut cache = ExtractCache::open(&config.output_dir);
    let images_dir = run_dir.join("images");
    std::fs::create_dir_all(&images_dir)?;

    // pass 1: digest audio bytes and consult the cache
    let mut jobs: Vec<(usize, String, Option<Vec<u8>>, Option<Vec<u8>>)> = Vec::new();
    let mut failed: Vec<(String, String)> = Vec::new();
    for (i, sample) in manifest.samples.iter().enumerate() {
        let path = manifest.resolve(sample);
        match std::fs::read(&path) {
            Ok(bytes) => {
                let file_digest = sha256_hex(&bytes);
                match cache.lookup(&file_digest, &params_digest) {
                    Some(ppm) => jobs.push((i, file_digest, Some(ppm), None)),
                    None => jobs.push((i, file_digest, None, Some(bytes))),
                }
            }
            Err(e) => failed.push((sample.path.clone(), e.to_string())),
        }
    }

    // pass 2: DSP for the misses, in parallel
    let comment = format!("spectro_digest={params_digest}");
    let rendered: Vec<(usize, String, bool, Result<Vec<u8>, String>)> = jobs
        .into_par_iter()
        .map(|(i, file_digest, hit, bytes)| {
            if let Some(ppm) = hit {
                return (i, file_digest, true, Ok(ppm));
            }
            let result = (|| {
                let clip = parse_wav(&bytes.expect("bytes kept for misses"), &manifest.samples[i].path)
                    .map_err(|e| e.to_string())?;
                let clip = resample(&clip, CANONICAL_RATE_HZ);
                let image = extract(&clip, &config.spectro).map_err(|e| e.to_string())?;
                Ok(image.pixels.ppm_bytes(Some(&comment)))
            })();
            (i, file_digest, false, result)
        })
        .collect();

    // pass 3: write images, fill the cache, emit the index
    let mut index = format!("# config_digest={digest}\nindex,path,label,speaker,style,audio_digest,image\n");
    let mut images = 0usize;
    for (i, file_digest, was_hit, result) in rendered {
        let sample = &manifest.samples[i];
        match result {
            Ok(ppm) => {
                let stem = Path::new(&sample.path)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("clip{i}"));
                let name = format!("{i:04}-{stem}.ppm");
                std::fs::write(images_dir.join(&name), &ppm)?;
                if !was_hit {
                    cache.store(&file_digest, &params_digest, &ppm)?;
                }
                index.push_str(&format!(
                    "{i},{},{},{},{},{file_digest},images/{name}\n",
                    sample.path,
                    sample.label.name(),
                    sample.speaker_id,
                    sample.style.map(|s| s.name()).unwrap_or(""),
                ));
                images += 1;
            }
            Err(e) => failed.push((sample.path.clone(), e)),
        }
    }
    std::fs::write(run_dir.join("index.csv"), index)?;

    Ok(ExtractSummary {
        run_dir,
        images,
        cached: cache.hits,
        failed,
    })
}

pub struct RunArtifacts {
    pub run_dir: PathBuf,
    pub report: EvalReport,
    pub table: String,
}

fn finish_single(
    run_dir: PathBuf,
    digest: &str,
    manifest: &DatasetManifest,
    mut outcome: CrossOutcome,
) -> Result<RunArtifacts, CliError> {
    outcome.report.config_digest = digest.to_string();
    write_json(&run_dir.join("report.json"), &outcome.report)?;
    write_predictions(
        &run_dir.join("predictions.csv"),
        &outcome.predictions,
        manifest,
        digest,
    )?;
    if let Some(history) = &outcome.history {
        write_json(&run_dir.join("history.json"), history)?;
    }
    save_model(&run_dir.join("model.bin"), &outcome.model, digest)?;
    let table = write_table(&run_dir.join("table.txt"), &outcome.report)?;
    Ok(RunArtifacts {
        run_dir,
        report: outcome.report,
        table,
    })
}

/// Trains one model on a 70/30 split and reports validation metrics.
pub fn cmd_train(config: &ExperimentConfig) -> Result<RunArtifacts, CliError> {
    let (run_dir, digest) = start_run(config)?;
    let store = build_store(config, &config.dataset.manifest)?;
    let outcome = holdout(&store, &config.model)?;
    finish_single(run_dir, &digest, store.manifest(), outcome)
}

/// Full cross-validation per the config's fold plan.
pub fn cmd_eval(config: &ExperimentConfig) -> Result<RunArtifacts, CliError> {
    let (run_dir, digest) = start_run(config)?;
    let store = build_store(config, &config.dataset.manifest)?;
    let plan = make_folds(
        store.manifest(),
        config.eval.kind,
        config.eval.k,
        config.eval.seed,
    )?;
    let outcome = run_cv(&store, &plan, &config.model)?;

    for fold in &outcome.folds {
        let mut report = fold.report.clone();
        report.config_digest = digest.clone();
        write_json(&run_dir.join(format!("fold-{}.report.json", fold.fold)), &report)?;
        if let Some(history) = &fold.history {
            write_json(
                &run_dir.join(format!("fold-{}.history.json", fold.fold)),
                history,
            )?;
        }
        save_model(
            &run_dir.join(format!("fold-{}.model.bin", fold.fold)),
            &fold.model,
            &digest,
        )?;
    }

    let mut aggregate = outcome.aggregate.clone();
    aggregate.config_digest = digest.clone();
    write_json(&run_dir.join("report.json"), &aggregate)?;
    write_predictions(
        &run_dir.join("predictions.csv"),
        &outcome.predictions(),
        store.manifest(),
        &digest,
    )?;
    let table = write_table(&run_dir.join("table.txt"), &aggregate)?;
    Ok(RunArtifacts {
        run_dir,
        report: aggregate,
        table,
    })
}

/// Trains on the primary corpus and tests on the second one.
pub fn cmd_cross(config: &ExperimentConfig) -> Result<RunArtifacts, CliError> {
    let test_path = config.dataset.test_manifest.clone().ok_or(CliError::Config {
        key: "dataset.test_manifest".into(),
        detail: "cross-corpus runs need a second manifest".into(),
    })?;
    let (run_dir, digest) = start_run(config)?;
    let train_store = build_store(config, &config.dataset.manifest)?;
    let test_store = build_store(config, &test_path)?;
    let outcome = cross_corpus(&train_store, &test_store, &config.model)?;
    if outcome.excluded > 0 {
        log::info!(
            "excluded {} styled neutral clip(s) from the test set",
            outcome.excluded
        );
    }
    finish_single(run_dir, &digest, test_store.manifest(), outcome)
}

/// Renders tables, the confusion heatmap, and (for attended models) an
/// attention-map gallery from a finished run's artifacts.
pub fn cmd_report(run_dir: &Path, samples: usize) -> Result<Vec<PathBuf>, CliError> {
    let report_path = run_dir.join("report.json");
    if !report_path.exists() {
        return Err(CliError::MissingReport(run_dir.to_path_buf()));
    }
    let config = ExperimentConfig::load(run_dir.join("config.json"))?;
    let digest = config.digest();
    let report: EvalReport = serde_json::from_slice(&std::fs::read(&report_path)?)?;
    if report.config_digest != digest {
        return Err(CliError::DigestMismatch {
            expected: digest,
            found: report.config_digest,
        });
    }

    let out = run_dir.join("report");
    std::fs::create_dir_all(&out)?;
    let mut written = Vec::new();

    let table_path = out.join("table.txt");
    write_table(&table_path, &report)?;
    written.push(table_path);

    let csv_path = out.join("confusion.csv");
    std::fs::write(
        &csv_path,
        format!("# config_digest={digest}\n{}", confusion_csv(&report)),
    )?;
    written.push(csv_path);

    let comment = format!("config_digest={digest}");
    let heatmap = confusion_heatmap(&report.confusion, 24)?;
    let heatmap_path = out.join("heatmap.ppm");
    std::fs::write(&heatmap_path, heatmap.ppm_bytes(Some(&comment)))?;
    written.push(heatmap_path);

    if config.model.mode == HeadMode::Am {
        written.extend(render_gallery(run_dir, &out, &config, &report, samples, &comment)?);
    }
    Ok(written)
}

/// Upsampled block-4 and block-5 attention maps for the first few
/// clips of the corpus.
fn render_gallery(
    run_dir: &Path,
    out: &Path,
    config: &ExperimentConfig,
    report: &EvalReport,
    samples: usize,
    comment: &str,
) -> Result<Vec<PathBuf>, CliError> {
    let model_path = run_dir.join("model.bin");
    let model_path = if model_path.exists() {
        model_path
    } else {
        run_dir.join("fold-0.model.bin")
    };
    if !model_path.exists() {
        log::warn!("no model checkpoint under {}; skipping gallery", run_dir.display());
        return Ok(Vec::new());
    }
    let container = Container::read(&model_path)?;
    let model = TrainedModel::read_from(&config.model, report.labels.len(), &container)?;
    let TrainedModel::Net(net) = &model else {
        return Ok(Vec::new());
    };

    let manifest = load_dataset(&config.dataset.manifest, config.dataset.collapse_neutral)?;
    let store = ExtractStore::new(manifest, config.spectro.clone());
    let count = samples.min(store.len());
    let gallery = out.join("attention");
    std::fs::create_dir_all(&gallery)?;
    let (out_h, out_w) = config.spectro.image_hw;

    let mut written = Vec::new();
    for idx in 0..count {
        let image = store.image(idx, crate::eval::LoadPhase::Adhoc)?;
        let maps = net
            .attention_maps(&[&image])?
            .expect("attended head renders maps");
        let (map4, grid4, map5, grid5) = &maps[0];
        for (tag, map, grid) in [("block4", map4, grid4), ("block5", map5, grid5)] {
            let raster = export_map(map, *grid, (out_h, out_w))?;
            let path = gallery.join(format!("{idx:04}-{tag}.ppm"));
            std::fs::write(&path, raster.ppm_bytes(Some(comment)))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Generates a synthetic labeled corpus for pipeline exercises.
pub fn cmd_synth(out_dir: &Path, spec: &SynthSpec) -> Result<DatasetManifest, CliError> {
    let bad = |key: &str, detail: String| CliError::Config {
        key: key.into(),
        detail,
    };
    if !(2..=Emotion::ALL.len()).contains(&spec.classes) {
        return Err(bad(
            "--classes",
            format!("must be 2..={}, got {}", Emotion::ALL.len(), spec.classes),
        ));
    }
    if spec.speakers < 2 {
        return Err(bad("--speakers", format!("needs at least 2, got {}", spec.speakers)));
    }
    if spec.clips < 2 {
        return Err(bad(
            "--clips",
            format!("needs at least 2 per (class, speaker), got {}", spec.clips),
        ));
    }
    Ok(synth_dataset(spec, out_dir)?)
}
