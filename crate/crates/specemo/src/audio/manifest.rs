//! Dataset manifest CSV: `path,label,speaker,style`, one row per clip.
//! Loading canonicalizes labels (case-fold, happiness -> joy) and
//! validates the structural invariants fold construction relies on.

use super::{AudioError, DatasetManifest, Emotion, LabeledSample, Style};
use std::collections::HashSet;
use std::path::Path;

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, AudioError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(csv_open_err(path))?;

    let headers = reader.headers().map_err(AudioError::from)?.clone();
    let col = |name: &str| -> Result<usize, AudioError> {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| AudioError::MissingColumn {
                path: path.display().to_string(),
                column: name.to_string(),
            })
    };
    let c_path = col("path")?;
    let c_label = col("label")?;
    let c_speaker = col("speaker")?;
    let c_style = col("style")?;

    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // header is row 0; data rows are 1-based for error messages
        let row = i + 1;
        let cell = |c: usize| record.get(c).unwrap_or("").trim().to_string();

        let p = cell(c_path);
        if !seen.insert(p.clone()) {
            return Err(AudioError::DuplicatePath { path: p });
        }
        let raw_label = cell(c_label);
        let label = Emotion::parse(&raw_label).ok_or(AudioError::UnknownLabel {
            row,
            value: raw_label,
        })?;
        let speaker_id = cell(c_speaker);
        if speaker_id.is_empty() {
            return Err(AudioError::EmptySpeaker { row });
        }
        let raw_style = cell(c_style);
        let style = Style::parse(&raw_style).map_err(|_| AudioError::UnknownStyle {
            row,
            value: raw_style,
        })?;
        if let Some(st) = style {
            if label != Emotion::Neutral {
                return Err(AudioError::StyleOnNonNeutral {
                    row,
                    style: st.name().to_string(),
                    label: label.name().to_string(),
                });
            }
        }
        samples.push(LabeledSample {
            path: p,
            label,
            speaker_id,
            style,
        });
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let root = path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| Path::new(".").to_path_buf());
    Ok(DatasetManifest {
        name,
        root,
        samples,
    })
}

/// Write the canonical form: lowercase labels and styles, empty style
/// cell for styleless rows. load_manifest(save_manifest(m)) == m.
pub fn save_manifest(m: &DatasetManifest, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(csv_open_err(path))?;
    w.write_record(["path", "label", "speaker", "style"])?;
    for s in &m.samples {
        w.write_record([
            s.path.as_str(),
            s.label.name(),
            s.speaker_id.as_str(),
            s.style.map(|st| st.name()).unwrap_or(""),
        ])?;
    }
    w.flush().map_err(|e| AudioError::io(path, e))?;
    Ok(())
}

fn csv_open_err(path: &Path) -> impl Fn(csv::Error) -> AudioError + '_ {
    move |e| match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                AudioError::io(path, io)
            } else {
                unreachable!("kind checked above")
            }
        }
        _ => AudioError::Csv(e),
    }
}
