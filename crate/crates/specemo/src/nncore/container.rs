//! Single-file weight container: a little-endian u64 header length, a
//! JSON header describing tensor names/shapes/offsets plus a payload
//! checksum, then the raw little-endian f32 payloads back to back.
//!
//! Writing the same tensors in the same order yields identical bytes,
//! so checkpoints diff cleanly and round-trips are bit-exact.

use super::Tensor;
use crate::digest::sha256_hex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a weight container: {reason}")]
    Malformed { reason: String },
    #[error("unsupported container version {found} (this build reads {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("payload checksum mismatch: header says {expected}, payload hashes to {actual}")]
    ChecksumMismatch { expected: String, actual: String },
    #[error("container is missing tensor `{name}`")]
    MissingTensor { name: String },
    #[error("tensor `{name}` has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    tensors: Vec<TensorEntry>,
    payload_sha256: String,
    meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    dtype: String,
    /// byte offset into the payload
    offset: usize,
    /// element count
    len: usize,
}

/// Accumulates tensors and serializes the container.
pub struct ContainerWriter {
    entries: Vec<TensorEntry>,
    payload: Vec<u8>,
    meta: BTreeMap<String, String>,
}

impl ContainerWriter {
    pub fn new() -> ContainerWriter {
        ContainerWriter {
            entries: Vec::new(),
            payload: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: &str) -> &mut Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn add(&mut self, name: &str, tensor: &Tensor<f32>) -> &mut Self {
        debug_assert!(
            !self.entries.iter().any(|e| e.name == name),
            "duplicate tensor name {name}"
        );
        let offset = self.payload.len();
        for v in tensor.data() {
            self.payload.extend_from_slice(&v.to_le_bytes());
        }
        self.entries.push(TensorEntry {
            name: name.to_string(),
            shape: tensor.shape().to_vec(),
            dtype: "f32".to_string(),
            offset,
            len: tensor.len(),
        });
        self
    }

    pub fn bytes(&self) -> Vec<u8> {
        let header = Header {
            format_version: FORMAT_VERSION,
            tensors: self.entries.clone(),
            payload_sha256: sha256_hex(&self.payload),
            meta: self.meta.clone(),
        };
        let header_json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(8 + header_json.len() + self.payload.len());
        out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
        out.extend_from_slice(&header_json);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ContainerError> {
        let path = path.as_ref();
        std::fs::write(path, self.bytes()).map_err(|e| ContainerError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}

impl Default for ContainerWriter {
    fn default() -> Self {
        ContainerWriter::new()
    }
}

/// A parsed container with checksum-verified payload.
pub struct Container {
    tensors: Vec<(String, Vec<usize>, Vec<f32>)>,
    meta: BTreeMap<String, String>,
}

impl Container {
    pub fn read(path: impl AsRef<Path>) -> Result<Container, ContainerError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| ContainerError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Container::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Container, ContainerError> {
        let malformed = |reason: &str| ContainerError::Malformed {
            reason: reason.to_string(),
        };
        if bytes.len() < 8 {
            return Err(malformed("shorter than the length prefix"));
        }
        let header_len = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        if bytes.len() < 8 + header_len {
            return Err(malformed("truncated header"));
        }
        let header: Header = serde_json::from_slice(&bytes[8..8 + header_len])
            .map_err(|e| malformed(&format!("bad header json: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(ContainerError::UnsupportedVersion {
                found: header.format_version,
            });
        }
        let payload = &bytes[8 + header_len..];
        let actual = sha256_hex(payload);
        if actual != header.payload_sha256 {
            return Err(ContainerError::ChecksumMismatch {
                expected: header.payload_sha256,
                actual,
            });
        }

        let mut tensors = Vec::with_capacity(header.tensors.len());
        for e in header.tensors {
            if e.dtype != "f32" {
                return Err(malformed(&format!("tensor {} has dtype {}", e.name, e.dtype)));
            }
            let n: usize = e.shape.iter().product();
            if n != e.len {
                return Err(malformed(&format!("tensor {} shape/len disagree", e.name)));
            }
            let end = e.offset + 4 * e.len;
            if end > payload.len() {
                return Err(malformed(&format!("tensor {} overruns payload", e.name)));
            }
            let data: Vec<f32> = payload[e.offset..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push((e.name, e.shape, data));
        }
        Ok(Container {
            tensors,
            meta: header.meta,
        })
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.get(key).map(|s| s.as_str())
    }

    pub fn names(&self) -> Vec<&str> {
        self.tensors.iter().map(|(n, _, _)| n.as_str()).collect()
    }

    /// Stored shape of a tensor, for callers that discover dimensions
    /// from the container itself.
    pub fn shape_of(&self, name: &str) -> Result<&[usize], ContainerError> {
        self.tensors
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, shape, _)| shape.as_slice())
            .ok_or_else(|| ContainerError::MissingTensor {
                name: name.to_string(),
            })
    }

    /// Fetch a tensor by name, validating the expected shape.
    pub fn tensor(&self, name: &str, expected_shape: &[usize]) -> Result<Tensor<f32>, ContainerError> {
        let (_, shape, data) = self
            .tensors
            .iter()
            .find(|(n, _, _)| n == name)
            .ok_or_else(|| ContainerError::MissingTensor {
                name: name.to_string(),
            })?;
        if shape != expected_shape {
            return Err(ContainerError::ShapeMismatch {
                name: name.to_string(),
                expected: expected_shape.to_vec(),
                found: shape.clone(),
            });
        }
        Ok(Tensor::from_vec(shape, data.clone()).expect("shape/len validated on read"))
    }
}
