//! Spectrogram cache keyed by content digests. A cached image is valid
//! exactly when the audio bytes and the extraction parameters both
//! match, so copied corpora and touched files never invalidate it.

use std::path::{Path, PathBuf};

pub const CACHE_ENV: &str = "SPECEMO_CACHE";

/// On-disk cache rooted at `SPECEMO_CACHE`, or at `<dir>/.cache`
/// when the variable is unset.
pub struct ExtractCache {
    root: PathBuf,
    pub hits: usize,
    pub misses: usize,
}

impl ExtractCache {
    pub fn open(fallback_dir: &Path) -> ExtractCache {
        let root = std::env::var_os(CACHE_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| fallback_dir.join(".cache"));
        ExtractCache {
            root,
            hits: 0,
            misses: 0,
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_path(&self, file_digest: &str, params_digest: &str) -> PathBuf {
        self.root
            .join(format!("{}-{}.ppm", &file_digest[..32], &params_digest[..32]))
    }

    pub fn lookup(&mut self, file_digest: &str, params_digest: &str) -> Option<Vec<u8>> {
        match std::fs::read(self.entry_path(file_digest, params_digest)) {
            Ok(bytes) => {
                self.hits += 1;
                log::info!("cache hit for {}", &file_digest[..12]);
                Some(bytes)
            }
            Err(_) => {
                self.misses += 1;
                None
            }
        }
    }

    pub fn store(
        &self,
        file_digest: &str,
        params_digest: &str,
        bytes: &[u8],
    ) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.root)?;
        std::fs::write(self.entry_path(file_digest, params_digest), bytes)
    }
}
