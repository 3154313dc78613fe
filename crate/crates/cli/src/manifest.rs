use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use mmreg::io::write_atomic;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: &'static str,
    pub seed: Option<u64>,
    pub started_unix: u64,
    pub wall_clock_secs: f64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest_file(path: &Path) -> mmreg::Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|source| mmreg::Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256(&bytes),
    })
}

/// Collects output files for a run and writes them, then the manifest.
/// Input digests are taken when the recorder is created, before any work.
pub struct Recorder {
    manifest: RunManifest,
    clock: Instant,
    out_dir: PathBuf,
    pending: Vec<(PathBuf, Vec<u8>)>,
}

impl Recorder {
    pub fn start(
        command: &str,
        seed: Option<u64>,
        inputs: &[PathBuf],
        out_dir: &Path,
    ) -> mmreg::Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| digest_file(p))
            .collect::<mmreg::Result<Vec<_>>>()?;
        std::fs::create_dir_all(out_dir).map_err(|source| mmreg::Error::Io {
            path: out_dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            manifest: RunManifest {
                command: command.to_string(),
                tool_version: env!("CARGO_PKG_VERSION"),
                seed,
                started_unix: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs()),
                wall_clock_secs: 0.0,
                inputs,
                outputs: Vec::new(),
            },
            clock: Instant::now(),
            out_dir: out_dir.to_path_buf(),
            pending: Vec::new(),
        })
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.pending.push((self.out_dir.join(name), bytes));
    }

    /// Writes every output atomically, then `manifest.json`.
    pub fn finish(mut self) -> mmreg::Result<PathBuf> {
        for (path, bytes) in &self.pending {
            self.manifest.outputs.push(FileDigest {
                path: path.display().to_string(),
                sha256: sha256(bytes),
            });
        }
        for (path, bytes) in &self.pending {
            write_atomic(path, bytes)?;
        }
        self.manifest.wall_clock_secs = self.clock.elapsed().as_secs_f64();
        let path = self.out_dir.join("manifest.json");
        let json = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        write_atomic(&path, &json)?;
        Ok(path)
    }
}
