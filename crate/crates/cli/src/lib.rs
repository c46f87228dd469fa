//! Config-driven experiment runner for the skinfem solver.

pub mod config;
pub mod study;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub use config::{ConfigError, ExperimentConfig, StudyKind};
pub use study::{execute, input_hash, sha256_hex, Artifact, StudyError};

/// Name of the manifest written next to the study outputs.
pub const MANIFEST: &str = "manifest.txt";
/// Subdirectory of the output directory holding cached reference solutions.
pub const CACHE_DIR: &str = ".cache";

/// Manifest listing every artifact with its SHA-256 and the input hash.
pub fn manifest(cfg: &ExperimentConfig, artifacts: &[Artifact]) -> String {
    let mut s = format!(
        "# skinfem manifest v1\nstudy {}\nconfig {}\ninput_sha256 {}\n",
        cfg.kind,
        cfg.config,
        input_hash(cfg)
    );
    for a in artifacts {
        let _ = writeln!(s, "{}  {}", sha256_hex(&a.bytes), a.name);
    }
    s
}

fn write_all(
    dir: &Path,
    artifacts: &[Artifact],
    written: &mut Vec<PathBuf>,
) -> Result<(), StudyError> {
    for a in artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.bytes).map_err(|source| StudyError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(())
}

/// Runs `cfg`, writes its artifacts and the manifest to the output directory
/// and returns the written paths. On failure every file written by this run
/// is removed again.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, StudyError> {
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(|source| StudyError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut artifacts = execute(cfg, &dir.join(CACHE_DIR))?;
    artifacts.push(Artifact {
        name: "inputs.txt".into(),
        bytes: cfg.canonical().into_bytes(),
    });
    let manifest = Artifact {
        name: MANIFEST.into(),
        bytes: manifest(cfg, &artifacts).into_bytes(),
    };
    artifacts.push(manifest);
    let mut written = Vec::new();
    if let Err(e) = write_all(dir, &artifacts, &mut written) {
        for path in &written {
            let _ = fs::remove_file(path);
        }
        return Err(e);
    }
    Ok(written)
}
