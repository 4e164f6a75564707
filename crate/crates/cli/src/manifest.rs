//! Run manifests: every output file with its size and SHA-256 digest, plus
//! the verbatim configuration echo and wall-clock bookkeeping.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use oregonator::error::Error;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl OutputFile {
    pub fn new(path: &str, bytes: &[u8]) -> Self {
        Self {
            path: path.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub command: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub status: String,
    /// Simulation time at which the state left the finite range, when the
    /// run ended in a numerical failure.
    pub failure_time: Option<f64>,
    pub config_echo: String,
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn start(command: &str, config_echo: &str) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            started_unix: now_unix(),
            finished_unix: 0.0,
            status: "running".to_string(),
            failure_time: None,
            config_echo: config_echo.to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn finish_ok(&mut self) {
        self.finished_unix = now_unix();
        self.status = "ok".to_string();
    }

    pub fn finish_failed(&mut self, failure_time: f64) {
        self.finished_unix = now_unix();
        self.status = "numerical-failure".to_string();
        self.failure_time = Some(failure_time);
    }

    pub fn write(&self, dir: &Path) -> Result<(), Error> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::ConfigParse(format!("manifest serialization: {e}")))?;
        fs::write(&path, json)
            .map_err(|e| Error::ConfigParse(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(dir: &Path) -> Result<Self, Error> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::ConfigParse(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::ConfigParse(format!("manifest parse: {e}")))
    }

    /// Check that every listed file exists with a matching digest.
    pub fn verify(&self, dir: &Path) -> Result<bool, Error> {
        for out in &self.outputs {
            let bytes = fs::read(dir.join(&out.path)).map_err(|e| {
                Error::ConfigParse(format!("manifest names missing file {}: {e}", out.path))
            })?;
            if bytes.len() as u64 != out.bytes || sha256_hex(&bytes) != out.sha256 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
