use serde::Serialize;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance block embedded in every artifact.
#[derive(Debug, Clone)]
pub struct Meta {
    pub command: String,
    pub hash: String,
    pub config: Value,
}

impl Meta {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            command: command.into(),
            hash: cfg.hash(),
            config: serde_json::to_value(cfg).expect("config serializes"),
        }
    }

    pub fn json(&self) -> Value {
        json!({
            "tool": "lgas",
            "version": VERSION,
            "command": self.command,
            "config_hash": self.hash,
            "config": self.config,
        })
    }

    fn csv_preamble(&self) -> String {
        format!(
            "# lgas {} {} config_hash={}\n# config {}\n",
            VERSION,
            self.command,
            self.hash,
            serde_json::to_string(&self.config).expect("config serializes")
        )
    }
}

/// Files of one run. Each file is written to a temporary name and renamed;
/// `discard` removes everything written so far.
pub struct Artifacts {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    pub meta: Meta,
}

impl Artifacts {
    pub fn open(dir: &Path, meta: Meta) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| CliError::Run(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), created_dir, written: Vec::new(), meta })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.partial"));
        let io = |e: std::io::Error| CliError::Run(format!("writing {}: {e}", path.display()));
        fs::write(&tmp, bytes).map_err(io)?;
        self.written.push(tmp.clone());
        fs::rename(&tmp, &path).map_err(io)?;
        *self.written.last_mut().expect("just pushed") = path.clone();
        Ok(path)
    }

    /// JSON document `{"meta": ..., "data": ...}`.
    pub fn write_json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<PathBuf, CliError> {
        let doc = json!({ "meta": self.meta.json(), "data": data });
        let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Run(e.to_string()))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// CSV body prefixed with `#` provenance lines.
    pub fn write_csv(&mut self, name: &str, body: &[u8]) -> Result<PathBuf, CliError> {
        let mut bytes = self.meta.csv_preamble().into_bytes();
        bytes.extend_from_slice(body);
        self.write_bytes(name, &bytes)
    }

    pub fn discard(self) {
        for p in self.written.iter().rev() {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
