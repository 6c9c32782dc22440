use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::CliError;

/// File locations under one output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn environment(&self, env: usize) -> PathBuf {
        self.root.join("environments").join(format!("e{env}.json"))
    }

    pub fn training(&self, env: usize) -> PathBuf {
        self.root.join("training").join(format!("e{env}.json"))
    }

    pub fn model(&self, env: usize) -> PathBuf {
        self.root.join("models").join(format!("e{env}.json"))
    }

    pub fn fit(&self, env: usize) -> PathBuf {
        self.root.join("models").join(format!("e{env}.fit.json"))
    }

    pub fn pairs(&self, env: usize) -> PathBuf {
        self.root.join("pairs").join(format!("e{env}.json"))
    }

    pub fn plan(&self, stem: &str) -> PathBuf {
        self.root.join("plans").join(format!("{stem}.json"))
    }

    pub fn trials(&self, stem: &str) -> PathBuf {
        self.root.join("trials").join(format!("{stem}.csv"))
    }

    pub fn histogram(&self, stem: &str) -> PathBuf {
        self.root.join("histograms").join(format!("{stem}.csv"))
    }

    pub fn records(&self) -> PathBuf {
        self.root.join("records.csv")
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.csv")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn invariants(&self) -> PathBuf {
        self.root.join("invariants.json")
    }

    pub fn density(&self) -> PathBuf {
        self.root.join("density.csv")
    }

    pub fn verify(&self) -> PathBuf {
        self.root.join("verify.json")
    }

    pub fn shgo_bench(&self) -> PathBuf {
        self.root.join("shgo_bench.csv")
    }

    pub fn shgo_stabilization(&self) -> PathBuf {
        self.root.join("shgo_stabilization.csv")
    }

    pub fn manifest(&self, command: &str) -> PathBuf {
        self.root.join("manifests").join(format!("{command}.json"))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write_text(path, &String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))?)
}

/// Run metadata kept apart from the deterministic outputs.
#[derive(Debug, Serialize)]
pub struct Manifest<T: Serialize> {
    pub command: &'static str,
    pub seed: u64,
    pub finished_unix: u64,
    pub seconds: f64,
    pub threads: usize,
    pub details: T,
}

pub fn write_manifest<T: Serialize>(layout: &Layout, command: &'static str, seed: u64, seconds: f64, details: T) -> Result<(), CliError> {
    let finished_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let m = Manifest { command, seed, finished_unix, seconds, threads: rayon::current_num_threads(), details };
    write_json(&layout.manifest(command), &m)
}
