//! Experiment orchestration: configuration, on-disk artifacts and the
//! subcommands of the `mimic` binary.

pub mod cli;
pub mod compare;
pub mod corpus;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explore::PolicyKind;
use crate::model::{ModelConfig, TrainOptions};
use crate::sim::{SimApp, SimAppSpec, SuiteKind};
use crate::trace::TraceConfig;

pub use cli::{run, Cli};
pub use compare::{run_compare, CompareReport, SessionOutcome};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything that influences a run. Serialized into every artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub trace: TraceConfig,
    pub model: ModelConfig,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub val_fraction: f64,
    pub max_steps: Option<u64>,
    pub budget: usize,
    pub policy: PolicyKind,
    pub policies: Vec<PolicyKind>,
    pub seeds: usize,
    pub workers: usize,
    pub suite_kind: SuiteKind,
    pub suite_count: usize,
    pub flows_per_app: usize,
    pub flow_len: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainOptions::default();
        RunConfig {
            seed: 0,
            trace: TraceConfig::default(),
            model: ModelConfig::default(),
            epochs: train.epochs,
            patience: train.patience,
            val_fraction: 0.1,
            max_steps: None,
            budget: 500,
            policy: PolicyKind::default(),
            policies: vec![PolicyKind::ModelWeighted, PolicyKind::Random],
            seeds: 5,
            workers: 1,
            suite_kind: SuiteKind::Gated,
            suite_count: 20,
            flows_per_app: 10,
            flow_len: 20,
        }
    }
}

impl RunConfig {
    /// Reads TOML, or JSON when the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Ok(serde_json::from_str(&text)?)
        } else {
            Ok(toml::from_str(&text)?)
        }
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            epochs: self.epochs,
            patience: self.patience,
            val_fraction: self.val_fraction,
            max_steps: self.max_steps,
            workers: self.workers.max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!("val_fraction {} must lie in [0, 1)", self.val_fraction)));
        }
        Ok(())
    }

    /// `# ` comment lines naming the version, seed and full configuration.
    pub fn header(&self) -> String {
        format!(
            "# mimic {VERSION}\n# seed {}\n# config {}\n",
            self.seed,
            serde_json::to_string(self).expect("config serializes")
        )
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes a CSV whose first lines are the run header.
pub fn write_csv(path: &Path, cfg: &RunConfig, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
    let mut buf = cfg.header().into_bytes();
    body(&mut buf).map_err(|e| Error::io(path, e))?;
    write_bytes(path, &buf)
}

/// `run.json` next to JSON artifacts, which cannot carry comment headers.
pub fn write_manifest(dir: &Path, command: &str, cfg: &RunConfig) -> Result<()> {
    let manifest = serde_json::json!({
        "tool": "mimic",
        "version": VERSION,
        "command": command,
        "seed": cfg.seed,
        "config": cfg,
    });
    write_bytes(&dir.join("run.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())
}

/// Sorted regular files of `dir` with the given extension.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == ext))
        .collect();
    out.sort();
    Ok(out)
}

pub fn save_suite(dir: &Path, specs: &[SimAppSpec]) -> Result<()> {
    for s in specs {
        write_bytes(&dir.join("apps").join(format!("{}.json", s.app_id)), s.to_json().as_bytes())?;
    }
    Ok(())
}

/// Apps of a suite directory (its `apps/` subdirectory), or a single app file.
pub fn load_suite(path: &Path) -> Result<Vec<SimApp>> {
    let files = if path.is_file() {
        vec![path.to_path_buf()]
    } else if path.join("apps").is_dir() {
        list_files(&path.join("apps"), "json")?
    } else {
        list_files(path, "json")?
    };
    let apps = files
        .iter()
        .filter(|f| f.file_name().is_none_or(|n| n != "run.json"))
        .map(|f| SimApp::new(SimAppSpec::from_json(&read_text(f)?)?))
        .collect::<Result<Vec<_>>>()?;
    if apps.is_empty() {
        return Err(Error::EmptyDataset(format!("no app specs under {}", path.display())));
    }
    Ok(apps)
}
