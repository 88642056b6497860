//! Run configuration: built-in defaults, overlaid by an optional JSON config
//! file, overlaid by command-line flags.

use std::path::{Path, PathBuf};

use bscope::charmetrics::CharParams;
use bscope::deepdig::DeepDigConfig;
use bscope::models::TrainConfig;
use serde::{Deserialize, Serialize};

pub const DATA_DIR_ENV: &str = "BSCOPE_DATA_DIR";

/// Every parameter a command may read. The resolved value is written to
/// `config.json` in the output directory and can be passed back via
/// `--config` to repeat the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub model: String,
    pub dataset: Option<String>,
    pub data_dir: Option<PathBuf>,
    pub model_ckpt: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub train: TrainConfig,
    pub source: Option<String>,
    pub target: Option<String>,
    pub deepdig: DeepDigConfig,
    pub alpha_sweep: Vec<f64>,
    pub method: Option<String>,
    pub n_pairs: Option<usize>,
    pub baseline_seed: u64,
    pub borderline_dir: Option<PathBuf>,
    pub pair: Option<String>,
    pub characterize: CharParams,
    pub input: Option<PathBuf>,
    pub kind: Option<String>,
    pub shape: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            model: "mnist_cnn".into(),
            dataset: None,
            data_dir: None,
            model_ckpt: None,
            out: None,
            train: TrainConfig::default(),
            source: None,
            target: None,
            deepdig: DeepDigConfig::default(),
            alpha_sweep: Vec::new(),
            method: None,
            n_pairs: None,
            baseline_seed: 0,
            borderline_dir: None,
            pair: None,
            characterize: CharParams::default(),
            input: None,
            kind: None,
            shape: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> bscope::Result<Self> {
        bscope::io::read_json(path)
    }

    /// Falls back to the environment when no data directory was configured.
    pub fn resolve_data_dir(&mut self) {
        if self.data_dir.is_none() {
            self.data_dir = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from);
        }
    }
}
