//! TOML configuration files. Every value is optional; command-line flags take
//! precedence over the file, which takes precedence over built-in defaults.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<String>,
    pub log_level: Option<String>,
    #[serde(default)]
    pub dict_optimize: DictOptimizeFile,
    #[serde(default)]
    pub region_scatter: RegionScatterFile,
    #[serde(default)]
    pub train: TrainFile,
    #[serde(default)]
    pub eval: EvalFile,
    #[serde(default)]
    pub predict: PredictFile,
    #[serde(default)]
    pub qec_demo: QecDemoFile,
    #[serde(default)]
    pub mc_verify: McVerifyFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictOptimizeFile {
    pub k: Option<usize>,
    pub layers: Option<usize>,
    pub inits: Option<usize>,
    pub steps: Option<usize>,
    pub lr: Option<f64>,
    pub fd_step: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionScatterFile {
    pub samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub n: Option<usize>,
    pub layers: Option<usize>,
    pub supports: Option<String>,
    pub updates: Option<usize>,
    pub hidden: Option<usize>,
    pub samples_per_support: Option<usize>,
    pub supports_per_update: Option<usize>,
    pub lr: Option<f64>,
    pub entropy_bonus: Option<f64>,
    pub swap_penalty: Option<f64>,
    pub supervised_period: Option<usize>,
    pub supervised_epochs: Option<usize>,
    pub replay_capacity: Option<usize>,
    pub log_every: Option<usize>,
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalFile {
    pub checkpoint: Option<String>,
    pub supports: Option<String>,
    pub samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictFile {
    pub checkpoint: Option<String>,
    pub support: Option<String>,
    pub samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QecDemoFile {
    pub checkpoint: Option<String>,
    pub samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McVerifyFile {
    pub n: Option<usize>,
    pub circuit: Option<String>,
    pub support: Option<String>,
    pub shots: Option<usize>,
}

pub fn load(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Settings shared by every command, after resolution.
#[derive(Debug, Clone, Serialize)]
pub struct GlobalResolved {
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub out: String,
    pub log_level: String,
}

/// Render the resolved configuration as TOML.
pub fn render_resolved<T: Serialize>(global: &GlobalResolved, section: &str, cmd: &T) -> Result<String> {
    let mut text = toml::to_string(global).context("serializing resolved config")?;
    let body = toml::to_string(cmd).context("serializing resolved config")?;
    if !body.trim().is_empty() {
        text.push_str(&format!("\n[{section}]\n{body}"));
    }
    Ok(text)
}
