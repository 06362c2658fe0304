use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use congestion_core::domain::ConvexDomain;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Experiment configuration file. Every key is optional; each command reads
/// the keys it needs and command-line flags take precedence.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Inline domain description or a path to one.
    pub domain: Option<Value>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub max_evals: Option<usize>,
    pub direction_search: Option<String>,
    pub probes: Option<usize>,
    /// `"1/(m+1)"`, `"1/e"` or a number in (0, 1).
    pub threshold: Option<Value>,
    pub radii: Option<Vec<f64>>,
    pub pairs: Option<usize>,
    pub graph: Option<String>,
    pub mode: Option<String>,
    pub delta_samples: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub k: Option<f64>,
    pub size: Option<f64>,
    pub random_simplices: Option<usize>,
    pub out: Option<String>,
}

pub struct Loaded {
    pub config: ExperimentConfig,
    /// Directory relative paths in the config resolve against.
    pub base: PathBuf,
}

pub fn load(path: Option<&Path>) -> Result<Loaded> {
    let Some(path) = path else {
        return Ok(Loaded { config: ExperimentConfig::default(), base: PathBuf::from(".") });
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base })
}

impl Loaded {
    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn domain(&self) -> Result<ConvexDomain> {
        match &self.config.domain {
            None => bail!("config has no \"domain\""),
            Some(Value::String(p)) => {
                let path = self.resolve(p);
                ConvexDomain::from_path(&path).with_context(|| format!("domain file {}", path.display()))
            }
            Some(v) => Ok(ConvexDomain::from_json(v)?),
        }
    }

    pub fn threshold(&self) -> Result<Option<String>> {
        match &self.config.threshold {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Number(n)) => Ok(Some(n.to_string())),
            Some(other) => bail!("threshold must be a string or number, got {other}"),
        }
    }
}
