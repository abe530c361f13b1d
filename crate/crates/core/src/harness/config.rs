//! Experiment configuration, read from TOML.
//!
//! ```toml
//! master_seed = 7
//! repetitions = 50
//! budgets = [2000]
//! output_dir = "out"
//! checkpoints = "grid"        # or "final"
//!
//! [instance]
//! kind = "eoo"                # eoo | random | file | dataset
//! alpha = 0.1
//!
//! [[algorithms]]
//! id = "blfaips"
//! kind = "blfaips"
//! alpha = 0.25
//!
//! [[algorithms]]
//! id = "lints"
//! kind = "lints"
//! ```
//!
//! Relative paths are resolved against the directory holding the config.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::instances::{generate_eoo_instance, generate_random_instance, load_dataset_instance, DatasetOptions};
use crate::algorithms::{BlfaipsParams, CheckpointPolicy};
use crate::error::{Error, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub repetitions: u64,
    pub budgets: Vec<usize>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub checkpoints: CheckpointPolicy,
    pub instance: InstanceSource,
    pub algorithms: Vec<AlgorithmConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InstanceSource {
    Eoo {
        alpha: f64,
        id: Option<String>,
    },
    Random {
        d: usize,
        k: usize,
        seed: u64,
        /// Replaces the default threshold after generation.
        tau: Option<f64>,
        id: Option<String>,
    },
    File {
        path: PathBuf,
        id: Option<String>,
    },
    Dataset {
        path: PathBuf,
        tau: f64,
        #[serde(default)]
        options: DatasetOptions,
        id: Option<String>,
    },
}

impl InstanceSource {
    pub fn id(&self) -> String {
        let stem = |p: &Path| p.file_stem().map_or_else(|| "instance".to_string(), |s| s.to_string_lossy().into_owned());
        match self {
            InstanceSource::Eoo { id: Some(id), .. }
            | InstanceSource::Random { id: Some(id), .. }
            | InstanceSource::File { id: Some(id), .. }
            | InstanceSource::Dataset { id: Some(id), .. } => id.clone(),
            InstanceSource::Eoo { alpha, .. } => format!("eoo-{alpha}"),
            InstanceSource::Random { d, k, seed, .. } => format!("random-d{d}-k{k}-s{seed}"),
            InstanceSource::File { path, .. } | InstanceSource::Dataset { path, .. } => stem(path),
        }
    }

    pub fn load(&self) -> Result<Instance> {
        match self {
            InstanceSource::Eoo { alpha, .. } => generate_eoo_instance(*alpha),
            InstanceSource::Random { d, k, seed, tau, .. } => {
                let inst = generate_random_instance(*d, *k, *seed)?;
                match tau {
                    Some(t) => Ok(inst.with_tau(*t)?),
                    None => Ok(inst),
                }
            }
            InstanceSource::File { path, .. } => Ok(Instance::from_json_file(path)?),
            InstanceSource::Dataset { path, tau, options, .. } => load_dataset_instance(path, *tau, options),
        }
    }

    fn resolve(&mut self, base: &Path) {
        if let InstanceSource::File { path, .. } | InstanceSource::Dataset { path, .. } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct AlgorithmConfig {
    pub id: String,
    #[serde(flatten)]
    pub kind: AlgorithmKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmKind {
    Blfaips(BlfaipsParams),
    Lints,
    Ttts {
        /// Leader probability; the optimal weight of the best arm when omitted.
        beta: Option<f64>,
    },
    Oracle,
    PepsProxy {
        /// Budget guess as a fraction of the actual budget.
        #[serde(default = "half")]
        guess_ratio: f64,
        #[serde(flatten)]
        params: BlfaipsParams,
    },
    Uniform,
}

fn half() -> f64 {
    0.5
}

impl AlgorithmKind {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Blfaips(_) => "blfaips",
            AlgorithmKind::Lints => "lints",
            AlgorithmKind::Ttts { .. } => "ttts",
            AlgorithmKind::Oracle => "oracle",
            AlgorithmKind::PepsProxy { .. } => "peps_proxy",
            AlgorithmKind::Uniform => "uniform",
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file, resolving relative paths against
    /// its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.instance.resolve(base);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.budgets.is_empty() || self.budgets[0] == 0 {
            return Err(Error::Config("budgets must be nonempty and positive".into()));
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("budgets must be strictly increasing".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("at least one algorithm is required".into()));
        }
        let mut seen = HashSet::new();
        for a in &self.algorithms {
            if a.id.is_empty() || a.id.contains([',', '"', '\n']) {
                return Err(Error::Config(format!("invalid algorithm id `{}`", a.id)));
            }
            if !seen.insert(a.id.as_str()) {
                return Err(Error::Config(format!("duplicate algorithm id `{}`", a.id)));
            }
            if let AlgorithmKind::PepsProxy { guess_ratio, .. } = a.kind {
                if !(guess_ratio > 0.0) {
                    return Err(Error::Config("guess_ratio must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
master_seed = 7
repetitions = 3
budgets = [10, 20]
output_dir = "out"
checkpoints = "final"

[instance]
kind = "eoo"
alpha = 0.1

[[algorithms]]
id = "b"
kind = "blfaips"
alpha = 0.3
max_rejects = 8

[[algorithms]]
id = "t"
kind = "ttts"

[[algorithms]]
id = "p"
kind = "peps_proxy"
guess_ratio = 0.5
alpha = 0.2
"#;

    #[test]
    fn parses_example() {
        let cfg = ExperimentConfig::from_toml_str(EXAMPLE).unwrap();
        assert_eq!(cfg.checkpoints, CheckpointPolicy::Final);
        assert_eq!(cfg.instance.id(), "eoo-0.1");
        match &cfg.algorithms[0].kind {
            AlgorithmKind::Blfaips(p) => {
                assert_eq!(p.alpha, 0.3);
                assert_eq!(p.max_rejects, 8);
                assert_eq!(p.eta_r, None);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(cfg.algorithms[1].kind, AlgorithmKind::Ttts { beta: None });
        match &cfg.algorithms[2].kind {
            AlgorithmKind::PepsProxy { guess_ratio, params } => {
                assert_eq!(*guess_ratio, 0.5);
                assert_eq!(params.alpha, 0.2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        let dup = EXAMPLE.replace("id = \"t\"", "id = \"b\"");
        assert!(matches!(ExperimentConfig::from_toml_str(&dup), Err(Error::Config(_))));
        let unsorted = EXAMPLE.replace("[10, 20]", "[20, 10]");
        assert!(ExperimentConfig::from_toml_str(&unsorted).is_err());
        let zero = EXAMPLE.replace("repetitions = 3", "repetitions = 0");
        assert!(ExperimentConfig::from_toml_str(&zero).is_err());
        let unknown = EXAMPLE.replace("alpha = 0.1", "alpha = 0.1\nbogus = 1");
        assert!(ExperimentConfig::from_toml_str(&unknown).is_err());
        let bad_kind = EXAMPLE.replace("kind = \"ttts\"", "kind = \"ucb\"");
        assert!(ExperimentConfig::from_toml_str(&bad_kind).is_err());
    }
}
