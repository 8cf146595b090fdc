use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Environment variable naming the root that relative output
/// directories are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "IRVS_LAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Implicit RvS: energy model + tilted SGLD inference.
    Irvs,
    /// Explicit RvS: categorical return head + conditioned policy.
    Rvs,
    /// Behavior cloning (MSE, return-agnostic).
    Bc,
    /// Implicit behavior cloning: IRvS inference at eta_inv = 0.
    Ibc,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Irvs => write!(f, "irvs"),
            Algorithm::Rvs => write!(f, "rvs"),
            Algorithm::Bc => write!(f, "bc"),
            Algorithm::Ibc => write!(f, "ibc"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "irvs" => Ok(Algorithm::Irvs),
            "rvs" => Ok(Algorithm::Rvs),
            "bc" => Ok(Algorithm::Bc),
            "ibc" => Ok(Algorithm::Ibc),
            other => Err(Error::argument(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    Didactic,
    Nav,
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvKind::Didactic => write!(f, "didactic"),
            EnvKind::Nav => write!(f, "nav"),
        }
    }
}

impl FromStr for EnvKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "didactic" => Ok(EnvKind::Didactic),
            "nav" => Ok(EnvKind::Nav),
            other => Err(Error::argument(format!("unknown env '{other}'"))),
        }
    }
}

/// Full experiment settings: environment, algorithm, dataset,
/// training, and evaluation knobs. Every field can be set from a flat
/// key=value config file, with CLI flags taking precedence.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub algorithm: Algorithm,
    pub eta_inv: f64,
    pub dataset_size: usize,
    pub dim: usize,
    pub epsilon: f64,
    /// Goal radius used at evaluation time (extrapolation sweeps).
    pub test_epsilon: f64,
    pub delta: Option<f64>,
    pub seeds: Vec<u64>,
    pub eval_episodes: usize,
    pub out_dir: PathBuf,
    pub hidden_width: usize,
    pub hidden_depth: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub n_neg: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub lr_decay_steps: usize,
    pub grad_margin: f64,
    pub boundary_buffer: f64,
    pub spectral_norm: bool,
    pub train_langevin_iters: usize,
    pub eval_langevin_iters: usize,
    pub eval_chains: usize,
    pub n_atoms: usize,
    /// When false the wall_time_s column records 0 so re-runs produce
    /// byte-identical metrics files.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvKind::Didactic,
            algorithm: Algorithm::Irvs,
            eta_inv: 1.0,
            dataset_size: 5000,
            dim: 2,
            epsilon: 0.1,
            test_epsilon: 0.1,
            delta: None,
            seeds: vec![0, 1, 2],
            eval_episodes: 200,
            out_dir: PathBuf::from("runs"),
            hidden_width: 128,
            hidden_depth: 4,
            steps: 2000,
            batch_size: 512,
            n_neg: 8,
            lr: 1e-3,
            lr_decay: 0.99,
            lr_decay_steps: 100,
            grad_margin: 1.0,
            boundary_buffer: 0.05,
            spectral_norm: true,
            train_langevin_iters: 30,
            eval_langevin_iters: 100,
            eval_chains: 64,
            n_atoms: 101,
            record_wall_time: true,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::argument(format!("bad value '{value}' for key '{key}'")))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::argument("seeds must be non-empty"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::argument("eval_episodes must be >= 1"));
        }
        if self.dataset_size == 0 {
            return Err(Error::argument("dataset_size must be >= 1"));
        }
        Ok(())
    }

    /// Apply one key=value assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "env" => self.env = parse(key, value)?,
            "algorithm" => self.algorithm = parse(key, value)?,
            "eta_inv" => self.eta_inv = parse(key, value)?,
            "dataset_size" => self.dataset_size = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "test_epsilon" => self.test_epsilon = parse(key, value)?,
            "delta" => {
                self.delta = if value.is_empty() || value == "none" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "seeds" => {
                self.seeds = value
                    .split(',')
                    .map(|t| parse::<u64>(key, t.trim()))
                    .collect::<Result<_>>()?
            }
            "eval_episodes" => self.eval_episodes = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "hidden_width" => self.hidden_width = parse(key, value)?,
            "hidden_depth" => self.hidden_depth = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "n_neg" => self.n_neg = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "lr_decay" => self.lr_decay = parse(key, value)?,
            "lr_decay_steps" => self.lr_decay_steps = parse(key, value)?,
            "grad_margin" => self.grad_margin = parse(key, value)?,
            "boundary_buffer" => self.boundary_buffer = parse(key, value)?,
            "spectral_norm" => self.spectral_norm = parse(key, value)?,
            "train_langevin_iters" => self.train_langevin_iters = parse(key, value)?,
            "eval_langevin_iters" => self.eval_langevin_iters = parse(key, value)?,
            "eval_chains" => self.eval_chains = parse(key, value)?,
            "n_atoms" => self.n_atoms = parse(key, value)?,
            "record_wall_time" => self.record_wall_time = parse(key, value)?,
            other => return Err(Error::argument(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parse a flat key=value file ('#' comments and blanks ignored).
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_file(path)?;
        Ok(cfg)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io("config read", e))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(i + 1, "expected key=value"))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::format(i + 1, e.to_string()))?;
        }
        Ok(())
    }

    /// Apply key=value overrides (CLI flags win over the file).
    pub fn apply_overrides(&mut self, overrides: &[(String, String)]) -> Result<()> {
        for (k, v) in overrides {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Resolve the output directory against IRVS_LAB_OUT when set and
    /// the configured path is relative.
    pub fn resolved_out_dir(&self) -> PathBuf {
        if self.out_dir.is_absolute() {
            return self.out_dir.clone();
        }
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) => PathBuf::from(root).join(&self.out_dir),
            None => self.out_dir.clone(),
        }
    }

    /// Serialize back to the key=value file form.
    pub fn to_key_values(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("env".into(), self.env.to_string());
        m.insert("algorithm".into(), self.algorithm.to_string());
        m.insert("eta_inv".into(), self.eta_inv.to_string());
        m.insert("dataset_size".into(), self.dataset_size.to_string());
        m.insert("dim".into(), self.dim.to_string());
        m.insert("epsilon".into(), self.epsilon.to_string());
        m.insert("test_epsilon".into(), self.test_epsilon.to_string());
        m.insert(
            "delta".into(),
            self.delta.map_or("none".into(), |d| d.to_string()),
        );
        m.insert(
            "seeds".into(),
            self.seeds
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert("eval_episodes".into(), self.eval_episodes.to_string());
        m.insert("out_dir".into(), self.out_dir.display().to_string());
        m.insert("hidden_width".into(), self.hidden_width.to_string());
        m.insert("hidden_depth".into(), self.hidden_depth.to_string());
        m.insert("steps".into(), self.steps.to_string());
        m.insert("batch_size".into(), self.batch_size.to_string());
        m.insert("n_neg".into(), self.n_neg.to_string());
        m.insert("lr".into(), self.lr.to_string());
        m.insert("lr_decay".into(), self.lr_decay.to_string());
        m.insert("lr_decay_steps".into(), self.lr_decay_steps.to_string());
        m.insert("grad_margin".into(), self.grad_margin.to_string());
        m.insert("boundary_buffer".into(), self.boundary_buffer.to_string());
        m.insert("spectral_norm".into(), self.spectral_norm.to_string());
        m.insert(
            "train_langevin_iters".into(),
            self.train_langevin_iters.to_string(),
        );
        m.insert(
            "eval_langevin_iters".into(),
            self.eval_langevin_iters.to_string(),
        );
        m.insert("eval_chains".into(), self.eval_chains.to_string());
        m.insert("n_atoms".into(), self.n_atoms.to_string());
        m.insert("record_wall_time".into(), self.record_wall_time.to_string());
        m
    }
}
