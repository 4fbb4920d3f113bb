//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Bounds,
    ToyScaling,
    Injection,
    CircuitVerify,
}

impl Kind {
    pub fn command(&self) -> &'static str {
        match self {
            Self::Bounds => "bounds",
            Self::ToyScaling => "toy",
            Self::Injection => "injection",
            Self::CircuitVerify => "verify",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub bounds: Option<BoundsConfig>,
    pub toy: Option<ToyConfig>,
    pub injection: Option<InjectionConfig>,
    pub verify: Option<VerifyConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub spec: PathBuf,
    #[serde(default)]
    pub measure_diamond: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyConfig {
    pub theta: f64,
    pub epsilons: Vec<f64>,
    pub ns: Vec<usize>,
    /// Realizations averaged by the fixed-realization RMS.
    pub seeds: usize,
    /// Shots per point for the resampled protocol.
    pub shots: usize,
    pub protocols: Vec<String>,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            theta: 0.0,
            epsilons: vec![1e-3, 2e-3],
            ns: vec![10, 30, 100, 300, 1000],
            seeds: 400,
            shots: 2000,
            protocols: [
                "systematic",
                "fixed_realization",
                "resampled",
                "exact_averaged",
            ]
            .map(String::from)
            .to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionModeName {
    #[default]
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
    #[serde(default = "default_directions")]
    pub directions: usize,
}

fn default_directions() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionConfig {
    pub ancillas: PathBuf,
    /// Gate spec with `gate = t` slots; a generated circuit is used if absent.
    pub circuit: Option<PathBuf>,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_injections")]
    pub injections: usize,
    #[serde(default)]
    pub mode: InjectionModeName,
    #[serde(default = "default_injection_shots")]
    pub shots: usize,
    pub sweep: Option<SweepConfig>,
}

fn default_width() -> usize {
    2
}

fn default_injections() -> usize {
    20
}

fn default_injection_shots() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    #[default]
    Zero,
    Plus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub spec: PathBuf,
    pub width: Option<usize>,
    #[serde(default)]
    pub initial: InitialState,
    /// Pauli strings, one letter per qubit (`I`, `X`, `Y`, `Z`).
    pub observables: Option<Vec<String>>,
    /// Monte Carlo shots for the resampled column; none when absent.
    pub shots: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl ExperimentConfig {
    /// Loads a config; relative input paths are resolved against the config's
    /// directory.
    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve(base);
        Ok((cfg, text))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(b) = &mut self.bounds {
            fix(&mut b.spec);
        }
        if let Some(i) = &mut self.injection {
            fix(&mut i.ancillas);
            if let Some(c) = &mut i.circuit {
                fix(c);
            }
        }
        if let Some(v) = &mut self.verify {
            fix(&mut v.spec);
        }
        if let Some(o) = &mut self.out {
            fix(o);
        }
    }

    pub fn check_kind(&self, expected: Kind) -> Result<(), ConfigError> {
        match self.kind {
            Some(k) if k != expected => Err(ConfigError::Invalid(format!(
                "config is for `{}` but the `{}` command was run",
                k.command(),
                expected.command()
            ))),
            _ => Ok(()),
        }
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.ns.is_empty() || self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Invalid(
                "toy.ns must be a nonempty, strictly ascending list".into(),
            ));
        }
        if self.ns[0] == 0 {
            return Err(ConfigError::Invalid(
                "toy.ns entries must be at least 1".into(),
            ));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(ConfigError::Invalid(
                "toy.epsilons must be a nonempty list of finite, nonnegative values".into(),
            ));
        }
        if !self.theta.is_finite() {
            return Err(ConfigError::Invalid("toy.theta must be finite".into()));
        }
        if self.shots == 0 || self.seeds == 0 {
            return Err(ConfigError::Invalid(
                "toy.shots and toy.seeds must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
