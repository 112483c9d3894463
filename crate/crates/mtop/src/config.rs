//! Layered TOML configuration: embedded defaults, then a user file, then flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use mtop_core::algorithms::{Algorithm, AtLucbParams, ExplorerParams};
use mtop_core::env::epidemic::{
    enumerate_strategies, transmission_for_r0, ContactMatrices, EpidemicBandit, EpidemicConfig,
    EpidemicConfigError, Objective, Scenario, SupplySchedule, VaccineProfile, GROUPS,
};
use mtop_core::env::synthetic::SyntheticBandit;
use mtop_core::{ArmId, EnvError, Environment, Sample};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use toml::Table;

pub const DEFAULT_TOML: &str = include_str!("../data/default.toml");
pub const SYNTHETIC_HARD_TOML: &str = include_str!("../data/synthetic_hard.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Epidemic(#[from] EpidemicConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Algorithm(#[from] mtop_core::algorithms::ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvironmentKind {
    Synthetic,
    Epidemic,
}

impl FromStr for EnvironmentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "synthetic" => Ok(EnvironmentKind::Synthetic),
            "epidemic" => Ok(EnvironmentKind::Epidemic),
            _ => Err(ConfigError::Invalid(format!("unknown environment '{s}'"))),
        }
    }
}

impl fmt::Display for EnvironmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvironmentKind::Synthetic => "synthetic",
            EnvironmentKind::Epidemic => "epidemic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSettings {
    pub environment: EnvironmentKind,
    pub algorithm: Algorithm,
    pub m: usize,
    pub budget: usize,
    pub runs: usize,
    pub seed: u64,
    pub repetitions: usize,
    /// Worker threads; left out of the hashed rendering since results do not
    /// depend on it.
    #[serde(skip_serializing)]
    pub parallel: usize,
    pub scenario: String,
    pub objective: Objective,
    pub arms_subset: Vec<usize>,
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSettings {
    pub n_mc: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSettings {
    pub arms: usize,
    pub low: f64,
    pub high: f64,
    pub sd: f64,
    pub means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaccineSettings {
    pub mrna: VaccineProfile,
    pub vector: VaccineProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplySettings {
    pub per_thousand: bool,
    pub mrna: Vec<f64>,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicSettings {
    pub population: u64,
    pub group_fractions: [f64; GROUPS],
    pub r0: f64,
    pub latent_days: f64,
    pub infectious_days: f64,
    pub hospitalization: [f64; GROUPS],
    pub initial_recovered_fraction: f64,
    pub initial_infected_fraction: f64,
    pub horizon_days: u32,
    pub symmetrize: bool,
    pub vaccines: VaccineSettings,
    pub supply: SupplySettings,
    pub contacts: ContactMatrices,
}

/// The fully resolved configuration. Its JSON form is what gets hashed and
/// copied into every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub experiment: ExperimentSettings,
    pub atlucb: AtLucbParams,
    pub diagnose: DiagnoseSettings,
    pub synthetic: SyntheticSettings,
    pub epidemic: EpidemicSettings,
}

/// Recursively overlays `top` on `base`.
fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl Settings {
    pub fn defaults() -> Self {
        Self::from_layers(&[]).expect("embedded defaults are valid")
    }

    /// Defaults overlaid with each TOML text in order.
    pub fn from_layers(layers: &[&str]) -> Result<Self, ConfigError> {
        let mut table: Table = DEFAULT_TOML.parse()?;
        for layer in layers {
            merge(&mut table, layer.parse()?);
        }
        Ok(toml::Value::Table(table).try_into()?)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Self::from_layers(&[]),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.display().to_string(),
                    source,
                })?;
                Self::from_layers(&[&text])
            }
        }
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        Ok(self.experiment.scenario.parse()?)
    }

    pub fn explorer_params(&self) -> ExplorerParams {
        ExplorerParams {
            atlucb: self.atlucb,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.experiment;
        if e.runs == 0 {
            return Err(ConfigError::Invalid("runs must be positive".into()));
        }
        self.atlucb.validate()?;
        self.scenario()?;
        Ok(())
    }

    /// Canonical JSON rendering.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("settings serialize")
    }

    /// Hex SHA-256 of the canonical JSON rendering.
    pub fn hash(&self) -> String {
        hash_json(&self.to_json())
    }

    /// Epidemic configuration for `scenario` with shared defaults elsewhere.
    pub fn epidemic_config(&self, scenario: Scenario) -> Result<EpidemicConfig, ConfigError> {
        let s = &self.epidemic;
        let fractions_ok = s.group_fractions.iter().all(|&f| f > 0.0)
            && (s.group_fractions.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        if !fractions_ok {
            return Err(ConfigError::Invalid(
                "group fractions must be positive and sum to 1".into(),
            ));
        }
        let population = split_population(s.population, &s.group_fractions);
        let mut contacts = s.contacts.clone();
        if s.symmetrize {
            contacts.make_reciprocal(&population);
        }
        if !(s.r0 >= 0.0 && s.r0.is_finite()) {
            return Err(ConfigError::Invalid(
                "r0 must be finite and nonnegative".into(),
            ));
        }
        let q = transmission_for_r0(s.r0, &contacts.total(), s.infectious_days);
        let scale = |w: &[f64]| -> Vec<f64> {
            let k = if s.supply.per_thousand {
                s.population as f64 / 1000.0
            } else {
                1.0
            };
            w.iter().map(|x| x * k).collect()
        };
        let config = EpidemicConfig {
            population,
            contacts,
            reductions: scenario.reductions(),
            transmission_probability: q,
            latent_days: s.latent_days,
            infectious_days: s.infectious_days,
            hospitalization: s.hospitalization,
            initial_recovered_fraction: s.initial_recovered_fraction,
            initial_infected: (s.initial_infected_fraction * s.population as f64).round() as u64,
            mrna: s.vaccines.mrna,
            vector: s.vaccines.vector,
            supply: SupplySchedule {
                mrna: scale(&s.supply.mrna),
                vector: scale(&s.supply.vector),
            },
            horizon_days: s.horizon_days,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn synthetic_bandit(&self) -> Result<SyntheticBandit, ConfigError> {
        let s = &self.synthetic;
        Ok(if s.means.is_empty() {
            SyntheticBandit::linear(s.arms, s.low, s.high, s.sd)?
        } else {
            SyntheticBandit::gaussian(&s.means, s.sd)?
        })
    }

    pub fn epidemic_bandit(&self) -> Result<EpidemicBandit, ConfigError> {
        let config = self.epidemic_config(self.scenario()?)?;
        let all = enumerate_strategies();
        let strategies = if self.experiment.arms_subset.is_empty() {
            all
        } else {
            self.experiment
                .arms_subset
                .iter()
                .map(|&k| {
                    all.get(k).copied().ok_or_else(|| {
                        ConfigError::Invalid(format!("arm {k} is outside 0..{}", all.len()))
                    })
                })
                .collect::<Result<_, _>>()?
        };
        Ok(EpidemicBandit::new(
            config,
            strategies,
            self.experiment.objective,
        )?)
    }

    pub fn environment(&self) -> Result<Env, ConfigError> {
        self.validate()?;
        let env = match self.experiment.environment {
            EnvironmentKind::Synthetic => Env::Synthetic(self.synthetic_bandit()?),
            EnvironmentKind::Epidemic => Env::Epidemic(Box::new(self.epidemic_bandit()?)),
        };
        mtop_core::algorithms::check_m(env.arms(), self.experiment.m)?;
        Ok(env)
    }
}

/// Group sizes by largest remainder, lower index first on ties.
pub fn split_population(total: u64, fractions: &[f64; GROUPS]) -> [u64; GROUPS] {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut out: [u64; GROUPS] = std::array::from_fn(|g| quotas[g].floor() as u64);
    let short = total.saturating_sub(out.iter().sum());
    let mut order: Vec<usize> = (0..GROUPS).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in order.iter().take(short as usize) {
        out[g] += 1;
    }
    out
}

pub fn hash_json(value: &serde_json::Value) -> String {
    let text = serde_json::to_string(value).expect("json renders");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// The environment selected by a configuration.
#[derive(Debug, Clone)]
pub enum Env {
    Synthetic(SyntheticBandit),
    Epidemic(Box<EpidemicBandit>),
}

impl Env {
    /// Hash of the environment definition alone.
    pub fn hash(&self) -> String {
        let value = match self {
            Env::Synthetic(b) => serde_json::to_value(b),
            Env::Epidemic(b) => serde_json::to_value(b),
        }
        .expect("environment serializes");
        hash_json(&value)
    }
}

impl Environment for Env {
    fn arms(&self) -> usize {
        match self {
            Env::Synthetic(b) => b.arms(),
            Env::Epidemic(b) => b.arms(),
        }
    }

    fn pull(&self, arm: ArmId, seed: u64) -> Result<Sample, EnvError> {
        match self {
            Env::Synthetic(b) => b.pull(arm, seed),
            Env::Epidemic(b) => b.pull(arm, seed),
        }
    }

    fn true_means(&self) -> Option<Vec<f64>> {
        match self {
            Env::Synthetic(b) => b.true_means(),
            Env::Epidemic(b) => b.true_means(),
        }
    }
}
