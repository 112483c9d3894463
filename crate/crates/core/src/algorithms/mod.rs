//! Exploration strategies behind a common stepping contract.
//!
//! Every strategy owns its state and random stream. A step pulls one arm
//! (BFTS, uniform) or two arms (AT-LUCB) through a caller-supplied closure,
//! folds the rewards in, and leaves a fresh [`Recommendation`] behind.

mod atlucb;
mod bfts;
mod uniform;

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use atlucb::{beta, AtLucb, AtLucbParams};
pub use bfts::{Bfts, BftsSelection};
pub use uniform::Uniform;

use crate::bandit::{ArmId, EnvError, Recommendation, Sample};
use crate::posterior::PosteriorSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bfts,
    AtLucb,
    Uniform,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Bfts, Algorithm::AtLucb, Algorithm::Uniform];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bfts => "bfts",
            Algorithm::AtLucb => "atlucb",
            Algorithm::Uniform => "uniform",
        }
    }

    /// Environment pulls per algorithm step.
    pub fn pulls_per_step(self) -> usize {
        match self {
            Algorithm::AtLucb => 2,
            Algorithm::Bfts | Algorithm::Uniform => 1,
        }
    }

    /// Samples that must fit in the budget before the first adaptive step.
    pub fn warm_up_samples(self, arms: usize) -> usize {
        match self {
            Algorithm::Bfts => 2 * arms,
            Algorithm::AtLucb => 2 * arms.div_ceil(2),
            Algorithm::Uniform => 0,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown algorithm '{0}' (expected bfts, atlucb or uniform)")]
pub struct UnknownAlgorithm(pub alloc::string::String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bfts" => Ok(Algorithm::Bfts),
            "atlucb" | "at-lucb" => Ok(Algorithm::AtLucb),
            "uniform" => Ok(Algorithm::Uniform),
            _ => Err(UnknownAlgorithm(s.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("need 1 <= m < K, got m = {m} with K = {arms}")]
    BadM { m: usize, arms: usize },
    #[error("AT-LUCB delta1 must lie in (0, 1), got {0}")]
    BadDelta1(f64),
    #[error("AT-LUCB alpha must lie in [1/50, 1), got {0}")]
    BadAlpha(f64),
    #[error("AT-LUCB epsilon must be >= 0, got {0}")]
    BadEpsilon(f64),
}

pub fn check_m(arms: usize, m: usize) -> Result<(), ConfigError> {
    if arms >= 2 && m >= 1 && m < arms {
        Ok(())
    } else {
        Err(ConfigError::BadM { m, arms })
    }
}

/// Strategy-specific information about one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepDetail {
    /// Deterministic initialization pulls.
    WarmUp,
    Bfts {
        /// One posterior draw per arm.
        sampled_means: Vec<f64>,
        /// The Bernoulli(1/2) boundary coin; `true` pulls rank `m + 1`.
        upper_side: bool,
    },
    AtLucb {
        stage: u64,
        delta: f64,
        advanced: bool,
    },
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub t: u64,
    pub pulls: Vec<(ArmId, Sample)>,
    pub recommendation: Recommendation,
    pub detail: StepDetail,
}

pub type PullFn<'a> = dyn FnMut(ArmId) -> Result<Sample, EnvError> + 'a;

/// A sequential m-top exploration strategy.
pub trait Explorer: Send {
    fn algorithm(&self) -> Algorithm;

    fn arms(&self) -> usize;

    fn m(&self) -> usize;

    /// Steps taken so far.
    fn t(&self) -> u64;

    /// Pull counts per arm.
    fn counts(&self) -> &[u64];

    fn recommendation(&self) -> &Recommendation;

    /// Runs one step, pulling through `pull`.
    fn step(&mut self, pull: &mut PullFn<'_>) -> Result<StepReport, EnvError>;

    fn pulls_per_step(&self) -> usize {
        self.algorithm().pulls_per_step()
    }

    /// Posterior view, for Bayesian strategies.
    fn posterior_snapshots(&self) -> Option<Vec<PosteriorSnapshot>> {
        None
    }
}

/// Algorithm-specific knobs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExplorerParams {
    #[serde(default)]
    pub atlucb: AtLucbParams,
}

pub fn build(
    algorithm: Algorithm,
    arms: usize,
    m: usize,
    seed: u64,
    params: &ExplorerParams,
) -> Result<Box<dyn Explorer>, ConfigError> {
    Ok(match algorithm {
        Algorithm::Bfts => Box::new(Bfts::new(arms, m, seed)?),
        Algorithm::AtLucb => Box::new(AtLucb::new(arms, m, params.atlucb)?),
        Algorithm::Uniform => Box::new(Uniform::new(arms, m)?),
    })
}

/// Empirical means maintained incrementally.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ArmStats {
    pub counts: Vec<u64>,
    pub sums: Vec<f64>,
}

impl ArmStats {
    pub fn new(arms: usize) -> Self {
        ArmStats {
            counts: alloc::vec![0; arms],
            sums: alloc::vec![0.0; arms],
        }
    }

    pub fn add(&mut self, arm: ArmId, reward: f64) {
        self.counts[arm.0] += 1;
        self.sums[arm.0] += reward;
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        let n = self.counts[arm];
        (n > 0).then(|| self.sums[arm] / n as f64)
    }

    pub fn means(&self) -> Vec<Option<f64>> {
        (0..self.counts.len()).map(|a| self.mean(a)).collect()
    }

    pub fn top_m(&self, m: usize) -> Vec<ArmId> {
        crate::bandit::empirical_top_m(&self.means(), m)
    }
}
