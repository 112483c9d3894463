//! Gaussian and two-component Gaussian mixture arms with known means.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bandit::{ArmId, EnvError, Environment, Sample};
use crate::special::normal_cdf;

/// Secondary mode of a bimodal arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMode {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticArmSpec {
    pub mean: f64,
    pub sd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_mode: Option<SecondMode>,
    /// Probability of drawing from the primary mode.
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

impl SyntheticArmSpec {
    pub fn gaussian(mean: f64, sd: f64) -> Self {
        SyntheticArmSpec {
            mean,
            sd,
            second_mode: None,
            weight: 1.0,
        }
    }

    pub fn mixture(mean: f64, sd: f64, second: SecondMode, weight: f64) -> Self {
        SyntheticArmSpec {
            mean,
            sd,
            second_mode: Some(second),
            weight,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let mode_ok = |m: f64, s: f64| (0.0..=1.0).contains(&m) && s >= 0.0 && s.is_finite();
        if !mode_ok(self.mean, self.sd) {
            return Err(EnvError::Invalid(
                "arm mean must lie in [0, 1] and sd be >= 0",
            ));
        }
        if let Some(s) = self.second_mode {
            if !mode_ok(s.mean, s.sd) {
                return Err(EnvError::Invalid(
                    "second mode mean must lie in [0, 1] and sd be >= 0",
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.weight) {
            return Err(EnvError::Invalid("mixture weight must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Mean of the unclamped distribution.
    pub fn mean(&self) -> f64 {
        match self.second_mode {
            Some(s) => self.weight * self.mean + (1.0 - self.weight) * s.mean,
            None => self.mean,
        }
    }

    /// Exact mean of the draws after clamping to `[0, 1]`.
    pub fn clamped_mean(&self) -> f64 {
        let primary = clamped_gaussian_mean(self.mean, self.sd);
        match self.second_mode {
            Some(s) => {
                self.weight * primary + (1.0 - self.weight) * clamped_gaussian_mean(s.mean, s.sd)
            }
            None => primary,
        }
    }

    /// How far clamping moves the mean.
    pub fn clamping_bias(&self) -> f64 {
        self.clamped_mean() - self.mean()
    }

    /// One draw, clamped to `[0, 1]`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Sample, EnvError> {
        let (mean, sd) = match self.second_mode {
            Some(s) if self.weight < 1.0 => {
                if rng.random::<f64>() < self.weight {
                    (self.mean, self.sd)
                } else {
                    (s.mean, s.sd)
                }
            }
            _ => (self.mean, self.sd),
        };
        let z: f64 = StandardNormal.sample(rng);
        crate::bandit::Reward::clamped(mean + sd * z)
    }
}

fn clamped_gaussian_mean(mu: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mu.clamp(0.0, 1.0);
    }
    let phi = |x: f64| libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * core::f64::consts::PI);
    let a = (0.0 - mu) / sd;
    let b = (1.0 - mu) / sd;
    let inside = mu * (normal_cdf(b) - normal_cdf(a)) + sd * (phi(a) - phi(b));
    inside + (1.0 - normal_cdf(b))
}

/// A bandit of independent synthetic arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBandit {
    pub arms: Vec<SyntheticArmSpec>,
}

impl SyntheticBandit {
    pub fn new(arms: Vec<SyntheticArmSpec>) -> Result<Self, EnvError> {
        if arms.len() < 2 {
            return Err(EnvError::Invalid("an environment needs at least two arms"));
        }
        for a in &arms {
            a.validate()?;
        }
        Ok(SyntheticBandit { arms })
    }

    /// Gaussian arms with a shared standard deviation.
    pub fn gaussian(means: &[f64], sd: f64) -> Result<Self, EnvError> {
        Self::new(
            means
                .iter()
                .map(|&m| SyntheticArmSpec::gaussian(m, sd))
                .collect(),
        )
    }

    /// `arms` means spaced evenly over `[low, high]`.
    pub fn linear(arms: usize, low: f64, high: f64, sd: f64) -> Result<Self, EnvError> {
        if arms < 2 {
            return Err(EnvError::Invalid("an environment needs at least two arms"));
        }
        let step = (high - low) / (arms - 1) as f64;
        let means: Vec<f64> = (0..arms).map(|k| low + step * k as f64).collect();
        Self::gaussian(&means, sd)
    }
}

impl Environment for SyntheticBandit {
    fn arms(&self) -> usize {
        self.arms.len()
    }

    fn pull(&self, arm: ArmId, seed: u64) -> Result<Sample, EnvError> {
        self.check_arm(arm)?;
        let mut rng = crate::seed::rng(seed);
        self.arms[arm.0].draw(&mut rng)
    }

    fn true_means(&self) -> Option<Vec<f64>> {
        Some(self.arms.iter().map(SyntheticArmSpec::mean).collect())
    }
}
