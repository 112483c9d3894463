//! Truncated non-standardised Student-t posterior over an arm mean.
//!
//! Rewards are modelled as Gaussian with unknown mean and variance under the
//! Jeffreys prior `σ⁻³`. Given `n` rewards the posterior over the mean is a
//! non-standardised t with
//!
//! ```text
//! μ₀ = Σ rᵢ / n,   σ₀² = Σ (rᵢ − μ₀)² / n²,   ν = n
//! ```
//!
//! truncated to `[0, 1]`. It is proper from two observations on.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::{ArmId, Reward};
use crate::special::{SpecialError, StandardT};

/// Below this `σ₀²` the posterior is treated as a point mass at `μ₀`.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PosteriorError {
    #[error("posterior needs at least 2 observations, has {0}")]
    NotReady(u64),
    #[error("invalid t-distribution parameters")]
    InvalidParams,
    #[error("probability must lie strictly inside (0, 1)")]
    Domain,
}

impl From<SpecialError> for PosteriorError {
    fn from(_: SpecialError) -> Self {
        PosteriorError::Domain
    }
}

/// Location-scale Student-t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TDistParams {
    pub mu: f64,
    pub sigma: f64,
    pub nu: f64,
}

impl TDistParams {
    pub fn new(mu: f64, sigma: f64, nu: f64) -> Result<Self, PosteriorError> {
        if mu.is_finite() && sigma > 0.0 && sigma.is_finite() && nu > 0.0 && nu.is_finite() {
            Ok(TDistParams { mu, sigma, nu })
        } else {
            Err(PosteriorError::InvalidParams)
        }
    }

    fn standard(&self) -> StandardT {
        StandardT::new(self.nu).expect("nu validated at construction")
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.standard().pdf((x - self.mu) / self.sigma) / self.sigma
    }

    pub fn cdf(&self, x: f64) -> f64 {
        t_cdf(self, x)
    }

    pub fn quantile(&self, q: f64) -> Result<f64, PosteriorError> {
        t_quantile(self, q)
    }
}

pub fn t_cdf(params: &TDistParams, x: f64) -> f64 {
    params.standard().cdf((x - params.mu) / params.sigma)
}

pub fn t_quantile(params: &TDistParams, q: f64) -> Result<f64, PosteriorError> {
    let u = params.standard().quantile(q)?;
    Ok(params.mu + params.sigma * u)
}

/// Sufficient statistics of one arm and the posterior they induce.
///
/// The centred sum of squares is maintained with Welford's update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TruncatedTPosterior {
    n: u64,
    mean: f64,
    sum_sq_dev: f64,
}

/// The truncated posterior in standardized coordinates.
struct Standardized {
    mu: f64,
    sigma: f64,
    dist: StandardT,
    /// Standardized bounds of `[0, 1]`; `a <= 0 <= b`.
    a: f64,
    b: f64,
}

impl TruncatedTPosterior {
    pub fn new() -> Self {
        Self::default()
    }

    /// Two-pass batch construction.
    pub fn from_rewards(rewards: &[f64]) -> Self {
        let n = rewards.len() as u64;
        if n == 0 {
            return Self::default();
        }
        let mean = rewards.iter().sum::<f64>() / n as f64;
        let sum_sq_dev = rewards.iter().map(|r| (r - mean) * (r - mean)).sum();
        TruncatedTPosterior {
            n,
            mean,
            sum_sq_dev,
        }
    }

    pub fn update(&mut self, reward: Reward) {
        let r = reward.value();
        self.n += 1;
        let delta = r - self.mean;
        self.mean += delta / self.n as f64;
        self.sum_sq_dev += delta * (r - self.mean);
    }

    #[must_use]
    pub fn updated(mut self, reward: Reward) -> Self {
        self.update(reward);
        self
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sum(&self) -> f64 {
        self.mean * self.n as f64
    }

    pub fn sum_sq_dev(&self) -> f64 {
        self.sum_sq_dev
    }

    /// `μ₀`; zero before any observation.
    pub fn mu0(&self) -> f64 {
        self.mean
    }

    /// `σ₀² = Σ (rᵢ − μ₀)² / n²`.
    pub fn sigma0_sq(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n = self.n as f64;
        self.sum_sq_dev.max(0.0) / (n * n)
    }

    pub fn nu(&self) -> u64 {
        self.n
    }

    pub fn is_proper(&self) -> bool {
        self.n >= 2
    }

    fn check_ready(&self) -> Result<(), PosteriorError> {
        if self.is_proper() {
            Ok(())
        } else {
            Err(PosteriorError::NotReady(self.n))
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma0_sq() <= VARIANCE_FLOOR
    }

    /// The untruncated t; `None` while improper or degenerate.
    pub fn t_params(&self) -> Option<TDistParams> {
        if !self.is_proper() || self.is_degenerate() {
            return None;
        }
        TDistParams::new(self.mean, libm::sqrt(self.sigma0_sq()), self.n as f64).ok()
    }

    fn standardized(&self) -> Option<Standardized> {
        let p = self.t_params()?;
        Some(Standardized {
            mu: p.mu,
            sigma: p.sigma,
            dist: p.standard(),
            a: (0.0 - p.mu) / p.sigma,
            b: (1.0 - p.mu) / p.sigma,
        })
    }

    /// Mean of the `[0, 1]`-truncated posterior:
    /// `σ E[u | a <= u <= b] + μ` with `a = −μ/σ`, `b = (1 − μ)/σ`.
    pub fn truncated_mean(&self) -> Result<f64, PosteriorError> {
        self.check_ready()?;
        let Some(s) = self.standardized() else {
            return Ok(self.mean.clamp(0.0, 1.0));
        };
        let mass = s.mass();
        let conditional = s.dist.partial_first_moment(s.a, s.b) / mass;
        Ok((s.sigma * conditional + s.mu).clamp(0.0, 1.0))
    }

    /// Probability mass the untruncated posterior puts on `[0, 1]`.
    pub fn truncation_mass(&self) -> Result<f64, PosteriorError> {
        self.check_ready()?;
        Ok(self.standardized().map_or(1.0, |s| s.mass()))
    }

    /// Inverse-CDF draw from the truncated posterior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, PosteriorError> {
        self.check_ready()?;
        let u: f64 = rng.random();
        Ok(self.sample_with_uniform(u))
    }

    /// Maps a uniform `u ∈ [0, 1)` through the truncated inverse CDF.
    ///
    /// Panics if the posterior is not proper.
    pub fn sample_with_uniform(&self, u: f64) -> f64 {
        assert!(self.is_proper(), "sampling requires a proper posterior");
        let Some(s) = self.standardized() else {
            return self.mean.clamp(0.0, 1.0);
        };
        let lower_a = s.dist.tail(s.a); // F(a), a <= 0
        let upper_b = s.dist.tail(s.b); // 1 - F(b), b >= 0
        let mass = s.mass();
        let target = lower_a + u * mass;
        let z = if target < 0.5 {
            -s.dist.upper_quantile(target)
        } else {
            s.dist.upper_quantile(upper_b + (1.0 - u) * mass)
        };
        (s.mu + s.sigma * z.clamp(s.a, s.b)).clamp(0.0, 1.0)
    }

    pub fn snapshot(&self, arm: ArmId) -> PosteriorSnapshot {
        PosteriorSnapshot {
            arm,
            n: self.n,
            mu0: self.mean,
            sigma0_sq: self.sigma0_sq(),
            nu: self.n,
            truncated_mean: self.truncated_mean().ok(),
        }
    }
}

impl Standardized {
    fn mass(&self) -> f64 {
        1.0 - self.dist.tail(self.a) - self.dist.tail(self.b)
    }
}

/// Serializable view of one arm's posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSnapshot {
    pub arm: ArmId,
    pub n: u64,
    pub mu0: f64,
    pub sigma0_sq: f64,
    pub nu: u64,
    pub truncated_mean: Option<f64>,
}

impl PosteriorSnapshot {
    /// Rebuilds the posterior from a snapshot.
    pub fn posterior(&self) -> TruncatedTPosterior {
        let n = self.n as f64;
        TruncatedTPosterior {
            n: self.n,
            mean: self.mu0,
            sum_sq_dev: self.sigma0_sq * n * n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::integrate;
    use alloc::vec::Vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn post(rewards: &[f64]) -> TruncatedTPosterior {
        let mut p = TruncatedTPosterior::new();
        for &r in rewards {
            p.update(Reward::new(r).unwrap());
        }
        p
    }

    /// Builds a posterior with chosen `(μ₀, σ₀², ν)`.
    fn with_params(mu0: f64, sigma0_sq: f64, nu: u64) -> TruncatedTPosterior {
        PosteriorSnapshot {
            arm: ArmId(0),
            n: nu,
            mu0,
            sigma0_sq,
            nu,
            truncated_mean: None,
        }
        .posterior()
    }

    fn quadrature_mean(mu: f64, sigma: f64, nu: f64) -> f64 {
        let p = TDistParams::new(mu, sigma, nu).unwrap();
        let num = integrate(|x| x * p.pdf(x), 0.0, 1.0, 1e-13);
        let den = integrate(|x| p.pdf(x), 0.0, 1.0, 1e-13);
        num / den
    }

    #[test]
    fn two_rewards() {
        let p = post(&[0.2, 0.4]);
        assert!((p.mu0() - 0.3).abs() < 1e-15);
        assert!((p.sigma0_sq() - 0.005).abs() < 1e-15);
        assert_eq!(p.nu(), 2);
    }

    #[test]
    fn identical_rewards_are_degenerate() {
        for &c in &[0.0, 0.37, 1.0] {
            let p = post(&[c, c]);
            assert_eq!(p.mu0(), c);
            assert_eq!(p.sigma0_sq(), 0.0);
            assert!(p.is_degenerate());
            assert_eq!(p.truncated_mean().unwrap(), c);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            assert_eq!(p.sample(&mut rng).unwrap(), c);
        }
    }

    #[test]
    fn improper_posterior_is_not_ready() {
        assert_eq!(
            post(&[0.3]).truncated_mean(),
            Err(PosteriorError::NotReady(1))
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(post(&[]).sample(&mut rng), Err(PosteriorError::NotReady(0)));
    }

    #[test]
    fn incremental_matches_batch_on_1000_rewards() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let rewards: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let inc = post(&rewards);
        let batch = TruncatedTPosterior::from_rewards(&rewards);
        assert_eq!(inc.n(), batch.n());
        assert!((inc.mu0() - batch.mu0()).abs() < 1e-12);
        assert!((inc.sigma0_sq() - batch.sigma0_sq()).abs() < 1e-12);
    }

    #[test]
    fn centred_mean_is_exact() {
        for &s2 in &[1e-4, 0.01, 0.3, 4.0] {
            for &nu in &[2, 3, 40] {
                let m = with_params(0.5, s2, nu).truncated_mean().unwrap();
                assert!((m - 0.5).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn two_reward_mean_matches_quadrature() {
        let p = post(&[0.2, 0.4]);
        let expect = quadrature_mean(0.3, libm::sqrt(0.005), 2.0);
        assert!((p.truncated_mean().unwrap() - expect).abs() < 1e-8);
    }

    #[test]
    fn upper_truncation_pulls_mean_down() {
        let p = with_params(0.9, 0.25, 3);
        let m = p.truncated_mean().unwrap();
        let expect = quadrature_mean(0.9, 0.5, 3.0);
        assert!(m < 0.9);
        assert!((m - expect).abs() < 1e-8);
    }

    #[test]
    fn extreme_truncation_samples_stay_in_unit_interval() {
        let p = with_params(0.99, 1.0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100_000 {
            let x = p.sample(&mut rng).unwrap();
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn sampler_endpoints() {
        let p = with_params(0.3, 0.005, 2);
        assert!(p.sample_with_uniform(0.0) >= 0.0);
        assert!(p.sample_with_uniform(1.0 - 1e-17) <= 1.0);
        let mid = p.sample_with_uniform(0.5);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn location_scale_cdf() {
        let p = TDistParams::new(0.3, 0.2, 4.0).unwrap();
        assert!((p.cdf(0.3) - 0.5).abs() < 1e-15);
        let c = TDistParams::new(-1.0, 2.0, 1.0).unwrap();
        assert!((c.cdf(1.0) - 0.75).abs() < 1e-14);
        assert_eq!(p.quantile(1.0), Err(PosteriorError::Domain));
        assert!(TDistParams::new(0.0, 0.0, 1.0).is_err());
        assert!(TDistParams::new(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let p = post(&[0.1, 0.5, 0.7]);
        let back = p.snapshot(ArmId(3)).posterior();
        assert_eq!(back.n(), 3);
        assert!((back.sigma0_sq() - p.sigma0_sq()).abs() < 1e-15);
        assert!((back.truncated_mean().unwrap() - p.truncated_mean().unwrap()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn truncated_mean_inside_open_interval(
            mu0 in 0.0f64..=1.0, s in 1e-3f64..3.0, nu in 2u64..200
        ) {
            let m = with_params(mu0, s * s, nu).truncated_mean().unwrap();
            prop_assert!(m > 0.0 && m < 1.0, "m = {}", m);
        }

        #[test]
        fn incremental_equals_batch(rewards in prop::collection::vec(0.0f64..=1.0, 2..300)) {
            let inc = post(&rewards);
            let batch = TruncatedTPosterior::from_rewards(&rewards);
            prop_assert!((inc.mu0() - batch.mu0()).abs() < 1e-12);
            prop_assert!((inc.sigma0_sq() - batch.sigma0_sq()).abs() < 1e-12);
        }
    }
}
