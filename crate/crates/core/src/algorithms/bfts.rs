//! Boundary Focused Thompson Sampling.
//!
//! Each step draws one mean per arm from its truncated-t posterior, ranks the
//! draws, and pulls the arm at rank `m` or `m + 1` with equal probability.
//! Recommendations are the `m` largest posterior means and do not feed back
//! into sampling.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_m, Algorithm, ArmStats, ConfigError, Explorer, PullFn, StepDetail, StepReport};
use crate::bandit::{rank_descending, top_m, ArmId, EnvError, History, Recommendation};
use crate::posterior::{PosteriorSnapshot, TruncatedTPosterior};

/// Outcome of the boundary selection rule.
#[derive(Debug, Clone, PartialEq)]
pub struct BftsSelection {
    pub arm: ArmId,
    pub sampled_means: Vec<f64>,
    pub upper_side: bool,
}

#[derive(Debug, Clone)]
pub struct Bfts {
    m: usize,
    posteriors: Vec<TruncatedTPosterior>,
    means: Vec<f64>,
    stats: ArmStats,
    history: History,
    rng: ChaCha8Rng,
    t: u64,
    recommendation: Recommendation,
}

impl Bfts {
    pub fn new(arms: usize, m: usize, seed: u64) -> Result<Self, ConfigError> {
        check_m(arms, m)?;
        Ok(Bfts {
            m,
            posteriors: alloc::vec![TruncatedTPosterior::new(); arms],
            means: alloc::vec![0.0; arms],
            stats: ArmStats::new(arms),
            history: History::new(arms),
            rng: crate::seed::rng(seed),
            t: 0,
            recommendation: Recommendation::new((0..m).map(ArmId).collect(), 0),
        })
    }

    pub fn posteriors(&self) -> &[TruncatedTPosterior] {
        &self.posteriors
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    /// Two round-robin passes must finish before posteriors are proper.
    pub fn in_warm_up(&self) -> bool {
        self.history.len() < 2 * self.posteriors.len()
    }

    fn warm_up_arm(&self) -> ArmId {
        ArmId(self.history.len() % self.posteriors.len())
    }

    /// Picks the next arm. During warm-up this is the next round-robin arm and
    /// no randomness is consumed.
    pub fn select(&mut self) -> BftsSelection {
        if self.in_warm_up() {
            return BftsSelection {
                arm: self.warm_up_arm(),
                sampled_means: Vec::new(),
                upper_side: false,
            };
        }
        let rng = &mut self.rng;
        let sampled_means: Vec<f64> = self
            .posteriors
            .iter()
            .map(|p| p.sample(rng).expect("warm-up makes every posterior proper"))
            .collect();
        let upper_side: bool = self.rng.random_bool(0.5);
        let ranked = rank_descending(&sampled_means);
        let arm = ranked[self.m - 1 + usize::from(upper_side)];
        BftsSelection {
            arm,
            sampled_means,
            upper_side,
        }
    }

    /// Top-m by truncated posterior mean; empirical top-m while any
    /// posterior is still improper.
    pub fn recommend(&self) -> Vec<ArmId> {
        if self.posteriors.iter().all(TruncatedTPosterior::is_proper) {
            top_m(&self.means, self.m)
        } else {
            self.stats.top_m(self.m)
        }
    }

    fn observe(&mut self, arm: ArmId, reward: crate::bandit::Reward) {
        let p = &mut self.posteriors[arm.0];
        p.update(reward);
        if let Ok(mean) = p.truncated_mean() {
            self.means[arm.0] = mean;
        }
        self.stats.add(arm, reward.value());
        self.history.append(arm, reward);
    }
}

impl Explorer for Bfts {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Bfts
    }

    fn arms(&self) -> usize {
        self.posteriors.len()
    }

    fn m(&self) -> usize {
        self.m
    }

    fn t(&self) -> u64 {
        self.t
    }

    fn counts(&self) -> &[u64] {
        &self.stats.counts
    }

    fn recommendation(&self) -> &Recommendation {
        &self.recommendation
    }

    fn step(&mut self, pull: &mut PullFn<'_>) -> Result<StepReport, EnvError> {
        let warm = self.in_warm_up();
        let selection = self.select();
        let sample = pull(selection.arm)?;
        self.t += 1;
        self.observe(selection.arm, sample.reward);
        self.recommendation = Recommendation::new(self.recommend(), self.t);
        let detail = if warm {
            StepDetail::WarmUp
        } else {
            StepDetail::Bfts {
                sampled_means: selection.sampled_means,
                upper_side: selection.upper_side,
            }
        };
        Ok(StepReport {
            t: self.t,
            pulls: alloc::vec![(selection.arm, sample)],
            recommendation: self.recommendation.clone(),
            detail,
        })
    }

    fn posterior_snapshots(&self) -> Option<Vec<PosteriorSnapshot>> {
        Some(
            self.posteriors
                .iter()
                .enumerate()
                .map(|(a, p)| p.snapshot(ArmId(a)))
                .collect(),
        )
    }
}
