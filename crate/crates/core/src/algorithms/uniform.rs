//! Round-robin baseline: always pull the least-sampled arm and recommend the
//! empirical top-m.

use super::{check_m, Algorithm, ArmStats, ConfigError, Explorer, PullFn, StepDetail, StepReport};
use crate::bandit::{ArmId, EnvError, History, Recommendation};

#[derive(Debug, Clone)]
pub struct Uniform {
    m: usize,
    stats: ArmStats,
    history: History,
    t: u64,
    recommendation: Recommendation,
}

impl Uniform {
    pub fn new(arms: usize, m: usize) -> Result<Self, ConfigError> {
        check_m(arms, m)?;
        Ok(Uniform {
            m,
            stats: ArmStats::new(arms),
            history: History::new(arms),
            t: 0,
            recommendation: Recommendation::new((0..m).map(ArmId).collect(), 0),
        })
    }

    /// Least-sampled arm, lowest index on ties.
    pub fn select(&self) -> ArmId {
        let (arm, _) = self
            .stats
            .counts
            .iter()
            .enumerate()
            .min_by_key(|&(i, &n)| (n, i))
            .expect("K >= 2");
        ArmId(arm)
    }

    pub fn history(&self) -> &History {
        &self.history
    }
}

impl Explorer for Uniform {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Uniform
    }

    fn arms(&self) -> usize {
        self.stats.counts.len()
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
        let arm = self.select();
        let sample = pull(arm)?;
        self.t += 1;
        self.stats.add(arm, sample.reward.value());
        self.history.append(arm, sample.reward);
        self.recommendation = Recommendation::new(self.stats.top_m(self.m), self.t);
        Ok(StepReport {
            t: self.t,
            pulls: alloc::vec![(arm, sample)],
            recommendation: self.recommendation.clone(),
            detail: StepDetail::Uniform,
        })
    }
}
