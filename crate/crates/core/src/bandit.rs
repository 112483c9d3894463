//! Arms, rewards, histories and the environment contract.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of an arm in `[0, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArmId(pub usize);

impl ArmId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A reward in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Reward(f64);

impl Reward {
    /// Accepts only finite values inside `[0, 1]`.
    pub fn new(value: f64) -> Result<Self, EnvError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Reward(value))
        } else {
            Err(EnvError::InvalidReward(value))
        }
    }

    /// Clamps a finite value into `[0, 1]`, reporting whether clamping
    /// happened. Non-finite values are rejected.
    pub fn clamped(value: f64) -> Result<Sample, EnvError> {
        if !value.is_finite() {
            return Err(EnvError::InvalidReward(value));
        }
        let v = value.clamp(0.0, 1.0);
        Ok(Sample {
            reward: Reward(v),
            clamped: v != value,
        })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// One environment draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub reward: Reward,
    /// The raw draw fell outside `[0, 1]` and was clamped.
    pub clamped: bool,
}

impl From<Reward> for Sample {
    fn from(reward: Reward) -> Self {
        Sample {
            reward,
            clamped: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("arm {arm} is out of range for an environment with {arms} arms")]
    InvalidArm { arm: usize, arms: usize },
    #[error("reward {0} is not a finite value in [0, 1]")]
    InvalidReward(f64),
    #[error("invalid environment: {0}")]
    Invalid(&'static str),
}

/// A stochastic reward source with `K` arms.
///
/// `pull` must be a pure function of `(self, arm, seed)`: the same seed gives
/// the same sample, different seeds give independent samples.
pub trait Environment: Sync {
    fn arms(&self) -> usize;

    fn pull(&self, arm: ArmId, seed: u64) -> Result<Sample, EnvError>;

    /// Exact arm means, when the environment knows them.
    fn true_means(&self) -> Option<Vec<f64>> {
        None
    }

    fn check_arm(&self, arm: ArmId) -> Result<(), EnvError> {
        if arm.0 < self.arms() {
            Ok(())
        } else {
            Err(EnvError::InvalidArm {
                arm: arm.0,
                arms: self.arms(),
            })
        }
    }
}

impl<E: Environment + ?Sized> Environment for &E {
    fn arms(&self) -> usize {
        (**self).arms()
    }
    fn pull(&self, arm: ArmId, seed: u64) -> Result<Sample, EnvError> {
        (**self).pull(arm, seed)
    }
    fn true_means(&self) -> Option<Vec<f64>> {
        (**self).true_means()
    }
}

/// Static description of a bandit problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentDescriptor {
    pub arms: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_means: Option<Vec<f64>>,
}

impl EnvironmentDescriptor {
    pub fn new(arms: usize, m: usize, true_means: Option<Vec<f64>>) -> Result<Self, EnvError> {
        if arms < 2 {
            return Err(EnvError::Invalid("an environment needs at least two arms"));
        }
        if m == 0 || m >= arms {
            return Err(EnvError::Invalid("m must satisfy 1 <= m < K"));
        }
        if let Some(means) = &true_means {
            if means.len() != arms {
                return Err(EnvError::Invalid("true means must have one entry per arm"));
            }
            if means.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(EnvError::Invalid("true means must lie in [0, 1]"));
            }
        }
        Ok(EnvironmentDescriptor {
            arms,
            m,
            true_means,
        })
    }

    pub fn of<E: Environment + ?Sized>(env: &E, m: usize) -> Result<Self, EnvError> {
        Self::new(env.arms(), m, env.true_means())
    }
}

/// Ordered record of every pull, with per-arm counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    entries: Vec<(ArmId, Reward)>,
    counts: Vec<u64>,
}

impl History {
    pub fn new(arms: usize) -> Self {
        History {
            entries: Vec::new(),
            counts: alloc::vec![0; arms],
        }
    }

    pub fn from_entries<I>(arms: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (ArmId, Reward)>,
    {
        let entries: Vec<_> = entries.into_iter().collect();
        let mut counts = alloc::vec![0; arms];
        for (a, _) in &entries {
            counts[a.0] += 1;
        }
        History { entries, counts }
    }

    /// Panics if `arm` is out of range.
    pub fn append(&mut self, arm: ArmId, reward: Reward) {
        self.counts[arm.0] += 1;
        self.entries.push((arm, reward));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, arm: ArmId) -> u64 {
        self.counts[arm.0]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn entries(&self) -> &[(ArmId, Reward)] {
        &self.entries
    }

    pub fn rewards(&self, arm: ArmId) -> impl Iterator<Item = f64> + '_ {
        self.entries
            .iter()
            .filter(move |(a, _)| *a == arm)
            .map(|(_, r)| r.value())
    }

    /// Empirical means; arms never pulled get `None`.
    pub fn empirical_means(&self) -> Vec<Option<f64>> {
        let mut sums = alloc::vec![0.0; self.arms()];
        for (a, r) in &self.entries {
            sums[a.0] += r.value();
        }
        sums.iter()
            .zip(&self.counts)
            .map(|(s, &n)| (n > 0).then(|| s / n as f64))
            .collect()
    }
}

/// The arm set an algorithm currently believes to be the m best.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    /// Sorted ascending, no duplicates.
    pub arms: Vec<ArmId>,
    /// Time step (algorithm step) at which it was issued.
    pub t: u64,
}

impl Recommendation {
    pub fn new(mut arms: Vec<ArmId>, t: u64) -> Self {
        arms.sort_unstable();
        arms.dedup();
        Recommendation { arms, t }
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn contains(&self, arm: ArmId) -> bool {
        self.arms.binary_search(&arm).is_ok()
    }
}

/// Arm indices ordered by decreasing value, lowest index first on ties.
pub fn rank_descending(values: &[f64]) -> Vec<ArmId> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.into_iter().map(ArmId).collect()
}

/// The `m` arms with the largest values, lowest index first on ties.
pub fn top_m(values: &[f64], m: usize) -> Vec<ArmId> {
    let mut top: Vec<ArmId> = rank_descending(values).into_iter().take(m).collect();
    top.sort_unstable();
    top
}

/// Empirical top-m where unpulled arms rank below every pulled arm.
pub fn empirical_top_m(means: &[Option<f64>], m: usize) -> Vec<ArmId> {
    let keyed: Vec<f64> = means
        .iter()
        .map(|x| x.unwrap_or(f64::NEG_INFINITY))
        .collect();
    top_m(&keyed, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(x: f64) -> Reward {
        Reward::new(x).unwrap()
    }

    #[test]
    fn reward_range_is_enforced() {
        assert!(Reward::new(1.0).is_ok());
        assert!(Reward::new(1.0000001).is_err());
        assert!(Reward::new(f64::NAN).is_err());
        let s = Reward::clamped(-0.2).unwrap();
        assert_eq!(s.reward.value(), 0.0);
        assert!(s.clamped);
        assert!(!Reward::clamped(0.3).unwrap().clamped);
        assert!(Reward::clamped(f64::INFINITY).is_err());
    }

    #[test]
    fn append_to_empty_history() {
        let mut h = History::new(3);
        h.append(ArmId(0), r(0.3));
        assert_eq!(h.len(), 1);
        assert_eq!(h.count(ArmId(0)), 1);
    }

    #[test]
    fn append_leaves_other_counts() {
        let mut h = History::from_entries(3, [(ArmId(0), r(0.1)), (ArmId(0), r(0.2))]);
        h.append(ArmId(1), r(0.5));
        assert_eq!(h.count(ArmId(0)), 2);
        assert_eq!(h.count(ArmId(1)), 1);
        assert_eq!(h.count(ArmId(2)), 0);
    }

    #[test]
    fn ranking_breaks_ties_by_index() {
        assert_eq!(top_m(&[0.5, 0.5, 0.5, 0.5], 2), [ArmId(0), ArmId(1)]);
        assert_eq!(
            rank_descending(&[0.1, 0.9, 0.9, 0.3]),
            [ArmId(1), ArmId(2), ArmId(3), ArmId(0)]
        );
        assert_eq!(empirical_top_m(&[None, Some(0.0), None], 1), [ArmId(1)]);
    }

    #[test]
    fn descriptor_validation() {
        assert!(EnvironmentDescriptor::new(1, 1, None).is_err());
        assert!(EnvironmentDescriptor::new(3, 3, None).is_err());
        assert!(EnvironmentDescriptor::new(3, 1, Some(alloc::vec![0.1, 0.2])).is_err());
        assert!(EnvironmentDescriptor::new(3, 1, Some(alloc::vec![0.1, 0.2, 1.2])).is_err());
        assert!(EnvironmentDescriptor::new(3, 2, Some(alloc::vec![0.1, 0.2, 0.3])).is_ok());
    }

    proptest! {
        #[test]
        fn incremental_history_matches_batch(
            pulls in prop::collection::vec((0usize..4, 0.0f64..=1.0), 0..200)
        ) {
            let entries: Vec<_> = pulls.iter().map(|&(a, x)| (ArmId(a), r(x))).collect();
            let mut h = History::new(4);
            for &(a, x) in &entries {
                let before = h.counts().to_vec();
                h.append(a, x);
                for (k, &was) in before.iter().enumerate() {
                    let expect = was + u64::from(k == a.0);
                    prop_assert_eq!(h.count(ArmId(k)), expect);
                }
            }
            prop_assert_eq!(h.len(), entries.len());
            prop_assert_eq!(h.counts().iter().sum::<u64>() as usize, entries.len());
            prop_assert_eq!(&h, &History::from_entries(4, entries));
        }
    }
}
