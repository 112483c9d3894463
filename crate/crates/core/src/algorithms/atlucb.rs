//! AnyTime Lower and Upper Confidence Bound (AT-LUCB).
//!
//! Confidence parameters decay geometrically across stages,
//! `δ_s = δ₁ α^(s−1)`. Each step pulls the top-m arm with the smallest lower
//! bound and the non-top arm with the largest upper bound. When the two
//! bounds separate by less than `ε` the stage advances and the recommendation
//! is refreshed.
//!
//! Confidence parameters are handled in log space so that deep stages do not
//! underflow.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_m, Algorithm, ArmStats, ConfigError, Explorer, PullFn, StepDetail, StepReport};
use crate::bandit::{ArmId, EnvError, History, Recommendation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtLucbParams {
    pub delta1: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

impl Default for AtLucbParams {
    fn default() -> Self {
        AtLucbParams {
            delta1: 0.5,
            alpha: 0.99,
            epsilon: 0.0,
        }
    }
}

impl AtLucbParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.delta1 > 0.0 && self.delta1 < 1.0) {
            return Err(ConfigError::BadDelta1(self.delta1));
        }
        if !(self.alpha >= 1.0 / 50.0 && self.alpha < 1.0) {
            return Err(ConfigError::BadAlpha(self.alpha));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(ConfigError::BadEpsilon(self.epsilon));
        }
        Ok(())
    }

    /// `ln δ_s`.
    pub fn ln_delta(&self, stage: u64) -> f64 {
        libm::log(self.delta1) + (stage - 1) as f64 * libm::log(self.alpha)
    }

    /// `δ_s`; may underflow to zero for very deep stages.
    pub fn delta(&self, stage: u64) -> f64 {
        libm::exp(self.ln_delta(stage))
    }
}

/// Confidence radius `sqrt( ln(5/4 · K · t⁴ / δ) / (2n) )`.
pub fn beta(n: u64, t: u64, delta: f64, arms: usize) -> f64 {
    beta_ln(n, t, libm::log(delta), arms)
}

fn beta_ln(n: u64, t: u64, ln_delta: f64, arms: usize) -> f64 {
    let log_term = libm::log(1.25) + libm::log(arms as f64) + 4.0 * libm::log(t as f64) - ln_delta;
    libm::sqrt(log_term / (2.0 * n as f64))
}

#[derive(Debug, Clone)]
pub struct AtLucb {
    m: usize,
    params: AtLucbParams,
    stats: ArmStats,
    history: History,
    stage: u64,
    t: u64,
    recommendation: Recommendation,
}

impl AtLucb {
    pub fn new(arms: usize, m: usize, params: AtLucbParams) -> Result<Self, ConfigError> {
        check_m(arms, m)?;
        params.validate()?;
        Ok(AtLucb {
            m,
            params,
            stats: ArmStats::new(arms),
            history: History::new(arms),
            stage: 1,
            t: 0,
            recommendation: Recommendation::new((0..m).map(ArmId).collect(), 0),
        })
    }

    pub fn params(&self) -> &AtLucbParams {
        &self.params
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn empirical_mean(&self, arm: ArmId) -> Option<f64> {
        self.stats.mean(arm.0)
    }

    pub fn in_warm_up(&self) -> bool {
        self.stats.counts.contains(&0)
    }

    /// `(L, U)` for `arm` at confidence `delta` and time `t`. Unpulled arms
    /// get `(−∞, +∞)`.
    pub fn bounds(&self, arm: ArmId, delta: f64, t: u64) -> (f64, f64) {
        self.bounds_ln(arm, libm::log(delta), t)
    }

    fn bounds_ln(&self, arm: ArmId, ln_delta: f64, t: u64) -> (f64, f64) {
        match self.stats.mean(arm.0) {
            None => (f64::NEG_INFINITY, f64::INFINITY),
            Some(mu) => {
                let b = beta_ln(self.stats.counts[arm.0], t, ln_delta, self.arms());
                (mu - b, mu + b)
            }
        }
    }

    /// Empirical top-m at the current counts.
    pub fn high(&self) -> Vec<ArmId> {
        self.stats.top_m(self.m)
    }

    /// `(h*, l*)`: the arm in `high` with the smallest lower bound and the
    /// arm outside it with the largest upper bound, lowest index on ties.
    pub fn select(&self, high: &[ArmId], delta: f64, t: u64) -> (ArmId, ArmId) {
        self.select_ln(high, libm::log(delta), t)
    }

    fn select_ln(&self, high: &[ArmId], ln_delta: f64, t: u64) -> (ArmId, ArmId) {
        let mut h: Option<(ArmId, f64)> = None;
        let mut l: Option<(ArmId, f64)> = None;
        for a in (0..self.arms()).map(ArmId) {
            let (lower, upper) = self.bounds_ln(a, ln_delta, t);
            if high.contains(&a) {
                if h.is_none_or(|(_, best)| lower < best) {
                    h = Some((a, lower));
                }
            } else if l.is_none_or(|(_, best)| upper > best) {
                l = Some((a, upper));
            }
        }
        (h.expect("m >= 1").0, l.expect("m < K").0)
    }

    fn term_ln(&self, high: &[ArmId], ln_delta: f64, t: u64) -> bool {
        let (h, l) = self.select_ln(high, ln_delta, t);
        let (lower_h, _) = self.bounds_ln(h, ln_delta, t);
        let (_, upper_l) = self.bounds_ln(l, ln_delta, t);
        upper_l - lower_h < self.params.epsilon
    }

    /// The termination event `U_l* − L_h* < ε` at stage `stage`.
    pub fn term(&self, high: &[ArmId], stage: u64, t: u64) -> bool {
        self.term_ln(high, self.params.ln_delta(stage), t)
    }

    /// Stage and recommendation update at the start of step `t`. Returns
    /// whether the stage advanced.
    pub fn advance(&mut self, high: &[ArmId], t: u64) -> bool {
        if self.term(high, self.stage, t) {
            self.stage = self.next_failing_stage(high, t);
            self.recommendation = Recommendation::new(high.to_vec(), t);
            true
        } else {
            if self.stage == 1 {
                self.recommendation = Recommendation::new(high.to_vec(), t);
            } else {
                self.recommendation.t = t;
            }
            false
        }
    }

    /// First stage after the current one at which termination fails. The
    /// termination event is monotone in the stage (bounds only widen), so an
    /// exponential then binary search finds it.
    fn next_failing_stage(&self, high: &[ArmId], t: u64) -> u64 {
        let holds = |s: u64| self.term(high, s, t);
        let mut lo = self.stage; // holds
        let mut step = 1u64;
        let mut hi = lo + step;
        while holds(hi) {
            lo = hi;
            step = step.saturating_mul(2);
            hi = lo.saturating_add(step);
            if hi == u64::MAX {
                return hi;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if holds(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn warm_up_pair(&self) -> (ArmId, ArmId) {
        let k = self.arms();
        let i = 2 * self.t as usize;
        (ArmId(i % k), ArmId((i + 1) % k))
    }
}

impl Explorer for AtLucb {
    fn algorithm(&self) -> Algorithm {
        Algorithm::AtLucb
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
        let t = self.t + 1;
        let (first, second, detail) = if self.in_warm_up() {
            let (a, b) = self.warm_up_pair();
            self.recommendation = Recommendation::new(self.high(), t);
            (a, b, StepDetail::WarmUp)
        } else {
            let high = self.high();
            let advanced = self.advance(&high, t);
            let ln_delta = self.params.ln_delta(self.stage);
            let (h, l) = self.select_ln(&high, ln_delta, t);
            let detail = StepDetail::AtLucb {
                stage: self.stage,
                delta: libm::exp(ln_delta),
                advanced,
            };
            (h, l, detail)
        };
        let s1 = pull(first)?;
        let s2 = pull(second)?;
        self.t = t;
        for (arm, s) in [(first, s1), (second, s2)] {
            self.stats.add(arm, s.reward.value());
            self.history.append(arm, s.reward);
        }
        Ok(StepReport {
            t,
            pulls: alloc::vec![(first, s1), (second, s2)],
            recommendation: self.recommendation.clone(),
            detail,
        })
    }
}
