//! Monte-Carlo estimates of boundary misranking probabilities.
//!
//! Two independent mean vectors are drawn from the joint posterior per
//! iteration. The first plays the belief about the true means and yields the
//! top set `J*`; the second plays the Thompson sample and yields the ranking
//! `A^TS_1, ..., A^TS_K` and its top set `J^TS`.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::rank_descending;
use crate::posterior::TruncatedTPosterior;

/// Fewest draws accepted by [`estimate_boundary_probabilities`].
pub const MIN_DRAWS: usize = 10_000;

/// Violations are declared only beyond this many standard errors.
pub const SE_MARGIN: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagnosticsError {
    #[error("posterior of arm {0} is not ready for sampling")]
    NotReady(usize),
    #[error("m = {m} is invalid for {arms} arms")]
    BadM { m: usize, arms: usize },
    #[error("at least {MIN_DRAWS} Monte-Carlo draws are required, got {0}")]
    TooFewDraws(usize),
    #[error("discrete belief needs matching, nonnegative weights summing to one")]
    BadBelief,
}

/// A distribution over one arm's mean that can be sampled.
pub trait PosteriorSampler {
    fn ready(&self) -> bool;

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

impl PosteriorSampler for TruncatedTPosterior {
    fn ready(&self) -> bool {
        self.is_proper()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample(rng).expect("checked ready")
    }
}

/// A belief with finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePosterior {
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DiscretePosterior {
    pub fn new(values: Vec<f64>, probs: &[f64]) -> Result<Self, DiagnosticsError> {
        if values.is_empty()
            || values.len() != probs.len()
            || probs.iter().any(|&p| p.is_nan() || p < 0.0)
            || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(DiagnosticsError::BadBelief);
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(DiscretePosterior { values, cumulative })
    }

    pub fn point(value: f64) -> Self {
        DiscretePosterior {
            values: alloc::vec![value],
            cumulative: alloc::vec![1.0],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl PosteriorSampler for DiscretePosterior {
    fn ready(&self) -> bool {
        true
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let total = *self.cumulative.last().expect("non-empty");
        let k = self.cumulative.partition_point(|&c| c <= u * total);
        self.values[k.min(self.values.len() - 1)]
    }
}

/// A Monte-Carlo probability with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn estimate(&self, n: usize) -> Estimate {
        let n = n as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
        Estimate {
            value: mean,
            se: libm::sqrt(var / n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub n_mc: usize,
    pub arms: usize,
    pub m: usize,
    /// `P(A^TS_rho ∈ J*)` for `rho = 1..=K`.
    pub ts_rank_in_top: Vec<Estimate>,
    /// `P(J* ≠ J^TS)`.
    pub error: Estimate,
    /// `Σ_{rho > m} P(A^TS_rho ∈ J*)`.
    pub union_sum: Estimate,
    /// `(K − m) · P(A^TS_{m+1} ∈ J*)`.
    pub h1_bound: Estimate,
    /// `m · P(A^TS_m ∉ J*)`.
    pub h2_bound: Estimate,
    /// `E_{rho > m}[P(A^TS_rho ∈ J*)] − P(A^TS_{m+1} ∈ J*)`; nonpositive
    /// when the first heuristic holds.
    pub h1_gap: Estimate,
    /// `E_{rho <= m}[P(A^TS_rho ∉ J*)] − P(A^TS_m ∉ J*)`.
    pub h2_gap: Estimate,
    /// `union_sum − error`, `h1_bound − error`, `h2_bound − error`.
    pub union_margin: Estimate,
    pub h1_margin: Estimate,
    pub h2_margin: Estimate,
    pub heuristic1: bool,
    pub heuristic2: bool,
    /// `belief_rank_freq[k][rho − 1]`: how often arm `k` took rank `rho` in
    /// the belief draw.
    pub belief_rank_freq: Vec<Vec<f64>>,
    pub ts_rank_freq: Vec<Vec<f64>>,
}

impl BoundaryReport {
    /// `E_{rho > m}[P(A^TS_rho ∈ J*)]`.
    pub fn expected_lower_in_top(&self) -> f64 {
        self.union_sum.value / (self.arms - self.m) as f64
    }
}

pub fn estimate_boundary_probabilities<P: PosteriorSampler, R: Rng + ?Sized>(
    posteriors: &[P],
    m: usize,
    n_mc: usize,
    rng: &mut R,
) -> Result<BoundaryReport, DiagnosticsError> {
    let k = posteriors.len();
    if m == 0 || m >= k {
        return Err(DiagnosticsError::BadM { m, arms: k });
    }
    if n_mc < MIN_DRAWS {
        return Err(DiagnosticsError::TooFewDraws(n_mc));
    }
    if let Some(a) = posteriors.iter().position(|p| !p.ready()) {
        return Err(DiagnosticsError::NotReady(a));
    }
    let lower = (k - m) as f64;
    let mut rank_in_top = alloc::vec![Moments::default(); k];
    let mut error = Moments::default();
    let mut union = Moments::default();
    let mut h1 = Moments::default();
    let mut h2 = Moments::default();
    let mut h1_gap = Moments::default();
    let mut h2_gap = Moments::default();
    let mut union_margin = Moments::default();
    let mut h1_margin = Moments::default();
    let mut h2_margin = Moments::default();
    let mut belief_freq = alloc::vec![alloc::vec![0u64; k]; k];
    let mut ts_freq = alloc::vec![alloc::vec![0u64; k]; k];

    let mut belief = alloc::vec![0.0; k];
    let mut ts = alloc::vec![0.0; k];
    let mut in_j_star = alloc::vec![false; k];
    for _ in 0..n_mc {
        for (x, p) in belief.iter_mut().zip(posteriors) {
            *x = p.draw(rng);
        }
        for (x, p) in ts.iter_mut().zip(posteriors) {
            *x = p.draw(rng);
        }
        let belief_rank = rank_descending(&belief);
        let ts_rank = rank_descending(&ts);
        in_j_star.iter_mut().for_each(|b| *b = false);
        for (rho, a) in belief_rank.iter().enumerate() {
            belief_freq[a.0][rho] += 1;
            if rho < m {
                in_j_star[a.0] = true;
            }
        }
        // Arms ranked below the boundary by TS that belong to J*.
        let mut misplaced = 0usize;
        for (rho, a) in ts_rank.iter().enumerate() {
            ts_freq[a.0][rho] += 1;
            let hit = in_j_star[a.0];
            rank_in_top[rho].push(f64::from(u8::from(hit)));
            if rho >= m && hit {
                misplaced += 1;
            }
        }
        let e = f64::from(u8::from(misplaced > 0));
        let l = misplaced as f64;
        let b1 = f64::from(u8::from(in_j_star[ts_rank[m].0]));
        let b2 = f64::from(u8::from(!in_j_star[ts_rank[m - 1].0]));
        error.push(e);
        union.push(l);
        h1.push(lower * b1);
        h2.push(m as f64 * b2);
        // The number of J* arms below the boundary equals the number of
        // non-J* arms above it.
        h1_gap.push(l / lower - b1);
        h2_gap.push(l / m as f64 - b2);
        union_margin.push(l - e);
        h1_margin.push(lower * b1 - e);
        h2_margin.push(m as f64 * b2 - e);
    }

    let h1_gap = h1_gap.estimate(n_mc);
    let h2_gap = h2_gap.estimate(n_mc);
    let freq = |table: Vec<Vec<u64>>| -> Vec<Vec<f64>> {
        table
            .into_iter()
            .map(|row| row.into_iter().map(|c| c as f64 / n_mc as f64).collect())
            .collect()
    };
    Ok(BoundaryReport {
        n_mc,
        arms: k,
        m,
        ts_rank_in_top: rank_in_top.iter().map(|r| r.estimate(n_mc)).collect(),
        error: error.estimate(n_mc),
        union_sum: union.estimate(n_mc),
        h1_bound: h1.estimate(n_mc),
        h2_bound: h2.estimate(n_mc),
        heuristic1: h1_gap.value <= SE_MARGIN * h1_gap.se,
        heuristic2: h2_gap.value <= SE_MARGIN * h2_gap.se,
        h1_gap,
        h2_gap,
        union_margin: union_margin.estimate(n_mc),
        h1_margin: h1_margin.estimate(n_mc),
        h2_margin: h2_margin.estimate(n_mc),
        belief_rank_freq: freq(belief_freq),
        ts_rank_freq: freq(ts_freq),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub margin: f64,
    pub se: f64,
    /// `margin >= −3 se`.
    pub holds: bool,
}

impl BoundCheck {
    fn of(e: &Estimate) -> Self {
        BoundCheck {
            margin: e.value,
            se: e.se,
            holds: e.value >= -SE_MARGIN * e.se,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnionBoundSummary {
    pub union: BoundCheck,
    /// Checked only when the first heuristic holds.
    pub h1: Option<BoundCheck>,
    pub h2: Option<BoundCheck>,
}

impl UnionBoundSummary {
    /// No checked bound is violated.
    pub fn all_hold(&self) -> bool {
        self.union.holds && self.h1.is_none_or(|c| c.holds) && self.h2.is_none_or(|c| c.holds)
    }
}

pub fn check_union_bounds(report: &BoundaryReport) -> UnionBoundSummary {
    UnionBoundSummary {
        union: BoundCheck::of(&report.union_margin),
        h1: report.heuristic1.then(|| BoundCheck::of(&report.h1_margin)),
        h2: report.heuristic2.then(|| BoundCheck::of(&report.h2_margin)),
    }
}
