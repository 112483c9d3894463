//! Ground truth, identification metrics and the sample-budgeted run driver.

use alloc::string::String;
use alloc::vec::Vec;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{self, Algorithm, ConfigError, ExplorerParams, StepDetail};
use crate::bandit::{top_m, ArmId, EnvError, Environment, Recommendation, Sample};
use crate::posterior::PosteriorSnapshot;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("ground truth needs at least two repetitions per arm, got {0}")]
    TooFewRepetitions(usize),
    #[error("ground truth rows must all hold {expected} samples")]
    RaggedSamples { expected: usize },
    #[error("m = {m} is invalid for {arms} arms")]
    BadM { m: usize, arms: usize },
    #[error("arm {0} is not covered by the ground truth")]
    ArmMissing(ArmId),
    #[error("budget {budget} cannot hold the {warm_up}-sample warm-up")]
    BudgetTooSmall { budget: usize, warm_up: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Reference means estimated from repeated independent pulls of every arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub repetitions: usize,
    /// `samples[k][r]`.
    pub samples: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub j_true: Vec<ArmId>,
}

impl GroundTruth {
    pub fn from_samples(samples: Vec<Vec<f64>>, m: usize) -> Result<Self, EvalError> {
        let repetitions = samples.first().map_or(0, Vec::len);
        if repetitions < 2 {
            return Err(EvalError::TooFewRepetitions(repetitions));
        }
        if samples.iter().any(|row| row.len() != repetitions) {
            return Err(EvalError::RaggedSamples {
                expected: repetitions,
            });
        }
        if m == 0 || m >= samples.len() {
            return Err(EvalError::BadM {
                m,
                arms: samples.len(),
            });
        }
        let means: Vec<f64> = samples
            .iter()
            .map(|row| row.iter().sum::<f64>() / repetitions as f64)
            .collect();
        let j_true = top_m(&means, m);
        Ok(GroundTruth {
            repetitions,
            samples,
            means,
            j_true,
        })
    }

    pub fn arms(&self) -> usize {
        self.means.len()
    }

    pub fn m(&self) -> usize {
        self.j_true.len()
    }

    pub fn mean(&self, arm: ArmId) -> Result<f64, EvalError> {
        self.means
            .get(arm.0)
            .copied()
            .ok_or(EvalError::ArmMissing(arm))
    }
}

/// Seed of repetition `rep` of `arm`.
pub fn ground_truth_seed(base: u64, arm: usize, rep: usize) -> u64 {
    seed::derive_path(base, &[arm as u64, rep as u64])
}

/// Pulls every arm `repetitions` times with independent sub-seeds.
pub fn build_ground_truth<E: Environment + ?Sized>(
    env: &E,
    m: usize,
    repetitions: usize,
    base_seed: u64,
) -> Result<GroundTruth, EvalError> {
    if repetitions < 2 {
        return Err(EvalError::TooFewRepetitions(repetitions));
    }
    let samples = (0..env.arms())
        .map(|k| {
            (0..repetitions)
                .map(|r| {
                    Ok(env
                        .pull(ArmId(k), ground_truth_seed(base_seed, k, r))?
                        .reward
                        .value())
                })
                .collect::<Result<Vec<f64>, EvalError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    GroundTruth::from_samples(samples, m)
}

/// `Σ_{a ∈ rec} μ_a`.
pub fn sum_of_means(rec: &[ArmId], gt: &GroundTruth) -> Result<f64, EvalError> {
    rec.iter().map(|&a| gt.mean(a)).sum()
}

/// `|rec ∩ J_true| / m`.
pub fn proportion_correct(rec: &[ArmId], gt: &GroundTruth) -> Result<f64, EvalError> {
    let mut hits = 0usize;
    for &a in rec {
        gt.mean(a)?;
        if gt.j_true.contains(&a) {
            hits += 1;
        }
    }
    Ok(hits as f64 / gt.m() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub m: usize,
    /// Environment samples.
    pub budget: usize,
    pub seed: u64,
    #[serde(default)]
    pub params: ExplorerParams,
    /// Store posterior snapshots every this many samples.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
}

/// One environment sample and the recommendation in force right after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// 1-based sample index.
    pub sample: usize,
    /// Algorithm step that issued the pull.
    pub t: u64,
    pub arm: ArmId,
    pub reward: f64,
    pub clamped: bool,
    pub recommendation: Vec<ArmId>,
    /// AT-LUCB stage after the step's stage update.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_of_means: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proportion_correct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotAt {
    pub sample: usize,
    pub posteriors: Vec<PosteriorSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    #[serde(default)]
    pub config_hash: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub m: usize,
    pub budget: usize,
    /// Budget left because the last step would not fit.
    pub leftover: usize,
    pub clamped: usize,
    pub trace: Vec<TraceEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<SnapshotAt>,
}

impl ExperimentRecord {
    pub fn samples_used(&self) -> usize {
        self.trace.len()
    }

    pub fn final_recommendation(&self) -> Option<&[ArmId]> {
        self.trace.last().map(|e| e.recommendation.as_slice())
    }

    /// Recomputes both metrics from the logged recommendations.
    pub fn attach_metrics(&mut self, gt: &GroundTruth) -> Result<(), EvalError> {
        for e in &mut self.trace {
            e.sum_of_means = Some(sum_of_means(&e.recommendation, gt)?);
            e.proportion_correct = Some(proportion_correct(&e.recommendation, gt)?);
        }
        Ok(())
    }

    pub fn snapshot_nearest(&self, sample: usize) -> Option<&SnapshotAt> {
        self.snapshots
            .iter()
            .min_by_key(|s| (s.sample.abs_diff(sample), s.sample))
    }
}

/// Seed of run `index` within an experiment.
pub fn run_seed(base: u64, index: usize) -> u64 {
    seed::derive(base, index as u64)
}

/// Runs one algorithm until the next step no longer fits in the budget.
///
/// The algorithm draws from `derive(seed, ALGORITHM)`; pull `i` receives the
/// `i`-th value of the stream seeded by `derive(seed, ENVIRONMENT)`.
pub fn run_single<E: Environment + ?Sized>(
    env: &E,
    spec: &RunSpec,
    gt: Option<&GroundTruth>,
) -> Result<ExperimentRecord, EvalError> {
    let arms = env.arms();
    let warm_up = spec.algorithm.warm_up_samples(arms);
    if spec.budget < warm_up.max(spec.algorithm.pulls_per_step()) {
        return Err(EvalError::BudgetTooSmall {
            budget: spec.budget,
            warm_up,
        });
    }
    if let Some(gt) = gt {
        if gt.arms() != arms {
            return Err(EvalError::ArmMissing(ArmId(gt.arms().min(arms))));
        }
    }
    let mut explorer = algorithms::build(
        spec.algorithm,
        arms,
        spec.m,
        seed::derive(spec.seed, seed::tag::ALGORITHM),
        &spec.params,
    )?;
    let mut env_stream = seed::rng(seed::derive(spec.seed, seed::tag::ENVIRONMENT));
    let per_step = explorer.pulls_per_step();

    let mut trace: Vec<TraceEntry> = Vec::with_capacity(spec.budget);
    let mut snapshots = Vec::new();
    let mut clamped = 0usize;
    while trace.len() + per_step <= spec.budget {
        let before: Recommendation = explorer.recommendation().clone();
        let report = {
            let mut pull =
                |arm: ArmId| -> Result<Sample, EnvError> { env.pull(arm, env_stream.next_u64()) };
            explorer.step(&mut pull)?
        };
        let last = report.pulls.len().saturating_sub(1);
        let stage = match report.detail {
            StepDetail::AtLucb { stage, .. } => Some(stage),
            _ => None,
        };
        for (k, (arm, sample)) in report.pulls.iter().enumerate() {
            let rec = if k == last {
                &report.recommendation
            } else {
                &before
            };
            clamped += usize::from(sample.clamped);
            let (som, pc) = match gt {
                Some(gt) => (
                    Some(sum_of_means(&rec.arms, gt)?),
                    Some(proportion_correct(&rec.arms, gt)?),
                ),
                None => (None, None),
            };
            trace.push(TraceEntry {
                sample: trace.len() + 1,
                t: report.t,
                arm: *arm,
                reward: sample.reward.value(),
                clamped: sample.clamped,
                recommendation: rec.arms.clone(),
                stage,
                sum_of_means: som,
                proportion_correct: pc,
            });
        }
        if let Some(every) = spec.snapshot_every.filter(|&e| e > 0) {
            let used = trace.len();
            if used / every > (used - report.pulls.len()) / every {
                if let Some(posteriors) = explorer.posterior_snapshots() {
                    snapshots.push(SnapshotAt {
                        sample: used,
                        posteriors,
                    });
                }
            }
        }
    }
    Ok(ExperimentRecord {
        config_hash: String::new(),
        algorithm: spec.algorithm,
        seed: spec.seed,
        m: spec.m,
        budget: spec.budget,
        leftover: spec.budget - trace.len(),
        clamped,
        trace,
        snapshots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub sample_index: usize,
    pub mean_prop_correct: f64,
    pub sd_prop_correct: f64,
    pub mean_sum_means: f64,
    pub sd_sum_means: f64,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

/// Mean and sample standard deviation of both metrics at every sample index
/// covered by all records. Records without metrics are skipped.
pub fn aggregate(records: &[ExperimentRecord]) -> Vec<AggregateRow> {
    let with_metrics: Vec<&ExperimentRecord> = records
        .iter()
        .filter(|r| {
            r.trace
                .first()
                .is_some_and(|e| e.proportion_correct.is_some())
        })
        .collect();
    let Some(len) = with_metrics.iter().map(|r| r.trace.len()).min() else {
        return Vec::new();
    };
    (0..len)
        .map(|i| {
            let pc: Vec<f64> = with_metrics
                .iter()
                .map(|r| r.trace[i].proportion_correct.unwrap_or(0.0))
                .collect();
            let som: Vec<f64> = with_metrics
                .iter()
                .map(|r| r.trace[i].sum_of_means.unwrap_or(0.0))
                .collect();
            let (mean_prop_correct, sd_prop_correct) = mean_sd(&pc);
            let (mean_sum_means, sd_sum_means) = mean_sd(&som);
            AggregateRow {
                sample_index: i + 1,
                mean_prop_correct,
                sd_prop_correct,
                mean_sum_means,
                sd_sum_means,
            }
        })
        .collect()
}
