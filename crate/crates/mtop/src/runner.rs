//! Parallel fan-out of ground-truth pulls and experiment runs.
//!
//! Work items are independent and seeded from their index, so results are
//! identical for any thread count and are collected in index order.

use mtop_core::eval::{
    ground_truth_seed, run_seed, run_single, EvalError, ExperimentRecord, GroundTruth, RunSpec,
};
use mtop_core::{ArmId, Environment};
use rayon::prelude::*;

/// A pool with `threads` workers; 0 picks the rayon default.
pub fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

pub fn ground_truth<E: Environment>(
    env: &E,
    m: usize,
    repetitions: usize,
    seed: u64,
    pool: &rayon::ThreadPool,
) -> Result<GroundTruth, EvalError> {
    let arms = env.arms();
    if repetitions < 2 {
        return Err(EvalError::TooFewRepetitions(repetitions));
    }
    let flat: Vec<f64> = pool.install(|| {
        (0..arms * repetitions)
            .into_par_iter()
            .map(|i| {
                let (k, r) = (i / repetitions, i % repetitions);
                Ok(env
                    .pull(ArmId(k), ground_truth_seed(seed, k, r))?
                    .reward
                    .value())
            })
            .collect::<Result<Vec<f64>, EvalError>>()
    })?;
    let samples = flat.chunks(repetitions).map(<[f64]>::to_vec).collect();
    GroundTruth::from_samples(samples, m)
}

/// `runs` independent runs of `template`, run `i` seeded by
/// `run_seed(template.seed, i)`.
pub fn experiment<E: Environment>(
    env: &E,
    template: &RunSpec,
    runs: usize,
    gt: Option<&GroundTruth>,
    config_hash: &str,
    pool: &rayon::ThreadPool,
) -> Result<Vec<ExperimentRecord>, EvalError> {
    pool.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|i| {
                let spec = RunSpec {
                    seed: run_seed(template.seed, i),
                    ..template.clone()
                };
                let mut rec = run_single(env, &spec, gt)?;
                rec.config_hash = config_hash.to_owned();
                log::debug!("run {i} finished with {} samples", rec.samples_used());
                Ok(rec)
            })
            .collect()
    })
}
