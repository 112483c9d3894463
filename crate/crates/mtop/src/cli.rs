//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! failures while running.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use mtop_core::diagnostics::{check_union_bounds, estimate_boundary_probabilities};
use mtop_core::env::epidemic::{
    enumerate_strategies, simulate_epidemic, AgeGroup, VaccineStrategy,
};
use mtop_core::eval::{aggregate, EvalError, RunSpec};
use mtop_core::{seed, Environment, TruncatedTPosterior};

use crate::config::{ConfigError, Settings};
use crate::io::{self, GroundTruthFile, RunManifest};
use crate::runner;

#[derive(Debug, Parser)]
#[command(
    name = "mtop",
    version,
    about = "Anytime m-top arm identification experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the vaccine-allocation arms with their base-3 codes.
    Enumerate,
    /// Pull every arm repeatedly and write the reference means.
    GroundTruth(GroundTruthArgs),
    /// Run an exploration algorithm under a sample budget.
    Run(RunArgs),
    /// Estimate boundary misranking probabilities from a logged posterior snapshot.
    Diagnose(DiagnoseArgs),
    /// Simulate one epidemic and write its daily compartments.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML file merged over the built-in defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub parallel: Option<usize>,
    /// synthetic or epidemic
    #[arg(long)]
    pub environment: Option<String>,
    #[arg(long)]
    pub scenario: Option<String>,
    /// ari or arh
    #[arg(long)]
    pub objective: Option<String>,
    /// Total epidemic population.
    #[arg(long)]
    pub population: Option<u64>,
    /// Comma-separated arm indices into the enumerated strategies.
    #[arg(long, value_delimiter = ',')]
    pub arms_subset: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct GroundTruthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub repetitions: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    /// bfts, atlucb or uniform
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Environment samples per run.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Ground-truth file; metrics are omitted without one.
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    /// Log posterior snapshots every N samples.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub common: Common,
    /// Run log written by `mtop run`.
    #[arg(long)]
    pub log: PathBuf,
    /// Sample index of the snapshot.
    #[arg(long)]
    pub t: usize,
    /// Run within the log.
    #[arg(long, default_value_t = 0)]
    pub run: usize,
    #[arg(long)]
    pub n_mc: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Five letters from M, V and -, youngest group first.
    #[arg(long)]
    pub strategy: String,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => e,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.into())
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Env(_) => Failure::Runtime(e.into()),
            _ => Failure::Usage(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

fn settings(common: &Common) -> Result<Settings, Failure> {
    let mut s = Settings::load(common.config.as_deref())?;
    let e = &mut s.experiment;
    if let Some(v) = common.seed {
        e.seed = v;
    }
    if let Some(v) = common.m {
        e.m = v;
    }
    if let Some(v) = common.parallel {
        e.parallel = v;
    }
    if let Some(v) = &common.environment {
        e.environment = v.parse()?;
    }
    if let Some(v) = &common.scenario {
        e.scenario = v.clone();
    }
    if let Some(v) = &common.objective {
        e.objective = v.parse().map_err(ConfigError::from)?;
    }
    if let Some(v) = &common.arms_subset {
        e.arms_subset = v.clone();
    }
    if let Some(v) = common.population {
        s.epidemic.population = v;
    }
    s.validate()?;
    Ok(s)
}

fn out_dir(common: &Common) -> Result<&Path, Failure> {
    fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))?;
    Ok(&common.out)
}

fn manifest(name: &str, common: &Common, s: &Settings) -> RunManifest {
    RunManifest {
        subcommand: name.into(),
        config_path: common.config.as_ref().map(|p| p.display().to_string()),
        out: common.out.display().to_string(),
        seed: s.experiment.seed,
        budget: s.experiment.budget,
        algorithm: s.experiment.algorithm,
        environment: s.experiment.environment.to_string(),
        scenario: s.experiment.scenario.clone(),
        objective: s.experiment.objective.name().into(),
    }
}

pub fn enumerate_listing() -> String {
    let mut out = String::from("arm,code,strategy");
    for g in AgeGroup::ALL {
        let _ = write!(out, ",{}", g.label());
    }
    out.push('\n');
    for (k, s) in enumerate_strategies().iter().enumerate() {
        let _ = write!(out, "{k},{},{s}", s.code());
        for v in s.assignment {
            let name = match v {
                mtop_core::env::epidemic::VaccineType::None => "none",
                mtop_core::env::epidemic::VaccineType::Mrna => "mrna",
                mtop_core::env::epidemic::VaccineType::Vector => "vector",
            };
            let _ = write!(out, ",{name}");
        }
        out.push('\n');
    }
    out
}

fn cmd_ground_truth(args: &GroundTruthArgs) -> Outcome {
    let mut s = settings(&args.common)?;
    if let Some(r) = args.repetitions {
        s.experiment.repetitions = r;
    }
    let env = s.environment()?;
    let out = out_dir(&args.common)?;
    let e = &s.experiment;
    log::info!(
        "ground truth: {} arms x {} repetitions",
        env.arms(),
        e.repetitions
    );
    let gt = runner::ground_truth(&env, e.m, e.repetitions, e.seed, &runner::pool(e.parallel))?;
    let file = GroundTruthFile::new(gt, env.hash(), s.hash(), s.to_json());
    let path = out.join("ground_truth.json");
    io::write_json(&path, &file)?;
    io::write_json(
        &out.join("manifest_ground_truth.json"),
        &manifest("ground-truth", &args.common, &s),
    )?;
    let top: Vec<String> = file.j_true.iter().map(ToString::to_string).collect();
    println!(
        "wrote {} ({} arms, R = {})",
        path.display(),
        file.means.len(),
        file.repetitions
    );
    println!("j_true: {}", top.join(" "));
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Outcome {
    let mut s = settings(&args.common)?;
    let e = &mut s.experiment;
    if let Some(a) = &args.algorithm {
        e.algorithm = a
            .parse()
            .map_err(|err| Failure::Usage(anyhow::Error::new(err)))?;
    }
    if let Some(b) = args.budget {
        e.budget = b;
    }
    if let Some(r) = args.runs {
        e.runs = r;
    }
    if let Some(n) = args.snapshot_every {
        e.snapshot_every = n;
    }
    s.validate()?;
    let env = s.environment()?;
    let gt = match &args.ground_truth {
        None => None,
        Some(p) => {
            let file = io::read_ground_truth(p).map_err(Failure::Usage)?;
            if file.env_hash != env.hash() {
                return Err(usage(format!(
                    "{} was built for a different environment (hash {} vs {})",
                    p.display(),
                    file.env_hash,
                    env.hash()
                )));
            }
            if file.j_true.len() != s.experiment.m {
                return Err(usage(format!(
                    "ground truth has m = {} but the run asks for m = {}",
                    file.j_true.len(),
                    s.experiment.m
                )));
            }
            Some(file.ground_truth())
        }
    };
    let out = out_dir(&args.common)?;
    let e = &s.experiment;
    let template = RunSpec {
        algorithm: e.algorithm,
        m: e.m,
        budget: e.budget,
        seed: e.seed,
        params: s.explorer_params(),
        snapshot_every: (e.snapshot_every > 0).then_some(e.snapshot_every),
    };
    let hash = s.hash();
    let config = s.to_json();
    log::info!(
        "{} runs of {} with budget {}",
        e.runs,
        e.algorithm,
        e.budget
    );
    let records = runner::experiment(
        &env,
        &template,
        e.runs,
        gt.as_ref(),
        &hash,
        &runner::pool(e.parallel),
    )?;
    let records_path = out.join(format!("records_{}.ndjson", e.algorithm));
    io::write_records(&records_path, &hash, &config, &records)?;
    io::write_json(
        &out.join(format!("manifest_run_{}.json", e.algorithm)),
        &manifest("run", &args.common, &s),
    )?;
    let first = &records[0];
    println!(
        "wrote {}: {} runs, {} samples used per run, {} left over",
        records_path.display(),
        records.len(),
        first.samples_used(),
        first.leftover
    );
    let clamped: usize = records.iter().map(|r| r.clamped).sum();
    if clamped > 0 {
        log::warn!("{clamped} rewards were clamped to [0, 1]");
    }
    if gt.is_some() {
        let rows = aggregate(&records);
        let csv_path = out.join(format!("aggregate_{}.csv", e.algorithm));
        fs::write(&csv_path, io::aggregate_csv(&rows, &hash, &config))
            .with_context(|| format!("writing {}", csv_path.display()))?;
        if let Some(last) = rows.last() {
            println!(
                "final proportion correct {:.4} (sd {:.4}), sum of means {:.4}",
                last.mean_prop_correct, last.sd_prop_correct, last.mean_sum_means
            );
        }
    }
    let rec: Vec<String> = first
        .final_recommendation()
        .unwrap_or_default()
        .iter()
        .map(ToString::to_string)
        .collect();
    println!("run 0 recommends: {}", rec.join(" "));
    Ok(())
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Outcome {
    let s = settings(&args.common)?;
    let log = io::read_records(&args.log).map_err(Failure::Usage)?;
    let record = log.records.get(args.run).ok_or_else(|| {
        usage(format!(
            "log holds {} runs, no run {}",
            log.records.len(),
            args.run
        ))
    })?;
    let snapshot = match record.snapshots.iter().find(|snap| snap.sample == args.t) {
        Some(snap) => snap,
        None => {
            return Err(usage(match record.snapshot_nearest(args.t) {
                Some(near) => format!(
                    "no posterior snapshot at t = {}; nearest available is t = {}",
                    args.t, near.sample
                ),
                None => "the log holds no posterior snapshots; rerun with --snapshot-every".into(),
            }))
        }
    };
    let posteriors: Vec<TruncatedTPosterior> =
        snapshot.posteriors.iter().map(|p| p.posterior()).collect();
    let n_mc = args.n_mc.unwrap_or(s.diagnose.n_mc);
    let mut rng = seed::rng(seed::derive(s.experiment.seed, seed::tag::DIAGNOSTICS));
    let report = estimate_boundary_probabilities(&posteriors, record.m, n_mc, &mut rng)
        .map_err(|e| usage(e.to_string()))?;
    let bounds = check_union_bounds(&report);
    let out = out_dir(&args.common)?;
    let path = out.join(format!("boundary_run{}_t{}.json", args.run, args.t));
    let doc = serde_json::json!({
        "config_hash": s.hash(),
        "config": s.to_json(),
        "log_config_hash": log.config_hash,
        "run": args.run,
        "t": args.t,
        "report": report,
        "bounds": bounds,
    });
    io::write_json(&path, &doc)?;
    println!("wrote {}", path.display());
    println!(
        "P(J* != J^TS) = {:.5} +/- {:.5}",
        report.error.value, report.error.se
    );
    println!(
        "heuristic 1: {}  heuristic 2: {}",
        report.heuristic1, report.heuristic2
    );
    println!(
        "union margin {:.5}  h1 margin {}  h2 margin {}",
        bounds.union.margin,
        bounds
            .h1
            .map_or("n/a".into(), |b| format!("{:.5}", b.margin)),
        bounds
            .h2
            .map_or("n/a".into(), |b| format!("{:.5}", b.margin)),
    );
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Outcome {
    let s = settings(&args.common)?;
    let strategy: VaccineStrategy = args
        .strategy
        .parse()
        .map_err(|e: mtop_core::env::epidemic::EpidemicConfigError| usage(e.to_string()))?;
    let config = s.epidemic_config(s.scenario()?)?;
    let outcome = simulate_epidemic(&config, &strategy, s.experiment.seed);
    let out = out_dir(&args.common)?;
    let path = out.join(format!("sim_{}.csv", strategy.code()));
    fs::write(
        &path,
        io::sim_outcome_csv(&outcome, &s.hash(), &s.to_json()),
    )
    .with_context(|| format!("writing {}", path.display()))?;
    println!(
        "wrote {}: ARI {:.5}, ARH {:.5}",
        path.display(),
        outcome.ari,
        outcome.arh
    );
    if outcome.discarded_doses.iter().any(|&d| d > 0) {
        log::warn!(
            "discarded doses: mrna {}, vector {}",
            outcome.discarded_doses[0],
            outcome.discarded_doses[1]
        );
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Enumerate => {
            print!("{}", enumerate_listing());
            Ok(())
        }
        Command::GroundTruth(a) => cmd_ground_truth(a),
        Command::Run(a) => cmd_run(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            f.code()
        }
    }
}
