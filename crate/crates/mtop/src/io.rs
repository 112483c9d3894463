//! File formats: ground-truth JSON, NDJSON run logs, aggregate and
//! simulation CSVs.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use mtop_core::algorithms::Algorithm;
use mtop_core::env::epidemic::SimOutcome;
use mtop_core::eval::{AggregateRow, ExperimentRecord, GroundTruth, SnapshotAt, TraceEntry};
use mtop_core::ArmId;
use serde::{Deserialize, Serialize};

/// What was asked for on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_path: Option<String>,
    pub out: String,
    pub seed: u64,
    pub budget: usize,
    pub algorithm: Algorithm,
    pub environment: String,
    pub scenario: String,
    pub objective: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub env_hash: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    #[serde(rename = "R")]
    pub repetitions: usize,
    pub samples: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub j_true: Vec<ArmId>,
}

impl GroundTruthFile {
    pub fn new(
        gt: GroundTruth,
        env_hash: String,
        config_hash: String,
        config: serde_json::Value,
    ) -> Self {
        GroundTruthFile {
            env_hash,
            config_hash,
            config,
            repetitions: gt.repetitions,
            samples: gt.samples,
            means: gt.means,
            j_true: gt.j_true,
        }
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            repetitions: self.repetitions,
            samples: self.samples.clone(),
            means: self.means.clone(),
            j_true: self.j_true.clone(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruthFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing ground truth {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLine {
    pub run: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub m: usize,
    pub budget: usize,
    pub samples_used: usize,
    pub leftover: usize,
    pub clamped: usize,
    pub final_recommendation: Vec<ArmId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<SnapshotAt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLine {
    pub run: usize,
    #[serde(flatten)]
    pub entry: TraceEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogLine {
    Header {
        config_hash: String,
        config: serde_json::Value,
    },
    Run(RunLine),
    Sample(SampleLine),
}

/// One header line, then for every run a summary line followed by one line
/// per sample.
pub fn write_records(
    path: &Path,
    config_hash: &str,
    config: &serde_json::Value,
    records: &[ExperimentRecord],
) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    let mut line = |value: &LogLine| -> Result<()> {
        serde_json::to_writer(&mut w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    };
    line(&LogLine::Header {
        config_hash: config_hash.to_owned(),
        config: config.clone(),
    })?;
    for (run, r) in records.iter().enumerate() {
        line(&LogLine::Run(RunLine {
            run,
            seed: r.seed,
            algorithm: r.algorithm,
            m: r.m,
            budget: r.budget,
            samples_used: r.samples_used(),
            leftover: r.leftover,
            clamped: r.clamped,
            final_recommendation: r.final_recommendation().unwrap_or_default().to_vec(),
            snapshots: r.snapshots.clone(),
        }))?;
        for e in &r.trace {
            line(&LogLine::Sample(SampleLine {
                run,
                entry: e.clone(),
            }))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub struct RecordLog {
    pub config_hash: String,
    pub config: serde_json::Value,
    pub records: Vec<ExperimentRecord>,
}

pub fn read_records(path: &Path) -> Result<RecordLog> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut header = None;
    let mut records: Vec<ExperimentRecord> = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: malformed record", path.display(), n + 1))?;
        match parsed {
            LogLine::Header {
                config_hash,
                config,
            } => header = Some((config_hash, config)),
            LogLine::Run(r) => {
                if r.run != records.len() {
                    bail!("{}:{}: run {} out of order", path.display(), n + 1, r.run);
                }
                records.push(ExperimentRecord {
                    config_hash: String::new(),
                    algorithm: r.algorithm,
                    seed: r.seed,
                    m: r.m,
                    budget: r.budget,
                    leftover: r.leftover,
                    clamped: r.clamped,
                    trace: Vec::with_capacity(r.samples_used),
                    snapshots: r.snapshots,
                });
            }
            LogLine::Sample(s) => match records.get_mut(s.run) {
                Some(rec) => rec.trace.push(s.entry),
                None => bail!("{}:{}: sample before its run line", path.display(), n + 1),
            },
        }
    }
    let Some((config_hash, config)) = header else {
        bail!("{}: missing header line", path.display());
    };
    for r in &mut records {
        r.config_hash.clone_from(&config_hash);
    }
    Ok(RecordLog {
        config_hash,
        config,
        records,
    })
}

fn provenance(out: &mut String, config_hash: &str, config: &serde_json::Value) {
    let _ = writeln!(out, "# config_hash: {config_hash}");
    let _ = writeln!(out, "# config: {config}");
}

pub fn aggregate_csv(
    rows: &[AggregateRow],
    config_hash: &str,
    config: &serde_json::Value,
) -> String {
    let mut out = String::new();
    provenance(&mut out, config_hash, config);
    out.push_str("sample_index,mean_prop_correct,sd_prop_correct,mean_sum_means,sd_sum_means\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.sample_index,
            r.mean_prop_correct,
            r.sd_prop_correct,
            r.mean_sum_means,
            r.sd_sum_means
        );
    }
    out
}

pub fn sim_outcome_csv(
    outcome: &SimOutcome,
    config_hash: &str,
    config: &serde_json::Value,
) -> String {
    let mut out = String::new();
    provenance(&mut out, config_hash, config);
    let _ = writeln!(out, "# ari: {}", outcome.ari);
    let _ = writeln!(out, "# arh: {}", outcome.arh);
    let _ = writeln!(
        out,
        "# discarded_doses: mrna={} vector={}",
        outcome.discarded_doses[0], outcome.discarded_doses[1]
    );
    out.push_str(
        "day,group,S,E,I,R,vaccinated_mrna,vaccinated_vector,hospitalized_cum,infected_cum\n",
    );
    for r in &outcome.series {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.day,
            r.group,
            r.s,
            r.e,
            r.i,
            r.r,
            r.vaccinated_mrna,
            r.vaccinated_vector,
            r.hospitalized_cum,
            r.infected_cum
        );
    }
    out
}

/// Parses a CSV written by this module, skipping `#` lines and the header.
pub fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}
