//! Monte-Carlo sweeps over algorithms, budgets and repetitions.
//!
//! Output layout inside `output_dir`:
//!
//! * `records_T{T}.csv` — one file per budget with header
//!   `algo,instance,rep,t,recommended,correct`, sorted by
//!   `(algo, instance, rep, t)`. `correct` is `1`/`0`, or empty when the
//!   instance has no trusted ground truth.
//! * `summary.json` — per-checkpoint accuracy statistics (see
//!   [`ExperimentSummary`]).
//! * `error.json` — written instead of the summary when a run fails; records
//!   of every run that completed are still flushed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use super::config::{AlgorithmConfig, AlgorithmKind, ExperimentConfig};
use crate::algorithms::{
    blfaips_run_with, lints_feasible_run_with, oracle_run_with, oracle_weights, peps_proxy_run_with,
    ttts_beta_run_with, uniform_run_with, RunResult,
};
use crate::design::SimplexWeights;
use crate::env::{run_seed, RngStream};
use crate::error::{Error, Result};
use crate::hardness::{gamma_closed_form, HardnessOptions};
use crate::instance::Instance;

/// One recommendation recorded at a checkpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algo: String,
    pub instance: String,
    pub rep: u64,
    pub t: usize,
    pub recommended: usize,
    #[serde(serialize_with = "flag", deserialize_with = "parse_flag")]
    pub correct: Option<bool>,
}

fn flag<S: Serializer>(v: &Option<bool>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(true) => s.serialize_str("1"),
        Some(false) => s.serialize_str("0"),
        None => s.serialize_str(""),
    }
}

fn parse_flag<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<bool>, D::Error> {
    let raw = String::deserialize(d)?;
    match raw.trim() {
        "" => Ok(None),
        "1" | "true" => Ok(Some(true)),
        "0" | "false" => Ok(Some(false)),
        other => Err(serde::de::Error::custom(format!("bad correctness flag `{other}`"))),
    }
}

impl RunRecord {
    fn sort_key(&self) -> (&str, &str, u64, usize) {
        (&self.algo, &self.instance, self.rep, self.t)
    }
}

/// Reads a records CSV written by [`run_experiment`].
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let expected = ["algo", "instance", "rep", "t", "recommended", "correct"];
    if reader.headers()?.iter().ne(expected) {
        return Err(Error::Data(format!(
            "{}: header must be `{}`",
            path.display(),
            expected.join(",")
        )));
    }
    Ok(reader.deserialize().collect::<std::result::Result<Vec<RunRecord>, _>>()?)
}

pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    if records.is_empty() {
        writer.write_record(["algo", "instance", "rep", "t", "recommended", "correct"])?;
    }
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

/// Mean accuracy and its spread at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStats {
    pub t: usize,
    pub n: usize,
    /// `None` when correctness is unknown.
    pub mean: Option<f64>,
    /// Sample standard deviation of the per-run correctness indicator.
    pub sd: Option<f64>,
    /// Standard error of the mean, `sd / √n`.
    pub se: Option<f64>,
    /// `mean ± 2·se`, clipped to `[0, 1]`.
    pub band_se: Option<[f64; 2]>,
    /// `mean ± 2·sd`, clipped to `[0, 1]`.
    pub band_sd: Option<[f64; 2]>,
}

impl CheckpointStats {
    pub fn from_flags(t: usize, flags: &[Option<bool>]) -> Self {
        let n = flags.len();
        let known: Option<Vec<f64>> = flags.iter().map(|f| f.map(|b| if b { 1.0 } else { 0.0 })).collect();
        let Some(values) = known.filter(|v| !v.is_empty()) else {
            return Self {
                t,
                n,
                mean: None,
                sd: None,
                se: None,
                band_se: None,
                band_sd: None,
            };
        };
        let nf = values.len() as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt()
        } else {
            0.0
        };
        let se = sd / nf.sqrt();
        let band = |w: f64| [(mean - 2.0 * w).max(0.0), (mean + 2.0 * w).min(1.0)];
        Self {
            t,
            n,
            mean: Some(mean),
            sd: Some(sd),
            se: Some(se),
            band_se: Some(band(se)),
            band_sd: Some(band(sd)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BudgetSummary {
    pub budget: usize,
    pub wall_clock_secs: f64,
    pub total_pulls: u64,
    pub checkpoints: Vec<CheckpointStats>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub id: String,
    pub kind: String,
    pub budgets: Vec<BudgetSummary>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub instance: String,
    pub truth_known: bool,
    pub best_arm: Option<usize>,
    /// Hardness of the instance, when it is defined and solvable.
    pub gamma: Option<f64>,
    pub master_seed: u64,
    pub repetitions: u64,
    pub budgets: Vec<usize>,
    pub checkpoint_policy: String,
    pub record_files: Vec<String>,
    pub total_records: usize,
    pub notes: Vec<String>,
    pub algorithms: Vec<AlgorithmSummary>,
}

#[derive(Debug, Serialize)]
struct ErrorManifest<'a> {
    error: String,
    algorithm: &'a str,
    budget: usize,
    completed_records: usize,
    record_files: Vec<String>,
}

/// An algorithm with its instance-dependent settings resolved.
enum Prepared {
    Blfaips(crate::algorithms::BlfaipsParams),
    Lints,
    Ttts(f64),
    Oracle(SimplexWeights),
    Peps(f64, crate::algorithms::BlfaipsParams),
    Uniform,
}

fn prepare(cfg: &AlgorithmConfig, inst: &Instance, w_star: &mut Option<SimplexWeights>) -> Result<Prepared> {
    let mut optimal = || -> Result<SimplexWeights> {
        if w_star.is_none() {
            *w_star = Some(oracle_weights(inst, &HardnessOptions::default())?);
        }
        Ok(w_star.clone().expect("just computed"))
    };
    Ok(match &cfg.kind {
        AlgorithmKind::Blfaips(p) => Prepared::Blfaips(p.clone()),
        AlgorithmKind::Lints => Prepared::Lints,
        AlgorithmKind::Ttts { beta: Some(b) } => Prepared::Ttts(*b),
        AlgorithmKind::Ttts { beta: None } => {
            let beta = if inst.shared_arms() {
                optimal()?[inst.best()]
            } else {
                0.5
            };
            Prepared::Ttts(beta)
        }
        AlgorithmKind::Oracle => Prepared::Oracle(optimal()?),
        AlgorithmKind::PepsProxy { guess_ratio, params } => Prepared::Peps(*guess_ratio, params.clone()),
        AlgorithmKind::Uniform => Prepared::Uniform,
    })
}

fn run_one(p: &Prepared, inst: &Instance, budget: usize, rng: &mut RngStream, checkpoints: &[usize]) -> Result<RunResult> {
    match p {
        Prepared::Blfaips(params) => blfaips_run_with(inst, budget, params, rng, checkpoints),
        Prepared::Lints => lints_feasible_run_with(inst, budget, rng, checkpoints),
        Prepared::Ttts(beta) => ttts_beta_run_with(inst, budget, *beta, rng, checkpoints),
        Prepared::Oracle(w) => oracle_run_with(inst, budget, w, rng, checkpoints),
        Prepared::Peps(ratio, params) => {
            let guess = ((budget as f64 * ratio).round() as usize).max(1);
            peps_proxy_run_with(inst, guess, budget, params, rng, checkpoints)
        }
        Prepared::Uniform => uniform_run_with(inst, budget, rng, checkpoints),
    }
}

fn records_file(budget: usize) -> String {
    format!("records_T{budget}.csv")
}

/// Runs every (algorithm, budget, repetition) of `cfg` and writes the
/// outputs described in the module docs.
///
/// Repetitions run in parallel; each draws from its own stream seeded by
/// `run_seed(master_seed, algorithm id, repetition)`, and records are sorted
/// before writing, so the CSV bytes do not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let inst = cfg.instance.load()?;
    let instance_id = cfg.instance.id();
    std::fs::create_dir_all(&cfg.output_dir)?;

    let mut w_star = None;
    let mut prepared = Vec::with_capacity(cfg.algorithms.len());
    for a in &cfg.algorithms {
        prepared.push(prepare(a, &inst, &mut w_star)?);
    }

    let mut per_budget: Vec<Vec<RunRecord>> = vec![Vec::new(); cfg.budgets.len()];
    let mut summaries: Vec<AlgorithmSummary> = cfg
        .algorithms
        .iter()
        .map(|a| AlgorithmSummary {
            id: a.id.clone(),
            kind: a.kind.name().to_string(),
            budgets: Vec::new(),
        })
        .collect();

    for (bi, &budget) in cfg.budgets.iter().enumerate() {
        let checkpoints = cfg.checkpoints.times(budget);
        for (ai, (algo, prep)) in cfg.algorithms.iter().zip(&prepared).enumerate() {
            let started = Instant::now();
            let results: Vec<(u64, Result<RunResult>)> = (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = RngStream::new(run_seed(cfg.master_seed, &algo.id, rep));
                    (rep, run_one(prep, &inst, budget, &mut rng, &checkpoints))
                })
                .collect();
            let elapsed = started.elapsed().as_secs_f64();

            let mut failure = None;
            let mut total_pulls = 0u64;
            let mut flags: Vec<Vec<Option<bool>>> = vec![Vec::new(); checkpoints.len()];
            for (rep, result) in results {
                match result {
                    Ok(run) => {
                        total_pulls += run.budget() as u64;
                        for (ci, c) in run.checkpoints.iter().enumerate() {
                            flags[ci].push(c.correct);
                            per_budget[bi].push(RunRecord {
                                algo: algo.id.clone(),
                                instance: instance_id.clone(),
                                rep,
                                t: c.t,
                                recommended: c.recommended,
                                correct: c.correct,
                            });
                        }
                    }
                    Err(e) if failure.is_none() => failure = Some(e),
                    Err(_) => {}
                }
            }
            if let Some(e) = failure {
                let files = flush_records(&cfg.output_dir, &cfg.budgets, &mut per_budget)?;
                let manifest = ErrorManifest {
                    error: e.to_string(),
                    algorithm: &algo.id,
                    budget,
                    completed_records: per_budget.iter().map(Vec::len).sum(),
                    record_files: files,
                };
                write_json(&cfg.output_dir.join("error.json"), &manifest)?;
                return Err(e);
            }
            summaries[ai].budgets.push(BudgetSummary {
                budget,
                wall_clock_secs: elapsed,
                total_pulls,
                checkpoints: checkpoints
                    .iter()
                    .zip(&flags)
                    .map(|(&t, f)| CheckpointStats::from_flags(t, f))
                    .collect(),
            });
        }
    }

    let record_files = flush_records(&cfg.output_dir, &cfg.budgets, &mut per_budget)?;
    let gamma = if inst.truth_known() && inst.sigma() > 0.0 && inst.gamma() > 0.0 {
        gamma_closed_form(&inst, &HardnessOptions::default()).ok().map(|h| h.gamma)
    } else {
        None
    };
    let summary = ExperimentSummary {
        instance: instance_id,
        truth_known: inst.truth_known(),
        best_arm: inst.truth_known().then(|| inst.best()),
        gamma,
        master_seed: cfg.master_seed,
        repetitions: cfg.repetitions,
        budgets: cfg.budgets.clone(),
        checkpoint_policy: format!("{:?}", cfg.checkpoints).to_lowercase(),
        record_files,
        total_records: per_budget.iter().map(Vec::len).sum(),
        notes: vec![
            "band_se is mean ± 2 standard errors of the mean accuracy; band_sd is mean ± 2 standard deviations of the per-run indicator".into(),
            "error-exponent fits clamp the error probability at 1/(R+1) so budgets without errors stay finite".into(),
        ],
        algorithms: summaries,
    };
    write_json(&cfg.output_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn flush_records(dir: &Path, budgets: &[usize], per_budget: &mut [Vec<RunRecord>]) -> Result<Vec<String>> {
    let mut files = Vec::new();
    for (&budget, records) in budgets.iter().zip(per_budget.iter_mut()) {
        if records.is_empty() {
            continue;
        }
        records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        let name = records_file(budget);
        write_records(&dir.join(&name), records)?;
        files.push(name);
    }
    Ok(files)
}

fn write_json<T: Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
