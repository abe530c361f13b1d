//! `fbai`: command-line harness for best feasible arm identification.
//!
//! Exit codes: 0 on success, 2 on configuration or usage errors, 3 on run
//! errors.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use feasible_bai::hardness::{gamma_closed_form, gamma_minmax_form, HardnessOptions};
use feasible_bai::harness::{
    estimate_error_exponent, generate_eoo_instance, generate_random_instance, load_dataset_instance, read_records,
    run_experiment, DatasetOptions, ExperimentConfig, ExponentOptions, RunRecord,
};
use feasible_bai::{Error, Instance};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fbai", version, about = "Best feasible arm identification in linear bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment described by a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the error exponent Γ and optimal allocation of an instance.
    Hardness {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Form::Closed)]
        form: Form,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write an instance JSON file.
    GenInstance {
        #[command(subcommand)]
        source: Source,
        /// Output path; stdout when omitted.
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
    /// Fit the empirical error exponent from run records.
    Exponent {
        /// Record CSVs; each contributes its final round (largest `t`) as one budget.
        #[arg(long, num_args = 1.., required = true)]
        records: Vec<PathBuf>,
        /// Algorithm id to score when the files contain several.
        #[arg(long)]
        algo: Option<String>,
        #[arg(long, default_value_t = 100)]
        min_repetitions: usize,
        /// Also write the per-budget points as CSV.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Closed,
    Minmax,
}

#[derive(Subcommand)]
enum Source {
    /// The two-dimensional "end of optimism" instance.
    Eoo {
        #[arg(long)]
        alpha: f64,
    },
    /// Arms and parameters drawn uniformly from the unit ball.
    Random {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Arm features from a CSV file.
    Dataset {
        path: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
}

/// A failure tagged with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => 2,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn run_error(message: impl ToString) -> Failure {
    Failure {
        code: 3,
        message: message.to_string(),
    }
}

/// Prints a line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<(), Failure> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(run_error(e)),
        _ => Ok(()),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| run_error(format!("{}: {e}", p.display()))),
        None => emit(text),
    }
}

fn simulate(config: &Path) -> Result<(), Failure> {
    let cfg = ExperimentConfig::from_file(config)?;
    let summary = run_experiment(&cfg)?;
    for note in &summary.notes {
        log::info!("{note}");
    }
    emit(&format!("wrote {}", cfg.output_dir.display()))
}

fn hardness(path: &Path, form: Form, seed: u64) -> Result<(), Failure> {
    let inst = Instance::from_json_file(path).map_err(|e| Failure {
        code: 2,
        message: e.to_string(),
    })?;
    let opts = HardnessOptions {
        seed,
        ..HardnessOptions::default()
    };
    let result = match form {
        Form::Closed => gamma_closed_form(&inst, &opts),
        Form::Minmax => gamma_minmax_form(&inst, &opts),
    }
    .map_err(run_error)?;
    let out = json!({
        "gamma": result.gamma,
        "w_star": result.w_star.as_slice(),
        "binding_arm": result.binding_arm,
        "case": result.case.as_str(),
        "per_arm": result.per_arm,
    });
    emit(&serde_json::to_string_pretty(&out).expect("hardness serializes"))
}

fn gen_instance(source: &Source, output: Option<&Path>) -> Result<(), Failure> {
    let inst = match source {
        Source::Eoo { alpha } => generate_eoo_instance(*alpha)?,
        Source::Random { d, k, seed, tau } => {
            let inst = generate_random_instance(*d, *k, *seed)?;
            match tau {
                Some(t) => inst.with_tau(*t).map_err(Error::from)?,
                None => inst,
            }
        }
        Source::Dataset {
            path,
            tau,
            sigma,
            gamma,
        } => {
            let opts = DatasetOptions {
                sigma: *sigma,
                gamma: *gamma,
                ..DatasetOptions::default()
            };
            load_dataset_instance(path, *tau, &opts)?
        }
    };
    write_output(output, &inst.to_json_pretty())
}

fn exponent(paths: &[PathBuf], algo: Option<&str>, min_repetitions: usize, output: Option<&Path>) -> Result<(), Failure> {
    let mut records: Vec<RunRecord> = Vec::new();
    let mut budgets = Vec::new();
    for path in paths {
        let mut file = read_records(path)?;
        if let Some(a) = algo {
            file.retain(|r| r.algo == a);
        }
        let Some(budget) = file.iter().map(|r| r.t).max() else {
            return Err(run_error(format!("{}: no matching records", path.display())));
        };
        budgets.push(budget);
        records.extend(file.into_iter().filter(|r| r.t == budget));
    }
    budgets.sort_unstable();
    budgets.dedup();
    let algos: BTreeMap<&str, ()> = records.iter().map(|r| (r.algo.as_str(), ())).collect();
    if algos.len() > 1 {
        return Err(Failure {
            code: 2,
            message: format!(
                "records contain algorithms {:?}; select one with --algo",
                algos.keys().collect::<Vec<_>>()
            ),
        });
    }
    let opts = ExponentOptions {
        min_repetitions,
        ..ExponentOptions::default()
    };
    let fit = estimate_error_exponent(&records, &budgets, &opts)?;
    if let Some(path) = output {
        let mut w = csv::Writer::from_path(path).map_err(run_error)?;
        for p in &fit.points {
            w.serialize(p).map_err(run_error)?;
        }
        w.flush().map_err(run_error)?;
    }
    let out = json!({ "slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared });
    emit(&serde_json::to_string_pretty(&out).expect("fit serializes"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config } => simulate(config),
        Command::Hardness { instance, form, seed } => hardness(instance, *form, *seed),
        Command::GenInstance { source, output } => gen_instance(source, output.as_deref()),
        Command::Exponent {
            records,
            algo,
            min_repetitions,
            output,
        } => exponent(records, algo.as_deref(), *min_repetitions, output.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
