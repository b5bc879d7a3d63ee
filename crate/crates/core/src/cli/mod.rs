//! Command-line interface.
//!
//! Exit codes: 0 on success, 2 for usage, input and validation errors, 3 for
//! numerical failures.

mod reproduce;

pub use reproduce::{
    case_graph, reproduce, Aggregate, Case, ExperimentReport, GraphEcho, SeedResult, CASE_SAMPLES,
};

use crate::admg::{parse_edge_list, serialize_edge_list, Admg};
use crate::pag::{fci_oracle, serialize_pag, Metrics};
use crate::simulator::{read_csv, sample_ground_truth, simulate, write_csv, SimError};
use crate::trainer::{
    extract_structure, read_logits, train, write_run_dir, ConfigError, TrainConfig, TrainError,
};
use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Numeric(_) => 3,
            _ => 2,
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(c) => Self::Config(c),
            TrainError::InvalidData(m) => Self::Usage(m),
            step @ TrainError::Step { .. } => Self::Numeric(step.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::CyclicGraph | SimError::EmptyDataset => Self::Usage(e.to_string()),
            SimError::PdRejectionLimit(_) | SimError::Numeric(_) => Self::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fgan-cd", version, about = "Adversarial causal structure learning with latent confounding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw SEM weights on a graph and sample a CSV dataset.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV output; `truth.json` is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on a CSV dataset and write a run directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Flat `key = value` config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Extra `key=value` overrides applied after the config file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Threshold a `logits.json` into an edge list.
    Extract {
        #[arg(long)]
        logits: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert an edge list to its oracle PAG.
    Pag {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score an estimated graph against the truth on their PAGs.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in case study over several seeds.
    Reproduce {
        #[arg(long = "case", value_enum, ignore_case = true)]
        case: Case,
        #[arg(long, default_value_t = 6)]
        seeds: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn parse_error(path: &Path, e: impl ToString) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn load_graph(path: &Path) -> Result<Admg, CliError> {
    parse_edge_list(&read(path)?).map_err(|e| parse_error(path, e))
}

/// Defaults, then the optional config file, then `key=value` overrides.
pub fn load_config(config: Option<&Path>, overrides: &[String]) -> Result<TrainConfig, CliError> {
    let mut cfg = match config {
        Some(p) => TrainConfig::parse(&read(p)?)?,
        None => TrainConfig::default(),
    };
    let mut unknown = Vec::new();
    for item in overrides {
        let Some((k, v)) = item.split_once('=') else {
            return Err(CliError::Usage(format!("override `{item}` is not `key=value`")));
        };
        if !cfg.set(k.trim(), v.trim())? {
            unknown.push(k.trim().to_string());
        }
    }
    if !unknown.is_empty() {
        return Err(ConfigError::UnknownKeys(unknown).into());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Pretty JSON with keys in sorted order.
pub fn to_sorted_json<T: serde::Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report values serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("json value serializes");
    s.push('\n');
    s
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { graph, n, seed, out } => {
            let g = load_graph(&graph)?;
            let sem = sample_ground_truth(&g, seed)?;
            let data = simulate(&sem, n, seed)?;
            write(&out, &write_csv(&data))?;
            let truth = out.parent().unwrap_or(Path::new("")).join("truth.json");
            write(&truth, &to_sorted_json(&sem))
        }
        Command::Train {
            data,
            config,
            overrides,
            out,
        } => {
            let cfg = load_config(config.as_deref(), &overrides)?;
            let ds = read_csv(&read(&data)?).map_err(|e| parse_error(&data, e))?;
            let outcome = train(&ds, &cfg)?;
            let extraction = extract_structure(&outcome.generator, cfg.delta);
            write_run_dir(&out, &outcome.generator, &outcome.history, &extraction)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            eprintln!(
                "trained {} epochs; extracted {} directed, {} bidirected edges ({} repairs)",
                cfg.epochs,
                extraction.graph.directed_edges().len(),
                extraction.graph.bidirected_edges().len(),
                extraction.repairs
            );
            Ok(())
        }
        Command::Extract { logits, delta, out } => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(CliError::Usage(format!("delta must lie in (0, 1), got {delta}")));
            }
            let params = read_logits(&read(&logits)?).map_err(|e| parse_error(&logits, e))?;
            let extraction = extract_structure(&params, delta);
            if extraction.repairs > 0 {
                eprintln!("removed {} edges to break cycles", extraction.repairs);
            }
            emit(out.as_deref(), &serialize_edge_list(&extraction.graph))
        }
        Command::Pag { graph, out } => {
            let g = load_graph(&graph)?;
            let pag = fci_oracle(&g).map_err(|e| parse_error(&graph, e))?;
            emit(out.as_deref(), &serialize_pag(&pag))
        }
        Command::Evaluate { truth, est, out } => {
            let t = load_graph(&truth)?;
            let e = load_graph(&est)?;
            let tp = fci_oracle(&t).map_err(|err| parse_error(&truth, err))?;
            let ep = fci_oracle(&e).map_err(|err| parse_error(&est, err))?;
            let metrics = Metrics::compute(&ep, &tp).map_err(|err| CliError::Usage(err.to_string()))?;
            emit(out.as_deref(), &to_sorted_json(&metrics))
        }
        Command::Reproduce {
            case,
            seeds,
            config,
            overrides,
            out,
        } => {
            let cfg = load_config(config.as_deref(), &overrides)?;
            let report = reproduce(case, seeds, &cfg)?;
            emit(out.as_deref(), &to_sorted_json(&report))
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
