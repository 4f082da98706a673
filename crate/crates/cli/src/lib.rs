//! The `fastortho` command-line tool.
//!
//! Every report carries a `config` echo of the arguments it was produced with.
//! Worker thread counts never change the non-timing part of an output.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

mod commands;

pub use commands::{
    BenchArgs, EvalArgs, FactorizeArgs, PcaArgs, SampleHaarArgs, StagesArgs, SyntheticArgs,
};

#[derive(Debug, Parser)]
#[command(name = "fastortho", version, about = "Fast approximations of orthonormal matrices")]
pub struct Cli {
    /// Worker threads for synthetic, pca and bench.
    #[arg(long, global = true, env = "GF_THREADS", default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a Haar-random orthogonal matrix.
    SampleHaar(SampleHaarArgs),
    /// Approximate an orthonormal matrix by extended Givens transforms.
    Factorize(FactorizeArgs),
    /// Compare a matrix with a factored product.
    Eval(EvalArgs),
    /// Average errors over random orthogonal matrices for a grid of budgets.
    Synthetic(SyntheticArgs),
    /// k-NN classification with exact and factored PCA projections.
    Pca(PcaArgs),
    /// Time the factored projection against a dense product.
    Bench(BenchArgs),
    /// Print the parallel stages of a factored product.
    Stages(StagesArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SampleHaar(_) => "sample-haar",
            Command::Factorize(_) => "factorize",
            Command::Eval(_) => "eval",
            Command::Synthetic(_) => "synthetic",
            Command::Pca(_) => "pca",
            Command::Bench(_) => "bench",
            Command::Stages(_) => "stages",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Core(fastortho::Error),
}

impl CliError {
    /// 2 for invalid input, 3 for numerical non-convergence, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                fastortho::Error::Io(_) => 4,
                fastortho::Error::NotConverged { .. } => 3,
                _ => 2,
            },
        }
    }

    pub(crate) fn at(path: &Path) -> impl FnOnce(fastortho::Error) -> CliError + '_ {
        move |e| match e {
            fastortho::Error::Io(io) => CliError::Io {
                path: path.to_path_buf(),
                message: io.to_string(),
            },
            other => CliError::Core(other),
        }
    }
}

impl From<fastortho::Error> for CliError {
    fn from(e: fastortho::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormatArg {
    Csv,
    Dmat,
}

impl From<MatrixFormatArg> for fastortho::matcore::io::MatrixFormat {
    fn from(f: MatrixFormatArg) -> Self {
        match f {
            MatrixFormatArg::Csv => Self::Csv,
            MatrixFormatArg::Dmat => Self::Dmat,
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if cli.threads == 0 {
        return Err(CliError::Validation("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::SampleHaar(a) => commands::sample_haar(a),
        Command::Factorize(a) => commands::factorize(a),
        Command::Eval(a) => commands::eval(a),
        Command::Synthetic(a) => commands::synthetic(a),
        Command::Pca(a) => commands::pca(a),
        Command::Bench(a) => commands::bench(a),
        Command::Stages(a) => commands::stages(a),
    })
}

/// Provenance block written at the top of every report.
#[derive(Serialize)]
pub(crate) struct ConfigEcho<'a, A: Serialize> {
    command: &'static str,
    version: &'static str,
    args: &'a A,
}

impl<'a, A: Serialize> ConfigEcho<'a, A> {
    pub(crate) fn new(command: &'static str, args: &'a A) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            args,
        }
    }
}

/// Writes to `out`, or to stdout when no path is given.
pub(crate) fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    message: e.to_string(),
                })
        }
    }
}

pub(crate) fn to_json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// CSV with the config echo as one leading `#` line.
pub(crate) fn to_csv_text<A: Serialize>(echo: &ConfigEcho<'_, A>, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("# {}\n", serde_json::to_string(echo).expect("config serializes"));
    s.push_str(&header.join(","));
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}
