use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use fastortho::analysis::{bound_theorem3, error_report, ErrorReport};
use fastortho::fastapply::{load_egt, plan, project_into, save_egt, stage_partition, to_json};
use fastortho::matcore::io::{read_matrix, write_matrix};
use fastortho::matcore::{gaussian_matrix, haar_orthogonal};
use fastortho::pca::{read_dataset_csv, run_experiment_cell, ExperimentConfig, ExperimentReport, LabelColumn, PreparedExperiment};
use fastortho::{FactorizerConfig, Matrix, Product, ScoreInit, SeededRng, SigmaRule, Weights};

use crate::{emit, to_csv_text, to_json_text, CliError, CliResult, ConfigEcho, MatrixFormatArg, ReportFormat};

fn parse_sigma_rule(s: &str) -> Result<SigmaRule, String> {
    s.parse().map_err(|e: fastortho::Error| e.to_string())
}

fn parse_score_init(s: &str) -> Result<ScoreInit, String> {
    match s {
        "weighted" => Ok(ScoreInit::Weighted),
        "unweighted" => Ok(ScoreInit::Unweighted),
        _ => Err(format!("unknown score init {s:?} (weighted, unweighted)")),
    }
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn load_product(path: &Path) -> CliResult<Product> {
    load_egt(path).map_err(CliError::at(path))
}

fn weights_or_ones(sigma: &Option<Vec<f64>>, d: usize, p: usize) -> CliResult<Weights> {
    match sigma {
        None => Ok(Weights::ones(d, p)),
        Some(v) if v.len() != p => Err(validation(format!("--sigma has {} values, expected p = {p}", v.len()))),
        Some(v) => Ok(Weights::new(d, v.clone())?),
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct SampleHaarArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to CSV for `.csv` paths and DMAT otherwise.
    #[arg(long)]
    pub format: Option<MatrixFormatArg>,
}

pub fn sample_haar(a: &SampleHaarArgs) -> CliResult<()> {
    if a.d == 0 {
        return Err(validation("--d must be at least 1"));
    }
    let u: Matrix = haar_orthogonal(a.d, a.seed);
    write_matrix(&a.out, &u, a.format.map(Into::into)).map_err(CliError::at(&a.out))
}

#[derive(Debug, Args, Serialize)]
pub struct FactorizeArgs {
    /// Orthonormal `d x p` matrix (CSV or DMAT).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub input_format: Option<MatrixFormatArg>,
    #[arg(long, short)]
    pub g: usize,
    /// Use only the leading `p` columns of the input.
    #[arg(long)]
    pub p: Option<usize>,
    /// Column weights, comma separated; all ones by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sigma: Option<Vec<f64>>,
    #[arg(long, default_value = "identity", value_parser = parse_sigma_rule)]
    pub sigma_rule: SigmaRule,
    #[arg(long, default_value_t = 1e-2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub max_sweeps: usize,
    #[arg(long)]
    pub rotations_only: bool,
    #[arg(long, default_value = "weighted", value_parser = parse_score_init)]
    pub score_init: ScoreInit,
    /// Recorded in the product's build log.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// EGT1 output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the product as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Build log with per-sweep objectives and timings; `<out>.log.json` by default.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Log the objective after every step.
    #[arg(long)]
    pub record_steps: bool,
    /// Exit with status 3 if `max_sweeps` is reached before the tolerance.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Serialize)]
struct FactorizeSummary<'a> {
    config: ConfigEcho<'a, FactorizeArgs>,
    d: usize,
    p: usize,
    g: usize,
    sweeps: usize,
    converged: bool,
    final_objective: f64,
}

pub fn factorize(a: &FactorizeArgs) -> CliResult<()> {
    let u = read_matrix(&a.input, a.input_format.map(Into::into)).map_err(CliError::at(&a.input))?;
    let p = a.p.unwrap_or(u.cols());
    if p == 0 || p > u.cols() {
        return Err(validation(format!("--p {p} out of range for {} columns", u.cols())));
    }
    let u_p = u.leading_cols(p);
    let sigma = weights_or_ones(&a.sigma, u.rows(), p)?;
    let config = FactorizerConfig {
        g: a.g,
        sigma_rule: a.sigma_rule,
        epsilon: a.epsilon,
        max_sweeps: a.max_sweeps,
        rotations_only: a.rotations_only,
        seed: a.seed,
        score_init: a.score_init,
        record_steps: a.record_steps,
    };
    let product = fastortho::factorize(&u_p, &sigma, &config)?;
    save_egt(&a.out, &product).map_err(CliError::at(&a.out))?;
    if let Some(path) = &a.json {
        emit(Some(path), &to_json_text(&to_json(&product)))?;
    }
    let log = product.log().expect("factorize attaches a build log");
    let log_path = a.log.clone().unwrap_or_else(|| {
        let mut name = a.out.clone().into_os_string();
        name.push(".log.json");
        PathBuf::from(name)
    });
    emit(Some(&log_path), &to_json_text(log))?;

    let summary = FactorizeSummary {
        config: ConfigEcho::new("factorize", a),
        d: product.d(),
        p,
        g: product.g(),
        sweeps: log.sweeps.len() - 1,
        converged: log.converged,
        final_objective: log.final_objective(),
    };
    emit(None, &to_json_text(&summary))?;
    if a.strict && !log.converged {
        return Err(CliError::NotConverged(format!(
            "objective still changing after {} sweeps",
            a.max_sweeps
        )));
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Reference matrix; its leading `p` columns are compared.
    #[arg(long)]
    pub u: PathBuf,
    #[arg(long)]
    pub u_format: Option<MatrixFormatArg>,
    #[arg(long)]
    pub egt: PathBuf,
    /// Column weights for the weighted error; all ones by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sigma: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvalReport<'a> {
    config: ConfigEcho<'a, EvalArgs>,
    d: usize,
    p: usize,
    g: usize,
    report: ErrorReport,
    /// Worst-case squared Frobenius error for a full `d x d` input with this
    /// many transforms; absent when `p < d`.
    frobenius_bound: Option<f64>,
}

pub fn eval(a: &EvalArgs) -> CliResult<()> {
    let u = read_matrix(&a.u, a.u_format.map(Into::into)).map_err(CliError::at(&a.u))?;
    let product = load_product(&a.egt)?;
    let (d, p) = (product.d(), product.p());
    if u.rows() != d || u.cols() < p {
        return Err(validation(format!(
            "matrix is {}x{}, product needs {d} rows and at least {p} columns",
            u.rows(),
            u.cols()
        )));
    }
    let sigma = weights_or_ones(&a.sigma, d, p)?;
    let report = error_report(&u.leading_cols(p), &product, &sigma)?;
    let frobenius_bound = if p == d { bound_theorem3(d, product.g()).ok() } else { None };
    let out = EvalReport {
        config: ConfigEcho::new("eval", a),
        d,
        p,
        g: product.g(),
        report,
        frobenius_bound,
    };
    emit(a.out.as_deref(), &to_json_text(&out))
}

#[derive(Debug, Args, Serialize)]
pub struct SyntheticArgs {
    #[arg(long)]
    pub d: usize,
    /// Budgets, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub g_grid: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Trial `t` uses the matrix drawn from a seed derived from this and `t`.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub max_sweeps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyntheticRow {
    pub g: usize,
    pub trials: usize,
    /// Mean and sample standard deviation of `||U - Ubar||_F^2 / (2d)`.
    pub extended_mean: f64,
    pub extended_std: f64,
    pub rotations_mean: f64,
    pub rotations_std: f64,
    /// `1 - extended_mean / rotations_mean`.
    pub relative_improvement: f64,
    /// Worst-case bound on the same normalized scale; absent past `d(d-1)/2`.
    pub bound: Option<f64>,
}

#[derive(Serialize)]
struct SyntheticReport<'a> {
    config: ConfigEcho<'a, SyntheticArgs>,
    rows: Vec<SyntheticRow>,
}

pub fn synthetic(a: &SyntheticArgs) -> CliResult<()> {
    if a.d < 2 || a.trials == 0 {
        return Err(validation("synthetic needs --d >= 2 and --trials >= 1"));
    }
    if let Some(&g) = a.g_grid.iter().find(|&&g| g == 0) {
        return Err(validation(format!("budget {g} in --g-grid must be at least 1")));
    }
    let d = a.d;
    // errors[trial][grid index] = (extended, rotations-only)
    let errors: Vec<Vec<(f64, f64)>> = (0..a.trials)
        .into_par_iter()
        .map(|t| {
            let u: Matrix = haar_orthogonal(d, SeededRng::derive_seed(a.seed, t as u64));
            let w = Weights::ones(d, d);
            a.g_grid
                .iter()
                .map(|&g| {
                    let mut pair = [0.0; 2];
                    for (slot, rotations_only) in [false, true].into_iter().enumerate() {
                        let cfg = FactorizerConfig {
                            epsilon: a.epsilon,
                            max_sweeps: a.max_sweeps,
                            rotations_only,
                            seed: a.seed,
                            ..FactorizerConfig::new(g)
                        };
                        let product = fastortho::factorize(&u, &w, &cfg)?;
                        pair[slot] = error_report(&u, &product, &w)?.normalized_frobenius;
                    }
                    Ok((pair[0], pair[1]))
                })
                .collect::<fastortho::Result<Vec<_>>>()
        })
        .collect::<fastortho::Result<Vec<_>>>()?;

    let rows: Vec<SyntheticRow> = a
        .g_grid
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            let ext: Vec<f64> = errors.iter().map(|e| e[k].0).collect();
            let rot: Vec<f64> = errors.iter().map(|e| e[k].1).collect();
            let (extended_mean, extended_std) = mean_std(&ext);
            let (rotations_mean, rotations_std) = mean_std(&rot);
            SyntheticRow {
                g,
                trials: a.trials,
                extended_mean,
                extended_std,
                rotations_mean,
                rotations_std,
                relative_improvement: 1.0 - extended_mean / rotations_mean,
                bound: bound_theorem3(d, g).ok().map(|b| b / (2.0 * d as f64)),
            }
        })
        .collect();

    let echo = ConfigEcho::new("synthetic", a);
    let text = match a.format {
        ReportFormat::Json => to_json_text(&SyntheticReport { config: echo, rows }),
        ReportFormat::Csv => {
            let header = [
                "g",
                "trials",
                "extended_mean",
                "extended_std",
                "rotations_mean",
                "rotations_std",
                "relative_improvement",
                "bound",
            ];
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.g.to_string(),
                        r.trials.to_string(),
                        r.extended_mean.to_string(),
                        r.extended_std.to_string(),
                        r.rotations_mean.to_string(),
                        r.rotations_std.to_string(),
                        r.relative_improvement.to_string(),
                        opt(r.bound),
                    ]
                })
                .collect();
            to_csv_text(&echo, &header, &body)
        }
    };
    emit(a.out.as_deref(), &text)
}

#[derive(Debug, Args, Serialize)]
pub struct PcaArgs {
    /// One sample per line with the integer label last.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub p: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub g_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "identity", value_parser = parse_sigma_rule)]
    pub sigma_rules: Vec<SigmaRule>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Fit the components without subtracting the training mean.
    #[arg(long)]
    pub no_center: bool,
    /// Seeds the train/test split.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub max_sweeps: usize,
    #[arg(long)]
    pub rotations_only: bool,
    #[arg(long, default_value_t = 5)]
    pub timing_repeats: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
}

pub fn pca(a: &PcaArgs) -> CliResult<()> {
    let file = File::open(&a.data).map_err(|e| CliError::Io {
        path: a.data.clone(),
        message: e.to_string(),
    })?;
    let data = read_dataset_csv(BufReader::new(file), LabelColumn::Last).map_err(CliError::at(&a.data))?;
    if a.p == 0 || a.p > data.dim() {
        return Err(validation(format!("--p {} out of range for dimension {}", a.p, data.dim())));
    }
    let config = ExperimentConfig {
        p: a.p,
        g_grid: a.g_grid.clone(),
        sigma_rules: a.sigma_rules.clone(),
        k: a.k,
        center: !a.no_center,
        test_fraction: a.test_fraction,
        seed: a.seed,
        epsilon: a.epsilon,
        max_sweeps: a.max_sweeps,
        rotations_only: a.rotations_only,
        timing_repeats: a.timing_repeats,
    };
    let prep = PreparedExperiment::new(&data, &config)?;
    let rows = PreparedExperiment::cells(&config)
        .into_par_iter()
        .map(|(g, rule)| run_experiment_cell(&prep, &config, g, rule))
        .collect::<fastortho::Result<Vec<_>>>()?;
    let report = ExperimentReport { config, rows };

    #[derive(Serialize)]
    struct PcaReport<'a> {
        echo: ConfigEcho<'a, PcaArgs>,
        #[serde(flatten)]
        report: &'a ExperimentReport,
    }
    let echo = ConfigEcho::new("pca", a);
    let text = match a.format {
        ReportFormat::Json => to_json_text(&PcaReport { echo, report: &report }),
        ReportFormat::Csv => {
            let header = [
                "g",
                "sigma_rule",
                "accuracy_full",
                "accuracy_fast",
                "flops_speedup",
                "time_speedup",
                "selection_fraction",
                "frobenius_error",
            ];
            let body: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.g.to_string(),
                        r.sigma_rule.name().to_string(),
                        r.accuracy_full.to_string(),
                        r.accuracy_fast.to_string(),
                        r.flops_speedup.to_string(),
                        r.time_speedup.to_string(),
                        r.selection_fraction.to_string(),
                        r.frobenius_error.to_string(),
                    ]
                })
                .collect();
            to_csv_text(&echo, &header, &body)
        }
    };
    emit(a.out.as_deref(), &text)
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long)]
    pub egt: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n_vectors: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Seeds the random input vectors.
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport<C> {
    pub config: C,
    pub d: usize,
    pub p: usize,
    pub g: usize,
    pub flops_per_vector: usize,
    pub dense_flops: usize,
    pub flops_speedup: f64,
    /// Largest difference between the two projections of the same inputs.
    pub max_abs_diff: f64,
    pub dense_ns_per_vector: f64,
    pub fast_ns_per_vector: f64,
    pub time_speedup: f64,
}

pub fn bench(a: &BenchArgs) -> CliResult<()> {
    if a.n_vectors == 0 || a.repeats == 0 {
        return Err(validation("--n-vectors and --repeats must be at least 1"));
    }
    let product = load_product(&a.egt)?;
    let (d, p) = (product.d(), product.p());
    let plan = plan(&product);
    let x: Matrix = gaussian_matrix(d, a.n_vectors, &mut SeededRng::new(a.seed));
    let w = product.to_dense();

    let dense_pass = |out: &mut Matrix| {
        out.as_mut_slice().par_chunks_mut(p).enumerate().for_each(|(c, y)| {
            let col = x.col(c);
            for (k, yk) in y.iter_mut().enumerate() {
                *yk = w.col(k).iter().zip(col).map(|(a, b)| a * b).sum();
            }
        });
    };
    let fast_pass = |out: &mut Matrix| {
        out.as_mut_slice().par_chunks_mut(p).enumerate().for_each_init(
            || vec![0.0; d],
            |work, (c, y)| {
                project_into(&plan, &product, x.col(c), work, y).expect("plan matches product");
            },
        );
    };

    let mut dense_out = Matrix::zeros(p, a.n_vectors);
    let mut fast_out = Matrix::zeros(p, a.n_vectors);
    let (mut dense_t, mut fast_t) = (Vec::new(), Vec::new());
    for _ in 0..a.repeats {
        let t = Instant::now();
        dense_pass(&mut dense_out);
        dense_t.push(t.elapsed().as_secs_f64());
        let t = Instant::now();
        fast_pass(&mut fast_out);
        fast_t.push(t.elapsed().as_secs_f64());
    }
    let per_vector = 1e9 / a.n_vectors as f64;
    let dense_ns = median(&mut dense_t) * per_vector;
    let fast_ns = median(&mut fast_t) * per_vector;
    let report = BenchReport {
        config: ConfigEcho::new("bench", a),
        d,
        p,
        g: product.g(),
        flops_per_vector: plan.flops_per_vector(),
        dense_flops: plan.dense_flops(),
        flops_speedup: plan.flops_speedup(),
        max_abs_diff: dense_out.max_abs_diff(&fast_out),
        dense_ns_per_vector: dense_ns,
        fast_ns_per_vector: fast_ns,
        time_speedup: dense_ns / fast_ns.max(1e-9),
    };
    emit(a.out.as_deref(), &to_json_text(&report))
}

#[derive(Debug, Args, Serialize)]
pub struct StagesArgs {
    #[arg(long)]
    pub egt: PathBuf,
    /// Print JSON instead of one line per stage.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct StagesReport<'a> {
    config: ConfigEcho<'a, StagesArgs>,
    d: usize,
    g: usize,
    count: usize,
    /// Transform indices (projection order) of each stage.
    stages: Vec<Vec<usize>>,
}

pub fn stages(a: &StagesArgs) -> CliResult<()> {
    let product = load_product(&a.egt)?;
    let stages = stage_partition(product.d(), product.transforms());
    let text = if a.json {
        to_json_text(&StagesReport {
            config: ConfigEcho::new("stages", a),
            d: product.d(),
            g: product.g(),
            count: stages.len(),
            stages,
        })
    } else {
        let mut s = format!("stages {}\n", stages.len());
        for (k, stage) in stages.iter().enumerate() {
            let pairs: Vec<String> = stage
                .iter()
                .map(|&t| {
                    let tr = &product.transforms()[t];
                    format!("{}:({},{})", t, tr.i + 1, tr.j + 1)
                })
                .collect();
            s.push_str(&format!("{k}: {}\n", pairs.join(" ")));
        }
        s
    };
    emit(a.out.as_deref(), &text)
}
