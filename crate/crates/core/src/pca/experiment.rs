use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{accuracy, fit_pca, knn_classify, Dataset, PcaModel};
use crate::analysis::error_report;
use crate::factorizer::{factorize, FactorizerConfig, GivensProduct, SigmaRule};
use crate::fastapply::{plan, project_batch, ApplyPlan};
use crate::matcore::{DenseMatrix, DiagonalWeights};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub p: usize,
    pub g_grid: Vec<usize>,
    pub sigma_rules: Vec<SigmaRule>,
    /// Neighbours in the k-NN vote.
    pub k: usize,
    pub center: bool,
    pub test_fraction: f64,
    /// Seeds the train/test split.
    pub seed: u64,
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub rotations_only: bool,
    /// Timing repetitions; the median is reported.
    pub timing_repeats: usize,
}

impl ExperimentConfig {
    pub fn new(p: usize, g_grid: Vec<usize>) -> Self {
        Self {
            p,
            g_grid,
            sigma_rules: vec![SigmaRule::Identity],
            k: 10,
            center: true,
            test_fraction: 0.2,
            seed: 0,
            epsilon: 1e-2,
            max_sweeps: 100,
            rotations_only: false,
            timing_repeats: 5,
        }
    }

    fn factorizer(&self, g: usize, rule: SigmaRule) -> FactorizerConfig {
        FactorizerConfig {
            g,
            sigma_rule: rule,
            epsilon: self.epsilon,
            max_sweeps: self.max_sweeps,
            rotations_only: self.rotations_only,
            seed: self.seed,
            ..FactorizerConfig::new(g.max(1))
        }
    }
}

/// One `(g, sigma_rule)` cell of the experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub g: usize,
    pub sigma_rule: SigmaRule,
    /// k-NN accuracy with the exact projection `diag(w) U_p^T`, where `w` is
    /// all ones for the identity rule and `Sigma_p` otherwise.
    pub accuracy_full: f64,
    pub accuracy_fast: f64,
    /// `2 p d / flops_per_vector`.
    pub flops_speedup: f64,
    /// Median dense projection time over median factored projection time.
    pub time_speedup: f64,
    /// Fraction of input coordinates the factored projection reads.
    pub selection_fraction: f64,
    /// `||U_p - Ubar_p||_F^2 / (2p)`.
    pub frobenius_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ExperimentRow>,
}

/// Split, PCA fit and reference accuracies shared by every cell.
#[derive(Clone, Debug)]
pub struct PreparedExperiment {
    pub model: PcaModel,
    pub train_x: DenseMatrix<f64>,
    pub test_x: DenseMatrix<f64>,
    pub train_labels: Vec<i64>,
    pub test_labels: Vec<i64>,
    /// `(rule, accuracy)` of the exact projection for each configured rule.
    pub accuracy_full: Vec<(SigmaRule, f64)>,
}

impl PreparedExperiment {
    pub fn new(data: &Dataset, config: &ExperimentConfig) -> Result<Self> {
        let labels = data
            .labels
            .as_ref()
            .ok_or_else(|| Error::invalid("the experiment needs a labeled dataset"))?;
        let split = data.split(config.test_fraction, config.seed)?;
        let train = data.subset(&split.train);
        let model = fit_pca(&train, config.p, config.center)?;
        let train_x = model.center(&train.x);
        let test_x = model.center(&data.x.select_cols(&split.test));
        let train_labels: Vec<i64> = split.train.iter().map(|&i| labels[i]).collect();
        let test_labels: Vec<i64> = split.test.iter().map(|&i| labels[i]).collect();
        let zero_mean = PcaModel {
            mean: vec![0.0; model.d()],
            ..model.clone()
        };
        let mut accuracy_full = Vec::new();
        for &rule in &config.sigma_rules {
            let w = reference_weights(&model, rule);
            let tr = zero_mean.project_dense(&train_x, &w);
            let te = zero_mean.project_dense(&test_x, &w);
            let pred = knn_classify(&tr, &train_labels, &te, config.k)?;
            accuracy_full.push((rule, accuracy(&pred, &test_labels)));
        }
        Ok(Self {
            model,
            train_x,
            test_x,
            train_labels,
            test_labels,
            accuracy_full,
        })
    }

    /// Cells in report order: for each `g`, each rule.
    pub fn cells(config: &ExperimentConfig) -> Vec<(usize, SigmaRule)> {
        config
            .g_grid
            .iter()
            .flat_map(|&g| config.sigma_rules.iter().map(move |&r| (g, r)))
            .collect()
    }
}

fn reference_weights(model: &PcaModel, rule: SigmaRule) -> Vec<f64> {
    match rule {
        SigmaRule::Identity => vec![1.0; model.p()],
        SigmaRule::Original | SigmaRule::Update => model.sigma.values().to_vec(),
    }
}

/// The `g = 0` product: `Ubar = I` with the weights each rule assigns to it.
pub fn empty_product(model: &PcaModel, rule: SigmaRule) -> Result<GivensProduct<f64>> {
    let (d, p) = (model.d(), model.p());
    let weights = match rule {
        SigmaRule::Identity => DiagonalWeights::ones(d, p),
        SigmaRule::Original => model.sigma.clone(),
        SigmaRule::Update => {
            let s = model.sigma.values();
            DiagonalWeights::new(d, (0..p).map(|t| model.u_p[(t, t)] * s[t]).collect())?
        }
    };
    Ok(GivensProduct::identity(weights, rule))
}

pub fn run_experiment_cell(
    prep: &PreparedExperiment,
    config: &ExperimentConfig,
    g: usize,
    rule: SigmaRule,
) -> Result<ExperimentRow> {
    let model = &prep.model;
    let product = if g == 0 {
        empty_product(model, rule)?
    } else {
        factorize(&model.u_p, &model.sigma, &config.factorizer(g, rule))?
    };
    let plan = plan(&product);
    let tr = project_batch(&plan, &product, &prep.train_x)?;
    let te = project_batch(&plan, &product, &prep.test_x)?;
    let pred = knn_classify(&tr, &prep.train_labels, &te, config.k)?;
    let accuracy_fast = accuracy(&pred, &prep.test_labels);
    let accuracy_full = prep
        .accuracy_full
        .iter()
        .find(|(r, _)| *r == rule)
        .map(|&(_, a)| a)
        .ok_or_else(|| Error::invalid(format!("rule {} is not configured", rule.name())))?;
    let report = error_report(&model.u_p, &product, &model.sigma)?;
    Ok(ExperimentRow {
        g,
        sigma_rule: rule,
        accuracy_full,
        accuracy_fast,
        flops_speedup: plan.flops_speedup(),
        time_speedup: time_speedup(prep, &product, &plan, rule, config.timing_repeats),
        selection_fraction: plan.selection_fraction(),
        frobenius_error: report.normalized_frobenius,
    })
}

/// Every cell, sequentially.
pub fn run_experiment(data: &Dataset, config: &ExperimentConfig) -> Result<ExperimentReport> {
    let prep = PreparedExperiment::new(data, config)?;
    let rows = PreparedExperiment::cells(config)
        .into_iter()
        .map(|(g, r)| run_experiment_cell(&prep, config, g, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        config: config.clone(),
        rows,
    })
}

fn time_speedup(
    prep: &PreparedExperiment,
    product: &GivensProduct<f64>,
    plan: &ApplyPlan,
    rule: SigmaRule,
    repeats: usize,
) -> f64 {
    let x = &prep.test_x;
    let model = &prep.model;
    let mut w = model.u_p.clone();
    w.scale_cols(&reference_weights(model, rule));
    let mut y = vec![0.0; model.p()];
    let mut work = vec![0.0; model.d()];
    let mut sink = 0.0;
    let mut dense = Vec::new();
    let mut fast = Vec::new();
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        for c in 0..x.cols() {
            let col = x.col(c);
            for (k, out) in y.iter_mut().enumerate() {
                *out = w.col(k).iter().zip(col).map(|(a, b)| a * b).sum();
            }
            sink += y[0];
        }
        dense.push(t.elapsed().as_secs_f64());

        let t = Instant::now();
        for c in 0..x.cols() {
            crate::fastapply::project_into(plan, product, x.col(c), &mut work, &mut y)
                .expect("shapes checked by the plan");
            sink += y[0];
        }
        fast.push(t.elapsed().as_secs_f64());
    }
    std::hint::black_box(sink);
    median(&mut dense) / median(&mut fast).max(1e-12)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pca::two_blobs;

    #[test]
    fn rows_per_cell_and_schema() {
        let data = two_blobs(12, 300, 5);
        let mut cfg = ExperimentConfig::new(3, vec![0, 10, 40]);
        cfg.sigma_rules = SigmaRule::ALL.to_vec();
        cfg.timing_repeats = 1;
        let report = run_experiment(&data, &cfg).unwrap();
        assert_eq!(report.rows.len(), 9);
        assert_eq!((report.rows[4].g, report.rows[4].sigma_rule), (10, SigmaRule::Original));
        let json = serde_json::to_value(&report.rows[0]).unwrap();
        let mut keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            [
                "accuracy_fast",
                "accuracy_full",
                "flops_speedup",
                "frobenius_error",
                "g",
                "selection_fraction",
                "sigma_rule",
                "time_speedup"
            ]
        );
        for row in &report.rows {
            assert!((0.0..=1.0).contains(&row.accuracy_fast));
            assert!(row.flops_speedup > 0.0);
        }
    }

    #[test]
    fn empty_product_projects_onto_masked_identity() {
        let data = two_blobs(8, 200, 6);
        let mut cfg = ExperimentConfig::new(2, vec![0]);
        cfg.timing_repeats = 1;
        let prep = PreparedExperiment::new(&data, &cfg).unwrap();
        let row = run_experiment_cell(&prep, &cfg, 0, SigmaRule::Identity).unwrap();
        // the first two raw coordinates, fed to k-NN directly
        let pick = |m: &DenseMatrix<f64>| DenseMatrix::from_fn(2, m.cols(), |i, j| m[(i, j)]);
        let pred = knn_classify(&pick(&prep.train_x), &prep.train_labels, &pick(&prep.test_x), 10).unwrap();
        assert_eq!(row.accuracy_fast, accuracy(&pred, &prep.test_labels));
        assert_eq!(row.flops_speedup, (2 * 2 * 8) as f64 / 2.0);
        assert_eq!(row.selection_fraction, 2.0 / 8.0);
    }

    #[test]
    fn saturation_matches_full_pca() {
        let data = two_blobs(10, 400, 8);
        let mut cfg = ExperimentConfig::new(3, vec![45]);
        cfg.sigma_rules = vec![SigmaRule::Identity, SigmaRule::Update];
        cfg.timing_repeats = 1;
        let report = run_experiment(&data, &cfg).unwrap();
        for row in &report.rows {
            assert!((row.accuracy_fast - row.accuracy_full).abs() <= 0.01, "{row:?}");
        }
    }

    #[test]
    fn unlabeled_data_rejected() {
        let mut data = two_blobs(4, 50, 1);
        data.labels = None;
        assert!(run_experiment(&data, &ExperimentConfig::new(2, vec![1])).is_err());
    }
}
