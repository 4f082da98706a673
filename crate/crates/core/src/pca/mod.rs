//! Fast PCA projections: datasets, principal components, k-NN evaluation and
//! the accuracy/speedup experiment.

mod dataset;
mod experiment;
mod knn;
mod model;

pub use dataset::{read_dataset_csv, two_blobs, write_dataset_csv, Dataset, LabelColumn, Split};
pub use experiment::{
    empty_product, run_experiment, run_experiment_cell, ExperimentConfig, ExperimentReport,
    ExperimentRow, PreparedExperiment,
};
pub use knn::{accuracy, knn_classify};
pub use model::{fit_pca, train_fast_projection, PcaModel};
