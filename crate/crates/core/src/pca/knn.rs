use crate::matcore::DenseMatrix;
use crate::{Error, Result};

/// Euclidean k-NN on projected points (columns). Distance ties go to the
/// lower training index, vote ties to the smallest label.
pub fn knn_classify(
    train: &DenseMatrix<f64>,
    train_labels: &[i64],
    test: &DenseMatrix<f64>,
    k: usize,
) -> Result<Vec<i64>> {
    if train.rows() != test.rows() {
        return Err(Error::shape(
            "knn_classify",
            format!("train has dimension {}, test {}", train.rows(), test.rows()),
        ));
    }
    if train_labels.len() != train.cols() {
        return Err(Error::shape(
            "knn_classify",
            format!("{} labels for {} training points", train_labels.len(), train.cols()),
        ));
    }
    if k == 0 || k > train.cols() {
        return Err(Error::invalid(format!("k = {k} must be in 1..={}", train.cols())));
    }
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(train.cols());
    let mut votes: Vec<(i64, usize)> = Vec::with_capacity(k);
    let mut out = Vec::with_capacity(test.cols());
    for c in 0..test.cols() {
        let q = test.col(c);
        dist.clear();
        for t in 0..train.cols() {
            let d2: f64 = train.col(t).iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            dist.push((d2, t));
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        votes.clear();
        for &(_, t) in &dist[..k] {
            let label = train_labels[t];
            match votes.iter_mut().find(|(l, _)| *l == label) {
                Some(v) => v.1 += 1,
                None => votes.push((label, 1)),
            }
        }
        let best = votes
            .iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("k >= 1");
        out.push(best.0);
    }
    Ok(out)
}

/// Fraction of matching entries.
pub fn accuracy(predicted: &[i64], truth: &[i64]) -> f64 {
    assert_eq!(predicted.len(), truth.len(), "prediction length");
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}
