use super::Dataset;
use crate::factorizer::{factorize, FactorizerConfig, GivensProduct};
use crate::fastapply::{plan, ApplyPlan};
use crate::matcore::{svd_dense, DenseMatrix, DiagonalWeights};
use crate::{Error, Result};

/// Leading principal directions, their singular values and the centring mean.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    /// `d x p`, orthonormal columns.
    pub u_p: DenseMatrix<f64>,
    /// Singular values `Sigma_p`, descending.
    pub sigma: DiagonalWeights<f64>,
    /// Zero when fitted without centring.
    pub mean: Vec<f64>,
}

impl PcaModel {
    pub fn d(&self) -> usize {
        self.u_p.rows()
    }

    pub fn p(&self) -> usize {
        self.u_p.cols()
    }

    /// Columns of `x` minus the mean.
    pub fn center(&self, x: &DenseMatrix<f64>) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] - self.mean[i])
    }

    /// `diag(w) U_p^T (x - mean)` for every column of `x`.
    pub fn project_dense(&self, x: &DenseMatrix<f64>, w: &[f64]) -> DenseMatrix<f64> {
        let centered = self.center(x);
        let mut out = DenseMatrix::zeros(self.p(), x.cols());
        for c in 0..x.cols() {
            let col = centered.col(c);
            for k in 0..self.p() {
                let dot: f64 = self.u_p.col(k).iter().zip(col).map(|(a, b)| a * b).sum();
                out[(k, c)] = w[k] * dot;
            }
        }
        out
    }
}

/// PCA from the SVD of the (optionally centred) `d x N` data matrix. Each
/// direction is signed so that its largest-magnitude entry is positive.
pub fn fit_pca(data: &Dataset, p: usize, center: bool) -> Result<PcaModel> {
    let (d, n) = data.x.shape();
    if d == 0 || n == 0 {
        return Err(Error::invalid("empty dataset"));
    }
    if p == 0 || p > d.min(n) {
        return Err(Error::invalid(format!("p = {p} must be in 1..={}", d.min(n))));
    }
    let mean: Vec<f64> = if center {
        (0..d)
            .map(|i| (0..n).map(|j| data.x[(i, j)]).sum::<f64>() / n as f64)
            .collect()
    } else {
        vec![0.0; d]
    };
    let centered = DenseMatrix::from_fn(d, n, |i, j| data.x[(i, j)] - mean[i]);
    let svd = svd_dense(&centered)?;
    let mut u_p = svd.u.leading_cols(p);
    for k in 0..p {
        let col = u_p.col_mut(k);
        let mut pivot = 0;
        for (t, v) in col.iter().enumerate() {
            if v.abs() > col[pivot].abs() {
                pivot = t;
            }
        }
        if col[pivot] < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let sigma = DiagonalWeights::new(d, svd.s[..p].to_vec())?;
    Ok(PcaModel { u_p, sigma, mean })
}

/// Factorizes the model's `U_p Sigma_p` and plans the pruned projection.
pub fn train_fast_projection(
    model: &PcaModel,
    config: &FactorizerConfig,
) -> Result<(GivensProduct<f64>, ApplyPlan)> {
    let product = factorize(&model.u_p, &model.sigma, config)?;
    let plan = plan(&product);
    Ok((product, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::haar_orthogonal;
    use crate::SeededRng;

    #[test]
    fn rank_one_data() {
        let x = DenseMatrix::from_fn(4, 6, |i, j| if i == 2 { j as f64 + 1.0 } else { 0.0 });
        let data = Dataset::new(x, None).unwrap();
        let m = fit_pca(&data, 1, false).unwrap();
        let expect = [0.0, 0.0, 1.0, 0.0];
        for (a, b) in m.u_p.col(0).iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_design_recovers_columns() {
        let q = haar_orthogonal::<f64>(5, 3);
        let scales = [9.0, 7.0, 5.0, 3.0, 1.0];
        let mut x = q.clone();
        x.scale_cols(&scales);
        let m = fit_pca(&Dataset::new(x, None).unwrap(), 3, false).unwrap();
        for k in 0..3 {
            let dot: f64 = m.u_p.col(k).iter().zip(q.col(k)).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-10);
            assert!((m.sigma.values()[k] - scales[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn eckart_young_residual() {
        let mut rng = SeededRng::new(5);
        let x = DenseMatrix::from_fn(30, 200, |_, _| rng.normal());
        let data = Dataset::new(x.clone(), None).unwrap();
        let p = 7;
        let m = fit_pca(&data, p, false).unwrap();
        let full = svd_dense(&x).unwrap();
        // X - U_p U_p^T X leaves exactly the tail singular values
        let coef = crate::matcore::matmul(&m.u_p.transpose(), &x).unwrap();
        let approx = crate::matcore::matmul(&m.u_p, &coef).unwrap();
        let resid = crate::matcore::frobenius_distance_sq(&x, &approx).unwrap();
        let tail: f64 = full.s[p..].iter().map(|s| s * s).sum();
        assert!((resid.sqrt() - tail.sqrt()).abs() < 1e-8);
        assert!(m.u_p.orthonormality_residual() < 1e-8);
        assert!(m.sigma.values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn deterministic_signs() {
        let data = super::super::two_blobs(10, 80, 2);
        let a = fit_pca(&data, 3, true).unwrap();
        assert_eq!(a, fit_pca(&data, 3, true).unwrap());
        for k in 0..3 {
            let col = a.u_p.col(k);
            let max = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(max > 0.0);
        }
    }

    #[test]
    fn p_validation() {
        let data = super::super::two_blobs(4, 10, 2);
        assert!(fit_pca(&data, 0, true).is_err());
        assert!(fit_pca(&data, 5, true).is_err());
    }

    #[test]
    fn identity_components_factor_exactly() {
        let model = PcaModel {
            u_p: DenseMatrix::identity(6),
            sigma: DiagonalWeights::ones(6, 6),
            mean: vec![0.0; 6],
        };
        let (prod, plan) = train_fast_projection(&model, &FactorizerConfig::new(5)).unwrap();
        assert_eq!(prod.log().unwrap().final_objective(), 0.0);
        assert_eq!(plan.flops_per_vector(), 6);
    }
}
