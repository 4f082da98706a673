//! Error measures between `U_p` and its approximation `Ubar_p`, and the
//! closed-form bounds they are compared against.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::factorizer::{orthonormality_tolerance, GivensProduct};
use crate::matcore::{eigenvalues, frobenius_distance_sq, matmul, svd_dense, DenseMatrix, DiagonalWeights};
use crate::{Error, Real, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `||U_p - Ubar_p||_F^2`.
    pub frobenius_sq: f64,
    /// `frobenius_sq / (2p)`; equals `(2d)^-1 ||U - Ubar||_F^2` when `p = d`.
    pub normalized_frobenius: f64,
    /// `||I - U_p^T Ubar_p||_2`.
    pub operator_norm: f64,
    /// `arccos` of the smallest singular value of `U_p^T Ubar_p`.
    pub principal_angle_rad: f64,
    /// `u_i^T ubar_i` for every column.
    pub cosines: Vec<f64>,
    pub cosine_min: f64,
    pub cosine_mean: f64,
    pub cosine_max: f64,
    /// `off(U_p^T Ubar_p)`.
    pub off_norm: f64,
    /// `||(U_p - Ubar_p) Sigma_p||_F^2`.
    pub weighted_frobenius_sq: f64,
    /// Operator-norm bound from the smallest cosine (2 when a cosine is negative).
    pub operator_norm_bound: f64,
    /// Every cosine is non-negative, so the cosine bound applies.
    pub bound_assumption_holds: bool,
    /// `1 - operator_norm`, reported next to the principal angle.
    pub one_minus_operator_norm: f64,
}

/// Error report of a factored product against the `d x p` target `u_p`.
/// `sigma` weights the columns for `weighted_frobenius_sq`.
pub fn error_report<T: Real>(
    u_p: &DenseMatrix<T>,
    product: &GivensProduct<T>,
    sigma: &DiagonalWeights<T>,
) -> Result<ErrorReport> {
    if product.d() != u_p.rows() {
        return Err(Error::shape(
            "error_report",
            format!("U_p has {} rows, product has d = {}", u_p.rows(), product.d()),
        ));
    }
    let ubar_p = product.ubar_dense().leading_cols(u_p.cols());
    error_report_dense(u_p, &ubar_p, sigma)
}

/// [`error_report`] for an explicit `Ubar_p`.
pub fn error_report_dense<T: Real>(
    u_p: &DenseMatrix<T>,
    ubar_p: &DenseMatrix<T>,
    sigma: &DiagonalWeights<T>,
) -> Result<ErrorReport> {
    if u_p.shape() != ubar_p.shape() {
        return Err(Error::shape(
            "error_report",
            format!("U_p is {}x{}, Ubar_p is {}x{}", u_p.rows(), u_p.cols(), ubar_p.rows(), ubar_p.cols()),
        ));
    }
    let p = u_p.cols();
    if p == 0 || sigma.p() != p {
        return Err(Error::shape(
            "error_report",
            format!("{} weights for {p} columns", sigma.p()),
        ));
    }
    let frobenius_sq = frobenius_distance_sq(u_p, ubar_p)?.to_f64_lossy();

    let m = matmul(&u_p.transpose(), ubar_p)?;
    let e = DenseMatrix::from_fn(p, p, |i, j| if i == j { T::one() } else { T::zero() } - m[(i, j)]);
    let operator_norm = svd_dense(&e)?.s[0].to_f64_lossy();
    let tau = svd_dense(&m)?.s;
    let tau_min = tau[p - 1].to_f64_lossy().clamp(0.0, 1.0);

    let cosines: Vec<f64> = m.diagonal().into_iter().map(|c| c.to_f64_lossy()).collect();
    let cosine_min = cosines.iter().copied().fold(f64::INFINITY, f64::min);
    let cosine_max = cosines.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cosine_mean = cosines.iter().sum::<f64>() / p as f64;

    let mut weighted_frobenius_sq = 0.0;
    for (j, &s) in sigma.values().iter().enumerate() {
        let s = s.to_f64_lossy();
        let col: f64 = u_p
            .col(j)
            .iter()
            .zip(ubar_p.col(j))
            .map(|(&a, &b)| (a - b).to_f64_lossy().powi(2))
            .sum();
        weighted_frobenius_sq += s * s * col;
    }

    // Rounding can push a cosine of an exact match just past 1.
    let clamped: Vec<f64> = cosines.iter().map(|c| c.clamp(-1.0, 1.0)).collect();
    let bound = bound_theorem5(&clamped, p)?;

    Ok(ErrorReport {
        frobenius_sq,
        normalized_frobenius: frobenius_sq / (2.0 * p as f64),
        operator_norm,
        principal_angle_rad: tau_min.acos(),
        cosine_min,
        cosine_mean,
        cosine_max,
        cosines,
        off_norm: off_norm(&m)?.to_f64_lossy(),
        weighted_frobenius_sq,
        operator_norm_bound: bound.bound,
        bound_assumption_holds: bound.assumption_holds,
        one_minus_operator_norm: 1.0 - operator_norm,
    })
}

/// `2 sum_i sigma_i^2 (1 - cos theta_i)`, which equals
/// `||(U - Ubar) Sigma||_F^2` for unit-norm columns.
pub fn weighted_cosine_sum(sigma: &[f64], cosines: &[f64]) -> f64 {
    2.0 * sigma.iter().zip(cosines).map(|(s, c)| s * s * (1.0 - c)).sum::<f64>()
}

/// `off(U) = sqrt(sum_{t != q} U_tq^2)`.
pub fn off_norm<T: Real>(u: &DenseMatrix<T>) -> Result<T> {
    if !u.is_square() {
        return Err(Error::shape("off_norm", format!("{}x{} is not square", u.rows(), u.cols())));
    }
    let diag: T = u.diagonal().into_iter().map(|x| x * x).sum();
    Ok((u.frobenius_norm_sq() - diag).max(T::zero()).sqrt())
}

/// `2d - sqrt(2 pi d)`: expected-error bound with `g = d/2` transforms.
pub fn bound_theorem2(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("bound needs d >= 2, got {d}")));
    }
    let d = d as f64;
    Ok(2.0 * d - (2.0 * std::f64::consts::PI * d).sqrt())
}

/// `2(d - floor r) - (2 sqrt 2 / sqrt pi) sqrt(d - floor r)` with
/// `r = d - (1 + sqrt((2d - 1)^2 - 8g)) / 2`.
pub fn bound_theorem3(d: usize, g: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("bound needs d >= 2, got {d}")));
    }
    let g_max = d * (d - 1) / 2;
    if g > g_max {
        return Err(Error::invalid(format!("g = {g} exceeds d(d-1)/2 = {g_max}")));
    }
    let df = d as f64;
    let disc = (2.0 * df - 1.0).powi(2) - 8.0 * g as f64;
    let r = df - (1.0 + disc.max(0.0).sqrt()) / 2.0;
    // r is an integer at g = d(d-1)/2; keep rounding error from dropping it
    let r_floor = (r + 1e-9).floor().max(0.0);
    let m = df - r_floor;
    Ok(2.0 * m - 2.0 * std::f64::consts::SQRT_2 / std::f64::consts::PI.sqrt() * m.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineBound {
    pub bound: f64,
    /// False when some cosine is negative; the bound is then the trivial 2.
    pub assumption_holds: bool,
}

/// `min(2, 1 - c + sqrt((d - 1)(1 - c^2)))` with `c` the smallest cosine.
pub fn bound_theorem5(cosines: &[f64], d: usize) -> Result<CosineBound> {
    if let Some(c) = cosines.iter().find(|c| !(-1.0..=1.0).contains(*c)) {
        return Err(Error::invalid(format!("cosine {c} outside [-1, 1]")));
    }
    if d == 0 || cosines.is_empty() {
        return Err(Error::invalid("bound needs at least one cosine"));
    }
    let c = cosines.iter().copied().fold(f64::INFINITY, f64::min);
    if c < 0.0 {
        return Ok(CosineBound {
            bound: 2.0,
            assumption_holds: false,
        });
    }
    let value = 1.0 - c + ((d as f64 - 1.0) * (1.0 - c * c)).sqrt();
    Ok(CosineBound {
        bound: value.min(2.0),
        assumption_holds: true,
    })
}

/// Eigenvalues `1 - lambda` of `E = I - U^T Ubar`, where `lambda` runs over
/// the (unit-modulus) eigenvalues of `U^T Ubar`.
pub fn error_spectrum<T: Real>(u: &DenseMatrix<T>, ubar: &DenseMatrix<T>) -> Result<Vec<Complex<T>>> {
    if !u.is_square() || u.shape() != ubar.shape() {
        return Err(Error::shape(
            "error_spectrum",
            format!("need two square matrices of one size, got {:?} and {:?}", u.shape(), ubar.shape()),
        ));
    }
    let tolerance = orthonormality_tolerance::<T>(u.rows());
    for m in [u, ubar] {
        let residual = m.orthonormality_residual().to_f64_lossy();
        if !(residual <= tolerance) {
            return Err(Error::NotOrthonormal { residual, tolerance });
        }
    }
    let q = matmul(&u.transpose(), ubar)?;
    Ok(eigenvalues(&q)?
        .into_iter()
        .map(|z| Complex::new(T::one() - z.re, -z.im))
        .collect())
}
