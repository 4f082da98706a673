use super::dense::{dot, DenseMatrix};
use crate::{Error, Real, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 60;

/// Thin SVD `a = u · diag(s) · vᵀ` with `s` sorted descending.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    pub u: DenseMatrix<T>,
    pub s: Vec<T>,
    pub v: DenseMatrix<T>,
}

impl<T: Real> Svd<T> {
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let mut us = self.u.clone();
        us.scale_cols(&self.s);
        let vt = self.v.transpose();
        us.matmul(&vt).expect("consistent SVD factors")
    }
}

/// One-sided (Hestenes) Jacobi SVD with cyclic sweeps.
pub fn svd_dense<T: Real>(a: &DenseMatrix<T>) -> Result<Svd<T>> {
    svd_with_max_sweeps(a, DEFAULT_MAX_SWEEPS)
}

pub fn svd_with_max_sweeps<T: Real>(a: &DenseMatrix<T>, max_sweeps: usize) -> Result<Svd<T>> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::shape("svd_dense", format!("empty {m}x{n} matrix")));
    }
    if !a.is_finite() {
        return Err(Error::invalid("svd_dense: non-finite input"));
    }
    if m < n {
        let t = tall_svd(&a.transpose(), max_sweeps)?;
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    tall_svd(a, max_sweeps)
}

fn tall_svd<T: Real>(a: &DenseMatrix<T>, max_sweeps: usize) -> Result<Svd<T>> {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DenseMatrix::<T>::identity(n);
    let tol = T::epsilon() * T::from_count(m).sqrt();

    let mut converged = n == 1;
    let mut worst = T::zero();
    for _ in 0..max_sweeps {
        worst = T::zero();
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = dot(w.col(p), w.col(p));
                let beta = dot(w.col(q), w.col(q));
                let gamma = dot(w.col(p), w.col(q));
                if gamma == T::zero() || alpha == T::zero() || beta == T::zero() {
                    continue;
                }
                let ratio = gamma.abs() / (alpha * beta).sqrt();
                worst = worst.max(ratio);
                if ratio <= tol {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_cols(&mut w, p, q, c, s);
                rotate_cols(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            routine: "svd_dense",
            iterations: max_sweeps,
            residual: worst.to_f64_lossy(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<T> = (0..n).map(|j| dot(w.col(j), w.col(j)).sqrt()).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap().then(x.cmp(&y)));

    let s: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let v = v.select_cols(&order);
    let mut u = DenseMatrix::zeros(m, n);
    let floor = s[0] * T::epsilon() * T::from_count(m);
    let mut deficient = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        if s[k] > floor && s[k] > T::zero() {
            let inv = T::one() / s[k];
            for (dst, &src) in u.col_mut(k).iter_mut().zip(w.col(j)) {
                *dst = src * inv;
            }
        } else {
            deficient.push(k);
        }
    }
    complete_orthonormal(&mut u, &deficient);
    Ok(Svd { u, s, v })
}

fn rotate_cols<T: Real>(m: &mut DenseMatrix<T>, p: usize, q: usize, c: T, s: T) {
    let (cp, cq) = m.two_cols_mut(p, q);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to every
/// other column, trying coordinate axes in order.
fn complete_orthonormal<T: Real>(u: &mut DenseMatrix<T>, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let m = u.rows();
    let mut filled: Vec<usize> = (0..u.cols()).filter(|k| !missing.contains(k)).collect();
    let mut axis = 0;
    for &k in missing {
        while axis < m {
            let mut cand = vec![T::zero(); m];
            cand[axis] = T::one();
            axis += 1;
            for _ in 0..2 {
                for &f in &filled {
                    let h = dot(u.col(f), &cand);
                    for (c, &x) in cand.iter_mut().zip(u.col(f)) {
                        *c -= h * x;
                    }
                }
            }
            let nrm = dot(&cand, &cand).sqrt();
            if nrm > T::lit(0.5) / T::from_count(m).sqrt() {
                for (dst, c) in u.col_mut(k).iter_mut().zip(cand) {
                    *dst = c / nrm;
                }
                filled.push(k);
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{frobenius_distance_sq, haar_orthogonal};
    use crate::SeededRng;

    #[test]
    fn diagonal_input() {
        let a = DenseMatrix::diag(&[3.0, 2.0, 1.0]);
        let svd = svd_dense(&a).unwrap();
        assert_eq!(svd.s, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn unsorted_diagonal_is_sorted() {
        let a = DenseMatrix::diag(&[1.0, 3.0, 2.0]);
        let svd = svd_dense(&a).unwrap();
        assert_eq!(svd.s, vec![3.0, 2.0, 1.0]);
        assert!(frobenius_distance_sq(&svd.reconstruct(), &a).unwrap() < 1e-28);
    }

    #[test]
    fn orthonormal_input_has_unit_singular_values() {
        let q: DenseMatrix<f64> = haar_orthogonal(12, 5);
        let svd = svd_dense(&q).unwrap();
        assert!(svd.s.iter().all(|s| (s - 1.0).abs() <= 1e-10));
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = SeededRng::new(9);
        for (m, n) in [(20, 7), (7, 20), (5, 5)] {
            let a = DenseMatrix::from_fn(m, n, |_, _| rng.normal());
            let svd = svd_dense(&a).unwrap();
            let err = frobenius_distance_sq(&a, &svd.reconstruct()).unwrap().sqrt();
            assert!(err <= 1e-9, "{m}x{n}: {err}");
            let k = m.min(n) as f64;
            assert!(svd.u.orthonormality_residual() <= 1e-10 * k.sqrt());
            assert!(svd.v.orthonormality_residual() <= 1e-10 * k.sqrt());
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
            assert!(svd.s.iter().all(|&s| s >= 0.0));
        }
    }

    #[test]
    fn rank_deficient_keeps_orthonormal_u() {
        let a = DenseMatrix::from_rows(&[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]).unwrap();
        let svd = svd_dense(&a).unwrap();
        assert!(svd.u.orthonormality_residual() <= 1e-12);
        assert!((svd.s[0] - 14f64.sqrt()).abs() < 1e-12);
        assert!(svd.s[1].abs() < 1e-12);
        assert!((svd.u[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let svd = svd_dense(&DenseMatrix::<f64>::zeros(3, 2)).unwrap();
        assert_eq!(svd.s, vec![0.0, 0.0]);
        assert!(svd.u.orthonormality_residual() <= 1e-12);
    }

    #[test]
    fn sweep_budget_exhaustion_reports_residual() {
        let mut rng = SeededRng::new(4);
        let a = DenseMatrix::from_fn(10, 10, |_, _| rng.normal());
        match svd_with_max_sweeps(&a, 1) {
            Err(Error::NotConverged { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
