use super::dense::{dot, DenseMatrix};
use crate::{Real, SeededRng};

/// Matrix of independent standard normal entries, filled column by column.
pub fn gaussian_matrix<T: Real>(rows: usize, cols: usize, rng: &mut SeededRng) -> DenseMatrix<T> {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal_as())
}

/// Haar-distributed `d x d` orthogonal matrix whose diagonal is made
/// non-negative by flipping column signs.
///
/// The Q factor comes from Gram–Schmidt with re-orthogonalisation on a
/// Gaussian matrix; that construction yields a positive R diagonal, which is
/// exactly the sign normalisation Haar sampling requires. A column whose
/// residual vanishes is redrawn.
pub fn haar_orthogonal<T: Real>(d: usize, seed: u64) -> DenseMatrix<T> {
    assert!(d >= 1, "haar_orthogonal needs d >= 1");
    let mut rng = SeededRng::new(seed);
    let mut q = DenseMatrix::<T>::zeros(d, d);
    let breakdown = T::epsilon() * T::from_count(d);
    for k in 0..d {
        loop {
            let mut v: Vec<T> = (0..d).map(|_| rng.normal_as()).collect();
            let start = dot(&v, &v).sqrt();
            for _ in 0..2 {
                for j in 0..k {
                    let qj = q.col(j);
                    let h = dot(qj, &v);
                    for (x, &y) in v.iter_mut().zip(qj) {
                        *x -= h * y;
                    }
                }
            }
            let r_kk = dot(&v, &v).sqrt();
            if r_kk > breakdown * start {
                for (dst, x) in q.col_mut(k).iter_mut().zip(v) {
                    *dst = x / r_kk;
                }
                break;
            }
        }
    }
    for t in 0..d {
        if q[(t, t)] < T::zero() {
            q.col_mut(t).iter_mut().for_each(|x| *x = -*x);
        }
    }
    q
}
