//! Two-by-two kernel: scores, 2x2 singular values and the locally optimal
//! extended Givens transformation (rotation or reflector).

use serde::{Deserialize, Serialize};

use crate::matcore::DenseMatrix;
use crate::{Error, Real, Result};

/// Scalar operations for applying one transform to one column (or vector).
pub const FLOPS_PER_APPLY: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GivensKind {
    /// Block `[[c, -s], [s, c]]`.
    Rotation,
    /// Block `[[c, s], [s, -c]]`.
    Reflector,
}

/// Identity except for a 2x2 orthogonal block on rows/columns `i < j`.
/// Indices are 0-based in memory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedGivens<T> {
    pub i: usize,
    pub j: usize,
    pub c: T,
    pub s: T,
    pub kind: GivensKind,
}

impl<T: Real> ExtendedGivens<T> {
    /// Checked constructor: `i < j` and `c^2 + s^2 = 1` to within `1e-12`
    /// (scaled for single precision).
    pub fn new(i: usize, j: usize, c: T, s: T, kind: GivensKind) -> Result<Self> {
        if i >= j {
            return Err(Error::invalid(format!("transform pair ({i}, {j}) needs i < j")));
        }
        let tol = T::lit(1e-12).max(T::lit(16.0) * T::epsilon());
        if !c.is_finite() || !s.is_finite() || (c * c + s * s - T::one()).abs() > tol {
            return Err(Error::invalid(format!(
                "transform ({i}, {j}) has c^2 + s^2 = {}",
                c * c + s * s
            )));
        }
        Ok(Self { i, j, c, s, kind })
    }

    pub fn identity(i: usize, j: usize) -> Self {
        debug_assert!(i < j);
        Self {
            i,
            j,
            c: T::one(),
            s: T::zero(),
            kind: GivensKind::Rotation,
        }
    }

    pub fn from_angle(i: usize, j: usize, theta: T, kind: GivensKind) -> Self {
        debug_assert!(i < j);
        Self {
            i,
            j,
            c: theta.cos(),
            s: theta.sin(),
            kind,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.kind == GivensKind::Rotation && self.c == T::one() && self.s == T::zero()
    }

    /// The 2x2 block `[[g11, g12], [g21, g22]]`.
    pub fn block(&self) -> [[T; 2]; 2] {
        let (c, s) = (self.c, self.s);
        match self.kind {
            GivensKind::Rotation => [[c, -s], [s, c]],
            GivensKind::Reflector => [[c, s], [s, -c]],
        }
    }

    /// `(G x)` (or `(G^T x)`) restricted to the two affected coordinates.
    #[inline]
    pub fn mix(&self, xi: T, xj: T, transpose: bool) -> (T, T) {
        let (c, s) = (self.c, self.s);
        match (self.kind, transpose) {
            (GivensKind::Rotation, false) => (c * xi - s * xj, s * xi + c * xj),
            (GivensKind::Rotation, true) => (c * xi + s * xj, c * xj - s * xi),
            (GivensKind::Reflector, _) => (c * xi + s * xj, s * xi - c * xj),
        }
    }

    /// In-place `x <- G x` (or `G^T x`).
    #[inline]
    pub fn apply_vec(&self, x: &mut [T], transpose: bool) {
        let (a, b) = self.mix(x[self.i], x[self.j], transpose);
        x[self.i] = a;
        x[self.j] = b;
    }

    /// In-place `m <- G m` (or `G^T m`), touching rows `i` and `j` only.
    pub fn apply_left(&self, m: &mut DenseMatrix<T>, transpose: bool) -> Result<()> {
        self.check_range(m.rows(), "apply_left")?;
        let rows = m.rows();
        let (i, j) = (self.i, self.j);
        let data = m.as_mut_slice();
        for col in data.chunks_exact_mut(rows) {
            let (a, b) = self.mix(col[i], col[j], transpose);
            col[i] = a;
            col[j] = b;
        }
        Ok(())
    }

    /// In-place `m <- m G` (or `m G^T`), touching columns `i` and `j` only.
    pub fn apply_right(&self, m: &mut DenseMatrix<T>, transpose: bool) -> Result<()> {
        self.check_range(m.cols(), "apply_right")?;
        // Row r of (m G) is G^T applied to row r of m.
        let (ci, cj) = m.two_cols_mut(self.i, self.j);
        for (a, b) in ci.iter_mut().zip(cj.iter_mut()) {
            let (x, y) = self.mix(*a, *b, !transpose);
            *a = x;
            *b = y;
        }
        Ok(())
    }

    /// Explicit `d x d` matrix.
    pub fn to_dense(&self, d: usize) -> Result<DenseMatrix<T>> {
        self.check_range(d, "to_dense")?;
        let mut m = DenseMatrix::identity(d);
        let b = self.block();
        m[(self.i, self.i)] = b[0][0];
        m[(self.i, self.j)] = b[0][1];
        m[(self.j, self.i)] = b[1][0];
        m[(self.j, self.j)] = b[1][1];
        Ok(m)
    }

    fn check_range(&self, n: usize, op: &'static str) -> Result<()> {
        if self.j >= n || self.i >= self.j {
            return Err(Error::shape(
                op,
                format!("pair ({}, {}) invalid for dimension {n}", self.i, self.j),
            ));
        }
        Ok(())
    }
}

/// A 2x2 sub-block `[[z11, z12], [z21, z22]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Block2<T> {
    pub z11: T,
    pub z12: T,
    pub z21: T,
    pub z22: T,
}

impl<T: Real> Block2<T> {
    pub fn new(z11: T, z12: T, z21: T, z22: T) -> Self {
        Self { z11, z12, z21, z22 }
    }

    /// Rows and columns `{i, j}` of a square matrix.
    pub fn from_matrix(z: &DenseMatrix<T>, i: usize, j: usize) -> Self {
        Self::new(z[(i, i)], z[(i, j)], z[(j, i)], z[(j, j)])
    }

    pub fn det(&self) -> T {
        self.z11 * self.z22 - self.z12 * self.z21
    }

    pub fn trace(&self) -> T {
        self.z11 + self.z22
    }

    pub fn frobenius_sq(&self) -> T {
        self.z11 * self.z11 + self.z12 * self.z12 + self.z21 * self.z21 + self.z22 * self.z22
    }

    /// Radius of the rotation branch: `max_G tr(G^T Z)` over rotations.
    fn rotation_radius(&self) -> T {
        (self.z11 + self.z22).hypot(self.z21 - self.z12)
    }

    /// Radius of the reflector branch: `max_G tr(G^T Z)` over reflectors.
    fn reflector_radius(&self) -> T {
        (self.z11 - self.z22).hypot(self.z12 + self.z21)
    }
}

/// `C = ||Z||_* - tr(Z)`: the trace gain of the best extended Givens block.
pub fn score<T: Real>(b: &Block2<T>) -> T {
    let nuclear = if b.det() >= T::zero() {
        b.rotation_radius()
    } else {
        b.reflector_radius()
    };
    nuclear - b.trace()
}

/// Trace gain when only rotations are allowed.
pub fn score_rotation_only<T: Real>(b: &Block2<T>) -> T {
    b.rotation_radius() - b.trace()
}

/// Singular values `(s1, s2)`, `s1 >= s2 >= 0`.
///
/// `s1 + s2 = hypot(z11 + z22, z21 - z12)` and `s1 - s2 = hypot(z11 - z22,
/// z12 + z21)` (or the other way round when the determinant is negative), which
/// avoids the cancellation of the textbook formula.
pub fn svd2x2<T: Real>(b: &Block2<T>) -> (T, T) {
    let p = b.rotation_radius();
    let q = b.reflector_radius();
    let half = T::lit(0.5);
    let (sum, diff) = if p >= q { (p, q) } else { (q, p) };
    (half * (sum + diff), half * (sum - diff))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalTransform<T> {
    pub transform: ExtendedGivens<T>,
    /// The block was numerically zero; the identity is returned.
    pub degenerate: bool,
}

/// Orthogonal polar factor of the block as an extended Givens transform on
/// `(i, j)`; it maximizes `tr(G^T Z)` and so minimizes `||L - G N||_F^2` when
/// `Z = L N^T`.
pub fn optimal_transform<T: Real>(b: &Block2<T>, i: usize, j: usize) -> OptimalTransform<T> {
    if b.det() >= T::zero() {
        optimal_rotation(b, i, j)
    } else {
        let r = b.reflector_radius();
        if r < T::tiny() {
            return degenerate(i, j);
        }
        OptimalTransform {
            transform: ExtendedGivens {
                i,
                j,
                c: (b.z11 - b.z22) / r,
                s: (b.z12 + b.z21) / r,
                kind: GivensKind::Reflector,
            },
            degenerate: false,
        }
    }
}

/// Best plane rotation on `(i, j)`, whatever the sign of the determinant.
pub fn optimal_rotation<T: Real>(b: &Block2<T>, i: usize, j: usize) -> OptimalTransform<T> {
    let r = b.rotation_radius();
    if r < T::tiny() {
        return degenerate(i, j);
    }
    OptimalTransform {
        transform: ExtendedGivens {
            i,
            j,
            c: (b.z11 + b.z22) / r,
            s: (b.z21 - b.z12) / r,
            kind: GivensKind::Rotation,
        },
        degenerate: false,
    }
}

fn degenerate<T: Real>(i: usize, j: usize) -> OptimalTransform<T> {
    OptimalTransform {
        transform: ExtendedGivens::identity(i, j),
        degenerate: true,
    }
}

/// `tr(G^T Z)` for a 2x2 block of `G`.
pub fn block_trace<T: Real>(g: &ExtendedGivens<T>, b: &Block2<T>) -> T {
    let m = g.block();
    m[0][0] * b.z11 + m[1][0] * b.z21 + m[0][1] * b.z12 + m[1][1] * b.z22
}
