use crate::givens2x2::{score, score_rotation_only, Block2};
use crate::matcore::{matmul, DenseMatrix};
use crate::{Error, Real, Result};

/// All pair scores `C_ij` (`i < j`) of a square `Z`, packed row by row, with
/// the maximum of every row so that the global argmax costs `O(d)`.
#[derive(Clone, Debug)]
pub struct ScoreTable<T> {
    d: usize,
    rotations_only: bool,
    scores: Vec<T>,
    /// `(max, argmax column)` of row `i` over columns `j > i`; the last row is
    /// empty and holds `(-inf, d)`.
    row_max: Vec<(T, usize)>,
}

impl<T: Real> ScoreTable<T> {
    /// Scores every pair of `z` from scratch.
    pub fn from_z(z: &DenseMatrix<T>, rotations_only: bool) -> Result<Self> {
        if !z.is_square() {
            return Err(Error::shape("ScoreTable", format!("Z is {}x{}", z.rows(), z.cols())));
        }
        let d = z.rows();
        let mut table = Self {
            d,
            rotations_only,
            scores: vec![T::zero(); d * d.saturating_sub(1) / 2],
            row_max: vec![(T::neg_infinity(), d); d],
        };
        for i in 0..d {
            for j in i + 1..d {
                let k = table.idx(i, j);
                table.scores[k] = table.pair_score(z, i, j);
            }
            table.rescan_row(i);
        }
        Ok(table)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn rotations_only(&self) -> bool {
        self.rotations_only
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.d);
        i * (2 * self.d - i - 1) / 2 + (j - i - 1)
    }

    /// Score of the pair `{i, j}` (either order).
    pub fn get(&self, i: usize, j: usize) -> T {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.scores[self.idx(a, b)]
    }

    pub fn row_max(&self, i: usize) -> (T, usize) {
        self.row_max[i]
    }

    /// Pair with the largest score; ties go to the lexicographically smallest
    /// `(i, j)`.
    pub fn best(&self) -> (usize, usize, T) {
        let mut best = (0, 1, T::neg_infinity());
        for (i, &(v, j)) in self.row_max.iter().enumerate() {
            if j < self.d && v > best.2 {
                best = (i, j, v);
            }
        }
        best
    }

    /// Recomputes the `2d - 3` scores that involve `a` or `b`.
    pub fn refresh(&mut self, z: &DenseMatrix<T>, a: usize, b: usize) {
        debug_assert!(a != b);
        for x in 0..self.d {
            if x != a {
                self.set_pair(z, x, a);
            }
            if x != b && x != a {
                self.set_pair(z, x, b);
            }
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.rescan_row(a);
        self.rescan_row(b);
        for x in 0..hi {
            if x == a || x == b {
                continue;
            }
            let (_, arg) = self.row_max[x];
            if arg == a || arg == b {
                self.rescan_row(x);
                continue;
            }
            for &y in &[lo, hi] {
                if y > x {
                    let v = self.scores[self.idx(x, y)];
                    let (m, col) = self.row_max[x];
                    if v > m || (v == m && y < col) {
                        self.row_max[x] = (v, y);
                    }
                }
            }
        }
    }

    /// Largest entry-wise difference to another table of the same size.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.scores
            .iter()
            .zip(&other.scores)
            .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
    }

    fn pair_score(&self, z: &DenseMatrix<T>, i: usize, j: usize) -> T {
        let block = Block2::from_matrix(z, i, j);
        if self.rotations_only {
            score_rotation_only(&block)
        } else {
            score(&block)
        }
    }

    fn set_pair(&mut self, z: &DenseMatrix<T>, x: usize, y: usize) {
        let (i, j) = if x < y { (x, y) } else { (y, x) };
        let k = self.idx(i, j);
        self.scores[k] = self.pair_score(z, i, j);
    }

    fn rescan_row(&mut self, i: usize) {
        let mut best = (T::neg_infinity(), self.d);
        if i + 1 < self.d {
            let start = self.idx(i, i + 1);
            for (off, &v) in self.scores[start..start + self.d - i - 1].iter().enumerate() {
                if v > best.0 || best.1 == self.d {
                    best = (v, i + 1 + off);
                }
            }
        }
        self.row_max[i] = best;
    }
}

/// Score table of `Z = L N^T` for two `d x p` matrices.
pub fn initialize_scores<T: Real>(
    l: &DenseMatrix<T>,
    n: &DenseMatrix<T>,
    rotations_only: bool,
) -> Result<ScoreTable<T>> {
    if l.shape() != n.shape() {
        return Err(Error::shape(
            "initialize_scores",
            format!("L is {}x{}, N is {}x{}", l.rows(), l.cols(), n.rows(), n.cols()),
        ));
    }
    ScoreTable::from_z(&matmul(l, &n.transpose())?, rotations_only)
}
