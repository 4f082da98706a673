//! Applying a [`GivensProduct`] in `O(g)` operations per vector: liveness
//! pruning for `p < d`, stage partitioning and operation counts.

mod egt;

pub use egt::{
    from_json, load_egt, read_egt, save_egt, to_json, write_egt, EgtJson, EgtTransform,
    EGT_MAGIC, EGT_VERSION,
};

use crate::factorizer::GivensProduct;
use crate::givens2x2::{ExtendedGivens, GivensKind, FLOPS_PER_APPLY};
use crate::matcore::DenseMatrix;
use crate::{Error, Real, Result};

/// What the projection does with one transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrunedOp {
    /// Both outputs are needed: 6 operations.
    Full,
    /// Only output `i` is needed: 3 operations.
    HalfRowI,
    /// Only output `j` is needed: 3 operations.
    HalfRowJ,
    /// Neither output is needed.
    Skip,
}

impl PrunedOp {
    pub fn flops(self) -> usize {
        match self {
            PrunedOp::Full => FLOPS_PER_APPLY,
            PrunedOp::HalfRowI | PrunedOp::HalfRowJ => FLOPS_PER_APPLY / 2,
            PrunedOp::Skip => 0,
        }
    }
}

/// Pruned schedule for `y = Sigmabar_p^T Ubar^T x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ApplyPlan {
    d: usize,
    p: usize,
    /// Indexed like the product's transforms.
    ops: Vec<PrunedOp>,
    /// Transform indices grouped into stages, in projection order
    /// (`transforms[0]` first).
    stages: Vec<Vec<usize>>,
    flops_per_vector: usize,
    /// Input coordinates the projection reads.
    live_mask: Vec<bool>,
}

impl ApplyPlan {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn ops(&self) -> &[PrunedOp] {
        &self.ops
    }

    pub fn stages(&self) -> &[Vec<usize>] {
        &self.stages
    }

    pub fn flops_per_vector(&self) -> usize {
        self.flops_per_vector
    }

    pub fn live_mask(&self) -> &[bool] {
        &self.live_mask
    }

    /// Fraction of the `d` input coordinates that the projection depends on.
    pub fn selection_fraction(&self) -> f64 {
        self.live_mask.iter().filter(|&&b| b).count() as f64 / self.d as f64
    }

    /// Operations of the dense projection, `2 p d`.
    pub fn dense_flops(&self) -> usize {
        2 * self.p * self.d
    }

    pub fn flops_speedup(&self) -> f64 {
        self.dense_flops() as f64 / self.flops_per_vector as f64
    }

    pub fn count(&self, op: PrunedOp) -> usize {
        self.ops.iter().filter(|&&o| o == op).count()
    }
}

/// Backward liveness over the projection and the stage partition.
///
/// Exact identity transforms are skipped without making anything live.
pub fn plan<T: Real>(product: &GivensProduct<T>) -> ApplyPlan {
    let (d, p) = (product.d(), product.p());
    let transforms = product.transforms();
    let mut live = vec![false; d];
    live[..p].iter_mut().for_each(|b| *b = true);
    let mut ops = vec![PrunedOp::Skip; transforms.len()];
    for (k, t) in transforms.iter().enumerate().rev() {
        if t.is_identity() {
            continue;
        }
        ops[k] = match (live[t.i], live[t.j]) {
            (false, false) => PrunedOp::Skip,
            (true, true) => PrunedOp::Full,
            (true, false) => PrunedOp::HalfRowI,
            (false, true) => PrunedOp::HalfRowJ,
        };
        if ops[k] != PrunedOp::Skip {
            live[t.i] = true;
            live[t.j] = true;
        }
    }
    let flops_per_vector = ops.iter().map(|o| o.flops()).sum::<usize>() + p;
    ApplyPlan {
        d,
        p,
        ops,
        stages: stage_partition(d, transforms),
        flops_per_vector,
        live_mask: live,
    }
}

/// Greedy order-preserving split into runs of index-disjoint transforms.
pub fn stage_partition<T>(d: usize, transforms: &[ExtendedGivens<T>]) -> Vec<Vec<usize>> {
    let mut stages: Vec<Vec<usize>> = Vec::new();
    // stamp[x] = 1 + number of the stage that last touched coordinate x
    let mut stamp = vec![0usize; d];
    for (k, t) in transforms.iter().enumerate() {
        let current = stages.len();
        if current == 0 || stamp[t.i] == current || stamp[t.j] == current {
            stages.push(Vec::new());
        }
        let current = stages.len();
        stamp[t.i] = current;
        stamp[t.j] = current;
        stages.last_mut().expect("stage opened above").push(k);
    }
    stages
}

pub fn count_stages<T: Real>(product: &GivensProduct<T>) -> usize {
    stage_partition(product.d(), product.transforms()).len()
}

/// `y = Sigmabar_p^T Ubar^T x` using only the planned operations.
pub fn project<T: Real>(plan: &ApplyPlan, product: &GivensProduct<T>, x: &[T]) -> Result<Vec<T>> {
    let mut work = vec![T::zero(); plan.d];
    let mut y = vec![T::zero(); plan.p];
    project_into(plan, product, x, &mut work, &mut y)?;
    Ok(y)
}

/// Allocation-free [`project`]; `work` has length `d`, `y` length `p`.
pub fn project_into<T: Real>(
    plan: &ApplyPlan,
    product: &GivensProduct<T>,
    x: &[T],
    work: &mut [T],
    y: &mut [T],
) -> Result<()> {
    check_plan(plan, product)?;
    if x.len() != plan.d || work.len() != plan.d || y.len() != plan.p {
        return Err(Error::shape(
            "project",
            format!(
                "x, work, y have lengths {}, {}, {}; expected {}, {}, {}",
                x.len(),
                work.len(),
                y.len(),
                plan.d,
                plan.d,
                plan.p
            ),
        ));
    }
    work.copy_from_slice(x);
    for (t, &op) in product.transforms().iter().zip(&plan.ops) {
        apply_pruned(t, op, work);
    }
    for ((out, &w), &s) in y.iter_mut().zip(work.iter()).zip(product.weights().values()) {
        *out = s * w;
    }
    Ok(())
}

/// Projects every column of a `d x n` matrix into a `p x n` matrix.
pub fn project_batch<T: Real>(
    plan: &ApplyPlan,
    product: &GivensProduct<T>,
    x: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if x.rows() != plan.d {
        return Err(Error::shape(
            "project_batch",
            format!("input has {} rows, plan expects {}", x.rows(), plan.d),
        ));
    }
    let mut out = DenseMatrix::zeros(plan.p, x.cols());
    let mut work = vec![T::zero(); plan.d];
    for c in 0..x.cols() {
        project_into(plan, product, x.col(c), &mut work, out.col_mut(c))?;
    }
    Ok(out)
}

/// `Ubar Sigmabar_p y`.
pub fn reconstruct<T: Real>(product: &GivensProduct<T>, y: &[T]) -> Result<Vec<T>> {
    if y.len() != product.p() {
        return Err(Error::shape(
            "reconstruct",
            format!("y has length {}, expected {}", y.len(), product.p()),
        ));
    }
    let mut x = vec![T::zero(); product.d()];
    for ((xt, &yt), &s) in x.iter_mut().zip(y).zip(product.weights().values()) {
        *xt = s * yt;
    }
    product.apply_ubar(&mut x);
    Ok(x)
}

#[inline]
fn apply_pruned<T: Real>(t: &ExtendedGivens<T>, op: PrunedOp, x: &mut [T]) {
    let (xi, xj) = (x[t.i], x[t.j]);
    let (c, s) = (t.c, t.s);
    match op {
        PrunedOp::Skip => {}
        PrunedOp::Full => {
            let (a, b) = t.mix(xi, xj, true);
            x[t.i] = a;
            x[t.j] = b;
        }
        PrunedOp::HalfRowI => x[t.i] = c * xi + s * xj,
        PrunedOp::HalfRowJ => {
            x[t.j] = match t.kind {
                GivensKind::Rotation => c * xj - s * xi,
                GivensKind::Reflector => s * xi - c * xj,
            }
        }
    }
}

fn check_plan<T: Real>(plan: &ApplyPlan, product: &GivensProduct<T>) -> Result<()> {
    if plan.d != product.d() || plan.p != product.p() || plan.ops.len() != product.g() {
        return Err(Error::shape(
            "project",
            format!(
                "plan is for (d, p, g) = ({}, {}, {}), product has ({}, {}, {})",
                plan.d,
                plan.p,
                plan.ops.len(),
                product.d(),
                product.p(),
                product.g()
            ),
        ));
    }
    Ok(())
}
