//! Greedy construction and sweep refinement of a product of extended Givens
//! transformations approximating `U_p Sigma_p` by `Ubar Sigmabar_p`.
//!
//! For slot `k` the objective splits as `||L - G_k N||_F^2` with
//! `L = G_{k-1}^T ... G_1^T U_p Sigma_p` and `N = G_{k+1} ... G_g Sigmabar_p`,
//! so every slot is a 2x2 Procrustes problem on the best-scoring pair of
//! `Z = L N^T`.

mod product;
mod scores;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use product::{GivensProduct, SweepRecord};
pub use scores::{initialize_scores, ScoreTable};

use crate::givens2x2::{optimal_rotation, optimal_transform, Block2, ExtendedGivens};
use crate::matcore::{matmul, DenseMatrix, DiagonalWeights};
use crate::{Error, Real, Result};

/// How `Sigmabar_p` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaRule {
    /// All ones: the spectrum is flattened.
    Identity,
    /// The input weights `Sigma_p`.
    Original,
    /// Re-estimated after every sweep from the diagonal of the rotated target.
    Update,
}

impl SigmaRule {
    pub const ALL: [SigmaRule; 3] = [SigmaRule::Identity, SigmaRule::Original, SigmaRule::Update];

    pub fn code(self) -> u8 {
        match self {
            SigmaRule::Identity => 0,
            SigmaRule::Original => 1,
            SigmaRule::Update => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SigmaRule::Identity => "identity",
            SigmaRule::Original => "original",
            SigmaRule::Update => "update",
        }
    }
}

impl std::str::FromStr for SigmaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown sigma rule {s:?}")))
    }
}

/// Which matrix seeds the very first score table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreInit {
    /// `Z = U_p Sigma_p Sigmabar_p^T`, the product the first step actually
    /// optimizes.
    #[default]
    Weighted,
    /// `Z = U_p Sigmabar_p^T`. Only the initial table differs; every score
    /// refreshed afterwards and every transform comes from the weighted `Z`.
    Unweighted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizerConfig {
    /// Number of transforms.
    pub g: usize,
    pub sigma_rule: SigmaRule,
    /// Stop when two consecutive sweep objectives differ by less than this.
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub rotations_only: bool,
    /// Recorded for provenance; the algorithm itself is deterministic.
    pub seed: u64,
    pub score_init: ScoreInit,
    /// Keep the objective after every single step in the build log.
    pub record_steps: bool,
}

impl FactorizerConfig {
    pub fn new(g: usize) -> Self {
        Self {
            g,
            sigma_rule: SigmaRule::Identity,
            epsilon: 1e-2,
            max_sweeps: 100,
            rotations_only: false,
            seed: 0,
            score_init: ScoreInit::Weighted,
            record_steps: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.g == 0 {
            return Err(Error::invalid("g must be at least 1"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::invalid("max_sweeps must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildLog {
    pub config: FactorizerConfig,
    /// Entry 0 is the objective of the initial (identity) product.
    pub sweeps: Vec<SweepRecord>,
    /// Objective after every step and every weight update, when requested.
    pub step_objectives: Vec<f64>,
    /// The tolerance was met before `max_sweeps`.
    pub converged: bool,
}

impl BuildLog {
    pub fn final_objective(&self) -> f64 {
        self.sweeps.last().map_or(f64::NAN, |s| s.objective)
    }

    /// One JSON object per sweep, newline terminated.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.sweeps {
            out.push_str(&serde_json::to_string(s).expect("plain record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Working state of one sweep: `L`, `N` and `Z = L N^T` with the score table.
#[derive(Clone, Debug)]
pub struct GreedyState<T> {
    l: DenseMatrix<T>,
    n: DenseMatrix<T>,
    z: DenseMatrix<T>,
    table: ScoreTable<T>,
    rotations_only: bool,
    /// `||L||_F^2 + ||N||_F^2`, invariant under the orthogonal updates.
    norms: T,
}

impl<T: Real> GreedyState<T> {
    /// Starts a sweep: `L = target`, `N = Ubar Sigmabar_p` for the current
    /// transforms.
    pub fn new(
        target: &DenseMatrix<T>,
        transforms: &[ExtendedGivens<T>],
        weights: &DiagonalWeights<T>,
        rotations_only: bool,
    ) -> Result<Self> {
        let mut n = weights.to_dense();
        if n.shape() != target.shape() {
            return Err(Error::shape(
                "GreedyState",
                format!("target is {}x{}, weights {}x{}", target.rows(), target.cols(), n.rows(), n.cols()),
            ));
        }
        for t in transforms.iter().rev() {
            t.apply_left(&mut n, false)?;
        }
        let z = matmul(target, &n.transpose())?;
        let table = ScoreTable::from_z(&z, rotations_only)?;
        let norms = target.frobenius_norm_sq() + weights.norm_sq();
        Ok(Self {
            l: target.clone(),
            n,
            z,
            table,
            rotations_only,
            norms,
        })
    }

    /// Replaces the score table by one computed from another matrix.
    pub fn seed_scores(&mut self, z: &DenseMatrix<T>) -> Result<()> {
        self.table = ScoreTable::from_z(z, self.rotations_only)?;
        Ok(())
    }

    pub fn l(&self) -> &DenseMatrix<T> {
        &self.l
    }

    pub fn n(&self) -> &DenseMatrix<T> {
        &self.n
    }

    pub fn z(&self) -> &DenseMatrix<T> {
        &self.z
    }

    pub fn table(&self) -> &ScoreTable<T> {
        &self.table
    }

    /// `||L - N||_F^2` through the maintained trace of `Z`.
    pub fn objective(&self) -> T {
        self.norms - T::lit(2.0) * self.z.trace()
    }

    /// Re-optimizes slot `slot`: removes its current transform from `N`,
    /// picks the best-scoring pair and applies the optimal 2x2 transform to
    /// `L`. Returns the new objective.
    pub fn greedy_step(&mut self, transforms: &mut [ExtendedGivens<T>], slot: usize) -> Result<T> {
        let old = transforms[slot];
        if !old.is_identity() {
            old.apply_left(&mut self.n, true)?;
            old.apply_right(&mut self.z, false)?;
            self.table.refresh(&self.z, old.i, old.j);
        }

        let (i, j, best) = self.table.best();
        let g = if best > T::zero() {
            let block = Block2::from_matrix(&self.z, i, j);
            let opt = if self.rotations_only {
                optimal_rotation(&block, i, j)
            } else {
                optimal_transform(&block, i, j)
            };
            opt.transform
        } else {
            ExtendedGivens::identity(i, j)
        };

        if !g.is_identity() {
            g.apply_left(&mut self.l, true)?;
            g.apply_left(&mut self.z, true)?;
            self.table.refresh(&self.z, g.i, g.j);
        }
        transforms[slot] = g;
        Ok(self.objective())
    }
}

/// New `Sigmabar_p` after a sweep.
pub fn update_sigma<T: Real>(
    l_final: &DenseMatrix<T>,
    rule: SigmaRule,
    sigma_in: &DiagonalWeights<T>,
) -> DiagonalWeights<T> {
    match rule {
        SigmaRule::Identity => DiagonalWeights::ones(sigma_in.d(), sigma_in.p()),
        SigmaRule::Original => sigma_in.clone(),
        SigmaRule::Update => {
            let p = sigma_in.p().min(l_final.cols()).min(l_final.rows());
            let values = (0..p).map(|t| l_final[(t, t)]).collect();
            DiagonalWeights::new(l_final.rows(), values).expect("diagonal of a finite matrix")
        }
    }
}

/// Largest orthonormality residual `||U_p^T U_p - I||_F` accepted as input.
pub fn orthonormality_tolerance<T: Real>(p: usize) -> f64 {
    (100.0 * T::epsilon().to_f64_lossy() * (p as f64).sqrt()).max(1e-8)
}

/// Builds `config.g` transforms approximating `U_p Sigma_p`.
pub fn factorize<T: Real>(
    u_p: &DenseMatrix<T>,
    sigma: &DiagonalWeights<T>,
    config: &FactorizerConfig,
) -> Result<GivensProduct<T>> {
    config.validate()?;
    let (d, p) = u_p.shape();
    if d < 2 {
        return Err(Error::shape("factorize", format!("need d >= 2, got d = {d}")));
    }
    if p == 0 || p > d {
        return Err(Error::shape("factorize", format!("need 1 <= p <= d, got p = {p}, d = {d}")));
    }
    if sigma.d() != d || sigma.p() != p {
        return Err(Error::shape(
            "factorize",
            format!("weights are {}x{}, components {d}x{p}", sigma.d(), sigma.p()),
        ));
    }
    if let Some(v) = sigma.values().iter().find(|v| !(**v > T::zero())) {
        return Err(Error::invalid(format!("weights must be positive, found {v}")));
    }
    let residual = u_p.orthonormality_residual().to_f64_lossy();
    let tolerance = orthonormality_tolerance::<T>(p);
    if !(residual <= tolerance) {
        return Err(Error::NotOrthonormal { residual, tolerance });
    }

    let start = Instant::now();
    let mut target = u_p.clone();
    target.scale_cols(sigma.values());

    let mut weights = match config.sigma_rule {
        SigmaRule::Identity => DiagonalWeights::ones(d, p),
        SigmaRule::Original | SigmaRule::Update => sigma.clone(),
    };
    let mut transforms = vec![ExtendedGivens::identity(0, 1); config.g];

    let mut prev = objective_direct(&target, &weights).to_f64_lossy();
    let mut log = BuildLog {
        config: config.clone(),
        sweeps: vec![SweepRecord {
            sweep: 0,
            objective: prev,
            elapsed_ms: elapsed_ms(start),
        }],
        step_objectives: Vec::new(),
        converged: false,
    };

    for sweep in 1..=config.max_sweeps {
        let mut state = GreedyState::new(&target, &transforms, &weights, config.rotations_only)?;
        if sweep == 1 && config.score_init == ScoreInit::Unweighted {
            let unweighted = matmul(u_p, &weights.to_dense().transpose())?;
            state.seed_scores(&unweighted)?;
        }
        for slot in 0..config.g {
            let obj = state.greedy_step(&mut transforms, slot)?;
            if config.record_steps {
                log.step_objectives.push(obj.to_f64_lossy());
            }
        }
        weights = update_sigma(state.l(), config.sigma_rule, &weights);
        let eps_i = objective_direct(state.l(), &weights).to_f64_lossy();
        if config.record_steps {
            log.step_objectives.push(eps_i);
        }
        log.sweeps.push(SweepRecord {
            sweep,
            objective: eps_i,
            elapsed_ms: elapsed_ms(start),
        });
        if sweep > 1 && (prev - eps_i).abs() < config.epsilon {
            log.converged = true;
            break;
        }
        prev = eps_i;
    }

    Ok(GivensProduct::new(d, transforms, weights, config.sigma_rule)?.with_log(log))
}

/// `||L - Sigmabar_p||_F^2` with the weights padded to `d x p`.
fn objective_direct<T: Real>(l: &DenseMatrix<T>, weights: &DiagonalWeights<T>) -> T {
    let mut total = l.frobenius_norm_sq();
    for (t, &w) in weights.values().iter().enumerate() {
        let x = l[(t, t)];
        total += (x - w) * (x - w) - x * x;
    }
    total
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}
