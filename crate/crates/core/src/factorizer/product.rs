use serde::{Deserialize, Serialize};

use super::{BuildLog, SigmaRule};
use crate::givens2x2::{ExtendedGivens, GivensKind};
use crate::matcore::{DenseMatrix, DiagonalWeights};
use crate::{Error, Real, Result, SeededRng};

/// The factored operator `Ubar Sigmabar_p` with `Ubar = G_1 G_2 ... G_g`.
///
/// `transforms[0]` is `G_1`: it is applied last when `Ubar` multiplies a
/// vector and first when `Ubar^T` does.
#[derive(Clone, Debug, PartialEq)]
pub struct GivensProduct<T> {
    d: usize,
    transforms: Vec<ExtendedGivens<T>>,
    weights: DiagonalWeights<T>,
    sigma_rule: SigmaRule,
    log: Option<BuildLog>,
}

impl<T: Real> GivensProduct<T> {
    pub fn new(
        d: usize,
        transforms: Vec<ExtendedGivens<T>>,
        weights: DiagonalWeights<T>,
        sigma_rule: SigmaRule,
    ) -> Result<Self> {
        if weights.d() != d {
            return Err(Error::shape(
                "GivensProduct",
                format!("weights are for d = {}, product has d = {d}", weights.d()),
            ));
        }
        for (k, t) in transforms.iter().enumerate() {
            if t.j >= d {
                return Err(Error::shape(
                    "GivensProduct",
                    format!("transform {} uses index {} >= d = {d}", k + 1, t.j + 1),
                ));
            }
            ExtendedGivens::new(t.i, t.j, t.c, t.s, t.kind)
                .map_err(|e| Error::invalid(format!("transform {}: {e}", k + 1)))?;
        }
        Ok(Self {
            d,
            transforms,
            weights,
            sigma_rule,
            log: None,
        })
    }

    /// Empty product, `Ubar = I`.
    pub fn identity(weights: DiagonalWeights<T>, sigma_rule: SigmaRule) -> Self {
        Self {
            d: weights.d(),
            transforms: Vec::new(),
            weights,
            sigma_rule,
            log: None,
        }
    }

    /// `g` transforms with uniform angles, random pairs and random kinds.
    pub fn random(weights: DiagonalWeights<T>, g: usize, rng: &mut SeededRng) -> Self {
        let d = weights.d();
        assert!(d >= 2, "random product needs d >= 2");
        let transforms = (0..g)
            .map(|_| {
                let a = rng.below(d);
                let mut b = rng.below(d - 1);
                if b >= a {
                    b += 1;
                }
                let kind = if rng.below(2) == 0 {
                    GivensKind::Rotation
                } else {
                    GivensKind::Reflector
                };
                let theta = T::lit(std::f64::consts::TAU * rng.uniform());
                ExtendedGivens::from_angle(a.min(b), a.max(b), theta, kind)
            })
            .collect();
        Self {
            d,
            transforms,
            weights,
            sigma_rule: SigmaRule::Original,
            log: None,
        }
    }

    pub fn with_log(mut self, log: BuildLog) -> Self {
        self.log = Some(log);
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.weights.p()
    }

    pub fn g(&self) -> usize {
        self.transforms.len()
    }

    pub fn transforms(&self) -> &[ExtendedGivens<T>] {
        &self.transforms
    }

    pub fn weights(&self) -> &DiagonalWeights<T> {
        &self.weights
    }

    pub fn sigma_rule(&self) -> SigmaRule {
        self.sigma_rule
    }

    pub fn log(&self) -> Option<&BuildLog> {
        self.log.as_ref()
    }

    /// In-place `x <- Ubar x` (`G_g` first).
    pub fn apply_ubar(&self, x: &mut [T]) {
        assert_eq!(x.len(), self.d, "vector length");
        for t in self.transforms.iter().rev() {
            t.apply_vec(x, false);
        }
    }

    /// In-place `x <- Ubar^T x` (`G_1^T` first).
    pub fn apply_ubar_t(&self, x: &mut [T]) {
        assert_eq!(x.len(), self.d, "vector length");
        for t in &self.transforms {
            t.apply_vec(x, true);
        }
    }

    /// In-place `m <- Ubar m`.
    pub fn apply_ubar_left(&self, m: &mut DenseMatrix<T>) -> Result<()> {
        for t in self.transforms.iter().rev() {
            t.apply_left(m, false)?;
        }
        Ok(())
    }

    /// Explicit `d x d` matrix `Ubar`.
    pub fn ubar_dense(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::identity(self.d);
        self.apply_ubar_left(&mut m).expect("indices validated at construction");
        m
    }

    /// Explicit `d x p` matrix `Ubar Sigmabar_p`.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut m = self.weights.to_dense();
        self.apply_ubar_left(&mut m).expect("indices validated at construction");
        m
    }
}

/// Per-sweep entry of the build log (one JSON line each).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub objective: f64,
    pub elapsed_ms: f64,
}
