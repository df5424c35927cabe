//! Per-arm ridge regression with an optional LinUCB confidence width.
//!
//! ```text
//!   A_a = λI + Σ e eᵀ        b_a = Σ r e
//!   θ_a = A_a⁻¹ b_a
//!   score_a(e) = θ_a·e + α·sqrt(eᵀ A_a⁻¹ e)
//! ```
//!
//! Solves go through a Cholesky factor of A_a that is kept current with
//! rank-one updates; no inverse is ever formed.

use super::{check_action, check_dim, check_reward, Policy, PolicyError, PolicySnapshot};
use crate::rng::RngStream;
use crate::types::{ActionId, Context, EmbeddingVector};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub(crate) const NAME: &str = "linucb";

pub(crate) fn default_alpha() -> f64 {
    0.5
}

pub(crate) fn default_ridge() -> f64 {
    1.0
}

pub(crate) fn check_hyperparameters(alpha: f64, ridge: f64) -> Result<(), PolicyError> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(PolicyError::InvalidHyperparameter(format!(
            "alpha must be nonnegative, got {alpha}"
        )));
    }
    if !(ridge.is_finite() && ridge > 0.0) {
        return Err(PolicyError::InvalidHyperparameter(format!(
            "ridge must be positive, got {ridge}"
        )));
    }
    Ok(())
}

#[derive(Clone)]
struct Arm {
    design: DMatrix<f64>,
    targets: DVector<f64>,
    factor: Cholesky<f64, Dyn>,
}

impl Arm {
    fn new(design: DMatrix<f64>, targets: DVector<f64>, index: usize) -> Result<Self, PolicyError> {
        let factor =
            Cholesky::new(design.clone()).ok_or(PolicyError::NotPositiveDefinite(index))?;
        Ok(Self {
            design,
            targets,
            factor,
        })
    }
}

#[derive(Clone)]
pub struct LinUcb {
    dim: usize,
    alpha: f64,
    ridge: f64,
    arms: Vec<Arm>,
}

impl std::fmt::Debug for LinUcb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinUcb")
            .field("dim", &self.dim)
            .field("alpha", &self.alpha)
            .field("ridge", &self.ridge)
            .field("arms", &self.arms.len())
            .finish()
    }
}

impl LinUcb {
    pub fn new(
        num_actions: usize,
        dim: usize,
        alpha: f64,
        ridge: f64,
    ) -> Result<Self, PolicyError> {
        check_hyperparameters(alpha, ridge)?;
        if num_actions < 2 || dim == 0 {
            return Err(PolicyError::InvalidHyperparameter(format!(
                "need at least 2 actions and dimension >= 1, got {num_actions} x {dim}"
            )));
        }
        let arms = (0..num_actions)
            .map(|i| Arm::new(DMatrix::identity(dim, dim) * ridge, DVector::zeros(dim), i))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            dim,
            alpha,
            ridge,
            arms,
        })
    }

    pub fn from_parts(
        alpha: f64,
        ridge: f64,
        design: &[Vec<Vec<f64>>],
        targets: &[Vec<f64>],
    ) -> Result<Self, PolicyError> {
        check_hyperparameters(alpha, ridge)?;
        let dim = targets.first().map_or(0, Vec::len);
        if design.len() != targets.len() || design.len() < 2 || dim == 0 {
            return Err(PolicyError::InvalidSnapshot(
                "design and targets need one entry per action (at least 2)".into(),
            ));
        }
        let mut arms = Vec::with_capacity(design.len());
        for (i, (a, b)) in design.iter().zip(targets).enumerate() {
            if b.len() != dim || a.len() != dim || a.iter().any(|row| row.len() != dim) {
                return Err(PolicyError::InvalidSnapshot(format!(
                    "action {i}: expected {dim}x{dim} design and length-{dim} targets"
                )));
            }
            let matrix = DMatrix::from_fn(dim, dim, |r, c| a[r][c]);
            if matrix != matrix.transpose() {
                return Err(PolicyError::InvalidSnapshot(format!(
                    "action {i}: design matrix is not symmetric"
                )));
            }
            arms.push(Arm::new(matrix, DVector::from_column_slice(b), i)?);
        }
        Ok(Self {
            dim,
            alpha,
            ridge,
            arms,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn design(&self, action: ActionId) -> &DMatrix<f64> {
        &self.arms[action.0].design
    }

    pub fn targets(&self, action: ActionId) -> &DVector<f64> {
        &self.arms[action.0].targets
    }

    /// Ridge estimate θ_a = A_a⁻¹ b_a.
    pub fn theta(&self, action: ActionId) -> DVector<f64> {
        let arm = &self.arms[action.0];
        arm.factor.solve(&arm.targets)
    }

    pub fn scores(&self, e: &EmbeddingVector) -> Result<Vec<f64>, PolicyError> {
        check_dim(self.dim, e)?;
        let x = DVector::from_column_slice(e);
        Ok(self
            .arms
            .iter()
            .map(|arm| {
                let theta = arm.factor.solve(&arm.targets);
                let width = x.dot(&arm.factor.solve(&x)).max(0.0).sqrt();
                theta.dot(&x) + self.alpha * width
            })
            .collect())
    }

    pub fn linucb_select(&self, e: &EmbeddingVector) -> Result<ActionId, PolicyError> {
        Ok(ActionId(super::argmax(&self.scores(e)?)))
    }

    /// A_a += e eᵀ and b_a += r e for the chosen arm only.
    pub fn linucb_update(
        &mut self,
        e: &EmbeddingVector,
        action: ActionId,
        reward: f64,
    ) -> Result<(), PolicyError> {
        check_dim(self.dim, e)?;
        check_action(action, self.arms.len())?;
        check_reward(reward)?;
        let arm = &mut self.arms[action.0];
        // e_i·e_j and e_j·e_i round identically, so A stays exactly symmetric.
        for c in 0..self.dim {
            for r in 0..self.dim {
                arm.design[(r, c)] += e[r] * e[c];
            }
        }
        for (t, x) in arm.targets.iter_mut().zip(e.iter()) {
            *t += reward * x;
        }
        arm.factor
            .rank_one_update(&DVector::from_column_slice(e), 1.0);
        Ok(())
    }
}

impl Policy for LinUcb {
    fn name(&self) -> &str {
        NAME
    }

    fn num_actions(&self) -> usize {
        self.arms.len()
    }

    fn select(
        &self,
        _context: &Context,
        embedding: &EmbeddingVector,
        _rng: &mut RngStream,
    ) -> Result<ActionId, PolicyError> {
        self.linucb_select(embedding)
    }

    fn update(
        &mut self,
        _context: &Context,
        embedding: &EmbeddingVector,
        action: ActionId,
        reward: f64,
    ) -> Result<(), PolicyError> {
        self.linucb_update(embedding, action, reward)
    }

    fn snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::LinUcb {
            alpha: self.alpha,
            ridge: self.ridge,
            design: self
                .arms
                .iter()
                .map(|arm| {
                    arm.design
                        .row_iter()
                        .map(|row| row.iter().copied().collect())
                        .collect()
                })
                .collect(),
            targets: self
                .arms
                .iter()
                .map(|arm| arm.targets.iter().copied().collect())
                .collect(),
        }
    }
}
