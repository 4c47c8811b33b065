//! Distributionally robust, fairness-aware PCA.
//!
//! The crate estimates per-group moments, turns a penalty `λ` and per-group
//! Wasserstein-type radii `ε_a` into a closed-form worst-case objective, and
//! minimizes it over the Stiefel manifold with Riemannian subgradient
//! descent. It is `no_std` and only needs `alloc`; file formats and the CLI
//! live in the `rfpca` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod ambiguity;
pub mod data;
pub mod error;
pub mod linalg;
pub mod manifold;
pub mod metrics;
pub mod nonbinary;
pub mod objective;
pub mod optimizer;

pub use ambiguity::{check_conditions, reform_params, ConditionReport, ReformParams, RobustConfig};
pub use data::{Dataset, GroupMoments};
pub use error::{Error, Result};
pub use manifold::{Retraction, StiefelPoint, TangentVector};
pub use metrics::{evaluate, nominal_pca, FairnessReport, Projection, Provenance};
pub use nonbinary::{pair_params, PairParams};
pub use objective::{eval_f, Objective, ObjectiveEval};
pub use optimizer::{solve, SolveReport, SolverOptions};

/// Binary or multi-group objective, chosen by the number of groups.
#[derive(Debug, Clone, PartialEq)]
pub enum RobustProblem {
    Binary(ReformParams),
    Multi(PairParams),
}

impl RobustProblem {
    pub fn build(gm: &GroupMoments, cfg: &RobustConfig) -> Result<Self> {
        if gm.groups() == 2 {
            reform_params(gm, cfg).map(Self::Binary)
        } else {
            pair_params(gm, cfg).map(Self::Multi)
        }
    }

    pub fn conditions(&self) -> &ConditionReport {
        match self {
            Self::Binary(rp) => &rp.conditions,
            Self::Multi(pp) => &pp.conditions,
        }
    }

    fn inner(&self) -> &dyn Objective {
        match self {
            Self::Binary(rp) => rp,
            Self::Multi(pp) => pp,
        }
    }
}

impl Objective for RobustProblem {
    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn complement_rank(&self) -> usize {
        self.inner().complement_rank()
    }

    fn ensure_solvable(&self) -> Result<()> {
        self.inner().ensure_solvable()
    }

    fn value_and_subgradient(&self, u: &StiefelPoint) -> Result<(f64, usize, TangentVector)> {
        self.inner().value_and_subgradient(u)
    }

    fn value(&self, u: &StiefelPoint) -> Result<f64> {
        self.inner().value(u)
    }
}
