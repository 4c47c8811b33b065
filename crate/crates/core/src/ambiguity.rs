//! Moment-based ambiguity sets.
//!
//! Each group's conditional distribution may move within a ball of radius
//! `ε_a` around its empirical moments, measured by the Gelbrich-type
//! divergence [`w_divergence`]. The worst case of a scaled expected
//! reconstruction loss over such a ball has a closed form
//! ([`worst_case_value`]), and combining the two groups yields the
//! parameters of the robust fair objective ([`ReformParams`]).

use alloc::vec::Vec;

use crate::data::{check_psd, GroupMoments};
use crate::error::{Error, Result};
use crate::linalg::{frob_inner, is_symmetric, psd_sqrt, Matrix, SortedEigen, Vector};

/// Penalty, per-group radii and target dimension.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RobustConfig {
    pub lambda: f64,
    pub radii: Vec<f64>,
    pub k: usize,
}

impl RobustConfig {
    pub fn new(lambda: f64, radii: Vec<f64>, k: usize) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig("lambda must be finite and nonnegative"));
        }
        if let Some(&bad) = radii.iter().find(|&&e| !(e >= 0.0 && e.is_finite())) {
            return Err(Error::NegativeRadius(bad));
        }
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1"));
        }
        Ok(Self { lambda, radii, k })
    }

    /// Radii `ε_a = α / √N_a`.
    pub fn with_alpha(lambda: f64, alpha: f64, counts: &[usize], k: usize) -> Result<Self> {
        Self::new(lambda, radii_from_alpha(alpha, counts), k)
    }

    pub(crate) fn validate_against(&self, gm: &GroupMoments) -> Result<()> {
        if self.radii.len() != gm.groups() {
            return Err(Error::DimensionMismatch {
                what: "radii",
                expected: gm.groups(),
                found: self.radii.len(),
            });
        }
        if self.k >= gm.dim() {
            return Err(Error::InvalidConfig("k must be smaller than the data dimension"));
        }
        Ok(())
    }
}

pub fn radii_from_alpha(alpha: f64, counts: &[usize]) -> Vec<f64> {
    counts
        .iter()
        .map(|&n| alpha / libm::sqrt(n as f64))
        .collect()
}

/// `‖μ1 − μ2‖² + Tr[Σ1 + Σ2 − 2(Σ2^{1/2} Σ1 Σ2^{1/2})^{1/2}]`.
pub fn w_divergence(mu1: &Vector, cov1: &Matrix, mu2: &Vector, cov2: &Matrix) -> Result<f64> {
    let d = mu1.len();
    for (what, found) in [
        ("second mean", mu2.len()),
        ("first covariance", cov1.nrows()),
        ("second covariance", cov2.nrows()),
    ] {
        if found != d {
            return Err(Error::DimensionMismatch {
                what,
                expected: d,
                found,
            });
        }
    }
    if !cov1.is_square() || !cov2.is_square() {
        return Err(Error::NotSymmetric);
    }
    check_psd(cov1)?;
    check_psd(cov2)?;
    let root2 = psd_sqrt(cov2);
    let cross = psd_sqrt(&(&root2 * cov1 * &root2));
    let value = (mu1 - mu2).norm_squared() + cov1.trace() + cov2.trace() - 2.0 * cross.trace();
    Ok(value.max(0.0))
}

/// Closed-form `sup υ·E_Q[ℓ]` over a radius-`ε` ball, given `t = ⟨I − VVᵀ, M⟩`.
///
/// For `υ ≥ 0` and `t = 0` this returns `υ·ε`.
pub fn worst_case_value(upsilon: f64, eps: f64, t: f64) -> f64 {
    let root_t = libm::sqrt(t.max(0.0));
    let root_e = libm::sqrt(eps);
    let t = t.max(0.0);
    if upsilon >= 0.0 {
        upsilon * (t + eps + 2.0 * root_t * root_e)
    } else if t >= eps {
        upsilon * (t + eps - 2.0 * root_t * root_e)
    } else {
        0.0
    }
}

/// [`worst_case_value`] with `t = ⟨P, M⟩`, where `P = I − VVᵀ` must be an
/// orthogonal projector.
pub fn worst_case_expectation(upsilon: f64, eps: f64, m: &Matrix, projector: &Matrix) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::NegativeRadius(eps));
    }
    if projector.shape() != m.shape() {
        return Err(Error::DimensionMismatch {
            what: "projector",
            expected: m.nrows(),
            found: projector.nrows(),
        });
    }
    if !is_symmetric(projector, 1e-8) || (projector * projector - projector).amax() > 1e-8 {
        return Err(Error::NotProjector);
    }
    Ok(worst_case_value(upsilon, eps, frob_inner(projector, m)))
}

/// Per-group outcome of the two sufficient conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupCondition {
    /// `0 ≤ λ ≤ p_a`.
    pub marginal: bool,
    /// Sum of the `d − k` smallest eigenvalues of `M_a` is at least `ε_a`.
    pub eigenvalue: bool,
}

impl GroupCondition {
    pub fn holds(&self) -> bool {
        self.marginal || self.eigenvalue
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionReport {
    pub groups: Vec<GroupCondition>,
}

impl ConditionReport {
    pub fn is_valid(&self) -> bool {
        self.groups.iter().all(GroupCondition::holds)
    }

    /// Groups where neither condition holds.
    pub fn violations(&self) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.holds())
            .map(|(a, _)| a)
            .collect()
    }

    pub fn ensure_valid(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::ConditionsViolated {
                groups: self.violations(),
            })
        }
    }
}

/// Evaluate the marginal-probability and eigenvalue conditions for every group.
pub fn check_conditions(gm: &GroupMoments, cfg: &RobustConfig) -> Result<ConditionReport> {
    cfg.validate_against(gm)?;
    let tail = gm.dim() - cfg.k;
    let groups = gm
        .proportions
        .iter()
        .zip(&gm.second_moments)
        .zip(&cfg.radii)
        .map(|((&p, m), &eps)| GroupCondition {
            marginal: cfg.lambda >= 0.0 && cfg.lambda <= p,
            eigenvalue: SortedEigen::new(m).sum_smallest(tail) >= eps,
        })
        .collect();
    Ok(ConditionReport { groups })
}

/// Parameters of the two branches `F_0`, `F_1` of the robust objective.
///
/// Branch `a` (with `a' = 1 − a`) reads
/// `κ_a + θ_a √⟨UUᵀ, M_a⟩ + ϑ_{a'} √⟨UUᵀ, M_{a'}⟩ + ⟨UUᵀ, C_a⟩`.
/// `vartheta` is indexed by the group it multiplies, so branch `a` uses
/// `vartheta[1 − a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReformParams {
    pub lambda: f64,
    pub proportions: [f64; 2],
    pub radii: [f64; 2],
    pub kappa: [f64; 2],
    pub theta: [f64; 2],
    pub vartheta: [f64; 2],
    pub c: [Matrix; 2],
    pub second_moments: [Matrix; 2],
    pub d: usize,
    pub k: usize,
    pub conditions: ConditionReport,
}

/// Build the binary reformulation. The condition report is attached but not
/// enforced here; the solver refuses invalid parameters.
pub fn reform_params(gm: &GroupMoments, cfg: &RobustConfig) -> Result<ReformParams> {
    if gm.groups() != 2 {
        return Err(Error::NotBinary { groups: gm.groups() });
    }
    let conditions = check_conditions(gm, cfg)?;
    let lambda = cfg.lambda;
    let p = [gm.proportions[0], gm.proportions[1]];
    let eps = [cfg.radii[0], cfg.radii[1]];
    let m = [gm.second_moments[0].clone(), gm.second_moments[1].clone()];
    let branch = |a: usize| {
        let b = 1 - a;
        let kappa = (p[a] + lambda) * eps[a] + (p[b] - lambda) * eps[b];
        let c = &m[a] * (p[a] + lambda) + &m[b] * (p[b] - lambda);
        (kappa, c)
    };
    let (kappa0, c0) = branch(0);
    let (kappa1, c1) = branch(1);
    let theta = [0, 1].map(|a| 2.0 * libm::fabs(p[a] + lambda) * libm::sqrt(eps[a]));
    let vartheta = [0, 1].map(|a| 2.0 * libm::fabs(p[a] - lambda) * libm::sqrt(eps[a]));
    Ok(ReformParams {
        lambda,
        proportions: p,
        radii: eps,
        kappa: [kappa0, kappa1],
        theta,
        vartheta,
        c: [c0, c1],
        second_moments: m,
        d: gm.dim(),
        k: cfg.k,
        conditions,
    })
}
