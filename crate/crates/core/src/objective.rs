//! The robust fair objective `F(U) = max{F_0(U), F_1(U)}` over the Stiefel
//! manifold, where `U` spans the orthogonal complement of the projection `V`.

use crate::ambiguity::ReformParams;
use crate::error::{Error, Result};
use crate::linalg::{projected_trace, Matrix, SortedEigen};
use crate::manifold::{StiefelPoint, TangentVector};

/// Quadratic forms below this are treated as zero for the square-root terms.
pub const SQRT_FLOOR: f64 = 1e-12;

/// Value of `F` with its branch values; the active branch attains the max,
/// ties going to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    pub active_branch: usize,
    pub branch_values: [f64; 2],
}

/// A nonsmooth objective the subgradient solver can minimize.
pub trait Objective {
    /// Ambient dimension `d`.
    fn dim(&self) -> usize;
    /// Number of columns of `U`, i.e. `d − k`.
    fn complement_rank(&self) -> usize;
    /// Fails when the reformulation is not valid for these parameters.
    fn ensure_solvable(&self) -> Result<()>;
    /// Value, active branch index and one Riemannian subgradient at `u`.
    fn value_and_subgradient(&self, u: &StiefelPoint) -> Result<(f64, usize, TangentVector)>;
    fn value(&self, u: &StiefelPoint) -> Result<f64>;
}

/// `⟨UUᵀ, M⟩`, rejecting forms that are negative beyond rounding.
pub(crate) fn checked_trace(u: &Matrix, m: &Matrix) -> Result<f64> {
    let t = projected_trace(u, m);
    if t < -SQRT_FLOOR {
        return Err(Error::NegativeQuadratic { value: t });
    }
    Ok(t.max(0.0))
}

struct Traces {
    m: [f64; 2],
    c: [f64; 2],
}

fn traces(u: &StiefelPoint, rp: &ReformParams) -> Result<Traces> {
    if u.dim() != rp.d || u.rank() != rp.d - rp.k {
        return Err(Error::DimensionMismatch {
            what: "Stiefel point",
            expected: rp.d * (rp.d - rp.k),
            found: u.dim() * u.rank(),
        });
    }
    let um = u.matrix();
    Ok(Traces {
        m: [checked_trace(um, &rp.second_moments[0])?, checked_trace(um, &rp.second_moments[1])?],
        c: [projected_trace(um, &rp.c[0]), projected_trace(um, &rp.c[1])],
    })
}

fn branch_value(rp: &ReformParams, tr: &Traces, a: usize) -> f64 {
    let b = 1 - a;
    rp.kappa[a]
        + rp.theta[a] * libm::sqrt(tr.m[a])
        + rp.vartheta[b] * libm::sqrt(tr.m[b])
        + tr.c[a]
}

fn eval_traces(rp: &ReformParams, tr: &Traces) -> ObjectiveEval {
    let branch_values = [branch_value(rp, tr, 0), branch_value(rp, tr, 1)];
    let active_branch = if branch_values[1] > branch_values[0] { 1 } else { 0 };
    ObjectiveEval {
        value: branch_values[active_branch],
        active_branch,
        branch_values,
    }
}

pub fn eval_f(u: &StiefelPoint, rp: &ReformParams) -> Result<ObjectiveEval> {
    Ok(eval_traces(rp, &traces(u, rp)?))
}

fn subgradient_with(u: &StiefelPoint, rp: &ReformParams, tr: &Traces, a: usize) -> Result<TangentVector> {
    let b = 1 - a;
    let um = u.matrix();
    let mut g = &rp.c[a] * um * 2.0;
    for (group, coef) in [(a, rp.theta[a]), (b, rp.vartheta[b])] {
        if coef == 0.0 {
            continue;
        }
        let t = tr.m[group];
        if t < SQRT_FLOOR {
            return Err(Error::SubgradientSingularity { group, value: t });
        }
        g += &rp.second_moments[group] * um * (coef / libm::sqrt(t));
    }
    // (I − UUᵀ)G; the skew part of the tangent projection vanishes for G = SU.
    let normal = &g - um * (um.transpose() * &g);
    Ok(TangentVector::from_trusted(normal))
}

/// `(I − UUᵀ)(θ_a/√⟨UUᵀ,M_a⟩ M_a U + ϑ_{a'}/√⟨UUᵀ,M_{a'}⟩ M_{a'} U + 2 C_a U)`
/// for the active branch `a`.
pub fn riemannian_subgradient(u: &StiefelPoint, rp: &ReformParams) -> Result<TangentVector> {
    let tr = traces(u, rp)?;
    let a = eval_traces(rp, &tr).active_branch;
    subgradient_with(u, rp, &tr, a)
}

/// Subgradient of a fixed branch, regardless of which one is active.
pub fn branch_subgradient(u: &StiefelPoint, rp: &ReformParams, branch: usize) -> Result<TangentVector> {
    let tr = traces(u, rp)?;
    subgradient_with(u, rp, &tr, branch.min(1))
}

/// Lipschitz constant of `F` on the manifold: the largest of
/// `θ_a σmax(M_a)/√σmin(M_a)`, `ϑ_a σmax(M_a)/√σmin(M_a)` and
/// `2√(d−k) ‖C_a‖₂` over both groups.
///
/// Square-root terms with a zero coefficient are skipped; a nonzero
/// coefficient on a singular second moment is an error.
pub fn lipschitz_constant(rp: &ReformParams) -> Result<f64> {
    let tail = libm::sqrt((rp.d - rp.k) as f64);
    let mut l = 0.0_f64;
    for a in 0..2 {
        let eig = SortedEigen::new(&rp.second_moments[a]);
        let coef = rp.theta[a].max(rp.vartheta[a]);
        if coef > 0.0 {
            let smin = eig.min();
            if smin <= 0.0 {
                return Err(Error::LipschitzUndefined { group: a });
            }
            l = l.max(coef * eig.max() / libm::sqrt(smin));
        }
        let c = SortedEigen::new(&rp.c[a]);
        let spectral = libm::fabs(c.max()).max(libm::fabs(c.min()));
        l = l.max(2.0 * tail * spectral);
    }
    Ok(l)
}

impl Objective for ReformParams {
    fn dim(&self) -> usize {
        self.d
    }

    fn complement_rank(&self) -> usize {
        self.d - self.k
    }

    fn ensure_solvable(&self) -> Result<()> {
        self.conditions.ensure_valid()
    }

    fn value_and_subgradient(&self, u: &StiefelPoint) -> Result<(f64, usize, TangentVector)> {
        let tr = traces(u, self)?;
        let ev = eval_traces(self, &tr);
        let g = subgradient_with(u, self, &tr, ev.active_branch)?;
        Ok((ev.value, ev.active_branch, g))
    }

    fn value(&self, u: &StiefelPoint) -> Result<f64> {
        eval_f(u, self).map(|e| e.value)
    }
}
