//! Robust fair objective for `m ≥ 2` groups with the max-pairwise-gap
//! unfairness.
//!
//! For each ordered pair `(a, a')` the branch value is
//!
//! ```text
//! Σ_b p_b (t_b + ε_b) + Σ_b 2 c_{a,a',b} √(ε_b t_b) + λ (t_a − t_{a'} + ε_a − ε_{a'})
//! ```
//!
//! with `t_b = ⟨UUᵀ, M_b⟩`. The first sum is identical across pairs but
//! depends on `U`, so it stays in the minimized objective.

use alloc::vec::Vec;

use crate::ambiguity::{check_conditions, ConditionReport, RobustConfig};
use crate::data::{Dataset, GroupMoments};
use crate::error::{Error, Result};
use crate::manifold::{StiefelPoint, TangentVector};
use crate::metrics::{reconstruction_loss, Projection};
use crate::objective::{checked_trace, Objective, SQRT_FLOOR};
use crate::linalg::Matrix;

/// Coefficients of one ordered pair `(a, a')`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCoefficients {
    pub a: usize,
    pub a_prime: usize,
    /// `c_{a,a',b}` for every group `b`.
    pub c: Vec<f64>,
    /// `λ(ε_a − ε_{a'})`.
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairParams {
    pub lambda: f64,
    pub proportions: Vec<f64>,
    pub radii: Vec<f64>,
    pub second_moments: Vec<Matrix>,
    /// Ordered pairs in lexicographic order.
    pub pairs: Vec<PairCoefficients>,
    pub d: usize,
    pub k: usize,
    pub conditions: ConditionReport,
}

/// `c_{a,a',b}`: `p_a + λ` for `b = a`, `|p_{a'} − λ|` for `b = a'`, `p_b` otherwise.
pub fn pair_coefficients(proportions: &[f64], lambda: f64, a: usize, a_prime: usize) -> Vec<f64> {
    proportions
        .iter()
        .enumerate()
        .map(|(b, &p)| {
            if b == a {
                p + lambda
            } else if b == a_prime {
                libm::fabs(p - lambda)
            } else {
                p
            }
        })
        .collect()
}

/// Build the multi-group parameters; fails when some group satisfies
/// neither reformulation condition.
pub fn pair_params(gm: &GroupMoments, cfg: &RobustConfig) -> Result<PairParams> {
    let m = gm.groups();
    if m < 2 {
        return Err(Error::TooFewGroups { found: m });
    }
    let conditions = check_conditions(gm, cfg)?;
    conditions.ensure_valid()?;
    let mut pairs = Vec::with_capacity(m * (m - 1));
    for a in 0..m {
        for a_prime in (0..m).filter(|&b| b != a) {
            pairs.push(PairCoefficients {
                a,
                a_prime,
                c: pair_coefficients(&gm.proportions, cfg.lambda, a, a_prime),
                shift: cfg.lambda * (cfg.radii[a] - cfg.radii[a_prime]),
            });
        }
    }
    Ok(PairParams {
        lambda: cfg.lambda,
        proportions: gm.proportions.clone(),
        radii: cfg.radii.clone(),
        second_moments: gm.second_moments.clone(),
        pairs,
        d: gm.dim(),
        k: cfg.k,
        conditions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiEval {
    pub value: f64,
    /// Index into [`PairParams::pairs`].
    pub active_pair: usize,
    pub pair_values: Vec<f64>,
}

impl PairParams {
    pub fn groups(&self) -> usize {
        self.proportions.len()
    }

    fn traces(&self, u: &StiefelPoint) -> Result<Vec<f64>> {
        if u.dim() != self.d || u.rank() != self.d - self.k {
            return Err(Error::DimensionMismatch {
                what: "Stiefel point",
                expected: self.d * (self.d - self.k),
                found: u.dim() * u.rank(),
            });
        }
        self.second_moments
            .iter()
            .map(|m| checked_trace(u.matrix(), m))
            .collect()
    }

    fn eval_traces(&self, t: &[f64]) -> MultiEval {
        let common: f64 = self
            .proportions
            .iter()
            .zip(t)
            .zip(&self.radii)
            .map(|((p, t), e)| p * (t + e))
            .sum();
        let pair_values: Vec<f64> = self
            .pairs
            .iter()
            .map(|pc| {
                let roots: f64 = pc
                    .c
                    .iter()
                    .zip(t)
                    .zip(&self.radii)
                    .map(|((c, t), e)| 2.0 * c * libm::sqrt(e * t))
                    .sum();
                common + roots + self.lambda * (t[pc.a] - t[pc.a_prime]) + pc.shift
            })
            .collect();
        let mut active_pair = 0;
        for (i, v) in pair_values.iter().enumerate() {
            if *v > pair_values[active_pair] {
                active_pair = i;
            }
        }
        MultiEval {
            value: pair_values[active_pair],
            active_pair,
            pair_values,
        }
    }

    fn subgradient_with(&self, u: &StiefelPoint, t: &[f64], pair: usize) -> Result<TangentVector> {
        let pc = &self.pairs[pair];
        let um = u.matrix();
        let mut s = Matrix::zeros(self.d, self.d);
        for b in 0..self.groups() {
            let mut weight = 2.0 * self.proportions[b];
            if b == pc.a {
                weight += 2.0 * self.lambda;
            } else if b == pc.a_prime {
                weight -= 2.0 * self.lambda;
            }
            let root_coef = pc.c[b] * libm::sqrt(self.radii[b]);
            if root_coef != 0.0 {
                if t[b] < SQRT_FLOOR {
                    return Err(Error::SubgradientSingularity { group: b, value: t[b] });
                }
                weight += 2.0 * root_coef / libm::sqrt(t[b]);
            }
            s += &self.second_moments[b] * weight;
        }
        let g = s * um;
        Ok(TangentVector::from_trusted(&g - um * (um.transpose() * &g)))
    }
}

pub fn eval_f_multi(u: &StiefelPoint, pp: &PairParams) -> Result<MultiEval> {
    Ok(pp.eval_traces(&pp.traces(u)?))
}

/// Tangent-projected gradient of the active pair's branch.
pub fn riemannian_subgradient_multi(u: &StiefelPoint, pp: &PairParams) -> Result<TangentVector> {
    let t = pp.traces(u)?;
    let active = pp.eval_traces(&t).active_pair;
    pp.subgradient_with(u, &t, active)
}

impl Objective for PairParams {
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
        let t = self.traces(u)?;
        let ev = self.eval_traces(&t);
        let g = self.subgradient_with(u, &t, ev.active_pair)?;
        Ok((ev.value, ev.active_pair, g))
    }

    fn value(&self, u: &StiefelPoint) -> Result<f64> {
        eval_f_multi(u, self).map(|e| e.value)
    }
}

/// `max_{a,a'} |E[ℓ|A=a] − E[ℓ|A=a']|` computed pair by pair.
pub fn unfairness_max(v: &Projection, ds: &Dataset) -> Result<f64> {
    let m = ds.groups();
    let mut means = alloc::vec![0.0; m];
    let counts = ds.group_counts();
    for (row, &a) in ds.features().row_iter().zip(ds.labels()) {
        means[a] += reconstruction_loss(v, &row.transpose())? / counts[a] as f64;
    }
    let mut worst = 0.0_f64;
    for a in 0..m {
        for b in 0..m {
            if a != b {
                worst = worst.max(libm::fabs(means[a] - means[b]));
            }
        }
    }
    Ok(worst)
}
