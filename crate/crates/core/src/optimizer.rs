//! Riemannian subgradient descent with a constant step `1/√(τ+1)` and
//! independent random restarts.
//!
//! Every restart tracks its best iterate; the report keeps the best over all
//! restarts, ties going to the lowest restart index. Restart `r` draws its
//! initial point from the ChaCha stream `r` of the configured seed, so the
//! outcome does not depend on the order restarts are executed in.

use alloc::vec::Vec;
use core::time::Duration;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::error::{Error, Result};
use crate::manifold::{random_point_with, Retraction, StiefelPoint};
use crate::objective::Objective;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverOptions {
    /// Iterations per restart (τ).
    pub iterations: usize,
    pub restarts: usize,
    pub retraction: Retraction,
    pub seed: u64,
    /// Replaces the default step `1/√(τ+1)`.
    pub step_override: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            iterations: 1000,
            restarts: 20,
            retraction: Retraction::Polar,
            seed: 0,
            step_override: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1"));
        }
        if let Some(step) = self.step_override {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidConfig("step override must be positive"));
            }
        }
        Ok(())
    }

    pub fn step_size(&self) -> f64 {
        self.step_override
            .unwrap_or_else(|| 1.0 / libm::sqrt(self.iterations as f64 + 1.0))
    }
}

/// Trajectory of one restart. `values[t]` and `grad_norms[t]` belong to
/// `U_t` for `t = 0..=τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace {
    pub restart: usize,
    pub values: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub active: Vec<u32>,
    pub best_iteration: usize,
    pub best_value: f64,
    pub best_u: StiefelPoint,
}

impl RestartTrace {
    pub fn initial_value(&self) -> f64 {
        self.values[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub best_u: StiefelPoint,
    pub best_value: f64,
    pub best_restart: usize,
    pub traces: Vec<RestartTrace>,
    /// Filled in by callers that have a clock.
    pub elapsed: Option<Duration>,
}

/// Initial point of restart `index`.
pub fn initial_point(d: usize, p: usize, seed: u64, index: usize) -> Result<StiefelPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    random_point_with(d, p, &mut rng)
}

/// Run one restart from its seeded initial point.
pub fn run_restart<O: Objective + ?Sized>(obj: &O, opts: &SolverOptions, index: usize) -> Result<RestartTrace> {
    let u0 = initial_point(obj.dim(), obj.complement_rank(), opts.seed, index)?;
    run_from(obj, opts, u0, index)
}

/// Run `τ` iterations of `U_{t+1} = Rtr_{U_t}(−γ Δ_t)` from `u0`.
pub fn run_from<O: Objective + ?Sized>(
    obj: &O,
    opts: &SolverOptions,
    u0: StiefelPoint,
    index: usize,
) -> Result<RestartTrace> {
    opts.validate()?;
    let step = opts.step_size();
    let n = opts.iterations + 1;
    let mut values = Vec::with_capacity(n);
    let mut grad_norms = Vec::with_capacity(n);
    let mut active = Vec::with_capacity(n);
    let mut u = u0;
    let mut best_u = u.clone();
    let mut best_value = f64::INFINITY;
    let mut best_iteration = 0;
    for t in 0..n {
        let (value, branch, grad) = obj.value_and_subgradient(&u)?;
        values.push(value);
        grad_norms.push(grad.norm());
        active.push(branch as u32);
        if value < best_value {
            best_value = value;
            best_iteration = t;
            best_u = u.clone();
        }
        if t + 1 < n {
            u = opts.retraction.retract(&u, &grad.scaled(-step))?;
        }
    }
    Ok(RestartTrace {
        restart: index,
        values,
        grad_norms,
        active,
        best_iteration,
        best_value,
        best_u,
    })
}

/// Combine restart traces in any order into a report.
pub fn merge(mut traces: Vec<RestartTrace>) -> Result<SolveReport> {
    traces.sort_by_key(|t| t.restart);
    let best = traces
        .iter()
        .fold(None::<&RestartTrace>, |acc, t| match acc {
            Some(b) if b.best_value <= t.best_value => Some(b),
            _ => Some(t),
        })
        .ok_or(Error::EmptyTrace)?;
    Ok(SolveReport {
        best_u: best.best_u.clone(),
        best_value: best.best_value,
        best_restart: best.restart,
        elapsed: None,
        traces,
    })
}

/// Multi-start solve, restarts run sequentially.
pub fn solve<O: Objective + ?Sized>(obj: &O, opts: &SolverOptions) -> Result<SolveReport> {
    obj.ensure_solvable()?;
    opts.validate()?;
    let traces = (0..opts.restarts)
        .map(|r| run_restart(obj, opts, r))
        .collect::<Result<Vec<_>>>()?;
    merge(traces)
}

/// Smallest Riemannian subgradient norm along the best restart's trajectory.
///
/// This stands in for the Moreau-envelope stationarity gap, which bounds the
/// subgradient norm from above.
pub fn convergence_proxy(report: &SolveReport) -> Result<f64> {
    let trace = report
        .traces
        .iter()
        .find(|t| t.restart == report.best_restart)
        .ok_or(Error::EmptyTrace)?;
    trace
        .grad_norms
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or(Error::EmptyTrace)
}
