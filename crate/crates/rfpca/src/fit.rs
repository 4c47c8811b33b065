//! Fitting a projection on a training split.

use std::time::Instant;

use rayon::prelude::*;
use rfpca_core::ambiguity::{check_conditions, ConditionReport};
use rfpca_core::data::{Dataset, GroupMoments};
use rfpca_core::linalg::SortedEigen;
use rfpca_core::metrics::{nominal_pca, Projection, Provenance};
use rfpca_core::objective::Objective;
use rfpca_core::optimizer::{merge, run_restart, SolveReport, SolverOptions};
use rfpca_core::{RobustConfig, RobustProblem, StiefelPoint};

use crate::error::{AppError, Result};

/// One grid point: penalty, radius scale and target dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub k: usize,
    pub lambda: f64,
    /// Radii are `α/√N_a` with training counts `N_a`.
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub projection: Projection,
    /// Solver output; `None` for nominal PCA.
    pub u: Option<StiefelPoint>,
    /// Minimized objective on the training moments.
    pub objective: f64,
    pub radii: Vec<f64>,
    pub seconds: f64,
}

/// Restarts run on the rayon pool and are merged deterministically.
pub fn solve_parallel<O: Objective + Sync + ?Sized>(obj: &O, opts: &SolverOptions) -> Result<SolveReport> {
    obj.ensure_solvable()?;
    opts.validate()?;
    let start = Instant::now();
    let traces = (0..opts.restarts)
        .into_par_iter()
        .map(|r| run_restart(obj, opts, r))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = merge(traces)?;
    report.elapsed = Some(start.elapsed());
    Ok(report)
}

/// Human-readable reason for each failing group, or `None` when all hold.
pub fn describe_violations(
    report: &ConditionReport,
    gm: &GroupMoments,
    cfg: &RobustConfig,
    group_names: Option<&[String]>,
) -> Option<String> {
    let bad = report.violations();
    if bad.is_empty() {
        return None;
    }
    let tail = gm.dim() - cfg.k;
    let parts: Vec<String> = bad
        .iter()
        .map(|&a| {
            let name = group_names
                .and_then(|n| n.get(a))
                .map_or(String::new(), |n| format!(" ('{n}')"));
            let tail_sum = SortedEigen::new(&gm.second_moments[a]).sum_smallest(tail);
            format!(
                "group {a}{name}: lambda {} exceeds its proportion {:.6}, and the sum of its {tail} smallest \
                 second-moment eigenvalues {:.6} is below the radius {:.6}",
                cfg.lambda, gm.proportions[a], tail_sum, cfg.radii[a]
            )
        })
        .collect();
    Some(format!("condition check failed: {}", parts.join("; ")))
}

fn require_centered(train: &Dataset) -> Result<()> {
    if !train.is_centered() {
        return Err(AppError::validation("training data must be centered"));
    }
    Ok(())
}

fn check_k(k: usize, d: usize) -> Result<()> {
    if k == 0 || k >= d {
        return Err(AppError::validation(format!("k = {k} must satisfy 1 <= k < d = {d}")));
    }
    Ok(())
}

/// Robust fair projection from the moments of a centered training split.
pub fn fit_robust(
    train: &Dataset,
    params: &FitParams,
    solver: &SolverOptions,
    group_names: Option<&[String]>,
) -> Result<Fitted> {
    require_centered(train)?;
    check_k(params.k, train.dim())?;
    if !(params.alpha >= 0.0 && params.alpha.is_finite()) {
        return Err(AppError::validation(format!("alpha {} must be nonnegative", params.alpha)));
    }
    let start = Instant::now();
    let gm = GroupMoments::from_dataset(train)?;
    let cfg = RobustConfig::with_alpha(params.lambda, params.alpha, &gm.counts, params.k)?;
    let conditions = check_conditions(&gm, &cfg)?;
    if let Some(msg) = describe_violations(&conditions, &gm, &cfg, group_names) {
        return Err(AppError::Conditions(msg));
    }
    let problem = RobustProblem::build(&gm, &cfg)?;
    let report = solve_parallel(&problem, solver)?;
    let projection = Projection::from_complement(&report.best_u, Provenance::RobustFair)?;
    Ok(Fitted {
        projection,
        u: Some(report.best_u),
        objective: report.best_value,
        radii: cfg.radii,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Top-`k` eigenvectors of the pooled training second moment.
pub fn fit_pca(train: &Dataset, k: usize) -> Result<Fitted> {
    require_centered(train)?;
    check_k(k, train.dim())?;
    let start = Instant::now();
    let pooled = GroupMoments::from_dataset(train)?.pooled_second_moment();
    let projection = nominal_pca(&pooled, k)?;
    let objective = SortedEigen::new(&pooled).sum_smallest(train.dim() - k);
    Ok(Fitted {
        projection,
        u: None,
        objective,
        radii: vec![0.0; train.groups()],
        seconds: start.elapsed().as_secs_f64(),
    })
}
