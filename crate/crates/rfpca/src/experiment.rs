//! Train/test preparation, grid sweeps and cross-validation.

use std::time::Instant;

use rayon::prelude::*;
use rfpca_core::data::Dataset;
use rfpca_core::linalg::Vector;
use rfpca_core::metrics::{evaluate, FairnessReport};
use rfpca_core::optimizer::SolverOptions;
use serde::Serialize;

use crate::error::{AppError, Result};
use crate::fit::{fit_robust, FitParams, Fitted};
use crate::split::{complement, stratified_folds, Split};

pub const DEFAULT_LAMBDAS: [f64; 6] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5];
pub const DEFAULT_ALPHAS: [f64; 3] = [0.05, 0.1, 0.15];

/// Which mean is subtracted from held-out data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestCenter {
    #[default]
    Train,
    Test,
}

/// Centered (and optionally standardized) training and test data.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Option<Dataset>,
    /// Training mean in raw units.
    pub center: Vector,
    pub scale: Option<Vector>,
}

fn column_std(ds: &Dataset) -> Vector {
    let x = ds.features();
    let n = x.nrows() as f64;
    let mean = ds.column_means();
    Vector::from_iterator(
        x.ncols(),
        x.column_iter().zip(mean.iter()).map(|(c, m)| {
            let var = c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        }),
    )
}

fn divide_columns(ds: &Dataset, scale: &Vector) -> Result<Dataset> {
    let mut x = ds.features().clone();
    for (mut col, s) in x.column_iter_mut().zip(scale.iter()) {
        col /= *s;
    }
    Ok(Dataset::with_groups(x, ds.labels().to_vec(), Some(ds.groups()))?)
}

/// Center `train` with its own mean and `test` per `test_center`.
pub fn prepare(train: &Dataset, test: Option<&Dataset>, standardize: bool, test_center: TestCenter) -> Result<Prepared> {
    let scale = standardize.then(|| column_std(train));
    let (train, test) = match &scale {
        Some(s) => (divide_columns(train, s)?, test.map(|t| divide_columns(t, s)).transpose()?),
        None => (train.clone(), test.cloned()),
    };
    let train = train.center(None)?;
    let test = match test {
        Some(t) => Some(match test_center {
            TestCenter::Train => t.center(Some(train.center_vector()))?,
            TestCenter::Test => t.center(None)?,
        }),
        None => None,
    };
    let center = match &scale {
        Some(s) => train.center_vector().component_mul(s),
        None => train.center_vector().clone(),
    };
    Ok(Prepared {
        train,
        test,
        center,
        scale,
    })
}

/// Split `ds` and prepare both parts; no test part when `split` is `None`.
pub fn prepare_split(ds: &Dataset, split: Option<&Split>, standardize: bool, test_center: TestCenter) -> Result<Prepared> {
    match split {
        None => prepare(ds, None, standardize, test_center),
        Some(s) => {
            let train = ds.subset(&s.train)?;
            let test = ds.subset(&s.test)?;
            prepare(&train, Some(&test), standardize, test_center)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub lambda: f64,
    pub alpha: f64,
}

/// `λ`-major Cartesian grid.
pub fn grid(lambdas: &[f64], alphas: &[f64]) -> Result<Vec<GridPoint>> {
    if lambdas.is_empty() || alphas.is_empty() {
        return Err(AppError::validation("lambda and alpha grids must be nonempty"));
    }
    Ok(lambdas
        .iter()
        .flat_map(|&lambda| alphas.iter().map(move |&alpha| GridPoint { lambda, alpha }))
        .collect())
}

fn status_of(e: &AppError) -> String {
    match e {
        AppError::Conditions(m) => m.clone(),
        other => format!("error: {other}"),
    }
}

/// One sweep CSV row; metric fields are empty for failed points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub alpha: f64,
    pub are: Option<f64>,
    pub abdiff: Option<f64>,
    pub objective: Option<f64>,
    pub seconds: f64,
    pub status: String,
}

fn eval_point(prepared: &Prepared, k: usize, point: GridPoint, solver: &SolverOptions) -> Result<(Fitted, FairnessReport)> {
    let params = FitParams {
        k,
        lambda: point.lambda,
        alpha: point.alpha,
    };
    let fitted = fit_robust(&prepared.train, &params, solver, None)?;
    let report = evaluate(&fitted.projection, prepared.test.as_ref().unwrap_or(&prepared.train))?;
    Ok((fitted, report))
}

/// Fit every grid point; metrics are on the test part when there is one.
pub fn run_sweep(prepared: &Prepared, k: usize, points: &[GridPoint], solver: &SolverOptions) -> Vec<SweepRow> {
    points
        .par_iter()
        .map(|&point| {
            let start = Instant::now();
            let outcome = eval_point(prepared, k, point, solver);
            let seconds = start.elapsed().as_secs_f64();
            match outcome {
                Ok((fitted, report)) => SweepRow {
                    lambda: point.lambda,
                    alpha: point.alpha,
                    are: Some(report.are),
                    abdiff: Some(report.abdiff),
                    objective: Some(fitted.objective),
                    seconds,
                    status: "ok".into(),
                },
                Err(e) => {
                    log::warn!("grid point lambda={} alpha={} failed: {e}", point.lambda, point.alpha);
                    SweepRow {
                        lambda: point.lambda,
                        alpha: point.alpha,
                        are: None,
                        abdiff: None,
                        objective: None,
                        seconds,
                        status: status_of(&e),
                    }
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvRow {
    pub lambda: f64,
    pub alpha: f64,
    pub mean_are: Option<f64>,
    pub mean_abdiff: Option<f64>,
    /// Mean over folds of `ARE + ABDiff`.
    pub mean_score: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub rows: Vec<CvRow>,
    /// Index of the selected grid point.
    pub best: usize,
}

/// Stratified k-fold selection of `(λ, α)` on an uncentered training split.
///
/// Each fold is centered with the mean of the remaining folds. The lowest
/// mean score wins; ties go to the earlier grid point.
pub fn run_cv(
    train: &Dataset,
    k: usize,
    points: &[GridPoint],
    solver: &SolverOptions,
    folds: usize,
    seed: u64,
    standardize: bool,
) -> Result<CvOutcome> {
    let held_out = stratified_folds(train.labels(), folds, seed)?;
    let prepared: Vec<Prepared> = held_out
        .iter()
        .map(|fold| {
            let rest = train.subset(&complement(train.len(), fold))?;
            let val = train.subset(fold)?;
            prepare(&rest, Some(&val), standardize, TestCenter::Train)
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..folds).map(move |f| (p, f)))
        .collect();
    let results: Vec<Result<FairnessReport>> = jobs
        .par_iter()
        .map(|&(p, f)| eval_point(&prepared[f], k, points[p], solver).map(|(_, r)| r))
        .collect();

    let mut rows = Vec::with_capacity(points.len());
    for (p, point) in points.iter().enumerate() {
        let fold_results = &results[p * folds..(p + 1) * folds];
        let row = match fold_results.iter().find_map(|r| r.as_ref().err()) {
            Some(e) => CvRow {
                lambda: point.lambda,
                alpha: point.alpha,
                mean_are: None,
                mean_abdiff: None,
                mean_score: None,
                status: status_of(e),
            },
            None => {
                let reports: Vec<&FairnessReport> = fold_results.iter().flatten().collect();
                let n = folds as f64;
                let are = reports.iter().map(|r| r.are).sum::<f64>() / n;
                let abdiff = reports.iter().map(|r| r.abdiff).sum::<f64>() / n;
                let score = reports.iter().map(|r| r.score()).sum::<f64>() / n;
                CvRow {
                    lambda: point.lambda,
                    alpha: point.alpha,
                    mean_are: Some(are),
                    mean_abdiff: Some(abdiff),
                    mean_score: Some(score),
                    status: "ok".into(),
                }
            }
        };
        rows.push(row);
    }
    let best = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.mean_score.map(|s| (i, s)))
        .fold(None::<(usize, f64)>, |acc, (i, s)| match acc {
            Some((_, b)) if b <= s => acc,
            _ => Some((i, s)),
        })
        .map(|(i, _)| i)
        .ok_or_else(|| {
            let reasons: Vec<&str> = rows.iter().map(|r| r.status.as_str()).collect();
            AppError::Conditions(format!("every grid point failed: {}", reasons.join(" | ")))
        })?;
    Ok(CvOutcome { rows, best })
}

pub fn write_csv<T: Serialize>(path: &std::path::Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| AppError::Write {
        path: path.to_path_buf(),
        source,
    })
}
