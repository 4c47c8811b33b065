//! Acceptance criteria, one test each. Every test writes a single
//! `criterion NN [PASS|FAIL]` line to stderr (bypassing output capture).

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use rfpca::fit::solve_parallel;
use rfpca::model::{ModelFile, RunReport};
use rfpca_core::ambiguity::{w_divergence, worst_case_expectation};
use rfpca_core::linalg::{frob_inner, Matrix, Vector};
use rfpca_core::manifold::{project_tangent, random_point_with, TangentVector};
use rfpca_core::metrics::fair_projection_test;
use rfpca_core::nonbinary::{eval_f_multi, riemannian_subgradient_multi};
use rfpca_core::objective::{eval_f, riemannian_subgradient};
use rfpca_core::optimizer::{convergence_proxy, solve, SolverOptions};
use rfpca_core::{
    evaluate, pair_params, reform_params, Dataset, GroupMoments, Projection, Provenance, Retraction, RobustConfig,
    StiefelPoint,
};

fn record(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "criterion {id:02} [{}] {name}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{line}");
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn spd(rng: &mut ChaCha8Rng, d: usize, floor: f64) -> Matrix {
    let a = gaussian(rng, d, d);
    &a * a.transpose() / d as f64 + Matrix::identity(d, d) * floor
}

fn proportions(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Symmetric square root by an eigendecomposition independent of the crate's.
fn sqrtm(m: &Matrix) -> Matrix {
    let e = m.clone().symmetric_eigen();
    let root = e.eigenvalues.map(|v| v.max(0.0).sqrt());
    &e.eigenvectors * Matrix::from_diagonal(&root) * e.eigenvectors.transpose()
}

fn toy_covariances() -> [Matrix; 2] {
    [
        Matrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.2]),
        Matrix::from_row_slice(2, 2, &[0.2, 0.4, 0.4, 3.0]),
    ]
}

/// Zero-mean Gaussian samples, `counts[a]` rows for group `a`.
fn toy_dataset(rng: &mut ChaCha8Rng, counts: [usize; 2]) -> Dataset {
    let covs = toy_covariances();
    let n: usize = counts.iter().sum();
    let mut x = Matrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for a in 0..2 {
        let l = covs[a].clone().cholesky().unwrap().l();
        for _ in 0..counts[a] {
            let z = Vector::from_fn(2, |_, _| StandardNormal.sample(rng));
            x.set_row(row, &(&l * z).transpose());
            labels.push(a);
            row += 1;
        }
    }
    Dataset::new(x, labels).unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_01_pca_recovery() {
    const PROJ_TOL: f64 = 1e-3;
    const VALUE_TOL: f64 = 1e-4;
    const BUDGET: Duration = Duration::from_secs(5);
    let start = Instant::now();
    let diag = |v: &[f64]| Matrix::from_diagonal(&Vector::from_column_slice(v));
    // Two groups whose mixture is diag(5, 2, 1, 0.1).
    let gm = GroupMoments::from_second_moments(
        vec![0.5, 0.5],
        vec![diag(&[6.0, 1.0, 1.5, 0.1]), diag(&[4.0, 3.0, 0.5, 0.1])],
        vec![50, 50],
    )
    .unwrap();
    let rp = reform_params(&gm, &RobustConfig::new(0.0, vec![0.0, 0.0], 2).unwrap()).unwrap();
    let report = solve(&rp, &SolverOptions::default()).unwrap();
    let v = Projection::from_complement(&report.best_u, Provenance::RobustFair).unwrap();
    let proj_err = (v.projector() - diag(&[1.0, 1.0, 0.0, 0.0])).norm();
    let value_err = (report.best_value - 1.1).abs();
    let elapsed = start.elapsed();
    record(
        1,
        "PCA recovery",
        proj_err <= PROJ_TOL && value_err <= VALUE_TOL && elapsed < BUDGET,
        &format!("projector error {proj_err:.2e}, |F - 1.1| = {value_err:.2e}, {elapsed:.2?}"),
    );
}

/// Projected gradient ascent of `υ‖P(Z0 + Z)‖²` over `‖Z‖_F ≤ √ε`.
fn ascent(upsilon: f64, eps: f64, p: &Matrix, z0: &Matrix, rng: &mut ChaCha8Rng) -> f64 {
    let radius = eps.sqrt();
    let project = |z: Matrix| {
        let n = z.norm();
        if n > radius {
            z * (radius / n)
        } else {
            z
        }
    };
    let value = |z: &Matrix| upsilon * (p * (z0 + z)).norm_squared();
    let mut best = f64::NEG_INFINITY;
    for start in 0..20 {
        let mut z = if start == 0 {
            Matrix::zeros(z0.nrows(), z0.ncols())
        } else {
            let g = gaussian(rng, z0.nrows(), z0.ncols());
            project(&g * (radius / g.norm().max(1e-300)) * rng.gen_range(0.0..1.0))
        };
        let step = 0.25 / upsilon.abs().max(1e-12);
        for _ in 0..500 {
            let grad = p * (z0 + &z) * (2.0 * upsilon);
            z = project(&z + grad * step);
        }
        best = best.max(value(&z));
    }
    best
}

#[test]
fn criterion_02_worst_case_oracle() {
    const FEAS_TOL: f64 = 1e-9;
    const DOMINANCE_TOL: f64 = 1e-9;
    const ASCENT_REL_TOL: f64 = 1e-3;
    const ASCENT_ABS_FLOOR: f64 = 1e-9;
    const BUDGET: Duration = Duration::from_secs(120);
    let start = Instant::now();
    let outcomes: Vec<(bool, bool, usize, f64)> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xC2 ^ (i << 8));
            let d = 2 + (i % 2) as usize;
            let upsilon = rng.gen_range(-2.0..2.0);
            let eps = rng.gen_range(0.01..1.0);
            let mu_hat = Vector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let sigma_hat = spd(&mut rng, d, 0.05);
            let m_hat = &sigma_hat + &mu_hat * mu_hat.transpose();
            let r = rng.gen_range(1..d);
            let u = random_point_with(d, r, &mut rng).unwrap();
            let p = u.projector();
            let closed = worst_case_expectation(upsilon, eps, &m_hat, &p).unwrap();

            // Feasible points (μ̂ + δ, (S + B)(S + B)ᵀ) with ‖δ‖² + ‖B‖² ≤ ε.
            let s = sqrtm(&sigma_hat);
            let mut dominated = true;
            let mut feasible = 0;
            let mut best_sample = f64::NEG_INFINITY;
            for _ in 0..500 {
                // Uniform in the ball of radius √ε in R^{d×(d+1)}.
                let dir = gaussian(&mut rng, d, d + 1);
                let dim = (d * (d + 1)) as f64;
                let radius = eps.sqrt() * rng.gen_range(0.0f64..1.0).powf(1.0 / dim);
                let z = &dir * (radius / dir.norm());
                let a = &s + z.columns(0, d);
                let mu = &mu_hat + z.column(d);
                let sigma = &a * a.transpose();
                if w_divergence(&mu, &sigma, &mu_hat, &sigma_hat).unwrap() <= eps + FEAS_TOL {
                    feasible += 1;
                }
                let value = upsilon * frob_inner(&p, &(&sigma + &mu * mu.transpose()));
                best_sample = best_sample.max(value);
                dominated &= value <= closed + DOMINANCE_TOL * (1.0 + closed.abs());
            }
            let z0 = {
                let mut z0 = Matrix::zeros(d, d + 1);
                z0.columns_mut(0, d).copy_from(&s);
                z0.set_column(d, &mu_hat);
                z0
            };
            let best_ascent = ascent(upsilon, eps, &p, &z0, &mut rng);
            let gap = (closed - best_ascent).abs();
            let near = gap <= ASCENT_REL_TOL * closed.abs().max(best_ascent.abs()) + ASCENT_ABS_FLOOR;
            (dominated && best_sample <= closed + DOMINANCE_TOL * (1.0 + closed.abs()), near, feasible, gap)
        })
        .collect();
    let dominated = outcomes.iter().filter(|o| o.0).count();
    let near = outcomes.iter().filter(|o| o.1).count();
    let infeasible = outcomes.iter().map(|o| 500 - o.2).sum::<usize>();
    let worst_gap = outcomes.iter().map(|o| o.3).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    record(
        2,
        "worst-case closed form vs sampled and ascent oracles",
        dominated == 200 && near == 200 && infeasible == 0 && elapsed < BUDGET,
        &format!(
            "dominates {dominated}/200, ascent within 1e-3 rel {near}/200 (max gap {worst_gap:.2e}), \
             infeasible samples {infeasible}, {elapsed:.2?}"
        ),
    );
}

/// Central difference of `f` along the polar retraction curve.
fn directional_fd(f: &dyn Fn(&StiefelPoint) -> f64, u: &StiefelPoint, xi: &TangentVector, h: f64) -> f64 {
    let plus = Retraction::Polar.retract(u, &xi.scaled(h)).unwrap();
    let minus = Retraction::Polar.retract(u, &xi.scaled(-h)).unwrap();
    (f(&plus) - f(&minus)) / (2.0 * h)
}

#[test]
fn criterion_03_gradient_finite_differences() {
    const H: f64 = 1e-6;
    const FD_TOL: f64 = 1e-5;
    const TIE_GAP: f64 = 1e-3;
    const BUDGET: Duration = Duration::from_secs(30);
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = [0usize; 2];
    let mut failures = 0;
    for i in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC3 ^ (i << 8));
        let d = 3 + (i % 3) as usize;
        let k = 1 + (i as usize % (d - 1));
        for multi in [false, true] {
            let m = if multi { 3 } else { 2 };
            let p = proportions(&mut rng, m);
            let ms: Vec<Matrix> = (0..m).map(|_| spd(&mut rng, d, 0.3)).collect();
            let lambda = rng.gen_range(0.0..1.5);
            let radii: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..0.2)).collect();
            let gm = GroupMoments::from_second_moments(p, ms, vec![10; m]).unwrap();
            let cfg = RobustConfig::new(lambda, radii, k).unwrap();
            // Draw points until the active branch is separated from the rest.
            let (f, grad): (Box<dyn Fn(&StiefelPoint) -> f64>, Box<dyn Fn(&StiefelPoint) -> (Matrix, f64)>) =
                if multi {
                    let pp = match pair_params(&gm, &cfg) {
                        Ok(pp) => pp,
                        Err(_) => continue,
                    };
                    let pp2 = pp.clone();
                    (
                        Box::new(move |u| eval_f_multi(u, &pp).unwrap().value),
                        Box::new(move |u| {
                            let ev = eval_f_multi(u, &pp2).unwrap();
                            let mut vals = ev.pair_values.clone();
                            vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
                            (riemannian_subgradient_multi(u, &pp2).unwrap().into_matrix(), vals[0] - vals[1])
                        }),
                    )
                } else {
                    let rp = reform_params(&gm, &cfg).unwrap();
                    let rp2 = rp.clone();
                    (
                        Box::new(move |u| eval_f(u, &rp).unwrap().value),
                        Box::new(move |u| {
                            let ev = eval_f(u, &rp2).unwrap();
                            (
                                riemannian_subgradient(u, &rp2).unwrap().into_matrix(),
                                (ev.branch_values[0] - ev.branch_values[1]).abs(),
                            )
                        }),
                    )
                };
            let mut done = false;
            for _ in 0..50 {
                let u = random_point_with(d, d - k, &mut rng).unwrap();
                let (g, gap) = grad(&u);
                if gap < TIE_GAP {
                    continue;
                }
                for _ in 0..3 {
                    let raw = gaussian(&mut rng, d, d - k);
                    let xi = project_tangent(&u, &raw).unwrap();
                    let xi = xi.scaled(1.0 / xi.norm());
                    let fd = directional_fd(&*f, &u, &xi, H);
                    let exact = frob_inner(&g, xi.matrix());
                    let err = (fd - exact).abs() / exact.abs().max(1.0);
                    worst = worst.max(err);
                    if err > FD_TOL {
                        failures += 1;
                    }
                }
                checked[usize::from(multi)] += 1;
                done = true;
                break;
            }
            assert!(done, "no tie-free point found for instance {i}");
        }
    }
    let elapsed = start.elapsed();
    record(
        3,
        "Riemannian subgradient vs finite differences",
        failures == 0 && checked[0] == 100 && checked[1] >= 90 && elapsed < BUDGET,
        &format!(
            "binary instances {}, multi-group instances {}, worst scaled error {worst:.2e}, {elapsed:.2?}",
            checked[0], checked[1]
        ),
    );
}

#[test]
fn criterion_04_retractions() {
    const RESIDUAL_TOL: f64 = 1e-10;
    const FIXED_POINT_TOL: f64 = 1e-12;
    const MIN_SLOPE: f64 = 1.9;
    let ts = [1e-2, 1e-3, 1e-4];
    let mut min_slope = f64::INFINITY;
    let mut max_residual = 0.0f64;
    let mut max_fixed = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC4 ^ (seed << 8));
        let (d, p) = (3 + (seed % 5) as usize, 1 + (seed % 3) as usize);
        let u = random_point_with(d, p, &mut rng).unwrap();
        let delta = project_tangent(&u, &gaussian(&mut rng, d, p)).unwrap();
        for r in [Retraction::Qf, Retraction::Polar] {
            let zero = TangentVector::zeros_at(&u);
            max_fixed = max_fixed.max((r.retract(&u, &zero).unwrap().matrix() - u.matrix()).norm());
            max_residual = max_residual.max(r.retract(&u, &delta).unwrap().residual());
            let pts: Vec<(f64, f64)> = ts
                .iter()
                .map(|&t| {
                    let y = r.retract(&u, &delta.scaled(t)).unwrap();
                    let err = (y.matrix() - (u.matrix() + delta.matrix() * t)).norm();
                    (t.ln(), err.ln())
                })
                .collect();
            min_slope = min_slope.min(slope(&pts));
        }
    }
    record(
        4,
        "retraction suite",
        max_residual <= RESIDUAL_TOL && max_fixed <= FIXED_POINT_TOL && min_slope >= MIN_SLOPE,
        &format!("max residual {max_residual:.2e}, max |Rtr(0) - U| {max_fixed:.2e}, min slope {min_slope:.3}"),
    );
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[test]
fn criterion_05_reformulation_consistency() {
    const REL_TOL: f64 = 1e-9;
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC5 ^ (i << 8));
        let d = 2 + (i % 4) as usize;
        let k = 1 + (i as usize % (d - 1));
        let p = proportions(&mut rng, 2);
        let lambda = rng.gen_range(0.0..=1.0) * p[0].min(p[1]);
        let radii = vec![rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5)];
        let gm =
            GroupMoments::from_second_moments(p, vec![spd(&mut rng, d, 0.0), spd(&mut rng, d, 0.0)], vec![5, 5])
                .unwrap();
        let rp = reform_params(&gm, &RobustConfig::new(lambda, radii, k).unwrap()).unwrap();
        let u = random_point_with(d, d - k, &mut rng).unwrap();
        let proj = u.projector();
        let ev = eval_f(&u, &rp).unwrap();
        for a in 0..2 {
            let b = 1 - a;
            let sum = worst_case_expectation(rp.proportions[a] + lambda, rp.radii[a], &rp.second_moments[a], &proj)
                .unwrap()
                + worst_case_expectation(rp.proportions[b] - lambda, rp.radii[b], &rp.second_moments[b], &proj)
                    .unwrap();
            worst = worst.max(rel_err(ev.branch_values[a], sum));
        }
        worst = worst.max(rel_err(ev.value, ev.branch_values[0].max(ev.branch_values[1])));
    }
    record(
        5,
        "objective equals the sum of two worst-case terms",
        worst <= REL_TOL,
        &format!("100 configs, worst relative error {worst:.2e}"),
    );
}

#[test]
fn criterion_06_binary_multi_consistency() {
    const REL_TOL: f64 = 1e-9;
    let mut worst_value = 0.0f64;
    let mut worst_grad = 0.0f64;
    let mut branch_mismatch = 0;
    for i in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC6 ^ (i << 8));
        let d = 2 + (i % 4) as usize;
        let k = 1 + (i as usize % (d - 1));
        let p = proportions(&mut rng, 2);
        let lambda = rng.gen_range(0.0..2.0);
        let radii = vec![rng.gen_range(0.0..0.1), rng.gen_range(0.0..0.1)];
        let gm =
            GroupMoments::from_second_moments(p, vec![spd(&mut rng, d, 0.5), spd(&mut rng, d, 0.5)], vec![5, 5])
                .unwrap();
        let cfg = RobustConfig::new(lambda, radii, k).unwrap();
        let rp = reform_params(&gm, &cfg).unwrap();
        let pp = pair_params(&gm, &cfg).unwrap();
        let u = random_point_with(d, d - k, &mut rng).unwrap();
        let (eb, em) = (eval_f(&u, &rp).unwrap(), eval_f_multi(&u, &pp).unwrap());
        worst_value = worst_value.max(rel_err(eb.value, em.value));
        for a in 0..2 {
            worst_value = worst_value.max(rel_err(eb.branch_values[a], em.pair_values[a]));
        }
        if eb.active_branch != em.active_pair {
            branch_mismatch += 1;
        }
        let gb = riemannian_subgradient(&u, &rp).unwrap().into_matrix();
        let gm_ = riemannian_subgradient_multi(&u, &pp).unwrap().into_matrix();
        worst_grad = worst_grad.max((&gb - &gm_).norm() / gb.norm().max(f64::MIN_POSITIVE));
    }
    record(
        6,
        "two-group multi-group objective matches binary",
        worst_value <= REL_TOL && worst_grad <= REL_TOL && branch_mismatch == 0,
        &format!(
            "100 instances, value rel err {worst_value:.2e}, subgradient rel err {worst_grad:.2e}, \
             branch mismatches {branch_mismatch}"
        ),
    );
}

#[test]
fn criterion_07_fair_projection_round_trip() {
    const TRACE_TOL: f64 = 1e-8;
    let d = 6;
    let mut wrong = 0;
    let mut worst = 0.0f64;
    let mut existing = 0;
    for i in 0..120u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC7 ^ (i << 8));
        let r = (i % 7) as usize;
        let k = 1 + (i / 7 % 5) as usize;
        let q = random_point_with(d, d, &mut rng).unwrap();
        let mut s = Matrix::zeros(d, d);
        for j in 0..r {
            let sigma = rng.gen_range(0.1..5.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let col = q.matrix().column(j);
            s += col * col.transpose() * sigma;
        }
        let s = (&s + s.transpose()) * 0.5;
        let test = fair_projection_test(&s, k).unwrap();
        if test.exists != (r <= k) {
            wrong += 1;
        }
        if let Some(v) = &test.projection {
            existing += 1;
            let resid = Matrix::identity(d, d) - v.projector();
            worst = worst.max(frob_inner(&resid, &s).abs());
        }
    }
    record(
        7,
        "fair projection exists iff rank(S) <= k",
        wrong == 0 && worst <= TRACE_TOL,
        &format!("120 instances, wrong verdicts {wrong}, {existing} constructed, max |<I - VV', S>| {worst:.2e}"),
    );
}

#[test]
fn criterion_08_fairness_spectrum() {
    const MIN_HITS: usize = 95;
    const ARE_TIE_TOL: f64 = 1e-9;
    const BUDGET: Duration = Duration::from_secs(180);
    let lambdas = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5];
    let opts = SolverOptions::default();
    let start = Instant::now();
    let results: Vec<(bool, bool)> = (0..100u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xC8 ^ (rep << 8));
            let ds = toy_dataset(&mut rng, [200, 100]).center(None).unwrap();
            let gm = GroupMoments::from_dataset(&ds).unwrap();
            let reports: Vec<_> = lambdas
                .iter()
                .map(|&lambda| {
                    let rp = reform_params(&gm, &RobustConfig::new(lambda, vec![0.0, 0.0], 1).unwrap()).unwrap();
                    let sol = solve_parallel(&rp, &SolverOptions { seed: rep, ..opts }).unwrap();
                    let v = Projection::from_complement(&sol.best_u, Provenance::RobustFair).unwrap();
                    evaluate(&v, &ds).unwrap()
                })
                .collect();
            let fairer = reports[5].abdiff < reports[0].abdiff;
            let min_are = reports.iter().map(|r| r.are).fold(f64::INFINITY, f64::min);
            (fairer, reports[0].are <= min_are + ARE_TIE_TOL)
        })
        .collect();
    let fairer = results.iter().filter(|r| r.0).count();
    let cheapest = results.iter().filter(|r| r.1).count();
    let elapsed = start.elapsed();
    record(
        8,
        "fairness spectrum on the two-Gaussian toy",
        fairer >= MIN_HITS && cheapest >= MIN_HITS && elapsed < BUDGET,
        &format!(
            "ABDiff(2.5) < ABDiff(0) in {fairer}/100, ARE(0) minimal in {cheapest}/100, {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_09_convergence_trend() {
    const MAX_SLOPE: f64 = -0.15;
    const BUDGET: Duration = Duration::from_secs(120);
    let start = Instant::now();
    // Fixed robust instance with a smooth optimum; at a kink the
    // min-norm proxy plateaus instead of decaying.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (d, k) = (10, 3);
    let ms = vec![spd(&mut rng, d, 0.1), spd(&mut rng, d, 0.1)];
    let gm = GroupMoments::from_second_moments(vec![0.6, 0.4], ms, vec![60, 40]).unwrap();
    let rp = reform_params(&gm, &RobustConfig::new(0.2, vec![0.1, 0.1], k).unwrap()).unwrap();
    let taus = [100usize, 400, 1600, 6400];
    let pts: Vec<(f64, f64)> = taus
        .iter()
        .map(|&tau| {
            let opts = SolverOptions { iterations: tau, restarts: 1, seed: 9, ..Default::default() };
            let proxy = convergence_proxy(&solve(&rp, &opts).unwrap()).unwrap();
            ((tau as f64 + 1.0).ln(), proxy.ln())
        })
        .collect();
    let s = slope(&pts);
    let proxies: Vec<String> = pts.iter().map(|p| format!("{:.2e}", p.1.exp())).collect();
    let elapsed = start.elapsed();
    record(
        9,
        "convergence trend of min subgradient norm",
        s <= MAX_SLOPE && elapsed < BUDGET,
        &format!("proxies {} for tau {taus:?}, slope {s:.3}, {elapsed:.2?}", proxies.join(", ")),
    );
}

#[test]
fn criterion_10_radius_sanity() {
    const MIN_HITS: usize = 80;
    const LAMBDA: f64 = 0.1;
    // One fixed test set; fresh training draws; ε_0 fixed at 0 and
    // ε_1 = α/√N_1 for α on an even grid over [0, 10].
    let alphas: Vec<f64> = (0..100).map(|i| 10.0 * i as f64 / 99.0).collect();
    let opts = SolverOptions { iterations: 200, restarts: 5, ..Default::default() };
    let test_raw = toy_dataset(&mut ChaCha8Rng::seed_from_u64(0xCA), [8000, 4000]);
    let scores: Vec<Vec<f64>> = (0..100u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xCA ^ ((rep + 1) << 8));
            let train = toy_dataset(&mut rng, [200, 100]).center(None).unwrap();
            let test = test_raw.center(Some(train.center_vector())).unwrap();
            let gm = GroupMoments::from_dataset(&train).unwrap();
            let n1 = gm.counts[1] as f64;
            alphas
                .iter()
                .map(|&alpha| {
                    let cfg = RobustConfig::new(LAMBDA, vec![0.0, alpha / n1.sqrt()], 1).unwrap();
                    let rp = reform_params(&gm, &cfg).unwrap();
                    let sol = solve(&rp, &SolverOptions { seed: rep, ..opts }).unwrap();
                    let v = Projection::from_complement(&sol.best_u, Provenance::RobustFair).unwrap();
                    evaluate(&v, &test).unwrap().score()
                })
                .collect()
        })
        .collect();
    // α* minimizes the mean test score across replications.
    let means: Vec<f64> =
        (0..alphas.len()).map(|j| scores.iter().map(|s| s[j]).sum::<f64>() / scores.len() as f64).collect();
    let best = (0..alphas.len()).fold(0, |b, j| if means[j] < means[b] { j } else { b });
    let hits = scores.iter().filter(|s| s[best] <= s[0]).count();
    record(
        10,
        "larger radius does not hurt out-of-sample score",
        hits >= MIN_HITS,
        &format!(
            "alpha* = {:.3} (mean score {:.5} vs {:.5} at alpha 0), no worse than alpha 0 in {hits}/100",
            alphas[best], means[best], means[0]
        ),
    );
}

#[test]
fn criterion_11_end_to_end_cv() {
    const BUDGET: Duration = Duration::from_secs(300);
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/diabetes.csv");
    let out = tempfile::TempDir::new().unwrap();
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_rfpca"))
        .args(["cv", "--input", data.to_str().unwrap(), "--attr", "sex", "--k", "3", "--standardize", "--out"])
        .arg(out.path())
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    let mut problems = Vec::new();
    if !status.status.success() {
        problems.push(format!("exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
    }
    let read = |name: &str| fs::read_to_string(out.path().join(name)).unwrap_or_default();
    let report: Option<RunReport> = serde_json::from_str(&read("report.json")).ok();
    let model: Option<ModelFile> = serde_json::from_str(&read("model.json")).ok();
    let cv_rows = read("cv.csv").lines().count().saturating_sub(1);
    match &report {
        Some(r) => {
            for f in [&r.train, r.test.as_ref().unwrap_or(&r.train)] {
                let finite = f.are.is_finite() && f.abdiff.is_finite() && f.are >= 0.0 && f.abdiff >= 0.0;
                if !finite || f.group_errors.len() != 2 || r.test.is_none() {
                    problems.push("invalid report values".into());
                }
            }
        }
        None => problems.push("report.json missing or unreadable".into()),
    }
    match model.as_ref().map(|m| (m.v_matrix(), m.features.len())) {
        Some((Ok(v), d)) => {
            let resid = (v.transpose() * &v - Matrix::identity(3, 3)).norm();
            if v.shape() != (d, 3) || resid > 1e-10 {
                problems.push(format!("model basis shape {:?} residual {resid:.1e}", v.shape()));
            }
        }
        _ => problems.push("model.json missing or unreadable".into()),
    }
    if cv_rows != 18 {
        problems.push(format!("cv.csv has {cv_rows} rows"));
    }
    if read("best.json").is_empty() {
        problems.push("best.json missing".into());
    }
    let n = fs::read_to_string(&data).unwrap().lines().count() - 1;
    record(
        11,
        "end-to-end cv on a public dataset",
        problems.is_empty() && elapsed < BUDGET,
        &format!(
            "diabetes N={n}, d={}, 18 grid points x 3 folds, {elapsed:.2?}{}",
            model.as_ref().map_or(0, |m| m.features.len()),
            if problems.is_empty() { String::new() } else { format!("; problems: {}", problems.join("; ")) }
        ),
    );
}
