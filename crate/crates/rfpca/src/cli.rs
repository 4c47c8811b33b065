//! Command-line definitions and command runners.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rfpca_core::data::GroupMoments;
use rfpca_core::metrics::{evaluate, fair_projection_test};
use rfpca_core::optimizer::SolverOptions;
use rfpca_core::Retraction;
use serde::Serialize;

use crate::error::{AppError, Result};
use crate::experiment::{
    grid, prepare, prepare_split, run_cv, run_sweep, write_csv, Prepared, TestCenter, DEFAULT_ALPHAS, DEFAULT_LAMBDAS,
};
use crate::fit::{fit_pca, fit_robust, FitParams, Fitted};
use crate::loader::{load_csv, AttrSpec, LoadOptions, LoadedData};
use crate::model::{matrix_rows, write_json, FitConfig, ModelFile, RunReport, MODEL_VERSION};
use crate::split::stratified_split;
use crate::svg::{scatter, Point};

#[derive(Debug, Parser)]
#[command(name = "rfpca", version, about = "Distributionally robust fairness-aware PCA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one robust fair projection.
    Fit(FitArgs),
    /// Fit nominal PCA.
    Pca(PcaArgs),
    /// Fit every (lambda, alpha) grid point and plot ARE against ABDiff.
    Sweep(GridArgs),
    /// Select (lambda, alpha) by stratified k-fold cross-validation, then refit.
    Cv(CvArgs),
    /// Test whether some k-dimensional projection equalizes the two group errors.
    Fairtest(FairtestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RetractionArg {
    Qf,
    Polar,
}

impl From<RetractionArg> for Retraction {
    fn from(r: RetractionArg) -> Self {
        match r {
            RetractionArg::Qf => Retraction::Qf,
            RetractionArg::Polar => Retraction::Polar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestCenterArg {
    Train,
    Test,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Attribute column by name or index, optionally thresholded (e.g. `Orientation<4`).
    #[arg(long)]
    pub attr: String,
    /// Comma-separated feature columns; defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Keep columns whose standard deviation is below 1e-5 or above 1000.
    #[arg(long)]
    pub keep_degenerate: bool,
    /// Projection dimension.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "rfpca-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    /// Training fraction; 1 trains on everything and skips the test report.
    #[arg(long, default_value_t = 0.3)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = TestCenterArg::Train)]
    pub test_center: TestCenterArg,
    /// Divide features by their training standard deviation.
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Iterations per restart.
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, value_enum, default_value_t = RetractionArg::Polar)]
    pub retraction: RetractionArg,
    /// Constant step; defaults to 1/sqrt(iters + 1).
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Radii are alpha / sqrt(N_a).
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PcaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Comma-separated lambda grid.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAMBDAS)]
    pub lambda: Vec<f64>,
    /// Comma-separated alpha grid.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ALPHAS)]
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 3)]
    pub folds: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FairtestArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

impl SolverArgs {
    fn options(&self, seed: u64) -> Result<SolverOptions> {
        let opts = SolverOptions {
            iterations: self.iters,
            restarts: self.restarts,
            retraction: self.retraction.into(),
            seed,
            step_override: self.step,
        };
        opts.validate()?;
        Ok(opts)
    }
}

impl SplitArgs {
    fn test_center(&self) -> TestCenter {
        match self.test_center {
            TestCenterArg::Train => TestCenter::Train,
            TestCenterArg::Test => TestCenter::Test,
        }
    }
}

fn load(input: &InputArgs) -> Result<LoadedData> {
    let attr: AttrSpec = input.attr.parse()?;
    if !input.delimiter.is_ascii() {
        return Err(AppError::validation("delimiter must be a single ASCII character"));
    }
    let opts = LoadOptions {
        attr,
        features: input.features.clone(),
        delimiter: input.delimiter as u8,
        drop_degenerate: !input.keep_degenerate,
    };
    let loaded = load_csv(&input.input, &opts)?;
    if input.k == 0 || input.k >= loaded.dataset.dim() {
        return Err(AppError::validation(format!(
            "k = {} must satisfy 1 <= k < d = {}",
            input.k,
            loaded.dataset.dim()
        )));
    }
    Ok(loaded)
}

fn split_and_prepare(loaded: &LoadedData, args: &SplitArgs) -> Result<Prepared> {
    if args.split == 1.0 {
        return prepare(&loaded.dataset, None, args.standardize, args.test_center());
    }
    let split = stratified_split(loaded.dataset.labels(), args.split, args.seed)?;
    prepare_split(&loaded.dataset, Some(&split), args.standardize, args.test_center())
}

fn out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| AppError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| AppError::Write {
        path: path.to_path_buf(),
        source,
    })
}

struct Emit<'a> {
    command: &'a str,
    input: &'a InputArgs,
    loaded: &'a LoadedData,
    prepared: &'a Prepared,
    fitted: &'a Fitted,
    config: FitConfig,
}

/// Write `model.json` and `report.json`.
fn emit(e: Emit<'_>) -> Result<RunReport> {
    let train = evaluate(&e.fitted.projection, &e.prepared.train)?;
    let test = e
        .prepared
        .test
        .as_ref()
        .map(|t| evaluate(&e.fitted.projection, t))
        .transpose()?;
    let model = ModelFile {
        version: MODEL_VERSION,
        provenance: e.fitted.projection.provenance,
        features: e.loaded.feature_names.clone(),
        attribute: e.input.attr.clone(),
        groups: e.loaded.group_values.clone(),
        center: e.prepared.center.iter().copied().collect(),
        scale: e.prepared.scale.as_ref().map(|s| s.iter().copied().collect()),
        objective: e.fitted.objective,
        v: matrix_rows(e.fitted.projection.matrix()),
        u: e.fitted.u.as_ref().map(|u| matrix_rows(u.matrix())),
        config: e.config.clone(),
    };
    let report = RunReport {
        command: e.command.into(),
        k: e.input.k,
        lambda: e.config.lambda,
        alpha: e.config.alpha,
        objective: e.fitted.objective,
        groups: e.loaded.group_values.clone(),
        train,
        test,
    };
    out_dir(&e.input.out)?;
    write_json(&e.input.out.join("model.json"), &model)?;
    write_json(&e.input.out.join("report.json"), &report)?;
    Ok(report)
}

pub fn cmd_fit(args: &FitArgs) -> Result<RunReport> {
    let loaded = load(&args.input)?;
    let prepared = split_and_prepare(&loaded, &args.split)?;
    let solver = args.solver.options(args.split.seed)?;
    let params = FitParams {
        k: args.input.k,
        lambda: args.lambda,
        alpha: args.alpha,
    };
    let fitted = fit_robust(&prepared.train, &params, &solver, Some(&loaded.group_values))?;
    let config = FitConfig {
        k: args.input.k,
        lambda: Some(args.lambda),
        alpha: Some(args.alpha),
        radii: fitted.radii.clone(),
        solver: Some(solver),
        split: Some(args.split.split),
        standardize: args.split.standardize,
    };
    emit(Emit {
        command: "fit",
        input: &args.input,
        loaded: &loaded,
        prepared: &prepared,
        fitted: &fitted,
        config,
    })
}

pub fn cmd_pca(args: &PcaArgs) -> Result<RunReport> {
    let loaded = load(&args.input)?;
    let prepared = split_and_prepare(&loaded, &args.split)?;
    let fitted = fit_pca(&prepared.train, args.input.k)?;
    let config = FitConfig {
        k: args.input.k,
        lambda: None,
        alpha: None,
        radii: fitted.radii.clone(),
        solver: None,
        split: Some(args.split.split),
        standardize: args.split.standardize,
    };
    emit(Emit {
        command: "pca",
        input: &args.input,
        loaded: &loaded,
        prepared: &prepared,
        fitted: &fitted,
        config,
    })
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') || s.contains('e') {
        s
    } else {
        format!("{s}.0")
    }
}

pub fn cmd_sweep(args: &GridArgs) -> Result<Vec<crate::experiment::SweepRow>> {
    let loaded = load(&args.input)?;
    let prepared = split_and_prepare(&loaded, &args.split)?;
    let solver = args.solver.options(args.split.seed)?;
    let points = grid(&args.lambda, &args.alpha)?;
    let rows = run_sweep(&prepared, args.input.k, &points, &solver);
    out_dir(&args.input.out)?;
    write_csv(&args.input.out.join("sweep.csv"), &rows)?;
    let pts: Vec<Point> = rows
        .iter()
        .filter_map(|r| {
            Some(Point {
                x: r.are?,
                y: r.abdiff?,
                label: format!("λ={} α={}", fmt_num(r.lambda), fmt_num(r.alpha)),
            })
        })
        .collect();
    let split_name = if prepared.test.is_some() { "test" } else { "train" };
    write_text(
        &args.input.out.join("sweep.svg"),
        &scatter(&pts, "ARE", "ABDiff", &format!("ARE vs ABDiff ({split_name} split)")),
    )?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvSelection {
    pub lambda: f64,
    pub alpha: f64,
    pub mean_score: f64,
    pub folds: usize,
}

pub fn cmd_cv(args: &CvArgs) -> Result<(CvSelection, RunReport)> {
    let g = &args.grid;
    let loaded = load(&g.input)?;
    let solver = g.solver.options(g.split.seed)?;
    let points = grid(&g.lambda, &g.alpha)?;
    let (train_raw, split) = if g.split.split == 1.0 {
        (loaded.dataset.clone(), None)
    } else {
        let s = stratified_split(loaded.dataset.labels(), g.split.split, g.split.seed)?;
        (loaded.dataset.subset(&s.train)?, Some(s))
    };
    let outcome = run_cv(&train_raw, g.input.k, &points, &solver, args.folds, g.split.seed, g.split.standardize)?;
    out_dir(&g.input.out)?;
    write_csv(&g.input.out.join("cv.csv"), &outcome.rows)?;
    let best = &outcome.rows[outcome.best];
    let selection = CvSelection {
        lambda: best.lambda,
        alpha: best.alpha,
        mean_score: best.mean_score.unwrap_or(f64::NAN),
        folds: args.folds,
    };
    write_json(&g.input.out.join("best.json"), &selection)?;

    let prepared = prepare_split(&loaded.dataset, split.as_ref(), g.split.standardize, g.split.test_center())?;
    let params = FitParams {
        k: g.input.k,
        lambda: best.lambda,
        alpha: best.alpha,
    };
    let fitted = fit_robust(&prepared.train, &params, &solver, Some(&loaded.group_values))?;
    let config = FitConfig {
        k: g.input.k,
        lambda: Some(best.lambda),
        alpha: Some(best.alpha),
        radii: fitted.radii.clone(),
        solver: Some(solver),
        split: Some(g.split.split),
        standardize: g.split.standardize,
    };
    let report = emit(Emit {
        command: "cv",
        input: &g.input,
        loaded: &loaded,
        prepared: &prepared,
        fitted: &fitted,
        config,
    })?;
    Ok((selection, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairtestReport {
    pub exists: bool,
    pub rank: usize,
    pub k: usize,
    pub groups: Vec<String>,
    pub v: Option<Vec<Vec<f64>>>,
}

/// Rank test on the difference of the two groups' second moments.
pub fn cmd_fairtest(args: &FairtestArgs) -> Result<FairtestReport> {
    let loaded = load(&args.input)?;
    if loaded.dataset.groups() != 2 {
        return Err(AppError::validation(format!(
            "fairtest needs a binary attribute, found {} groups",
            loaded.dataset.groups()
        )));
    }
    let centered = loaded.dataset.center(None)?;
    let gm = GroupMoments::from_dataset(&centered)?;
    let s = &gm.second_moments[0] - &gm.second_moments[1];
    let test = fair_projection_test(&s, args.input.k)?;
    let report = FairtestReport {
        exists: test.exists,
        rank: test.rank,
        k: args.input.k,
        groups: loaded.group_values.clone(),
        v: test.projection.as_ref().map(|p| matrix_rows(p.matrix())),
    };
    out_dir(&args.input.out)?;
    write_json(&args.input.out.join("fairtest.json"), &report)?;
    Ok(report)
}

/// Run a parsed command; the caller maps errors to exit codes.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => {
            let r = cmd_fit(a)?;
            print_summary(&r);
        }
        Command::Pca(a) => {
            let r = cmd_pca(a)?;
            print_summary(&r);
        }
        Command::Sweep(a) => {
            let rows = cmd_sweep(a)?;
            let ok = rows.iter().filter(|r| r.status == "ok").count();
            println!("{ok}/{} grid points ok; wrote {}", rows.len(), a.input.out.join("sweep.csv").display());
        }
        Command::Cv(a) => {
            let (sel, r) = cmd_cv(a)?;
            println!(
                "selected lambda={} alpha={} (mean ARE+ABDiff {:.6})",
                sel.lambda, sel.alpha, sel.mean_score
            );
            print_summary(&r);
        }
        Command::Fairtest(a) => {
            let r = cmd_fairtest(a)?;
            println!("rank {}, k {}: fair projection {}", r.rank, r.k, if r.exists { "exists" } else { "does not exist" });
        }
    }
    Ok(())
}

fn print_summary(r: &RunReport) {
    println!("train: ARE {:.6} ABDiff {:.6}", r.train.are, r.train.abdiff);
    if let Some(t) = &r.test {
        println!("test:  ARE {:.6} ABDiff {:.6}", t.are, t.abdiff);
    }
}
