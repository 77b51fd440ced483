mod terms;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dpm_core::diagnostics::{
    grid_sweep, load_csv, parse_log_grid, transect_sweep, CvConfig, DiagnosticRow, Flexible, Interpretable, LearnerPair,
    SweepReport, TransectConfig,
};
use dpm_core::experiments::{
    run_consistency, run_example1, run_example2, run_table1, run_table2, ConsistencyConfig, Example1Config,
    Example2Config, Table1Config, Table2Config,
};
use dpm_core::kernel::{Kernel, KernelRidgeFitter, MaternSpec};
use dpm_core::model::{Descriptor, MemberSummary, StopReason};
use dpm_core::numerics::DenseMatrix;
use dpm_core::separability::{analytic_report, empirical_theta, SeparabilityReport};
use dpm_core::{fit_double_penalty, Dataset, DpmError, FunctionClassFitter, StoppingRule};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Double penalty additive regression: fits, tuning diagnostics and simulation studies.
///
/// Features are min-max rescaled to [0, 1] internally; coefficients are
/// reported on the original scale. Any transformation of features or the
/// response (for example taking logs) must be applied to the CSV beforehand.
///
/// Exit codes: 0 success, 2 invalid input, 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "dpm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one double penalty model and write a JSON summary.
    Fit(FitArgs),
    /// Cross-validated correlations along log10(λ_f) + log10(λ_g) = c.
    Transect(TransectArgs),
    /// Cross-validated correlations over the full (λ_f, λ_g) grid.
    Grid(GridArgs),
    /// Run a seeded simulation study and write `<study>_seed<seed>.{csv,json}`.
    Simulate(SimulateArgs),
    /// Separability of two function classes.
    Separability(SeparabilityArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InterpArg {
    Linear,
    Lasso,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FlexArg {
    Kernel,
    Stumps,
}

impl From<InterpArg> for Interpretable {
    fn from(a: InterpArg) -> Self {
        match a {
            InterpArg::Linear => Interpretable::Linear,
            InterpArg::Lasso => Interpretable::Lasso,
        }
    }
}

impl From<FlexArg> for Flexible {
    fn from(a: FlexArg) -> Self {
        match a {
            FlexArg::Kernel => Flexible::Kernel,
            FlexArg::Stumps => Flexible::Stumps,
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Headed CSV; every cell must be numeric.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    response: String,
    /// Comma-separated feature columns (default: all but the response).
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset, DpmError> {
        load_csv(&self.data, &self.response, self.features.as_deref())
    }
}

#[derive(Debug, Args)]
struct LearnerArgs {
    #[arg(long, value_enum, default_value = "linear")]
    interp: InterpArg,
    #[arg(long, value_enum, default_value = "kernel")]
    flex: FlexArg,
    /// Matérn smoothness for the kernel class (default: p/2 + 1.5).
    #[arg(long)]
    nu: Option<f64>,
    /// Matérn range parameter on the rescaled features.
    #[arg(long, default_value_t = 1.0)]
    phi: f64,
}

impl LearnerArgs {
    fn pair(&self) -> LearnerPair {
        let mut pair = LearnerPair::new(self.interp.into(), self.flex.into());
        pair.kernel_nu = self.nu;
        pair.kernel_phi = self.phi;
        pair
    }
}

#[derive(Debug, Args)]
struct CvArgs {
    #[arg(long, default_value_t = 5)]
    cv_folds: usize,
    #[arg(long, default_value_t = 10)]
    cv_repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CvArgs {
    fn config(&self) -> CvConfig {
        CvConfig {
            folds: self.cv_folds,
            repeats: self.cv_repeats,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    learners: LearnerArgs,
    #[arg(long)]
    lambda_f: f64,
    /// Required unless `--gcv` is given.
    #[arg(long)]
    lambda_g: Option<f64>,
    /// Choose the kernel penalty by generalized cross-validation.
    #[arg(long, conflicts_with = "lambda_g")]
    gcv: bool,
    /// Output JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TransectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    learners: LearnerArgs,
    /// The transect constant.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c: f64,
    /// λ_f grid as `lo:hi:k` in log10 units.
    #[arg(long, default_value = "-4:2:25", allow_hyphen_values = true)]
    lf_grid: String,
    #[command(flatten)]
    cv: CvArgs,
    /// Output CSV; a JSON summary is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    learners: LearnerArgs,
    #[arg(long, default_value = "-4:2:25", allow_hyphen_values = true)]
    lf_grid: String,
    #[arg(long, default_value = "-4:2:25", allow_hyphen_values = true)]
    lg_grid: String,
    /// Also sweep this transect and report the gap between the maxima.
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[command(flatten)]
    cv: CvArgs,
    /// Output CSV of the grid rows; a JSON summary is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Study {
    Table1,
    Table2,
    Example1,
    Example2,
    Consistency,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(value_enum)]
    study: Study,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Override the number of replications.
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Debug, Args)]
struct SeparabilityArgs {
    /// Closed-form value for `x` against `sin(θx)` on [0, 1].
    #[arg(long, conflicts_with_all = ["data", "basis_f", "basis_g"], required_unless_present = "data")]
    analytic_psi: Option<f64>,
    /// CSV whose columns the basis terms refer to.
    #[arg(long, requires_all = ["basis_f", "basis_g"])]
    data: Option<PathBuf>,
    /// Terms such as `1,x1,x2^2,sin(3*x1),cos(x2)`.
    #[arg(long)]
    basis_f: Option<String>,
    #[arg(long)]
    basis_g: Option<String>,
    /// Output JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_json(value: &impl Serialize, out: Option<&Path>) -> Result<(), DpmError> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct FitSummary<'a> {
    version: &'a str,
    data: String,
    response: &'a str,
    features: &'a [String],
    n: usize,
    interp: String,
    flex: String,
    lambda_f: f64,
    lambda_g: Option<f64>,
    gcv: bool,
    iterations: usize,
    stop_reason: StopReason,
    objective: f64,
    training_rmse: f64,
    f: MemberSummary,
    /// Linear slopes per feature on the original scale, then the intercept.
    f_original_scale: Option<OriginalLinear>,
    g: MemberSummary,
}

#[derive(Serialize)]
struct OriginalLinear {
    slopes: Vec<(String, f64)>,
    intercept: f64,
}

fn run_fit(args: &FitArgs) -> Result<(), DpmError> {
    let data = args.data.load()?;
    let pair = args.learners.pair();
    let p = data.p();
    let lambda_g = match (args.gcv, args.lambda_g, args.learners.flex) {
        (true, _, FlexArg::Stumps) => {
            return Err(DpmError::Validation("--gcv only applies to the kernel class".into()))
        }
        (true, _, FlexArg::Kernel) => 0.0,
        (false, Some(v), _) => v,
        (false, None, _) => return Err(DpmError::Validation("--lambda-g is required without --gcv".into())),
    };
    let (f_class, mut g_class) = pair.fitters(p, args.lambda_f, lambda_g)?;
    if args.gcv {
        let spec = MaternSpec::new(pair.kernel_nu.unwrap_or(p as f64 / 2.0 + 1.5), p, pair.kernel_phi)?;
        g_class = Box::new(KernelRidgeFitter::with_gcv(Kernel::Matern(spec), data.n())) as Box<dyn FunctionClassFitter>;
    }
    let fit = fit_double_penalty(&data, f_class.as_ref(), g_class.as_ref(), StoppingRule::default())?;
    let fitted = fit.fitted();
    let rss: f64 = data.y().iter().zip(&fitted).map(|(y, v)| (y - v).powi(2)).sum();
    let f_original_scale = match fit.f_hat.descriptor() {
        Descriptor::Linear(m) => {
            let (slopes, intercept) = m.original_scale(data.omega());
            Some(OriginalLinear {
                slopes: data.feature_names().iter().cloned().zip(slopes).collect(),
                intercept,
            })
        }
        _ => None,
    };
    let chosen_lambda_g = match fit.g_hat.descriptor() {
        Descriptor::KernelExpansion(m) => Some(m.lambda),
        _ => args.lambda_g,
    };
    let summary = FitSummary {
        version: VERSION,
        data: args.data.data.display().to_string(),
        response: data.response_name(),
        features: data.feature_names(),
        n: data.n(),
        interp: format!("{:?}", args.learners.interp).to_lowercase(),
        flex: format!("{:?}", args.learners.flex).to_lowercase(),
        lambda_f: args.lambda_f,
        lambda_g: chosen_lambda_g,
        gcv: args.gcv,
        iterations: fit.iterations(),
        stop_reason: fit.stop_reason,
        objective: fit.final_objective(),
        training_rmse: (rss / data.n() as f64).sqrt(),
        f: fit.f_hat.summary(),
        f_original_scale,
        g: fit.g_hat.summary(),
    };
    write_json(&summary, args.out.as_deref())
}

fn write_rows(rows: &[DiagnosticRow], path: &Path) -> Result<(), DpmError> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(["lambda_f", "lambda_g", "cor_f", "cor_g", "cor_fg"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Fails when no cell of a sweep succeeded; the sweep's own failures decide
/// between invalid input and numerical trouble.
fn require_rows(report: &SweepReport) -> Result<(), DpmError> {
    match report.failures.first() {
        Some(f) if report.rows.is_empty() => {
            let msg = format!("every cell failed, first: {}", f.message);
            Err(if f.numerical {
                DpmError::Numerical(msg)
            } else {
                DpmError::Validation(msg)
            })
        }
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct SweepSummary<'a, T: Serialize> {
    version: &'a str,
    command: &'a str,
    data: String,
    response: &'a str,
    features: &'a [String],
    cv: CvConfig,
    learners: LearnerPair,
    #[serde(flatten)]
    details: T,
}

fn run_transect(args: &TransectArgs) -> Result<(), DpmError> {
    let data = args.data.load()?;
    let config = TransectConfig {
        c: args.c,
        lambda_f_grid: parse_log_grid(&args.lf_grid)?,
        learners: args.learners.pair(),
    };
    let cv = args.cv.config();
    let report = transect_sweep(&data, &config, &cv)?;
    require_rows(&report)?;
    write_rows(&report.rows, &args.out)?;
    #[derive(Serialize)]
    struct Details<'a> {
        c: f64,
        lambda_f_grid: &'a [f64],
        max_cor_fg: Option<f64>,
        failures: &'a [dpm_core::diagnostics::CellFailure],
    }
    let summary = SweepSummary {
        version: VERSION,
        command: "transect",
        data: args.data.data.display().to_string(),
        response: data.response_name(),
        features: data.feature_names(),
        cv,
        learners: config.learners,
        details: Details {
            c: config.c,
            lambda_f_grid: &config.lambda_f_grid,
            max_cor_fg: report.max_cor_fg(),
            failures: &report.failures,
        },
    };
    write_json(&summary, Some(&args.out.with_extension("json")))
}

fn run_grid(args: &GridArgs) -> Result<(), DpmError> {
    let data = args.data.load()?;
    let lf = parse_log_grid(&args.lf_grid)?;
    let lg = parse_log_grid(&args.lg_grid)?;
    let learners = args.learners.pair();
    let cv = args.cv.config();
    let report = grid_sweep(&data, &learners, &lf, &lg, args.c, &cv)?;
    require_rows(&report.grid)?;
    write_rows(&report.grid.rows, &args.out)?;
    #[derive(Serialize)]
    struct Details<'a> {
        c: Option<f64>,
        lambda_f_grid: &'a [f64],
        lambda_g_grid: &'a [f64],
        grid_max: Option<f64>,
        transect_max: Option<f64>,
        gap: Option<f64>,
        transect_rows: Option<&'a [DiagnosticRow]>,
        failures: &'a [dpm_core::diagnostics::CellFailure],
    }
    let summary = SweepSummary {
        version: VERSION,
        command: "grid",
        data: args.data.data.display().to_string(),
        response: data.response_name(),
        features: data.feature_names(),
        cv,
        learners,
        details: Details {
            c: args.c,
            lambda_f_grid: &lf,
            lambda_g_grid: &lg,
            grid_max: report.grid_max,
            transect_max: report.transect_max,
            gap: report.gap,
            transect_rows: report.transect.as_ref().map(|t| t.rows.as_slice()),
            failures: &report.grid.failures,
        },
    };
    write_json(&summary, Some(&args.out.with_extension("json")))
}

fn run_simulate(args: &SimulateArgs) -> Result<(), DpmError> {
    let (csv, json, secs) = match args.study {
        Study::Table1 => {
            let mut c = Table1Config::default();
            if let Some(r) = args.reps {
                c.settings.reps = r;
            }
            let r = run_table1(&c, args.seed)?;
            let (a, b) = r.write_outputs(&args.out_dir)?;
            (a, b, r.wall_time.as_secs_f64())
        }
        Study::Table2 => {
            let mut c = Table2Config::default();
            if let Some(r) = args.reps {
                c.settings.reps = r;
            }
            let r = run_table2(&c, args.seed)?;
            let (a, b) = r.write_outputs(&args.out_dir)?;
            (a, b, r.wall_time.as_secs_f64())
        }
        Study::Example1 => {
            let mut c = Example1Config::default();
            if let Some(r) = args.reps {
                c.reps = r;
            }
            let r = run_example1(&c, args.seed)?;
            let (a, b) = r.write_outputs(&args.out_dir)?;
            (a, b, r.wall_time.as_secs_f64())
        }
        Study::Example2 => {
            let mut c = Example2Config::default();
            if let Some(r) = args.reps {
                c.reps = r;
            }
            let r = run_example2(&c, args.seed)?;
            let (a, b) = r.write_outputs(&args.out_dir)?;
            (a, b, r.wall_time.as_secs_f64())
        }
        Study::Consistency => {
            let mut c = ConsistencyConfig::default();
            if let Some(r) = args.reps {
                c.seeds = r;
            }
            let r = run_consistency(&c, args.seed)?;
            let (a, b) = r.write_outputs(&args.out_dir)?;
            (a, b, r.wall_time.as_secs_f64())
        }
    };
    eprintln!("wrote {} and {} in {secs:.1} s", csv.display(), json.display());
    Ok(())
}

fn evaluate_terms(spec: &str, columns: &std::collections::HashMap<String, Vec<f64>>, n: usize) -> Result<DenseMatrix, DpmError> {
    let terms = terms::parse_terms(spec).map_err(DpmError::Validation)?;
    for t in &terms {
        if let Some(c) = t.column() {
            if !columns.contains_key(c) {
                return Err(DpmError::Validation(format!("column {c:?} not found")));
            }
        }
    }
    Ok(DenseMatrix::from_fn(n, terms.len(), |i, j| {
        let v = terms[j].column().map_or(0.0, |c| columns[c][i]);
        terms[j].eval(v)
    }))
}

fn run_separability(args: &SeparabilityArgs) -> Result<(), DpmError> {
    #[derive(Serialize)]
    struct Out<'a> {
        version: &'a str,
        basis_f: Option<&'a str>,
        basis_g: Option<&'a str>,
        n: Option<usize>,
        #[serde(flatten)]
        report: SeparabilityReport,
    }
    let (report, n) = match (&args.analytic_psi, &args.data) {
        (Some(theta), _) => (analytic_report(*theta)?, None),
        (None, Some(path)) => {
            let columns = terms::read_columns(path)?;
            let n = columns.values().next().map_or(0, Vec::len);
            if n == 0 {
                return Err(DpmError::Validation(format!("{} has no data rows", path.display())));
            }
            let f = evaluate_terms(args.basis_f.as_deref().unwrap_or_default(), &columns, n)?;
            let g = evaluate_terms(args.basis_g.as_deref().unwrap_or_default(), &columns, n)?;
            (empirical_theta(&f, &g)?, Some(n))
        }
        (None, None) => return Err(DpmError::Validation("give --analytic-psi or --data".into())),
    };
    write_json(
        &Out {
            version: VERSION,
            basis_f: args.basis_f.as_deref(),
            basis_g: args.basis_g.as_deref(),
            n,
            report,
        },
        args.out.as_deref(),
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Fit(a) => run_fit(a),
        Command::Transect(a) => run_transect(a),
        Command::Grid(a) => run_grid(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Separability(a) => run_separability(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
