//! Command-line front end: ingestion, preprocessing, and the `fit`, `cv`,
//! `path` and `simulate` commands.
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! same `f64`. Each command computes everything first and then writes its
//! files by temp-file-and-rename, so a failed run leaves no partial output.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Dataset, PenaltySpec};
use crate::simulate::{generate, Outliers, SimSpec};
use crate::solver::{fit_fused_lad_lasso, SolverConfig};
use crate::tuning::{coefficient_path, grid_search, lambda_grid, CvPlan, GridScale, PathAxis};

#[derive(Debug, Parser)]
#[command(name = "ladlasso", version, about = "Multi-outcome LAD regression with group lasso and fusion penalties")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one fused group LAD-lasso model.
    Fit(FitArgs),
    /// Choose (lambda1, lambda2) by k-fold cross-validation over a grid.
    Cv(CvArgs),
    /// Coefficient trajectories over a sweep of one tuning parameter.
    Path(PathArgs),
    /// Write a simulated dataset with correlated covariate blocks.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Comma- or tab-separated numeric table.
    #[arg(long)]
    pub input: PathBuf,
    /// Outcome columns: `k` for the first k columns, or a 1-based list such as `1,3` or `2-4`.
    #[arg(long, default_value = "1")]
    pub outcomes: String,
    /// The first line holds data, not column names.
    #[arg(long)]
    pub no_header: bool,
    /// Covariates to asinh-transform: `all` or a 1-based list.
    #[arg(long)]
    pub asinh: Option<String>,
    /// Also asinh-transform every outcome column.
    #[arg(long)]
    pub asinh_y: bool,
}

#[derive(Debug, Args)]
pub struct PenaltyArgs {
    /// Penalized covariates: `all`, `none`, or a 1-based list.
    #[arg(long, default_value = "all")]
    pub gamma: String,
    /// Penalized differences (k penalizes covariates k and k+1): `all`, `none`, or a list.
    #[arg(long, default_value = "all")]
    pub delta: String,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Relative objective tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[arg(long, default_value_t = 0.0)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda2: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// lambda1 grid: `start:stop:count,log|lin` or an explicit list `0,0.05,0.2`.
    #[arg(long)]
    pub grid1: String,
    /// lambda2 grid, same format as `--grid1`.
    #[arg(long)]
    pub grid2: String,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Lambda1,
    Lambda2,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// Which tuning parameter to sweep.
    #[arg(long, value_enum, default_value = "lambda1")]
    pub axis: AxisArg,
    /// Sweep values, same format as the cv grids.
    #[arg(long)]
    pub grid: String,
    /// Fixed lambda1 when sweeping lambda2.
    #[arg(long, default_value_t = 0.0)]
    pub lambda1: f64,
    /// Fixed lambda2 when sweeping lambda1.
    #[arg(long, default_value_t = 0.0)]
    pub lambda2: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Fraction of observations shifted in every outcome.
    #[arg(long, default_value_t = 0.0)]
    pub outlier_fraction: f64,
    #[arg(long, default_value_t = 50.0)]
    pub outlier_shift: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Which outcome columns of the input table form `Y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutcomeSpec {
    First(usize),
    /// 1-based column numbers.
    Columns(Vec<usize>),
}

/// A set of covariates (or outcomes) by 1-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSet {
    All,
    List(Vec<usize>),
}

fn config(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

/// Parses `3,5,7-9` into sorted, deduplicated 1-based indices.
pub fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || config(format!("bad column list entry `{part}` in `{s}`"));
        let index = |t: &str| -> Result<usize> {
            match t.trim().parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(bad()),
            }
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (index(a)?, index(b)?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(index(part)?),
        }
    }
    if out.is_empty() {
        return Err(config(format!("empty column list `{s}`")));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

impl OutcomeSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if !s.contains([',', '-']) {
            return match s.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(Self::First(k)),
                _ => Err(config(format!("bad outcome spec `{s}`"))),
            };
        }
        Ok(Self::Columns(parse_index_list(s)?))
    }

    fn columns(&self, width: usize) -> Result<Vec<usize>> {
        let cols: Vec<usize> = match self {
            Self::First(k) => (0..*k).collect(),
            Self::Columns(c) => c.iter().map(|c| c - 1).collect(),
        };
        if cols.iter().any(|&c| c >= width) || cols.len() >= width {
            return Err(config(format!(
                "outcome columns {self:?} leave no covariates in a table with {width} columns"
            )));
        }
        Ok(cols)
    }
}

impl ColumnSet {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(Self::All),
            other => Ok(Self::List(parse_index_list(other)?)),
        }
    }

    fn resolve(&self, count: usize, what: &str) -> Result<Vec<usize>> {
        match self {
            Self::All => Ok((1..=count).collect()),
            Self::List(v) => match v.iter().find(|&&j| j > count) {
                Some(j) => Err(config(format!("{what} index {j} exceeds {count}"))),
                None => Ok(v.clone()),
            },
        }
    }
}

/// Reads a numeric table and splits it into outcomes and covariates. The
/// delimiter is a tab if the first line contains one and a comma otherwise.
/// Parse errors report the 1-based line and column of the offending cell.
pub fn ingest(path: &Path, has_header: bool, outcomes: &OutcomeSpec) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    parse_table(&text, has_header, outcomes, &path.display().to_string())
}

fn parse_table(text: &str, has_header: bool, outcomes: &OutcomeSpec, name: &str) -> Result<Dataset> {
    let first = text.lines().next().unwrap_or("");
    let delimiter = if first.contains('\t') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                row: line,
                col: record.len().min(w) + 1,
                msg: format!("expected {w} fields, found {}", record.len()),
            });
        }
        let mut values = Vec::with_capacity(w);
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                col: c + 1,
                msg: format!("non-numeric cell `{cell}`"),
            })?;
            values.push(v);
        }
        rows.push(values);
    }
    let Some(width) = width else {
        return Err(Error::EmptyFile(name.to_string()));
    };

    let ycols = outcomes.columns(width)?;
    let xcols: Vec<usize> = (0..width).filter(|c| !ycols.contains(c)).collect();
    let n = rows.len();
    let y = DMatrix::from_fn(n, ycols.len(), |i, l| rows[i][ycols[l]]);
    let covariates = DMatrix::from_fn(n, xcols.len(), |i, j| rows[i][xcols[j]]);
    Dataset::from_covariates(y, &covariates)
}

/// Applies `asinh` to the chosen covariates (1-based, never the intercept)
/// and, with `outcomes`, to every outcome column.
pub fn asinh_transform(data: &Dataset, cols: &ColumnSet, outcomes: bool) -> Result<Dataset> {
    let mut x = data.x().clone();
    for j in cols.resolve(data.p(), "asinh covariate")? {
        x.column_mut(j).apply(|v| *v = v.asinh());
    }
    let mut y = data.y().clone();
    if outcomes {
        y.apply(|v| *v = v.asinh());
    }
    Dataset::new(y, x)
}

/// Parses `start:stop:count,log|lin` or an explicit comma list of values.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || config(format!("bad grid `{s}`"));
    if let Some((range, scale)) = s.split_once(',').filter(|_| s.contains(':')) {
        let parts: Vec<&str> = range.split(':').map(str::trim).collect();
        let [start, stop, count] = parts[..] else {
            return Err(bad());
        };
        let scale = match scale.trim() {
            "log" => GridScale::Log,
            "lin" => GridScale::Linear,
            _ => return Err(bad()),
        };
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        let count = count.parse::<usize>().map_err(|_| bad())?;
        return lambda_grid(num(start)?, num(stop)?, count, scale);
    }
    let values = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<f64>>>()?;
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(bad());
    }
    Ok(values)
}

fn indicator(spec: &str, len: usize, what: &str) -> Result<Vec<bool>> {
    if spec.trim() == "none" {
        return Ok(vec![false; len]);
    }
    let mut v = vec![false; len];
    for j in ColumnSet::parse(spec)?.resolve(len, what)? {
        v[j - 1] = true;
    }
    Ok(v)
}

fn penalty(args: &PenaltyArgs, p: usize, lambda1: f64, lambda2: f64) -> Result<PenaltySpec> {
    let gamma = indicator(&args.gamma, p, "gamma")?;
    let delta = indicator(&args.delta, p.saturating_sub(1), "delta")?;
    PenaltySpec::new(gamma, delta, lambda1, lambda2)
}

fn solver_config(args: &SolverArgs) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::default();
    if let Some(m) = args.max_iter {
        cfg.max_iter = m;
    }
    if let Some(t) = args.tol {
        cfg.tol_rel = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load(args: &DataArgs) -> Result<Dataset> {
    let outcomes = OutcomeSpec::parse(&args.outcomes)?;
    let asinh = args.asinh.as_deref().map(ColumnSet::parse).transpose()?;
    let data = ingest(&args.input, !args.no_header, &outcomes)?;
    match (asinh, args.asinh_y) {
        (None, false) => Ok(data),
        (cols, y) => asinh_transform(&data, &cols.unwrap_or(ColumnSet::List(Vec::new())), y),
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn matrix_csv(header: &[String], m: &DMatrix<f64>, first_col: usize) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for i in 0..m.nrows() {
        let row: Vec<String> = (first_col..m.ncols()).map(|j| num(m[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

/// Files produced by a command and whether every fit converged.
#[derive(Debug)]
pub struct Output {
    pub files: Vec<(String, String)>,
    pub converged: bool,
}

/// Writes every file via a temporary sibling and a rename, removing the ones
/// already written if any step fails.
pub fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut done: Vec<PathBuf> = Vec::new();
    for (name, body) in files {
        let target = dir.join(name);
        let tmp = dir.join(format!(".{name}.tmp"));
        let res = fs::write(&tmp, body).and_then(|_| fs::rename(&tmp, &target));
        if let Err(e) = res {
            let _ = fs::remove_file(&tmp);
            for p in &done {
                let _ = fs::remove_file(p);
            }
            return Err(e.into());
        }
        done.push(target);
    }
    Ok(())
}

pub fn run_fit(args: &FitArgs) -> Result<Output> {
    let cfg = solver_config(&args.solver)?;
    let data = load(&args.data)?;
    let pen = penalty(&args.penalty, data.p(), args.lambda1, args.lambda2)?;
    let fit = fit_fused_lad_lasso(&data, &pen, &cfg)?;

    let q = data.q();
    let mut header = vec!["covariate".to_string()];
    header.extend(names("b", q));
    header.extend(["active".into(), "group".into()]);
    let mut coef = header.join(",") + "\n";
    let groups = fit.group_ids();
    for j in 0..=data.p() {
        let b: Vec<String> = (0..q).map(|l| num(fit.b_hat.as_matrix()[(j, l)])).collect();
        let (active, group) = if j == 0 {
            ("NA".to_string(), 0)
        } else {
            (u8::from(fit.active_rows.contains(&j)).to_string(), groups[j - 1])
        };
        let _ = writeln!(coef, "{j},{},{active},{group}", b.join(","));
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "objective={}", num(fit.objective));
    let _ = writeln!(summary, "iterations={}", fit.iterations);
    let _ = writeln!(summary, "converged={}", fit.converged);
    let _ = writeln!(summary, "lambda1={}", num(args.lambda1));
    let _ = writeln!(summary, "lambda2={}", num(args.lambda2));
    let _ = writeln!(summary, "n={}\np={}\nq={}", data.n(), data.p(), q);
    let _ = writeln!(summary, "active={}", fit.active_rows.len());
    let _ = writeln!(summary, "groups={}", fit.fused_groups.len());

    Ok(Output {
        files: vec![("coefficients.csv".into(), coef), ("summary.txt".into(), summary)],
        converged: fit.converged,
    })
}

pub fn run_cv(args: &CvArgs) -> Result<Output> {
    let cfg = solver_config(&args.solver)?;
    let grid1 = parse_grid(&args.grid1)?;
    let grid2 = parse_grid(&args.grid2)?;
    let data = load(&args.data)?;
    let base = penalty(&args.penalty, data.p(), 0.0, 0.0)?;
    let plan = CvPlan::new(data.n(), args.folds, args.seed, &grid1, &grid2)?;
    let surface = grid_search(&data, base.gamma(), base.delta(), &plan, &cfg)?;

    let mut csv = String::from("lambda1,lambda2,cv_error\n");
    for (l1, l2, e) in surface.rows() {
        let _ = writeln!(csv, "{},{},{}", num(l1), num(l2), num(e));
    }
    let mut best = String::new();
    let _ = writeln!(best, "lambda1={}", num(surface.best.0));
    let _ = writeln!(best, "lambda2={}", num(surface.best.1));
    let _ = writeln!(best, "cv_error={}", num(surface.best_error()));
    let _ = writeln!(best, "folds={}\nseed={}", plan.k(), plan.seed());
    let _ = writeln!(best, "failed_points={}", surface.failures.len());
    let _ = writeln!(best, "not_converged_points={}", surface.not_converged);
    for f in &surface.failures {
        let _ = writeln!(best, "failure={},{},{},{}", num(f.lambda1), num(f.lambda2), f.fold, f.message);
    }
    Ok(Output {
        files: vec![("cv_surface.csv".into(), csv), ("best.txt".into(), best)],
        converged: surface.not_converged == 0,
    })
}

pub fn run_path(args: &PathArgs) -> Result<Output> {
    let cfg = solver_config(&args.solver)?;
    let grid = parse_grid(&args.grid)?;
    let data = load(&args.data)?;
    let pen = penalty(&args.penalty, data.p(), args.lambda1, args.lambda2)?;
    let axis = match args.axis {
        AxisArg::Lambda1 => PathAxis::Lambda1,
        AxisArg::Lambda2 => PathAxis::Lambda2,
    };
    let path = coefficient_path(&data, &pen, axis, &grid, &cfg)?;
    let mut csv = String::from("lambda,covariate,outcome,value\n");
    for (lam, fit) in &path {
        let b = fit.b_hat.as_matrix();
        for j in 0..b.nrows() {
            for l in 0..b.ncols() {
                let _ = writeln!(csv, "{},{j},{},{}", num(*lam), l + 1, num(b[(j, l)]));
            }
        }
    }
    Ok(Output {
        files: vec![("path.csv".into(), csv)],
        converged: path.iter().all(|(_, f)| f.converged),
    })
}

pub fn run_simulate(args: &SimulateArgs) -> Result<Output> {
    let spec = SimSpec {
        n: args.n,
        seed: args.seed,
        outliers: (args.outlier_fraction > 0.0).then_some(Outliers {
            fraction: args.outlier_fraction,
            shift: args.outlier_shift,
        }),
        ..SimSpec::default()
    };
    let (data, b_true) = generate(&spec)?;
    let (p, q) = (data.p(), data.q());

    let combined = DMatrix::from_fn(data.n(), q + p, |i, c| if c < q { data.y()[(i, c)] } else { data.x()[(i, c - q + 1)] });
    let mut data_header = names("y", q);
    data_header.extend(names("x", p));

    let mut b_header = vec!["covariate".to_string()];
    b_header.extend(names("b", q));
    let mut b_csv = b_header.join(",") + "\n";
    for j in 0..=p {
        let row: Vec<String> = (0..q).map(|l| num(b_true.as_matrix()[(j, l)])).collect();
        let _ = writeln!(b_csv, "{j},{}", row.join(","));
    }

    let mut manifest = String::new();
    let _ = writeln!(manifest, "seed={}", spec.seed);
    let _ = writeln!(manifest, "n={}\np={}\nq={}", spec.n, p, q);
    let _ = writeln!(manifest, "outlier_fraction={}", num(args.outlier_fraction));
    let _ = writeln!(manifest, "outlier_shift={}", num(args.outlier_shift));
    let _ = writeln!(manifest, "data=data.csv (outcomes y1..y{q}, then covariates x1..x{p})");

    Ok(Output {
        files: vec![
            ("Y.csv".into(), matrix_csv(&names("y", q), data.y(), 0)),
            ("X.csv".into(), matrix_csv(&names("x", p), data.x(), 1)),
            ("data.csv".into(), matrix_csv(&data_header, &combined, 0)),
            ("B_true.csv".into(), b_csv),
            ("manifest.txt".into(), manifest),
        ],
        converged: true,
    })
}

/// Stable identifier of an error kind for the machine-readable error line.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DimensionMismatch(_) => "dimension_mismatch",
        Error::NonFinite { .. } => "non_finite",
        Error::BadIntercept { .. } => "bad_intercept",
        Error::InvalidPenalty(_) => "invalid_penalty",
        Error::DegenerateP { .. } => "degenerate_p",
        Error::RankDeficient { .. } => "rank_deficient",
        Error::InvalidConfig(_) => "invalid_config",
        Error::FoldTooSmall { .. } => "fold_too_small",
        Error::InvalidPlan(_) => "invalid_plan",
        Error::BadSpec(_) => "bad_spec",
        Error::Parse { .. } => "parse_error",
        Error::EmptyFile(_) => "empty_file",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
    }
}

/// Exit code of an error: 2 for configuration problems, 3 for data problems.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidPenalty(_)
        | Error::InvalidConfig(_)
        | Error::InvalidPlan(_)
        | Error::BadSpec(_)
        | Error::DegenerateP { .. } => 2,
        _ => 3,
    }
}

/// Runs one command. Returns 0 on success and 4 when outputs were written
/// but some fit hit its iteration limit.
pub fn run(cli: &Cli) -> Result<i32> {
    let (out, dir) = match &cli.command {
        Command::Fit(a) => (run_fit(a)?, &a.out),
        Command::Cv(a) => (run_cv(a)?, &a.out),
        Command::Path(a) => (run_path(a)?, &a.out),
        Command::Simulate(a) => (run_simulate(a)?, &a.out),
    };
    write_outputs(dir, &out.files)?;
    Ok(if out.converged { 0 } else { 4 })
}

/// Parses arguments, runs, and reports errors on stderr as
/// `error kind=<kind> exit=<code>: <message>`.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(0) => 0,
        Ok(code) => {
            eprintln!("error kind=not_converged exit={code}: iteration limit reached; outputs written");
            code
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error kind={} exit={code}: {e}", error_kind(&e));
            code
        }
    }
}
