//! Subcommands of the `ctrlmart` binary.
//!
//! Every setting can come from a flag or from the `--config` file; flags
//! win. All settings are checked before any computation starts.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use ctrlmart_core::certifier::{certify, Direction, RadialGrid, ScanOptions, TestFunction};
use ctrlmart_core::eigensolver::{alpha_bounds, solve_alpha, EigenPair, ShootOptions};
use ctrlmart_core::simulator::{check_trials, Strategy};
use ctrlmart_core::value_dp::{azuma_check, fit_exponent, DpOptions, Lattice, Retain};
use ctrlmart_core::{operators::parse_family, ControlFamily, FiniteFamily, Mode};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::par;
use crate::records::{to_json, CertificateRecord, DpSummary, EstimateRecord};
use crate::table::{fmt_num, Table};

#[derive(Debug, Parser)]
#[command(name = "ctrlmart", version, about = "Decay exponents of controlled martingales")]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Principal eigenvalue of a rotationally invariant operator.
    Eigen(EigenArgs),
    /// Exact lattice dynamic programming for a finite family.
    Dp(DpArgs),
    /// Certificate for one explicit test function.
    Certify(CertifyArgs),
    /// Bent-Gaussian certificates over a list of lambdas.
    Scan(ScanArgs),
    /// Monte Carlo hitting estimate under a strategy.
    Simulate(SimulateArgs),
    /// Solver exponent next to the classical bounds.
    BoundsTable(BoundsArgs),
}

/// Comma-separated list of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct NumList(pub Vec<f64>);

impl FromStr for NumList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", t.trim())))
            .collect::<std::result::Result<_, _>>()
            .map(NumList)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Min,
    Max,
    FixedNorm,
}

impl FromStr for OpKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "min" => Ok(OpKind::Min),
            "max" => Ok(OpKind::Max),
            "fixednorm" => Ok(OpKind::FixedNorm),
            other => Err(format!("unknown operator `{other}` (min, max, fixednorm)")),
        }
    }
}

impl OpKind {
    fn as_str(self) -> &'static str {
        match self {
            OpKind::Min => "min",
            OpKind::Max => "max",
            OpKind::FixedNorm => "fixednorm",
        }
    }

    fn family(self, lambda: f64, dim: usize) -> Result<ControlFamily> {
        Ok(match self {
            OpKind::Min => ControlFamily::pucci_minimal(lambda, dim)?,
            OpKind::Max => ControlFamily::pucci_maximal(lambda, dim)?,
            OpKind::FixedNorm => ControlFamily::fixed_norm(lambda, dim)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Gaussian,
    Bent,
}

impl FromStr for TestKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian" => Ok(TestKind::Gaussian),
            "bent" => Ok(TestKind::Bent),
            other => Err(format!("unknown test function `{other}` (gaussian, bent)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Fixed(usize),
    Greedy,
    Tangential,
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split_once(':') {
            None if s == "fixed" => Ok(StrategyKind::Fixed(0)),
            None if s == "greedy" => Ok(StrategyKind::Greedy),
            None if s == "tangential" => Ok(StrategyKind::Tangential),
            Some(("fixed", i)) => i
                .parse()
                .map(StrategyKind::Fixed)
                .map_err(|_| format!("bad measure index `{i}`")),
            _ => Err(format!("unknown strategy `{s}` (fixed[:i], greedy, tangential)")),
        }
    }
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EigenArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// min, max or fixednorm.
    #[arg(long)]
    pub op: Option<OpKind>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub h_ode: Option<f64>,
    /// CSV of `r,g,g_prime,g_second` along the accepted profile.
    #[arg(long)]
    pub profile_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct DpArgs {
    /// Finite family in the plain-text family format.
    #[arg(long)]
    pub family: Option<PathBuf>,
    /// Lattice spacing.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// sup or inf.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Point at which `w` is recorded, comma-separated; the origin by default.
    #[arg(long)]
    pub start: Option<NumList>,
    #[arg(long)]
    pub fit_lo: Option<usize>,
    #[arg(long)]
    pub fit_hi: Option<usize>,
    /// JSON summary with the fitted exponent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub op: Option<OpKind>,
    /// lower or upper.
    #[arg(long)]
    pub direction: Option<Direction>,
    /// gaussian or bent.
    #[arg(long)]
    pub test: Option<TestKind>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub r_cut: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub d: Option<usize>,
    /// Comma-separated lambdas.
    #[arg(long)]
    pub lambdas: Option<NumList>,
    #[arg(long)]
    pub per_decade: Option<usize>,
    #[arg(long)]
    pub p_lower: Option<f64>,
    #[arg(long)]
    pub p_upper: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// JSON array with both certificates of every row.
    #[arg(long)]
    pub certificates: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub family: Option<PathBuf>,
    /// fixed[:i], greedy or tangential.
    #[arg(long)]
    pub strategy: Option<StrategyKind>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub start: Option<NumList>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Lattice spacing of the greedy value grids.
    #[arg(long)]
    pub h: Option<f64>,
    /// Mode of the greedy value grids.
    #[arg(long)]
    pub mode: Option<Mode>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub lambdas: Option<NumList>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

const DEFAULT_TOL: f64 = 1e-8;

fn usage(message: impl Display) -> Error {
    Error::Usage(message.to_string())
}

fn check_dim(d: usize) -> Result<usize> {
    if d == 0 {
        return Err(usage("--d must be positive"));
    }
    Ok(d)
}

fn check_lambda(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(usage(format!("--lambda = {lambda} is not in (0, 1]")));
    }
    Ok(lambda)
}

fn check_tol(tol: f64) -> Result<f64> {
    if !(1e-10..1.0).contains(&tol) {
        return Err(usage(format!("--tol = {tol} must lie in [1e-10, 1)")));
    }
    Ok(tol)
}

fn check_positive(name: &str, x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(usage(format!("--{name} = {x} must be positive")));
    }
    Ok(x)
}

fn lambdas(list: NumList) -> Result<Vec<f64>> {
    if list.0.is_empty() {
        return Err(usage("--lambdas is empty"));
    }
    list.0.into_iter().map(check_lambda).collect()
}

fn load_family(path: &Path) -> Result<FiniteFamily> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_family(&text)?)
}

fn start_point(start: Option<NumList>, dim: usize) -> Result<Vec<f64>> {
    let x = start.map(|l| l.0).unwrap_or_else(|| vec![0.0; dim]);
    if x.len() != dim {
        return Err(usage(format!("--start has {} coordinates, the family has dimension {dim}", x.len())));
    }
    Ok(x)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn shoot_options(r_max: Option<f64>, h_ode: Option<f64>) -> Result<ShootOptions> {
    let mut opts = ShootOptions::default();
    if let Some(r) = r_max {
        opts.r_max = check_positive("r-max", r)?;
    }
    if let Some(h) = h_ode {
        opts.h_ode = check_positive("h-ode", h)?;
    }
    Ok(opts)
}

fn bounds_cells(family: &ControlFamily) -> [String; 2] {
    match alpha_bounds(family) {
        Some((lo, hi)) => [fmt_num(lo), fmt_num(hi)],
        None => [String::new(), String::new()],
    }
}

pub fn profile_table(pair: &EigenPair) -> Table {
    let p = &pair.profile;
    let mut table = Table::new(["r", "g", "g_prime", "g_second"]);
    for i in 0..p.len() {
        table.push(vec![fmt_num(p.r[i]), fmt_num(p.g[i]), fmt_num(p.g_prime[i]), fmt_num(p.g_second[i])]);
    }
    table
}

pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let threads = par::threads_from_env()?;
    match cli.command {
        Command::Eigen(args) => eigen(&config, args),
        Command::Dp(args) => dp(&config, args, threads),
        Command::Certify(args) => certify_cmd(&config, args),
        Command::Scan(args) => scan(&config, args, threads),
        Command::Simulate(args) => simulate(&config, args, threads),
        Command::BoundsTable(args) => bounds_table(&config, args, threads),
    }
}

fn eigen(cfg: &Config, args: EigenArgs) -> Result<()> {
    let d = check_dim(cfg.require(args.d, "d")?)?;
    let lambda = check_lambda(cfg.require(args.lambda, "lambda")?)?;
    let op = cfg.pick(args.op, "op")?.unwrap_or(OpKind::Min);
    let tol = check_tol(cfg.pick(args.tol, "tol")?.unwrap_or(DEFAULT_TOL))?;
    let opts = shoot_options(cfg.pick(args.r_max, "r_max")?, cfg.pick(args.h_ode, "h_ode")?)?;
    let out = cfg.pick(args.output.out, "out")?;
    let profile_out: Option<PathBuf> = cfg.pick(args.profile_out, "profile_out")?;
    let family = op.family(lambda, d)?;

    let pair = solve_alpha(&family, tol, &opts)?;
    let mut table = Table::new([
        "d",
        "lambda",
        "op",
        "alpha",
        "tolerance",
        "paper_lower",
        "paper_upper",
        "bisection_steps",
        "richardson_gap",
    ]);
    let [lo, hi] = bounds_cells(&family);
    table.push(vec![
        d.to_string(),
        fmt_num(lambda),
        op.as_str().to_string(),
        fmt_num(pair.alpha),
        fmt_num(pair.tolerance),
        lo,
        hi,
        pair.diagnostics.bisection_steps.to_string(),
        fmt_num(pair.diagnostics.richardson_gap),
    ]);
    if let Some(path) = profile_out {
        profile_table(&pair).save(&path)?;
    }
    emit(&out, &table.to_string_csv()?)
}

/// Default fit window: the last four doublings below `n_max`.
fn default_fit(n_max: usize) -> (usize, usize) {
    ((n_max / 16).max(1), n_max)
}

fn dp(cfg: &Config, args: DpArgs, threads: usize) -> Result<()> {
    let family_path: PathBuf = cfg.require(args.family, "family")?;
    let h = check_positive("h", cfg.require(args.h, "h")?)?;
    let delta = check_positive("delta", cfg.pick(args.delta, "delta")?.unwrap_or(1.0))?;
    let n_max: usize = cfg.require(args.n_max, "n_max")?;
    let mode = cfg.pick(args.mode, "mode")?.unwrap_or(Mode::Sup);
    let (fit_lo_default, fit_hi_default) = default_fit(n_max);
    let fit_lo = cfg.pick(args.fit_lo, "fit_lo")?.unwrap_or(fit_lo_default);
    let fit_hi = cfg.pick(args.fit_hi, "fit_hi")?.unwrap_or(fit_hi_default);
    if fit_lo == 0 || fit_lo > fit_hi || fit_hi > n_max {
        return Err(usage(format!("fit window [{fit_lo}, {fit_hi}] must satisfy 1 <= lo <= hi <= n_max")));
    }
    let summary_path: Option<PathBuf> = cfg.pick(args.summary, "summary")?;
    let out = cfg.pick(args.output.out, "out")?;
    let family = load_family(&family_path)?;
    let start = start_point(cfg.pick(args.start, "start")?, family.dim())?;
    let lattice = Lattice::new(family.dim(), h)?;
    if lattice.index_of(&start).is_none() {
        return Err(usage(format!("--start {start:?} is not on the lattice of spacing {h}")));
    }

    let step_bound = family.max_step();
    let mut probe = Vec::with_capacity(n_max + 1);
    let mut azuma_worst: f64 = 0.0;
    let opts = DpOptions::new(mode, n_max).retain(Retain::None);
    par::with_threads(threads, || {
        par::run_dp_par(&lattice, delta, &family, &opts, |g| {
            probe.push((g.step(), g.value_at(&start)));
            if mode == Mode::Sup && g.step() > 0 {
                azuma_worst = azuma_worst.max(azuma_check(g, delta, step_bound));
            }
        })
    })??;

    let fit = fit_exponent(&probe, fit_lo, fit_hi).ok();
    let mut table = Table::new(["n", "w"]);
    for &(n, w) in &probe {
        table.push(vec![n.to_string(), fmt_num(w)]);
    }
    let summary = DpSummary {
        mode: mode.as_str().to_string(),
        n_max,
        probe: start.clone(),
        alpha_hat: fit.map(|f| crate::table::round_sig(f.0)),
        alpha_stderr: fit.map(|f| crate::table::round_sig(f.1)),
        fit_range: fit.map(|_| (fit_lo, fit_hi)),
        azuma_worst: (mode == Mode::Sup).then(|| crate::table::round_sig(azuma_worst)),
    };
    match summary_path {
        Some(path) => std::fs::write(&path, to_json(&summary)?).map_err(|e| Error::io(&path, e))?,
        None => match summary.alpha_hat {
            Some(a) => eprintln!("alpha_hat = {}", fmt_num(a)),
            None => eprintln!("alpha_hat unavailable (no positive values in the fit window)"),
        },
    }
    emit(&out, &table.to_string_csv()?)
}

fn certify_cmd(cfg: &Config, args: CertifyArgs) -> Result<()> {
    let d = check_dim(cfg.require(args.d, "d")?)?;
    let lambda = check_lambda(cfg.require(args.lambda, "lambda")?)?;
    let op = cfg.pick(args.op, "op")?.unwrap_or(OpKind::Min);
    let direction: Direction = cfg.require(args.direction, "direction")?;
    let kind = cfg.pick(args.test, "test")?.unwrap_or(TestKind::Bent);
    let a = cfg.require(args.a, "a")?;
    let mut grid = RadialGrid::default();
    if let Some(r) = cfg.pick(args.r_cut, "r_cut")? {
        grid.r_cut = check_positive("r-cut", r)?;
    }
    if let Some(nodes) = cfg.pick(args.nodes, "nodes")? {
        if nodes < 2 {
            return Err(usage("--nodes must be at least 2"));
        }
        grid.nodes = nodes;
    }
    let test = match kind {
        TestKind::Gaussian => TestFunction::scaled_gaussian(a)?,
        TestKind::Bent => {
            let b = cfg.require(args.b, "b")?;
            let p = cfg.require(args.p, "p")?;
            TestFunction::bent_gaussian(a, b, p, lambda)?
        }
    };
    let out = cfg.pick(args.output.out, "out")?;
    let family = op.family(lambda, d)?;
    let cert = certify(&family, &test, direction, &grid)?;
    emit(&out, &to_json(&CertificateRecord::of(&cert))?)
}

fn scan(cfg: &Config, args: ScanArgs, threads: usize) -> Result<()> {
    let d = check_dim(cfg.require(args.d, "d")?)?;
    let lambdas = lambdas(cfg.require(args.lambdas, "lambdas")?)?;
    let mut opts = ScanOptions::default();
    if let Some(k) = cfg.pick(args.per_decade, "per_decade")? {
        if k == 0 {
            return Err(usage("--per-decade must be positive"));
        }
        opts.per_decade = k;
    }
    opts.p_lower = cfg.pick(args.p_lower, "p_lower")?.unwrap_or(opts.p_lower);
    opts.p_upper = cfg.pick(args.p_upper, "p_upper")?.unwrap_or(opts.p_upper);
    if !(opts.p_lower > 0.5 && opts.p_lower < 1.0) {
        return Err(usage(format!("--p-lower = {} is not in (1/2, 1)", opts.p_lower)));
    }
    if !(opts.p_upper > 0.0 && opts.p_upper < 0.5) {
        return Err(usage(format!("--p-upper = {} is not in (0, 1/2)", opts.p_upper)));
    }
    let tol = check_tol(cfg.pick(args.tol, "tol")?.unwrap_or(DEFAULT_TOL))?;
    let certs_path: Option<PathBuf> = cfg.pick(args.certificates, "certificates")?;
    let out = cfg.pick(args.output.out, "out")?;
    let families = lambdas
        .iter()
        .map(|&l| ControlFamily::pucci_minimal(l, d))
        .collect::<ctrlmart_core::Result<Vec<_>>>()?;

    let (rows, pairs) = par::with_threads(threads, || {
        let rows = par::lambda_scan_par(d, &lambdas, &opts);
        let pairs = par::solve_many(&families, tol, &ShootOptions::default());
        (rows, pairs)
    })?;
    let rows = rows?;
    let mut table = Table::new(["lambda", "lower", "upper", "solver_alpha"]);
    for (row, pair) in rows.iter().zip(pairs) {
        table.push(vec![fmt_num(row.lambda), fmt_num(row.lower.beta), fmt_num(row.upper.beta), fmt_num(pair?.alpha)]);
    }
    if let Some(path) = certs_path {
        let records: Vec<[CertificateRecord; 2]> = rows
            .iter()
            .map(|r| [CertificateRecord::of(&r.lower), CertificateRecord::of(&r.upper)])
            .collect();
        std::fs::write(&path, to_json(&records)?).map_err(|e| Error::io(&path, e))?;
    }
    emit(&out, &table.to_string_csv()?)
}

fn simulate(cfg: &Config, args: SimulateArgs, threads: usize) -> Result<()> {
    let family_path: PathBuf = cfg.require(args.family, "family")?;
    let kind = cfg.pick(args.strategy, "strategy")?.unwrap_or(StrategyKind::Fixed(0));
    let n: usize = cfg.require(args.n, "n")?;
    let delta = check_positive("delta", cfg.pick(args.delta, "delta")?.unwrap_or(1.0))?;
    let trials: u64 = cfg.require(args.trials, "trials")?;
    check_trials(trials)?;
    let seed: u64 = cfg.pick(args.seed, "seed")?.unwrap_or(0);
    let h = cfg.pick(args.h, "h")?;
    let mode = cfg.pick(args.mode, "mode")?;
    let out = cfg.pick(args.output.out, "out")?;
    let family = load_family(&family_path)?;
    let start = start_point(cfg.pick(args.start, "start")?, family.dim())?;

    let (strategy, label) = match kind {
        StrategyKind::Fixed(i) => {
            if i >= family.len() {
                return Err(usage(format!("measure index {i} out of range (family has {})", family.len())));
            }
            (Strategy::FixedMeasure(i), format!("fixed:{i}"))
        }
        StrategyKind::Tangential => (Strategy::tangential(family.dim())?, "tangential".to_string()),
        StrategyKind::Greedy => {
            let h = check_positive("h", h.ok_or_else(|| usage("greedy strategy needs --h"))?)?;
            let mode = mode.ok_or_else(|| usage("greedy strategy needs --mode"))?;
            if n == 0 {
                return Err(usage("greedy strategy needs --n >= 1"));
            }
            let lattice = Lattice::new(family.dim(), h)?;
            let opts = DpOptions::new(mode, n - 1).retain(Retain::All);
            let grids = par::with_threads(threads, || par::run_dp_par(&lattice, delta, &family, &opts, |_| {}))??.grids;
            (Strategy::greedy(&family, grids, mode)?, format!("greedy:{}", mode.as_str()))
        }
    };
    let est = par::with_threads(threads, || par::estimate_hit_par(&family, &strategy, n, &start, delta, trials, seed))??;
    emit(&out, &to_json(&EstimateRecord::of(&label, n, delta, &start, &est))?)
}

fn bounds_table(cfg: &Config, args: BoundsArgs, threads: usize) -> Result<()> {
    let d = check_dim(cfg.require(args.d, "d")?)?;
    let lambdas = lambdas(cfg.require(args.lambdas, "lambdas")?)?;
    let tol = check_tol(cfg.pick(args.tol, "tol")?.unwrap_or(DEFAULT_TOL))?;
    let out = cfg.pick(args.output.out, "out")?;
    let families = lambdas
        .iter()
        .map(|&l| ControlFamily::pucci_minimal(l, d))
        .collect::<ctrlmart_core::Result<Vec<_>>>()?;
    let pairs = par::with_threads(threads, || par::solve_many(&families, tol, &ShootOptions::default()))?;
    let mut table = Table::new(["lambda", "dp_or_solver_alpha", "paper_lower", "paper_upper"]);
    for ((lambda, family), pair) in lambdas.iter().zip(&families).zip(pairs) {
        let [lo, hi] = bounds_cells(family);
        table.push(vec![fmt_num(*lambda), fmt_num(pair?.alpha), lo, hi]);
    }
    emit(&out, &table.to_string_csv()?)
}
