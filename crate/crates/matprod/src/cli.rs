//! The `matprod` command line.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use matprod_core::config::{validate_chain_params, ChainParams, Config, Trajectory};
use matprod_core::crystal::{gauss_field, jacobi_crystal, CrystalChain};
use matprod_core::density::{
    build_mu, jacobi_log_density, kernel_log_density, process_log_density, product_log_density_integral,
    product_log_density_jack, JacobiParams, KernelParams,
};
use matprod_core::haar::{sample_product_chain, Group};
use matprod_core::pfaffian::{kernel_assemble, two_product_log_density, TwoProductParams};
use matprod_core::sampler::{
    chain_warnings, validate_beta_chain, ChainSampler, ChainStart, GibbsSettings, DEFAULT_BURN_IN, DEFAULT_GRID,
    DEFAULT_THINNING,
};

use crate::error::{CliError, Result};
use crate::io::{emit, matrix_json, trajectory_columns, Format, OutputSpec, Sidecar, Table};
use crate::par::{init_threads, run_blocks, BLOCK};
use crate::verify::{self, Scale, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "matprod", version, about = "Products of truncated Haar matrices and β-Jacobi product processes")]
pub struct Cli {
    /// Worker threads (default: MATPROD_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample trajectories from the matrix model or the Gibbs sampler.
    Sample(SampleArgs),
    /// Evaluate a log-density on a grid or a list of points.
    Density(DensityArgs),
    /// Correlation kernel of the two-product symplectic ensemble on a grid.
    Kernel(KernelArgs),
    /// Run a verification battery.
    Verify(VerifyArgs),
    /// The β = ∞ configurations and their Gaussian fluctuations.
    Crystallize(CrystallizeArgs),
}

#[derive(Debug, Args, Clone)]
pub struct OutputArgs {
    /// Output file (default: standard output).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Sidecar file (default: <out>.json when --out is a file).
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

impl OutputArgs {
    fn spec(&self) -> OutputSpec {
        OutputSpec { out: self.out.clone(), meta: self.meta.clone(), format: self.format }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Matrix,
    Gibbs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub n: usize,
    /// Number of factors (defaults to the length of --m).
    #[arg(long)]
    pub p: Option<usize>,
    /// Matrix sizes m_1..m_p.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<usize>,
    /// Truncation parameters nu_1..nu_p.
    #[arg(long, value_delimiter = ',', required = true)]
    pub nu: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed initial configuration for the Gibbs mode (default: Jacobi start).
    #[arg(long, value_delimiter = ',')]
    pub x1: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// Sweeps between draws of the initial Jacobi chain.
    #[arg(long, default_value_t = DEFAULT_THINNING)]
    pub sweeps: usize,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    Jacobi,
    Kernel,
    Process,
    Integral,
    Jack,
    Twoproduct,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long, value_enum)]
    pub formula: Formula,
    /// Required except for the two-product formula (θ = 2).
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub n: usize,
    /// m_1..m_p (jacobi and two-product read m_1 only; kernel ignores it).
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    /// nu_1..nu_p (kernel: the single nu of the step).
    #[arg(long, value_delimiter = ',', required = true)]
    pub nu: Vec<usize>,
    /// The conditioning configuration x for the kernel formula.
    #[arg(long, value_delimiter = ',')]
    pub given: Option<Vec<f64>>,
    /// A point, as comma-separated coordinates; repeatable.
    #[arg(long = "point", allow_hyphen_values = true)]
    pub points: Vec<String>,
    /// CSV file of points with a header row.
    #[arg(long)]
    pub points_file: Option<PathBuf>,
    /// Midpoint grid with this many cells per coordinate (n <= 2).
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub n: usize,
    /// nu_1,nu_2.
    #[arg(long, value_delimiter = ',', required = true)]
    pub nu: Vec<usize>,
    /// m_1 or m_1,m_2 (m_2 must equal n+nu_2+1).
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<usize>,
    /// Midpoint grid cells on (0,1).
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// moments, dixon, normalization, hankel, pfaffian, crystal or all.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, value_enum, default_value = "quick")]
    pub scale: Scale,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CrystallizeArgs {
    #[arg(long)]
    pub n: usize,
    /// nu_1..nu_p.
    #[arg(long, value_delimiter = ',', required = true)]
    pub nu: Vec<usize>,
    /// m_1, for the Jacobi-crystal start.
    #[arg(long)]
    pub m1: Option<usize>,
    /// Initial configuration instead of the Jacobi crystal.
    #[arg(long, value_delimiter = ',')]
    pub x1: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A validated run: what to compute and where the results go.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub output: OutputSpec,
}

/// Parses `args` and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> Result<i32>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return Ok(code);
        }
    };
    init_threads(cli.threads)?;
    match cli.command {
        Command::Sample(a) => cmd_sample(&a),
        Command::Density(a) => cmd_density(&a),
        Command::Kernel(a) => cmd_kernel(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Crystallize(a) => cmd_crystallize(&a),
    }
}

fn finish(cfg: &RunConfig, table: &Table, extra: Value) -> Result<i32> {
    let mut side = Sidecar::new(&cfg.command, cfg.seed, cfg.params.clone(), table);
    side.extra = extra;
    emit(table, &side, &cfg.output)?;
    Ok(0)
}

fn chain_params(theta: f64, n: usize, p: Option<usize>, m: &[usize], nu: &[usize]) -> Result<ChainParams> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(CliError::validation(format!("theta must be positive, got {theta}")));
    }
    let p = p.unwrap_or(m.len());
    if p == 0 || m.len() != p || nu.len() != p {
        return Err(CliError::validation(format!(
            "need p >= 1 with p values for --m and --nu (p={p}, m has {}, nu has {})",
            m.len(),
            nu.len()
        )));
    }
    if n == 0 {
        return Err(CliError::validation("n must be positive"));
    }
    Ok(ChainParams::new(theta, n, m.to_vec(), nu))
}

pub fn sample_config(a: &SampleArgs) -> Result<(RunConfig, ChainParams)> {
    let params = chain_params(a.theta, a.n, a.p, &a.m, &a.nu)?;
    if a.count == 0 {
        return Err(CliError::validation("count must be positive"));
    }
    match a.mode {
        Mode::Matrix => {
            if a.x1.is_some() {
                return Err(CliError::validation("--x1 applies to the gibbs mode only"));
            }
            Group::from_theta(a.theta)?;
            validate_chain_params(&params)?;
        }
        Mode::Gibbs => {
            validate_beta_chain(&params, &gibbs_start(a)?)?;
            GibbsSettings { burn_in: a.burn_in, sweeps: a.sweeps, grid: a.grid }.validate()?;
        }
    }
    let mut p = json!({
        "mode": a.mode,
        "theta": a.theta,
        "n": a.n,
        "p": params.p(),
        "m": a.m,
        "nu": a.nu,
    });
    if a.mode == Mode::Gibbs {
        p["x1"] = json!(a.x1);
        p["burn_in"] = json!(a.burn_in);
        p["sweeps"] = json!(a.sweeps);
        p["grid"] = json!(a.grid);
        p["block"] = json!(BLOCK);
    }
    let cfg = RunConfig {
        command: "sample".into(),
        params: p,
        seed: Some(a.seed),
        output: a.output.spec(),
    };
    Ok((cfg, params))
}

fn gibbs_start(a: &SampleArgs) -> Result<ChainStart> {
    Ok(match &a.x1 {
        Some(v) => ChainStart::Fixed(Config::new(v.clone())?),
        None => ChainStart::Jacobi,
    })
}

/// Trajectories for a validated `sample` run; identical for any worker count.
pub fn sample_trajectories(a: &SampleArgs, params: &ChainParams) -> Result<Vec<Trajectory>> {
    match a.mode {
        Mode::Matrix => run_blocks(a.count, BLOCK, a.seed, |len, rng| {
            (0..len).map(|_| Ok(sample_product_chain(params, rng)?)).collect()
        }),
        Mode::Gibbs => {
            let start = gibbs_start(a)?;
            let settings = GibbsSettings { burn_in: a.burn_in, sweeps: a.sweeps, grid: a.grid };
            run_blocks(a.count, BLOCK, a.seed, |len, rng| {
                let mut s = ChainSampler::new(params, start.clone(), &settings, rng)?;
                (0..len).map(|_| Ok(s.next_trajectory(rng)?)).collect()
            })
        }
    }
}

pub fn cmd_sample(a: &SampleArgs) -> Result<i32> {
    let (cfg, params) = sample_config(a)?;
    if a.mode == Mode::Gibbs {
        for w in chain_warnings(&params) {
            eprintln!("warning: {w}");
        }
    }
    let trajs = sample_trajectories(a, &params)?;
    let mut table = Table::new(trajectory_columns(a.n, params.p()));
    for t in trajs {
        table.push(t.configs.iter().flat_map(|c| c.values().iter().copied()).collect())?;
    }
    finish(&cfg, &table, Value::Null)
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::validation(format!("cannot parse point {s:?}"))))
        .collect()
}

fn midpoints(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    (0..cells).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / cells as f64).collect()
}

/// Ordered `n`-point configurations from a midpoint grid on (0,1), `n ≤ 2`.
fn ordered_grid(n: usize, cells: usize) -> Result<Vec<Vec<f64>>> {
    let g = midpoints(0.0, 1.0, cells);
    match n {
        1 => Ok(g.into_iter().map(|x| vec![x]).collect()),
        2 => Ok((0..cells).flat_map(|j| (0..j).map(move |i| (i, j))).map(|(i, j)| vec![g[i], g[j]]).collect()),
        _ => Err(CliError::validation("--grid supports n <= 2; pass points instead")),
    }
}

/// Interlacing configurations `y` with `y_i` on a midpoint grid of `(x_{i−1}, x_i)`.
fn interlacing_grid(x: &[f64], cells: usize) -> Result<Vec<Vec<f64>>> {
    if x.len() > 2 {
        return Err(CliError::validation("--grid supports n <= 2; pass points instead"));
    }
    let mut out = vec![Vec::new()];
    for i in 0..x.len() {
        let lo = if i == 0 { 0.0 } else { x[i - 1] };
        let g = midpoints(lo, x[i], cells);
        out = out.into_iter().flat_map(|p| g.iter().map(move |&v| [p.clone(), vec![v]].concat())).collect();
    }
    Ok(out)
}

enum DensityModel {
    Jacobi(JacobiParams),
    Kernel(Config, KernelParams),
    Process(ChainParams),
    Integral(ChainParams),
    Jack(matprod_core::density::JackDensityData),
    TwoProduct(TwoProductParams),
}

impl DensityModel {
    fn dim(&self, n: usize) -> usize {
        match self {
            DensityModel::Process(p) => n * p.p(),
            _ => n,
        }
    }

    fn log_density(&self, v: &[f64]) -> Result<f64> {
        let c = || Config::new(v.to_vec());
        Ok(match self {
            DensityModel::Jacobi(jp) => jacobi_log_density(&c()?, jp)?,
            DensityModel::Kernel(x, kp) => kernel_log_density(&c()?, x, kp)?,
            DensityModel::Process(p) => {
                let levels = v.chunks(p.n).map(|c| Config::new(c.to_vec())).collect::<matprod_core::Result<_>>()?;
                process_log_density(&Trajectory::new(levels)?, p)?
            }
            DensityModel::Integral(p) => product_log_density_integral(&c()?, p)?,
            DensityModel::Jack(d) => product_log_density_jack(&c()?, d)?,
            DensityModel::TwoProduct(tp) => two_product_log_density(&c()?, tp)?,
        })
    }
}

fn density_model(a: &DensityArgs) -> Result<DensityModel> {
    let theta = || a.theta.ok_or_else(|| CliError::validation("--theta is required for this formula"));
    let first = |v: &[usize], name: &str| {
        v.first().copied().ok_or_else(|| CliError::validation(format!("--{name} needs at least one value")))
    };
    Ok(match a.formula {
        Formula::Jacobi => {
            let jp = JacobiParams::new(a.n, first(&a.m, "m")?, first(&a.nu, "nu")?, theta()?)?;
            DensityModel::Jacobi(jp)
        }
        Formula::Kernel => {
            let x = a.given.clone().ok_or_else(|| CliError::validation("--given x is required for the kernel"))?;
            let kp = KernelParams::new(a.n, first(&a.nu, "nu")?, theta()?)?;
            let x = Config::new(x)?;
            if x.len() != a.n {
                return Err(CliError::validation(format!("--given has {} values, expected n = {}", x.len(), a.n)));
            }
            DensityModel::Kernel(x, kp)
        }
        Formula::Process | Formula::Integral | Formula::Jack => {
            let p = chain_params(theta()?, a.n, None, &a.m, &a.nu)?;
            validate_chain_params(&p)?;
            match a.formula {
                Formula::Process => DensityModel::Process(p),
                Formula::Integral => {
                    if p.p() > 3 {
                        return Err(matprod_core::Error::UnsupportedDimension(p.p()).into());
                    }
                    DensityModel::Integral(p)
                }
                _ => DensityModel::Jack(build_mu(&p)?),
            }
        }
        Formula::Twoproduct => {
            if let Some(t) = a.theta {
                if t != 2.0 {
                    return Err(CliError::validation("the two-product density is symplectic: theta = 2"));
                }
            }
            if a.nu.len() != 2 {
                return Err(CliError::validation("--nu must list nu_1,nu_2"));
            }
            let m1 = first(&a.m, "m")?;
            let tp = TwoProductParams::new(a.n, a.nu[0], a.nu[1], m1)?;
            if a.m.len() > 1 && a.m[1] != tp.m2() {
                return Err(CliError::validation(format!("m_2 must equal n+nu_2+1 = {}", tp.m2())));
            }
            DensityModel::TwoProduct(tp)
        }
    })
}

pub fn cmd_density(a: &DensityArgs) -> Result<i32> {
    let model = density_model(a)?;
    let dim = model.dim(a.n);
    let mut points: Vec<Vec<f64>> = a.points.iter().map(|s| parse_point(s)).collect::<Result<_>>()?;
    if let Some(path) = &a.points_file {
        points.extend(crate::io::read_points(path)?);
    }
    if let Some(cells) = a.grid {
        if cells == 0 {
            return Err(CliError::validation("--grid must be positive"));
        }
        points.extend(match &model {
            DensityModel::Kernel(x, _) => interlacing_grid(x.values(), cells)?,
            DensityModel::Process(_) => return Err(CliError::validation("--grid is not available for process")),
            _ => ordered_grid(a.n, cells)?,
        });
    }
    if points.is_empty() {
        return Err(CliError::validation("no points: use --point, --points-file or --grid"));
    }
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(CliError::validation(format!("point {bad:?} has {} coordinates, expected {dim}", bad.len())));
    }
    let values: Vec<f64> = points.par_iter().map(|p| model.log_density(p)).collect::<Result<_>>()?;
    let mut columns = match a.formula {
        Formula::Process => trajectory_columns(a.n, dim / a.n),
        Formula::Kernel => (1..=a.n).map(|i| format!("y_{i}")).collect(),
        _ => (1..=a.n).map(|i| format!("x_{i}")).collect(),
    };
    columns.push("log_density".into());
    let mut table = Table::new(columns);
    for (p, v) in points.into_iter().zip(values) {
        let mut row = p;
        row.push(v);
        table.push(row)?;
    }
    let cfg = RunConfig {
        command: "density".into(),
        params: json!({
            "formula": a.formula,
            "theta": a.theta,
            "n": a.n,
            "m": a.m,
            "nu": a.nu,
            "given": a.given,
            "grid": a.grid,
        }),
        seed: None,
        output: a.output.spec(),
    };
    finish(&cfg, &table, Value::Null)
}

pub fn cmd_kernel(a: &KernelArgs) -> Result<i32> {
    if a.nu.len() != 2 {
        return Err(CliError::validation("--nu must list nu_1,nu_2"));
    }
    if a.grid == 0 {
        return Err(CliError::validation("--grid must be positive"));
    }
    let m1 = a.m.first().copied().ok_or_else(|| CliError::validation("--m needs m_1"))?;
    let tp = TwoProductParams::new(a.n, a.nu[0], a.nu[1], m1)?;
    if a.m.len() > 1 && a.m[1] != tp.m2() {
        return Err(CliError::validation(format!("m_2 must equal n+nu_2+1 = {}", tp.m2())));
    }
    let kernel = kernel_assemble(&tp)?;
    let grid = midpoints(0.0, 1.0, a.grid);
    let pts = grid.par_iter().map(|&x| kernel.point(x)).collect::<matprod_core::Result<Vec<_>>>()?;
    let mut table = Table::new(
        ["x", "y", "rho1_x", "rho2", "k11", "k12", "k21", "k22"].iter().map(|s| s.to_string()).collect(),
    );
    for px in &pts {
        let rho1 = kernel.k11(px, px);
        for py in &pts {
            table.push(vec![
                px.x,
                py.x,
                rho1,
                kernel.rho2_at(px, py),
                kernel.k11(px, py),
                kernel.k12(px, py),
                kernel.k21(px, py),
                kernel.k22(px, py),
            ])?;
        }
    }
    let cfg = RunConfig {
        command: "kernel".into(),
        params: json!({ "n": a.n, "nu": a.nu, "m": [m1, tp.m2()], "grid": a.grid }),
        seed: None,
        output: a.output.spec(),
    };
    finish(&cfg, &table, json!({ "c": matrix_json(&kernel.c), "q": matrix_json(&kernel.q) }))
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let reports = verify::run(&a.suite, &VerifyOptions { scale: a.scale, seed: a.seed })?;
    let mut failed = 0;
    let mut total = 0;
    for r in &reports {
        print!("{r}");
        failed += r.failures();
        total += r.checks.len();
    }
    println!("{} of {total} checks passed", total - failed);
    if failed > 0 {
        return Err(CliError::ChecksFailed { failed, total });
    }
    Ok(0)
}

pub fn cmd_crystallize(a: &CrystallizeArgs) -> Result<i32> {
    if a.n == 0 || a.nu.is_empty() {
        return Err(CliError::validation("need n >= 1 and at least nu_1"));
    }
    let x1 = match (&a.x1, a.m1) {
        (Some(v), None) => {
            let c = Config::new(v.clone())?;
            if c.len() != a.n || !c.is_interior() {
                return Err(CliError::validation("--x1 must hold n distinct values inside (0,1)"));
            }
            c
        }
        (None, Some(m1)) => jacobi_crystal(a.n, m1, a.nu[0])?,
        _ => return Err(CliError::validation("give exactly one of --m1 (Jacobi crystal) and --x1")),
    };
    let chain = CrystalChain::new(x1, &a.nu[1..])?;
    let mut table = Table::new(trajectory_columns(a.n, chain.p()));
    table.push(chain.configs.iter().flat_map(|c| c.values().iter().copied()).collect())?;
    let extra = if chain.p() >= 2 {
        let field = gauss_field(&chain)?;
        json!({
            "fluctuation_columns": (2..=chain.p()).flat_map(|k| (1..=a.n).map(move |i| format!("x{k}_{i}"))).collect::<Vec<_>>(),
            "covariance": matrix_json(&field.covariance),
            "precision": matrix_json(&field.precision),
        })
    } else {
        Value::Null
    };
    let cfg = RunConfig {
        command: "crystallize".into(),
        params: json!({ "n": a.n, "nu": a.nu, "m1": a.m1, "x1": a.x1 }),
        seed: None,
        output: a.output.spec(),
    };
    finish(&cfg, &table, extra)
}
