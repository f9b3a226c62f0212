//! Samplers for arbitrary `β = 2θ > 0`: the β-Jacobi ensemble, the rank-1
//! transition kernel and the product process built from it.
//!
//! Each coordinate update draws from a piecewise proposal built on an adaptive
//! grid (log-linear inside, power law in the two end cells) and is then
//! corrected by an independence Metropolis step, so the conditional law is
//! sampled exactly whatever the grid resolution.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_distr::{Distribution, Gamma};

use crate::config::{ChainParams, Config, Trajectory};
use crate::crystal::{crystal_step, jacobi_crystal};
use crate::density::{JacobiParams, KernelParams};
use crate::error::{Error, Result};
use crate::haar::RngState;

pub const DEFAULT_BURN_IN: usize = 200;
pub const DEFAULT_THINNING: usize = 10;
pub const DEFAULT_GRID: usize = 64;

/// Largest log error of an end-cell power law before the cell is split.
const REFINE_TOL: f64 = 0.05;
/// Interior cells whose node values differ by more than this are split.
const STEEP: f64 = 1.0;
/// Cells whose density is below `exp(-MASS_CUT)` of the largest are not refined.
const MASS_CUT: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GibbsSettings {
    /// Sweeps before the first draw.
    pub burn_in: usize,
    /// Sweeps between consecutive draws of a streaming chain.
    pub sweeps: usize,
    /// Initial number of grid cells per coordinate update.
    pub grid: usize,
}

impl Default for GibbsSettings {
    fn default() -> Self {
        GibbsSettings { burn_in: DEFAULT_BURN_IN, sweeps: DEFAULT_THINNING, grid: DEFAULT_GRID }
    }
}

impl GibbsSettings {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::InvalidParams("sweeps must be at least 1".into()));
        }
        if self.grid < DEFAULT_GRID {
            return Err(Error::InvalidParams(format!("grid must be at least {DEFAULT_GRID}, got {}", self.grid)));
        }
        Ok(())
    }
}

/// Scratch buffers for one-dimensional conditional draws.
#[derive(Default, Debug)]
pub struct Workspace {
    t: Vec<f64>,
    lf: Vec<f64>,
    cum: Vec<f64>,
    shift: f64,
    next_t: Vec<f64>,
    next_lf: Vec<f64>,
    /// Proposals made and accepted, for diagnostics.
    pub proposed: u64,
    pub accepted: u64,
    /// Grid nodes used, summed over draws.
    pub nodes: u64,
}

struct Cell {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Acceptance rate of the Metropolis correction so far.
    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn cell_count(&self) -> usize {
        self.t.len() - 1
    }

    /// Proposal log-density (up to the normalizer) at `t` inside cell `c`.
    fn model(&self, cell: &Cell, c: usize, t: f64) -> f64 {
        let k = self.cell_count();
        if c == 0 {
            self.lf[1] + cell.a * libm::log((t - cell.lo) / (self.t[1] - cell.lo))
        } else if c == k - 1 {
            self.lf[k - 1] + cell.b * libm::log((cell.hi - t) / (cell.hi - self.t[k - 1]))
        } else {
            let (t0, t1) = (self.t[c], self.t[c + 1]);
            self.lf[c] + (self.lf[c + 1] - self.lf[c]) * (t - t0) / (t1 - t0)
        }
    }

    fn build(&mut self, cell: &Cell, logf: &dyn Fn(f64) -> f64, grid: usize) {
        self.t.clear();
        self.lf.clear();
        let h = (cell.hi - cell.lo) / grid as f64;
        for k in 0..=grid {
            let t = if k == grid { cell.hi } else { cell.lo + h * k as f64 };
            self.t.push(t);
            self.lf.push(if k == 0 || k == grid { 0.0 } else { logf(t) });
        }
        let max = self.floor_nodes();
        let budget = 4 * grid;
        let min_width = 1e-13 * (cell.hi - cell.lo);
        loop {
            let k = self.cell_count();
            self.next_t.clear();
            self.next_lf.clear();
            let mut split = false;
            for c in 0..k {
                self.next_t.push(self.t[c]);
                self.next_lf.push(self.lf[c]);
                if self.next_t.len() + (k - c) >= budget || self.t[c + 1] - self.t[c] <= min_width {
                    continue;
                }
                let tm = 0.5 * (self.t[c] + self.t[c + 1]);
                let refine = if c == 0 || c == k - 1 {
                    let node = if c == 0 { self.lf[1] } else { self.lf[k - 1] };
                    if node < max - MASS_CUT {
                        None
                    } else {
                        let lm = logf(tm);
                        (libm::fabs(lm - self.model(cell, c, tm)) > REFINE_TOL).then_some(lm)
                    }
                } else {
                    let (l0, l1) = (self.lf[c], self.lf[c + 1]);
                    (libm::fabs(l1 - l0) > STEEP && l0.max(l1) > max - MASS_CUT).then(|| logf(tm))
                };
                if let Some(lm) = refine {
                    self.next_t.push(tm);
                    self.next_lf.push(lm);
                    split = true;
                }
            }
            self.next_t.push(self.t[k]);
            self.next_lf.push(self.lf[k]);
            core::mem::swap(&mut self.t, &mut self.next_t);
            core::mem::swap(&mut self.lf, &mut self.next_lf);
            if !split {
                break;
            }
            self.floor_nodes();
        }
        let max = self.floor_nodes();
        let k = self.cell_count();
        self.nodes += k as u64 + 1;
        self.shift = max;
        self.cum.clear();
        let mut acc = 0.0;
        let mut e0 = 0.0;
        for c in 0..k {
            let w = self.t[c + 1] - self.t[c];
            let e1 = if c + 1 < k { libm::exp(self.lf[c + 1] - max) } else { 0.0 };
            let mass = if c == 0 {
                w * e1 / (cell.a + 1.0)
            } else if c == k - 1 {
                w * e0 / (cell.b + 1.0)
            } else {
                let d = self.lf[c + 1] - self.lf[c];
                if libm::fabs(d) < 1e-6 {
                    0.5 * w * (e0 + e1)
                } else {
                    w * (e1 - e0) / d
                }
            };
            acc += mass;
            self.cum.push(acc);
            e0 = e1;
        }
    }

    /// Keeps interior node values finite and within `exp(-700)` of the
    /// maximum, which it returns.
    fn floor_nodes(&mut self) -> f64 {
        let k = self.t.len() - 1;
        let max = self.lf[1..k].iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        let max = if max.is_finite() { max } else { 0.0 };
        for v in &mut self.lf[1..k] {
            if !(*v >= max - 700.0) {
                *v = max - 700.0;
            }
        }
        max
    }

    fn draw(&self, cell: &Cell, rng: &mut RngState) -> f64 {
        let k = self.cell_count();
        let total = self.cum[k - 1];
        let u = rng.uniform() * total;
        let c = self.cum.partition_point(|&v| v <= u).min(k - 1);
        let f = rng.uniform();
        let (t0, t1) = (self.t[c], self.t[c + 1]);
        let h = t1 - t0;
        let t = if c == 0 {
            cell.lo + h * libm::pow(f, 1.0 / (cell.a + 1.0))
        } else if c == k - 1 {
            cell.hi - h * libm::pow(f, 1.0 / (cell.b + 1.0))
        } else {
            let d = self.lf[c + 1] - self.lf[c];
            let s = if libm::fabs(d) < 1e-10 {
                f
            } else if d > 0.0 {
                1.0 + libm::log(f + (1.0 - f) * libm::exp(-d)) / d
            } else {
                libm::log1p(f * libm::expm1(d)) / d
            };
            t0 + h * s.clamp(0.0, 1.0)
        };
        t.clamp(t0, t1)
    }

    fn log_q(&self, cell: &Cell, t: f64) -> f64 {
        let k = self.cell_count();
        let c = self.t.partition_point(|&v| v <= t).clamp(1, k) - 1;
        self.model(cell, c, t)
    }
}

/// One exact draw from the density `∝ exp(logf(t))` on `(lo, hi)` whose
/// endpoint behaviour is `(t−lo)^a` and `(hi−t)^b`, as a Metropolis update of
/// `current`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_update(
    ws: &mut Workspace,
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
    logf: &dyn Fn(f64) -> f64,
    current: f64,
    grid: usize,
    rng: &mut RngState,
) -> f64 {
    let cell = Cell { lo, hi, a, b };
    ws.build(&cell, logf, grid);
    let mut t = ws.draw(&cell, rng);
    for _ in 0..8 {
        if t > lo && t < hi {
            break;
        }
        t = ws.draw(&cell, rng);
    }
    if !(t > lo && t < hi) {
        return current;
    }
    ws.proposed += 1;
    if !(current > lo && current < hi) {
        ws.accepted += 1;
        return t;
    }
    let new_w = logf(t) - ws.log_q(&cell, t);
    let old_w = logf(current) - ws.log_q(&cell, current);
    let log_alpha = new_w - old_w;
    if log_alpha >= 0.0 || libm::log(rng.uniform()) < log_alpha || !old_w.is_finite() {
        ws.accepted += 1;
        t
    } else {
        current
    }
}

/// `Σ_j ln|t − p_j|` over `j ≠ skip`, taking one logarithm per block of
/// factors.
fn ln_abs_prod(t: f64, pts: &[f64], skip: usize) -> f64 {
    let mut prod = 1.0;
    let mut acc = 0.0;
    for (j, &p) in pts.iter().enumerate() {
        if j == skip {
            continue;
        }
        prod *= libm::fabs(t - p);
        if !(1e-150..=1e150).contains(&prod) {
            acc += libm::log(prod);
            prod = 1.0;
        }
    }
    acc + libm::log(prod)
}

/// One Gibbs sweep over the coordinates of a Jacobi configuration.
pub fn jacobi_sweep(x: &mut [f64], jp: &JacobiParams, ws: &mut Workspace, grid: usize, rng: &mut RngState) {
    let n = x.len();
    let th = jp.theta;
    let (ea, eb) = (jp.a(), jp.b());
    for i in 0..n {
        let lo = if i == 0 { 0.0 } else { x[i - 1] };
        let hi = if i + 1 == n { 1.0 } else { x[i + 1] };
        let xs: &[f64] = x;
        let logf = |t: f64| ea * libm::log(t) + eb * libm::log1p(-t) + 2.0 * th * ln_abs_prod(t, xs, i);
        let a = if i == 0 { ea } else { 2.0 * th };
        let b = if i + 1 == n { eb } else { 2.0 * th };
        x[i] = conditional_update(ws, lo, hi, a, b, &logf, x[i], grid, rng);
    }
}

/// One Gibbs sweep over `y` for the rank-1 kernel given `x`.
pub fn kernel_sweep(y: &mut [f64], x: &[f64], kp: &KernelParams, ws: &mut Workspace, grid: usize, rng: &mut RngState) {
    let n = y.len();
    let th = kp.theta;
    let ey = th * (kp.nu as f64 + 1.0) - 1.0;
    for i in 0..n {
        let lo = if i == 0 { 0.0 } else { x[i - 1] };
        let hi = x[i];
        let ys: &[f64] = y;
        let logf = |t: f64| ey * libm::log(t) + ln_abs_prod(t, ys, i) + (th - 1.0) * ln_abs_prod(t, x, usize::MAX);
        let a = if i == 0 { ey } else { th - 1.0 };
        y[i] = conditional_update(ws, lo, hi, a, th - 1.0, &logf, y[i], grid, rng);
    }
}

/// A streaming Gibbs chain for the β-Jacobi ensemble started at the crystal
/// configuration.
#[derive(Debug)]
pub struct JacobiGibbs {
    pub params: JacobiParams,
    pub settings: GibbsSettings,
    state: Vec<f64>,
    ws: Workspace,
}

impl JacobiGibbs {
    /// Starts at the β = ∞ configuration and runs the burn-in.
    pub fn new(jp: &JacobiParams, settings: &GibbsSettings, rng: &mut RngState) -> Result<Self> {
        jp.validate()?;
        settings.validate()?;
        let start = jacobi_crystal(jp.n, jp.m, jp.nu)?.into_values();
        let mut chain = JacobiGibbs { params: *jp, settings: *settings, state: start, ws: Workspace::new() };
        for _ in 0..settings.burn_in {
            chain.sweep(rng);
        }
        Ok(chain)
    }

    fn sweep(&mut self, rng: &mut RngState) {
        jacobi_sweep(&mut self.state, &self.params, &mut self.ws, self.settings.grid, rng);
    }

    /// Runs `sweeps` sweeps and returns the state.
    pub fn next_draw(&mut self, rng: &mut RngState) -> Config {
        for _ in 0..self.settings.sweeps {
            self.sweep(rng);
        }
        Config::new_unchecked(self.state.clone())
    }

    pub fn acceptance(&self) -> f64 {
        self.ws.acceptance()
    }
}

/// One draw from the β-Jacobi ensemble (`burn_in + sweeps` sweeps from the
/// crystal configuration).
pub fn sample_jacobi_beta(jp: &JacobiParams, settings: &GibbsSettings, rng: &mut RngState) -> Result<Config> {
    let mut chain = JacobiGibbs::new(jp, settings, rng)?;
    Ok(chain.next_draw(rng))
}

fn check_kernel_input(x: &Config, kp: &KernelParams) -> Result<()> {
    kp.validate()?;
    if x.len() != kp.n {
        return Err(Error::LengthMismatch { expected: kp.n, found: x.len() });
    }
    if !x.is_interior() {
        return Err(Error::Degenerate(format!("x must lie strictly inside (0,1): {:?}", x.values())));
    }
    Ok(())
}

/// One draw of `y` given `x` from the rank-1 kernel by Gibbs sampling started
/// at the crystal step of `x`.
pub fn sample_kernel_beta(x: &Config, kp: &KernelParams, settings: &GibbsSettings, rng: &mut RngState) -> Result<Config> {
    check_kernel_input(x, kp)?;
    settings.validate()?;
    let mut ws = Workspace::new();
    kernel_draw(x, kp, settings, &mut ws, rng)
}

fn kernel_draw(x: &Config, kp: &KernelParams, settings: &GibbsSettings, ws: &mut Workspace, rng: &mut RngState) -> Result<Config> {
    let mut y = crystal_step(x, kp.nu)?.into_values();
    for _ in 0..settings.burn_in + settings.sweeps {
        kernel_sweep(&mut y, x.values(), kp, ws, settings.grid, rng);
    }
    Ok(Config::new_unchecked(y))
}

/// Exact draw from the rank-1 kernel: with Dirichlet weights
/// `(θ(ν+1), θ, …, θ)` on the points `0, x_1, …, x_n`, the `n` roots of
/// `Σ_i w_i/(z − a_i)` have the kernel law.
pub fn sample_kernel_exact(x: &Config, kp: &KernelParams, rng: &mut RngState) -> Result<Config> {
    check_kernel_input(x, kp)?;
    let n = kp.n;
    let th = kp.theta;
    let mut pts = Vec::with_capacity(n + 1);
    pts.push(0.0);
    pts.extend_from_slice(x.values());
    let mut w = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let shape = if i == 0 { th * (kp.nu as f64 + 1.0) } else { th };
        let g = Gamma::new(shape, 1.0).map_err(|e| Error::InvalidParams(format!("{e}")))?;
        w.push(g.sample(rng));
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    let mut y = Vec::with_capacity(n);
    for i in 1..=n {
        let (mut lo, mut hi) = (pts[i - 1], pts[i]);
        let f = |z: f64| pts.iter().zip(&w).map(|(&a, &wi)| wi / (z - a)).sum::<f64>();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        y.push(0.5 * (lo + hi));
    }
    Ok(Config::new_unchecked(y))
}

/// Where the product process starts.
#[derive(Clone, Debug, PartialEq)]
pub enum ChainStart {
    /// `x^1` drawn from the β-Jacobi ensemble with `(n, m_1, ν_1)`.
    Jacobi,
    Fixed(Config),
}

/// Checks the chain parameters for arbitrary θ; `(c1)` only matters for a
/// Jacobi start.
pub fn validate_beta_chain(params: &ChainParams, start: &ChainStart) -> Result<()> {
    match start {
        ChainStart::Jacobi => crate::config::validate_chain_params(params),
        ChainStart::Fixed(x1) => {
            let relaxed = ChainParams { m: {
                let mut m = params.m.clone();
                if let Some(m1) = m.first_mut() {
                    *m1 = (*m1).max(2 * params.n + params.nu.get(1).copied().unwrap_or(0));
                }
                m
            }, ..params.clone() };
            crate::config::validate_chain_params(&relaxed)?;
            if x1.len() != params.n {
                return Err(Error::LengthMismatch { expected: params.n, found: x1.len() });
            }
            if !x1.is_interior() {
                return Err(Error::Degenerate("initial state must lie strictly inside (0,1)".into()));
            }
            Ok(())
        }
    }
}

/// Warnings for parameters outside the range where the β-process is usually
/// stated (`ν_k > 1`); sampling proceeds regardless.
pub fn chain_warnings(params: &ChainParams) -> Vec<String> {
    (2..=params.p())
        .filter(|&k| params.nu_k(k) <= 1)
        .map(|k| format!("nu_{k} = {} <= 1; sampling anyway", params.nu_k(k)))
        .collect()
}

/// Trajectories of the β-Jacobi product process; a Jacobi start is streamed
/// from one Gibbs chain, each rank-1 step is a fresh kernel chain.
#[derive(Debug)]
pub struct ChainSampler {
    pub params: ChainParams,
    pub settings: GibbsSettings,
    /// Settings of the fresh kernel chain run for each step.
    pub kernel_settings: GibbsSettings,
    jacobi: Option<JacobiGibbs>,
    fixed: Option<Config>,
    ws: Workspace,
}

impl ChainSampler {
    pub fn new(params: &ChainParams, start: ChainStart, settings: &GibbsSettings, rng: &mut RngState) -> Result<Self> {
        validate_beta_chain(params, &start)?;
        settings.validate()?;
        let (jacobi, fixed) = match start {
            ChainStart::Jacobi => {
                let jp = JacobiParams::new(params.n, params.m_k(1), params.nu_k(1), params.theta)?;
                (Some(JacobiGibbs::new(&jp, settings, rng)?), None)
            }
            ChainStart::Fixed(x) => (None, Some(x)),
        };
        Ok(ChainSampler {
            params: params.clone(),
            settings: *settings,
            kernel_settings: *settings,
            jacobi,
            fixed,
            ws: Workspace::new(),
        })
    }

    /// Uses `burn_in` sweeps for each kernel step instead of the shared value.
    pub fn with_kernel_burn_in(mut self, burn_in: usize) -> Self {
        self.kernel_settings.burn_in = burn_in;
        self
    }

    pub fn next_trajectory(&mut self, rng: &mut RngState) -> Result<Trajectory> {
        let x1 = match (&mut self.jacobi, &self.fixed) {
            (Some(chain), _) => chain.next_draw(rng),
            (None, Some(x)) => x.clone(),
            _ => unreachable!("chain sampler without a start"),
        };
        let mut configs = Vec::with_capacity(self.params.p());
        configs.push(x1);
        for k in 2..=self.params.p() {
            let kp = KernelParams::new(self.params.n, self.params.nu_k(k), self.params.theta)?;
            let y = kernel_draw(configs.last().expect("nonempty"), &kp, &self.kernel_settings, &mut self.ws, rng)?;
            configs.push(y);
        }
        Ok(Trajectory { configs })
    }

    /// Metropolis acceptance rate of the kernel updates.
    pub fn acceptance(&self) -> f64 {
        self.ws.acceptance()
    }
}

/// One trajectory of the β-Jacobi product process.
pub fn sample_chain_beta(params: &ChainParams, start: ChainStart, settings: &GibbsSettings, rng: &mut RngState) -> Result<Trajectory> {
    ChainSampler::new(params, start, settings, rng)?.next_trajectory(rng)
}
