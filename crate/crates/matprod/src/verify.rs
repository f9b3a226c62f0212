//! Verification batteries. Every check reports PASS or FAIL together with the
//! measured error; a battery passes when all of its checks do.

use std::fmt;

use matprod_core::config::{ChainParams, Config, Trajectory};
use matprod_core::crystal::{argmax_solver, crystal_step, gauss_field, jacobi_crystal, CrystalChain};
use matprod_core::density::{
    build_mu, dixon_check, jacobi_log_density, kernel_log_density, process_log_density, product_log_density_integral,
    product_log_density_jack, JacobiParams, KernelParams,
};
use matprod_core::haar::{sample_product_chain, RngState};
use matprod_core::jack::{jack_eval, jack_moment, jack_principal};
use matprod_core::partition::Partition;
use matprod_core::pfaffian::{kernel_assemble, two_product_log_density, Kernel2x2, TwoProductParams};
use matprod_core::sampler::{sample_jacobi_beta, ChainSampler, ChainStart, GibbsSettings};

use crate::error::{CliError, Result};
use crate::exact::hankel_residuals;
use crate::integrate::TanhSinh;
use crate::par::{run_blocks, BLOCK};
use crate::stats::{batch_means, chi2_gof, mean_se};

pub const SUITES: [&str; 6] = ["moments", "dixon", "normalization", "hankel", "pfaffian", "crystal"];

pub const HANKEL_TOL: f64 = 1e-8;
pub const DIXON_TOL: f64 = 1e-5;
pub const NORM_TOL_LOW_DIM: f64 = 1e-6;
pub const NORM_TOL_NESTED: f64 = 1e-4;
pub const KERNEL_FORM_TOL: f64 = 1e-6;
pub const RHO1_MASS_TOL: f64 = 1e-3;
pub const CRYSTAL_TOL: f64 = 1e-10;
pub const MAX_Z: f64 = 3.0;
pub const MIN_P: f64 = 0.01;
/// Sweeps of each fresh kernel chain in the Monte Carlo batteries.
pub const KERNEL_BURN_IN: usize = 20;
/// Consecutive draws per batch for batch-means standard errors.
pub const BATCH: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Scale {
    Quick,
    Full,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub scale: Scale,
    pub seed: u64,
}

impl VerifyOptions {
    fn pick(&self, quick: usize, full: usize) -> usize {
        match self.scale {
            Scale::Quick => quick,
            Scale::Full => full,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    fn from_result(name: impl Into<String>, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Check::new(name, passed, detail),
            Err(e) => Check::new(name, false, format!("error: {e}")),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub suite: String,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
}

impl Report {
    fn new(suite: &str) -> Self {
        Report { suite: suite.into(), ..Default::default() }
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "== {} ==", self.suite)?;
        for n in &self.notes {
            writeln!(f, "   {n}")?;
        }
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Runs one battery by name, or all of them for `"all"`.
pub fn run(suite: &str, opts: &VerifyOptions) -> Result<Vec<Report>> {
    let names: Vec<&str> = match suite {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        s => return Err(CliError::validation(format!("unknown suite {s:?}; expected one of {SUITES:?} or all"))),
    };
    Ok(names.into_iter().map(|s| run_one(s, opts)).collect())
}

fn run_one(suite: &str, opts: &VerifyOptions) -> Report {
    match suite {
        "moments" => moments(opts),
        "dixon" => dixon(opts),
        "normalization" => normalization(opts),
        "hankel" => hankel(opts),
        "pfaffian" => pfaffian(opts),
        "crystal" => crystal(opts),
        _ => unreachable!("suite names are checked by run"),
    }
}

fn max_abs(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn kappas() -> Vec<Partition> {
    [&[1usize][..], &[2], &[1, 1]].iter().map(|p| Partition::new(p).expect("valid partition")).collect()
}

/// `J_κ(x)/J_κ(1^n)` for `κ ∈ {(1), (2), (1,1)}` at every level of a trajectory.
fn jack_ratios(t: &Trajectory, theta: f64, principal: &[f64]) -> Result<Vec<f64>> {
    let ks = kappas();
    let mut out = Vec::with_capacity(t.p() * ks.len());
    for x in &t.configs {
        for (k, pr) in ks.iter().zip(principal) {
            out.push(jack_eval(k, x.values(), theta)? / pr);
        }
    }
    Ok(out)
}

fn prefix(params: &ChainParams, k: usize) -> ChainParams {
    let nu: Vec<usize> = params.nu[1..=k].to_vec();
    ChainParams::new(params.theta, params.n, params.m[..k].to_vec(), &nu)
}

/// Compares Monte Carlo means of `J_κ/J_κ(1^n)` with the closed-form moments;
/// `se` gives the standard error of each column.
fn moment_check(
    label: &str,
    params: &ChainParams,
    rows: &[Vec<f64>],
    se: impl Fn(&[f64]) -> (f64, f64),
) -> Result<(bool, String)> {
    let ks = kappas();
    let mut worst = (0.0f64, String::new());
    for k in 1..=params.p() {
        let pk = prefix(params, k);
        for (ki, kappa) in ks.iter().enumerate() {
            let col: Vec<f64> = rows.iter().map(|r| r[(k - 1) * ks.len() + ki]).collect();
            let (mean, s) = se(&col);
            let exact = jack_moment(kappa, &pk)?;
            let z = (mean - exact) / s;
            if !(z.abs() <= worst.0) {
                worst = (z.abs(), format!("p={k} kappa={kappa}: mean {mean:.6} exact {exact:.6} se {s:.2e}"));
            }
        }
    }
    Ok((worst.0 <= MAX_Z, format!("{label}: max |z| = {:.2} ({})", worst.0, worst.1)))
}

fn jack_principals(n: usize, theta: f64) -> Result<Vec<f64>> {
    kappas().iter().map(|k| Ok(jack_principal(k, n, theta)?)).collect()
}

/// Moment oracle: `E[J_κ/J_κ(1^n)]` from the matrix model (`θ = ½, 1, 2`) and
/// from the Gibbs sampler (`θ = 0.7, 1.5`) against the closed form.
pub fn moments(opts: &VerifyOptions) -> Report {
    let mut r = Report::new("moments");
    let n = 2;
    let m = vec![7, 5, 5];
    let nu = [1, 2, 2];
    let count = opts.pick(10_000, 100_000);
    r.notes.push(format!("n={n}, m={m:?}, nu={nu:?}, kappa in {{(1),(2),(1,1)}}, {count} matrix chains per theta"));
    for (t, theta) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let params = ChainParams::new(theta, n, m.clone(), &nu);
        let res = (|| {
            let pr = jack_principals(n, theta)?;
            let rows = run_blocks(count, BLOCK, opts.seed.wrapping_add(t as u64), |len, rng| {
                (0..len).map(|_| jack_ratios(&sample_product_chain(&params, rng)?, theta, &pr)).collect()
            })?;
            moment_check(&format!("{count} chains"), &params, &rows, mean_se)
        })();
        r.checks.push(Check::from_result(format!("matrix model, theta = {theta}"), res));
    }
    let gibbs_count = opts.pick(2_000, 100_000);
    let settings = GibbsSettings::default();
    r.notes.push(format!(
        "Gibbs: {gibbs_count} chains per theta, x^1 streamed (burn-in {}, thinning {}), kernel burn-in {KERNEL_BURN_IN}, batch means over {BATCH} draws",
        settings.burn_in, settings.sweeps
    ));
    for (t, theta) in [0.7, 1.5].into_iter().enumerate() {
        let params = ChainParams::new(theta, n, m.clone(), &nu);
        let res = (|| {
            let pr = jack_principals(n, theta)?;
            let rows = run_blocks(gibbs_count, BLOCK, opts.seed.wrapping_add(10 + t as u64), |len, rng| {
                let mut s =
                    ChainSampler::new(&params, ChainStart::Jacobi, &settings, rng)?.with_kernel_burn_in(KERNEL_BURN_IN);
                (0..len).map(|_| jack_ratios(&s.next_trajectory(rng)?, theta, &pr)).collect()
            })?;
            let batches = (gibbs_count / BATCH).max(2);
            moment_check(&format!("{gibbs_count} chains"), &params, &rows, |c| batch_means(c, batches))
        })();
        r.checks.push(Check::from_result(format!("Gibbs sampler, theta = {theta}"), res));
    }
    r
}

/// A deterministic parameter point for the Dixon identity with `n+1` knots `a`
/// and `m` knots `b`.
fn dixon_point(n: usize, m: usize, rng: &mut RngState) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    loop {
        let mut a: Vec<f64> = (0..=n).map(|_| 3.0 * rng.uniform()).collect();
        let mut b: Vec<f64> = (0..m).map(|_| -3.0 * rng.uniform()).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let alpha: Vec<f64> = (0..=n).map(|_| 0.5 + 2.0 * rng.uniform()).collect();
        let tail: Vec<f64> = (0..m).map(|_| 0.5 + 2.0 * rng.uniform()).collect();
        let b0 = alpha.iter().sum::<f64>() - tail.iter().sum::<f64>();
        let gaps_ok = a.windows(2).all(|w| w[1] - w[0] > 0.1)
            && b.windows(2).all(|w| w[1] - w[0] > 0.1)
            && b.last().is_none_or(|&bm| a[0] - bm > 0.1);
        if b0 > 0.2 && gaps_ok {
            let mut beta = vec![b0];
            beta.extend(tail);
            return (a, alpha, b, beta);
        }
    }
}

/// Dixon identity with `b_0 → −∞`: both sides by quadrature on a 20-point grid.
pub fn dixon(opts: &VerifyOptions) -> Report {
    let mut r = Report::new("dixon");
    let mut rng = RngState::new(opts.seed, 100);
    let mut worst: f64 = 0.0;
    let mut errors = Vec::new();
    for idx in 0..20 {
        let (n, m) = (1 + idx % 2, (idx / 2) % 3);
        let (a, alpha, b, beta) = dixon_point(n, m, &mut rng);
        match dixon_check(&a, &alpha, &b, &beta) {
            Ok((lhs, rhs)) => {
                let rel = (lhs - rhs).abs() / rhs.abs();
                worst = worst.max(rel);
                r.notes.push(format!("n={n} m={m} lhs={lhs:.12e} rhs={rhs:.12e} rel={rel:.2e}"));
            }
            Err(e) => errors.push(format!("n={n} m={m}: {e}")),
        }
    }
    let passed = errors.is_empty() && worst <= DIXON_TOL;
    let mut detail = format!("max relative error {worst:.2e} over 20 points (tol {DIXON_TOL:e})");
    if !errors.is_empty() {
        detail.push_str(&format!("; errors: {}", errors.join("; ")));
    }
    r.checks.push(Check::new("lhs = rhs", passed, detail));
    r
}

fn dens(v: matprod_core::Result<f64>) -> Result<f64> {
    Ok(v?.exp())
}

fn cfg(v: &[f64]) -> Result<Config> {
    Ok(Config::new(v.to_vec())?)
}

fn traj(levels: &[&[f64]]) -> Result<Trajectory> {
    Ok(Trajectory::new(levels.iter().map(|v| cfg(v)).collect::<Result<Vec<_>>>()?)?)
}

type Integral = Box<dyn Fn() -> Result<f64>>;

fn norm_case(r: &mut Report, name: String, tol: f64, f: Integral) {
    let res = f().map(|v| {
        let err = (v - 1.0).abs();
        (err <= tol, format!("integral {v:.10} (error {err:.2e}, tol {tol:e})"))
    });
    r.checks.push(Check::from_result(name, res));
}

/// Every density at `n ≤ 2` integrates to one: `1e−6` in one or two
/// dimensions, `1e−4` for nested integrals in three or four.
pub fn normalization(_opts: &VerifyOptions) -> Report {
    let mut r = Report::new("normalization");
    let o = TanhSinh::new(1e-8);
    let i = TanhSinh::new(1e-8);

    for (n, m, nu, theta) in [(1, 3, 0, 0.5), (1, 4, 1, 2.0), (1, 3, 1, 0.7), (2, 4, 0, 0.5), (2, 5, 1, 1.0), (2, 6, 1, 1.5), (2, 4, 0, 2.0)] {
        let name = format!("jacobi n={n} m={m} nu={nu} theta={theta}");
        norm_case(&mut r, name, NORM_TOL_LOW_DIM, Box::new(move || {
            let jp = JacobiParams::new(n, m, nu, theta)?;
            if n == 1 {
                o.integrate(|x| dens(jacobi_log_density(&cfg(&[x])?, &jp)), 0.0, 1.0)
            } else {
                o.integrate(|x2| i.integrate(|x1| dens(jacobi_log_density(&cfg(&[x1, x2])?, &jp)), 0.0, x2), 0.0, 1.0)
            }
        }));
    }

    let kernel_cases: [(&[f64], usize, f64); 5] =
        [(&[0.6], 0, 0.5), (&[0.3], 2, 1.5), (&[0.3, 0.7], 1, 1.0), (&[0.2, 0.9], 0, 0.5), (&[0.4, 0.6], 2, 2.5)];
    for (x, nu, theta) in kernel_cases {
        let name = format!("kernel n={} nu={nu} theta={theta} x={x:?}", x.len());
        norm_case(&mut r, name, NORM_TOL_LOW_DIM, Box::new(move || {
            let kp = KernelParams::new(x.len(), nu, theta)?;
            let xc = cfg(x)?;
            if x.len() == 1 {
                o.integrate(|y| dens(kernel_log_density(&cfg(&[y])?, &xc, &kp)), 0.0, x[0])
            } else {
                o.integrate(
                    |y2| i.integrate(|y1| dens(kernel_log_density(&cfg(&[y1, y2])?, &xc, &kp)), 0.0, x[0]),
                    x[0],
                    x[1],
                )
            }
        }));
    }

    norm_case(&mut r, "process n=1 p=2 theta=0.5".into(), NORM_TOL_LOW_DIM, Box::new(move || {
        let params = ChainParams::new(0.5, 1, vec![3, 3], &[1, 1]);
        o.integrate(|x| i.integrate(|y| dens(process_log_density(&traj(&[&[x], &[y]])?, &params)), 0.0, x), 0.0, 1.0)
    }));
    let (no, ni) = (TanhSinh::new(1e-6), TanhSinh::new(1e-6));
    norm_case(&mut r, "process n=1 p=3 theta=1.5 (nested)".into(), NORM_TOL_NESTED, Box::new(move || {
        let params = ChainParams::new(1.5, 1, vec![4, 4, 3], &[1, 2, 1]);
        no.integrate(
            |x| {
                ni.integrate(
                    |y| ni.integrate(|z| dens(process_log_density(&traj(&[&[x], &[y], &[z]])?, &params)), 0.0, y),
                    0.0,
                    x,
                )
            },
            0.0,
            1.0,
        )
    }));
    norm_case(&mut r, "process n=2 p=2 theta=1 (nested)".into(), NORM_TOL_NESTED, Box::new(move || {
        let params = ChainParams::new(1.0, 2, vec![6, 5], &[1, 2]);
        no.integrate(
            |x2| {
                ni.integrate(
                    |x1| {
                        ni.integrate(
                            |y2| {
                                ni.integrate(
                                    |y1| dens(process_log_density(&traj(&[&[x1, x2], &[y1, y2]])?, &params)),
                                    0.0,
                                    x1,
                                )
                            },
                            x1,
                            x2,
                        )
                    },
                    0.0,
                    x2,
                )
            },
            0.0,
            1.0,
        )
    }));

    let integral_cases: [(usize, f64, &[usize], &[usize]); 3] =
        [(1, 0.5, &[3, 3], &[1, 1]), (1, 2.0, &[4, 4, 3], &[0, 2, 1]), (2, 1.0, &[5, 5], &[0, 2])];
    for (n, theta, m, nu) in integral_cases {
        let name = format!("integral n={n} p={} theta={theta}", m.len());
        norm_case(&mut r, name, NORM_TOL_LOW_DIM, Box::new(move || {
            let params = ChainParams::new(theta, n, m.to_vec(), nu);
            if n == 1 {
                o.integrate(|x| dens(product_log_density_integral(&cfg(&[x])?, &params)), 0.0, 1.0)
            } else {
                o.integrate(
                    |x2| i.integrate(|x1| dens(product_log_density_integral(&cfg(&[x1, x2])?, &params)), 0.0, x2),
                    0.0,
                    1.0,
                )
            }
        }));
    }

    let jack_cases: [(usize, &[usize], &[usize]); 2] = [(1, &[3, 4], &[0, 2]), (2, &[4, 5], &[0, 2])];
    for (n, m, nu) in jack_cases {
        let name = format!("jack n={n} p=2 theta=2");
        norm_case(&mut r, name, NORM_TOL_LOW_DIM, Box::new(move || {
            let data = build_mu(&ChainParams::new(2.0, n, m.to_vec(), nu))?;
            if n == 1 {
                o.integrate(|x| dens(product_log_density_jack(&cfg(&[x])?, &data)), 0.0, 1.0)
            } else {
                o.integrate(
                    |x2| i.integrate(|x1| dens(product_log_density_jack(&cfg(&[x1, x2])?, &data)), 0.0, x2),
                    0.0,
                    1.0,
                )
            }
        }));
    }

    for (n, nu1, nu2, m1) in [(1, 0, 1, 3), (2, 0, 0, 4)] {
        let name = format!("two-product n={n} nu=({nu1},{nu2}) m1={m1}");
        norm_case(&mut r, name, NORM_TOL_LOW_DIM, Box::new(move || {
            let tp = TwoProductParams::new(n, nu1, nu2, m1)?;
            if n == 1 {
                o.integrate(|x| dens(two_product_log_density(&cfg(&[x])?, &tp)), 0.0, 1.0)
            } else {
                o.integrate(
                    |x2| i.integrate(|x1| dens(two_product_log_density(&cfg(&[x1, x2])?, &tp)), 0.0, x2),
                    0.0,
                    1.0,
                )
            }
        }));
    }
    r
}

/// Closed-form Hankel inverse: `Q·C = I` exactly for `2n ∈ {2,4,6,8}` and odd
/// `a, b ≤ 11`, with the floating-point residuals alongside.
pub fn hankel(_opts: &VerifyOptions) -> Report {
    let mut r = Report::new("hankel");
    r.notes.push(format!(
        "{:>3} {:>3} {:>3} {:>10} {:>10} {:>10} {:>10}",
        "2n", "a", "b", "exact", "f64", "Q entries", "sum|Q||C|"
    ));
    for n in 1..=4 {
        let mut worst = (0.0f64, 0.0f64, 0.0f64);
        let mut errors = Vec::new();
        for a in (1..=11).step_by(2) {
            for b in (1..=11).step_by(2) {
                match hankel_residuals(n, a, b) {
                    Ok(h) => {
                        r.notes.push(format!(
                            "{:>3} {a:>3} {b:>3} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e}",
                            2 * n,
                            h.exact,
                            h.float,
                            h.entry_error,
                            h.cancellation
                        ));
                        worst = (worst.0.max(h.exact), worst.1.max(h.float), worst.2.max(h.entry_error));
                    }
                    Err(e) => errors.push(format!("(a={a}, b={b}): {e}")),
                }
            }
        }
        let passed = errors.is_empty() && worst.0 <= HANKEL_TOL;
        let mut detail = format!(
            "max exact residual {:.2e} (tol {HANKEL_TOL:e}); f64 residual {:.2e}, f64 entry error {:.2e}",
            worst.0, worst.1, worst.2
        );
        if !errors.is_empty() {
            detail.push_str(&format!("; errors: {}", errors.join("; ")));
        }
        r.checks.push(Check::new(format!("Q*C = I, 2n = {}", 2 * n), passed, detail));
    }
    r
}

/// Both kernel forms on a grid, with the worst entrywise gap relative to the
/// largest entry of that kernel component.
pub fn kernel_form_gaps(kernel: &Kernel2x2, grid: usize) -> Result<[f64; 4]> {
    let pts = (0..grid)
        .map(|i| kernel.point((i as f64 + 0.5) / grid as f64))
        .collect::<matprod_core::Result<Vec<_>>>()?;
    let mut diff = [0.0f64; 4];
    let mut size = [0.0f64; 4];
    for px in &pts {
        for py in &pts {
            let a = [kernel.k11(px, py), kernel.k12(px, py), kernel.k21(px, py), kernel.k22(px, py)];
            let b = [kernel.k11_sum(px, py), kernel.k12_sum(px, py), kernel.k21_sum(px, py), kernel.k22_sum(px, py)];
            for e in 0..4 {
                diff[e] = diff[e].max((a[e] - b[e]).abs());
                size[e] = size[e].max(a[e].abs()).max(b[e].abs());
            }
        }
    }
    Ok(std::array::from_fn(|e| diff[e] / size[e]))
}

/// `P(bin)` for one uniformly chosen particle: `∫_bin ρ_1 / n`.
pub fn rho1_bin_probs(kernel: &Kernel2x2, bins: usize, ts: &TanhSinh) -> Result<Vec<f64>> {
    let n = kernel.params.n as f64;
    (0..bins)
        .map(|b| {
            let (lo, hi) = (b as f64 / bins as f64, (b + 1) as f64 / bins as f64);
            Ok(ts.integrate(|x| Ok(kernel.rho1(x)?), lo, hi)? / n)
        })
        .collect()
}

/// The two-product (symplectic) kernel: forms agree, `∫ρ_1 = n`, and `ρ_1`
/// matches the Monte Carlo one-point histogram.
pub fn pfaffian(opts: &VerifyOptions) -> Report {
    let mut r = Report::new("pfaffian");
    let (n, nu1, nu2, m1) = (2, 0, 0, 4);
    r.notes.push(format!("n={n}, nu=({nu1},{nu2}), m1={m1}, m2={}", n + nu2 + 1));
    let kernel = match TwoProductParams::new(n, nu1, nu2, m1).and_then(|tp| kernel_assemble(&tp)) {
        Ok(k) => k,
        Err(e) => {
            r.checks.push(Check::new("kernel assembly", false, format!("error: {e}")));
            return r;
        }
    };
    let gaps = kernel_form_gaps(&kernel, 20).map(|g| {
        let worst = max_abs(g);
        (
            worst <= KERNEL_FORM_TOL,
            format!(
                "relative gaps K11 {:.1e}, K12 {:.1e}, K21 {:.1e}, K22 {:.1e} on a 20x20 grid (tol {KERNEL_FORM_TOL:e})",
                g[0], g[1], g[2], g[3]
            ),
        )
    });
    r.checks.push(Check::from_result("double-sum and skew-polynomial forms agree", gaps));

    let ts = TanhSinh::new(1e-9);
    let mass = ts.integrate(|x| Ok(kernel.rho1(x)?), 0.0, 1.0).map(|v| {
        let err = (v - n as f64).abs();
        (err <= RHO1_MASS_TOL, format!("integral of rho_1 = {v:.8} (error {err:.2e}, tol {RHO1_MASS_TOL:e})"))
    });
    r.checks.push(Check::from_result("rho_1 integrates to n", mass));

    let pf = (|| {
        let mut worst: f64 = 0.0;
        for &(x, y) in &[(0.2, 0.5), (0.35, 0.8), (0.6, 0.9)] {
            let a = kernel.rho(&[x, y])?;
            let b = kernel.rho2(x, y)?;
            worst = worst.max((a - b).abs() / b.abs());
        }
        Ok((worst <= 1e-10, format!("max relative gap {worst:.1e}")))
    })();
    r.checks.push(Check::from_result("Pfaffian rho_2 equals the 2x2 expansion", pf));

    let count = opts.pick(20_000, 100_000);
    let bins = 20;
    let hist = (|| {
        let params = ChainParams::new(2.0, n, vec![m1, n + nu2 + 1], &[nu1, nu2]);
        let draws = run_blocks(count, BLOCK, opts.seed.wrapping_add(200), |len, rng| {
            (0..len)
                .map(|_| {
                    let t = sample_product_chain(&params, rng)?;
                    let i = ((rng.uniform() * n as f64) as usize).min(n - 1);
                    Ok(t.last().values()[i])
                })
                .collect()
        })?;
        let mut counts = vec![0u64; bins];
        for x in draws {
            counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let probs = rho1_bin_probs(&kernel, bins, &ts)?;
        let c = chi2_gof(&counts, &probs, 5.0);
        Ok((
            c.p_value > MIN_P,
            format!("{count} samples, chi2 = {:.2}, dof = {}, p = {:.4}", c.statistic, c.dof, c.p_value),
        ))
    })();
    r.checks.push(Check::from_result("rho_1 matches the one-point histogram", hist));
    r
}

fn random_config(n: usize, rng: &mut RngState) -> Config {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| 0.01 + 0.98 * rng.uniform()).collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] > 1e-3) {
            return Config::new(v).expect("sorted interior values");
        }
    }
}

/// Sample covariance of the rows together with the standard error of every entry.
pub fn covariance_with_se(rows: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let d = rows[0].len();
    let nf = rows.len() as f64;
    let mean: Vec<f64> = (0..d).map(|a| rows.iter().map(|r| r[a]).sum::<f64>() / nf).collect();
    let mut cov = vec![vec![0.0; d]; d];
    let mut se = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in 0..d {
            let prods: Vec<f64> = rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).collect();
            let (m, s) = mean_se(&prods);
            cov[a][b] = m;
            se[a][b] = s;
        }
    }
    (cov, se)
}

/// Crystallization: the Lemma equivalence, the `n = 1` Jacobi crystal, and the
/// Gaussian field against `β = 10^4` chains.
pub fn crystal(opts: &VerifyOptions) -> Report {
    let mut r = Report::new("crystal");
    let mut rng = RngState::new(opts.seed, 300);
    let mut worst: f64 = 0.0;
    let mut errors = Vec::new();
    for idx in 0..100 {
        let n = 1 + idx % 4;
        let nu = ((rng.uniform() * 4.0) as usize).min(3);
        let x = random_config(n, &mut rng);
        match (crystal_step(&x, nu), argmax_solver(&x, nu)) {
            (Ok(a), Ok(b)) => worst = worst.max(max_abs(a.values().iter().zip(b.values()).map(|(u, v)| u - v))),
            (Err(e), _) | (_, Err(e)) => errors.push(e.to_string()),
        }
    }
    let mut detail = format!("max deviation {worst:.2e} over 100 inputs, n <= 4 (tol {CRYSTAL_TOL:e})");
    if !errors.is_empty() {
        detail.push_str(&format!("; errors: {}", errors.join("; ")));
    }
    r.checks.push(Check::new("crystal_step = argmax_solver", errors.is_empty() && worst <= CRYSTAL_TOL, detail));

    let exact = (|| {
        for (m, nu) in [(2, 0), (3, 1), (7, 2), (10, 5), (13, 0)] {
            let x = jacobi_crystal(1, m, nu)?;
            if x.values()[0] != (nu as f64 + 1.0) / m as f64 {
                return Ok((false, format!("m={m} nu={nu}: {}", x.values()[0])));
            }
        }
        Ok((true, "x = (nu+1)/m for 5 parameter pairs".to_string()))
    })();
    r.checks.push(Check::from_result("jacobi_crystal n = 1", exact));

    let theta = 5000.0;
    let beta = 2.0 * theta;
    let (n, m1, nu) = (2, 7, [1usize, 2, 2]);
    let draws = opts.pick(50, 200);
    let mean = (|| {
        let jp = JacobiParams::new(n, m1, nu[0], theta)?;
        let target = jacobi_crystal(n, m1, nu[0])?;
        let xs = run_blocks(draws, 10, opts.seed.wrapping_add(301), |len, rng| {
            (0..len).map(|_| Ok(sample_jacobi_beta(&jp, &GibbsSettings::default(), rng)?)).collect()
        })?;
        let tol = 5.0 / beta.sqrt();
        let dev = max_abs((0..n).map(|i| xs.iter().map(|x| x.values()[i]).sum::<f64>() / draws as f64 - target.values()[i]));
        Ok((dev <= tol, format!("{draws} draws, max |mean - x~| = {dev:.2e} (tol {tol:.2e})")))
    })();
    r.checks.push(Check::from_result("jacobi_crystal matches beta = 1e4 Jacobi mean", mean));

    let count = opts.pick(1_000, 10_000);
    let cov = (|| {
        let x1 = jacobi_crystal(n, m1, nu[0])?;
        let chain = CrystalChain::new(x1.clone(), &nu[1..])?;
        let field = gauss_field(&chain)?;
        let params = ChainParams::new(theta, n, vec![m1, n + nu[1] + 1, n + nu[2] + 1], &nu);
        let settings = GibbsSettings::default();
        let rows = run_blocks(count, BLOCK, opts.seed.wrapping_add(302), |len, rng| {
            let mut s = ChainSampler::new(&params, ChainStart::Fixed(x1.clone()), &settings, rng)?
                .with_kernel_burn_in(KERNEL_BURN_IN);
            (0..len)
                .map(|_| {
                    let t = s.next_trajectory(rng)?;
                    let mut xi = Vec::with_capacity(n * 2);
                    for k in 2..=3 {
                        for i in 0..n {
                            xi.push(beta.sqrt() * (t.configs[k - 1].values()[i] - chain.configs[k - 1].values()[i]));
                        }
                    }
                    Ok(xi)
                })
                .collect()
        })?;
        let (c, se) = covariance_with_se(&rows);
        let mut worst = (0.0f64, String::new());
        for a in 0..c.len() {
            for b in a..c.len() {
                let want = field.covariance[(a, b)];
                let z = (c[a][b] - want) / se[a][b];
                if !(z.abs() <= worst.0) {
                    worst = (z.abs(), format!("entry ({a},{b}): {:.5} vs {want:.5}", c[a][b]));
                }
            }
        }
        Ok((worst.0 <= MAX_Z, format!("{count} chains, max |z| = {:.2} ({})", worst.0, worst.1)))
    })();
    r.checks.push(Check::from_result("beta = 1e4 covariance matches the Gaussian field", cov));
    r
}
