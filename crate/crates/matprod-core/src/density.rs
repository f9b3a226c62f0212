//! Closed-form densities: Jacobi ensemble, the rank-1 Markov kernel, the joint
//! process law, the integral and Jack representations of the product density,
//! Selberg averages and the Dixon identity.
//!
//! Densities live on ordered configurations `x_1 < … < x_n`.

use alloc::format;
use alloc::vec::Vec;

use crate::config::{
    cauchy_det, interlaces_slice, log_vandermonde, validate_chain_params, ChainParams, Config, Trajectory,
};
use crate::error::{Error, Result};
use crate::jack::JackCache;
use crate::linalg::Matrix;
use crate::partition::Partition;
use crate::quad::Quad;
use crate::special::{ln_factorial, ln_gamma};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobiParams {
    pub n: usize,
    pub m: usize,
    pub nu: usize,
    pub theta: f64,
}

impl JacobiParams {
    pub fn new(n: usize, m: usize, nu: usize, theta: f64) -> Result<Self> {
        let jp = JacobiParams { n, m, nu, theta };
        jp.validate()?;
        Ok(jp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidParams(format!("theta must be positive, got {}", self.theta)));
        }
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be positive".into()));
        }
        if self.m < 2 * self.n + self.nu {
            return Err(Error::InvalidParams(format!(
                "m < 2n+nu ({} < {})",
                self.m,
                2 * self.n + self.nu
            )));
        }
        Ok(())
    }

    /// Exponent of `x_i`.
    pub fn a(&self) -> f64 {
        self.theta * (self.nu as f64 + 1.0) - 1.0
    }

    /// Exponent of `1 − x_i`.
    pub fn b(&self) -> f64 {
        self.theta * ((self.m - 2 * self.n - self.nu) as f64 + 1.0) - 1.0
    }
}

/// Rank-1 step parameters; `m = n + ν + 1` is implied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    pub n: usize,
    pub nu: usize,
    pub theta: f64,
}

impl KernelParams {
    pub fn new(n: usize, nu: usize, theta: f64) -> Result<Self> {
        let kp = KernelParams { n, nu, theta };
        kp.validate()?;
        Ok(kp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidParams(format!("theta must be positive, got {}", self.theta)));
        }
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be positive".into()));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.n + self.nu + 1
    }
}

fn check_len(x: &Config, n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: x.len() });
    }
    Ok(())
}

fn check_interior(x: &Config) -> Result<()> {
    if !x.is_interior() {
        return Err(Error::Degenerate(format!("points must lie strictly inside (0,1): {:?}", x.values())));
    }
    Ok(())
}

/// `ln Z` of the Jacobi ensemble on the unordered cube `[0,1]^n`.
pub fn ln_z_jacobi(jp: &JacobiParams) -> f64 {
    let th = jp.theta;
    let n = jp.n;
    let mut z = ln_factorial(n) + n as f64 * ln_gamma(th);
    for j in jp.nu + 1..=jp.m - n {
        z += ln_gamma(th * j as f64) - ln_gamma(th * (j + n) as f64);
    }
    for j in 1..=n {
        z += ln_gamma(th * (jp.m - 2 * n - jp.nu + j) as f64) + ln_gamma(th * j as f64) - 2.0 * ln_gamma(th);
    }
    z
}

/// Log-density of the Jacobi ensemble on ordered configurations.
pub fn jacobi_log_density(x: &Config, jp: &JacobiParams) -> Result<f64> {
    jp.validate()?;
    check_len(x, jp.n)?;
    check_interior(x)?;
    let v = x.values();
    let mut s = 2.0 * jp.theta * log_vandermonde(v);
    for &xi in v {
        s += jp.a() * libm::log(xi) + jp.b() * libm::log1p(-xi);
    }
    Ok(s + ln_factorial(jp.n) - ln_z_jacobi(jp))
}

/// `e · ln d` with `0^0 = 1` and the sign-aware infinities at `d = 0`.
fn pow_term(e: f64, d: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else if d == 0.0 {
        if e < 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        e * libm::log(d)
    }
}

/// Log-density of `y` given `x` for one rank-1 step:
/// `Γ(θ(ν+n+1))/(Γ(θ)^n Γ(θ(ν+1))) · Δ(y)/Δ(x)^{2θ−1} · Π|x_i−y_j|^{θ−1} · Π y_i^{θ(ν+1)−1}/x_i^{θ(ν+2)−1}`.
///
/// Returns `−∞` off the interlacing support and `+∞` at integrable point
/// singularities (`x_i = y_j` with `θ < 1`).
pub fn kernel_log_density(y: &Config, x: &Config, kp: &KernelParams) -> Result<f64> {
    kp.validate()?;
    check_len(x, kp.n)?;
    check_len(y, kp.n)?;
    check_interior(x)?;
    let (xv, yv) = (x.values(), y.values());
    if !interlaces_slice(yv, xv)? {
        return Ok(f64::NEG_INFINITY);
    }
    let th = kp.theta;
    let n = kp.n as f64;
    let nu = kp.nu as f64;
    let mut s = ln_gamma(th * (nu + n + 1.0)) - ln_gamma(th * (nu + 1.0)) - n * ln_gamma(th);
    s += log_vandermonde(yv) - (2.0 * th - 1.0) * log_vandermonde(xv);
    let mut singular = false;
    for &xi in xv {
        for &yj in yv {
            let t = pow_term(th - 1.0, libm::fabs(xi - yj));
            if t == f64::INFINITY {
                singular = true;
            }
            s += t;
        }
    }
    for i in 0..xv.len() {
        let t = pow_term(th * (nu + 1.0) - 1.0, yv[i]);
        if t == f64::INFINITY {
            singular = true;
        }
        s += t - (th * (nu + 2.0) - 1.0) * libm::log(xv[i]);
    }
    if s.is_nan() {
        return Ok(if singular { f64::INFINITY } else { f64::NEG_INFINITY });
    }
    Ok(s)
}

/// `ln Z_{n,p,θ}` (ordered configurations).
pub fn ln_z_process(params: &ChainParams) -> f64 {
    let th = params.theta;
    let n = params.n;
    let p = params.p();
    let m1 = params.m_k(1);
    let nu1 = params.nu_k(1);
    let mut z = (n * p) as f64 * ln_gamma(th);
    for k in 2..=p {
        let nu = params.nu_k(k) as f64;
        z += ln_gamma(th * (nu + 1.0)) - ln_gamma(th * (nu + n as f64 + 1.0));
    }
    for j in nu1 + 1..=m1 - n {
        z += ln_gamma(th * j as f64) - ln_gamma(th * (j + n) as f64);
    }
    for j in 1..=n {
        z += ln_gamma(th * (m1 - 2 * n - nu1 + j) as f64) + ln_gamma(th * j as f64) - 2.0 * ln_gamma(th);
    }
    z
}

fn check_trajectory(t: &Trajectory, params: &ChainParams) -> Result<()> {
    validate_chain_params(params)?;
    if t.p() != params.p() {
        return Err(Error::LengthMismatch { expected: params.p(), found: t.p() });
    }
    for c in &t.configs {
        check_len(c, params.n)?;
        check_interior(c)?;
    }
    Ok(())
}

/// Log-density of the whole trajectory `x^1, …, x^p`, assembled from the
/// Cauchy-determinant form of the process law.
pub fn process_log_density(t: &Trajectory, params: &ChainParams) -> Result<f64> {
    check_trajectory(t, params)?;
    let th = params.theta;
    let n = params.n;
    let nu1 = params.nu_k(1) as f64;
    let m1 = params.m_k(1);
    for k in 1..t.p() {
        if !interlaces_slice(t.configs[k].values(), t.configs[k - 1].values())? {
            return Ok(f64::NEG_INFINITY);
        }
    }
    let x1 = t.configs[0].values();
    let xp = t.last().values();
    let mut s = th * log_vandermonde(xp) + th * log_vandermonde(x1) - ln_z_process(params);
    for k in 2..=params.p() {
        let prev = t.configs[k - 2].values();
        let cur = t.configs[k - 1].values();
        if th != 1.0 {
            let c = cauchy_det(prev, cur)?;
            if c.sign <= 0.0 {
                return Err(Error::Numerical("non-positive Cauchy determinant on the support".into()));
            }
            s += (1.0 - th) * c.ln_abs;
        }
        let nu = params.nu_k(k) as f64;
        for i in 0..n {
            s += (th * (nu + 1.0) - 1.0) * libm::log(cur[i]) - (th * (nu + 2.0) - 1.0) * libm::log(prev[i]);
        }
    }
    let b = th * ((m1 - 2 * n) as f64 - nu1 + 1.0) - 1.0;
    for &xi in x1 {
        s += (th * (nu1 + 1.0) - 1.0) * libm::log(xi) + b * libm::log1p(-xi);
    }
    Ok(s)
}

/// Selberg integral `∫_{[0,1]^n} Π u_i^a (1−u_i)^b |Δ(u)|^{2θ} du`.
pub fn selberg(n: usize, a: f64, b: f64, theta: f64) -> Result<f64> {
    Ok(libm::exp(ln_selberg(n, a, b, theta)?))
}

pub fn ln_selberg(n: usize, a: f64, b: f64, theta: f64) -> Result<f64> {
    if !(a > -1.0 && b > -1.0 && theta > 0.0) {
        return Err(Error::InvalidParams(format!(
            "Selberg integral needs a, b > -1 and theta > 0, got ({a}, {b}, {theta})"
        )));
    }
    let mut s = 0.0;
    for j in 0..n {
        let jt = j as f64 * theta;
        s += ln_gamma(a + 1.0 + jt) + ln_gamma(b + 1.0 + jt) + ln_gamma(1.0 + jt + theta)
            - ln_gamma(a + b + 2.0 + (n + j - 1) as f64 * theta)
            - ln_gamma(1.0 + theta);
    }
    Ok(s)
}

/// Average of `J_κ(u; θ)` under the normalized Selberg weight.
pub fn selberg_jack_average(kappa: &Partition, n: usize, a: f64, b: f64, theta: f64) -> Result<f64> {
    ln_selberg(n, a, b, theta)?;
    if kappa.len() > n {
        return Err(Error::InvalidParams(format!("l(kappa) = {} exceeds n = {n}", kappa.len())));
    }
    let principal = JackCache::new(theta)?.principal(kappa, n);
    let mut s = 0.0;
    for j in 1..=n {
        let k = kappa.part(j - 1) as f64;
        let u = a + theta * (n - j) as f64 + 1.0;
        let w = a + b + theta * (2 * n - j - 1) as f64 + 2.0;
        s += (ln_gamma(u + k) - ln_gamma(u)) - (ln_gamma(w + k) - ln_gamma(w));
    }
    Ok(principal * libm::exp(s))
}

/// `∫_c^∞ g(s) ds` for `g` given as `(ln|g|, sign)`, with `g ~ (s−c)^{e0}` at `c`
/// and `g ~ s^{p_inf}` at infinity (`p_inf < −1`).
fn half_line(q: &Quad, c: f64, e0: f64, p_inf: f64, ln_g: impl Fn(f64) -> (f64, f64)) -> Result<f64> {
    let e1 = -p_inf - 2.0;
    q.integrate(
        |t| {
            let u = 1.0 - t;
            let s = c + t / u;
            let (lg, sg) = ln_g(s);
            sg * libm::exp(lg - 2.0 * libm::log(u) - e0 * libm::log(t) - e1 * libm::log(u))
        },
        0.0,
        1.0,
        e0,
        e1,
    )
}

/// `∫_0^∞ g(s) ds` with `g ~ s^{e0}` at 0 and `g ~ s^{p_inf}` at infinity, split
/// at the sorted points `breaks` and at 1; the pieces in between run in `ln s`.
fn positive_line(q: &Quad, e0: f64, p_inf: f64, breaks: &[f64], ln_g: impl Fn(f64) -> (f64, f64)) -> Result<f64> {
    let mut knots: Vec<f64> = breaks.iter().copied().filter(|&b| b > 0.0 && b < 1.0).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots.push(1.0);
    let first = knots[0];
    let mut total = q.integrate(
        |s| {
            let (lg, sg) = ln_g(s);
            sg * libm::exp(lg - e0 * libm::log(s))
        },
        0.0,
        first,
        e0,
        0.0,
    )?;
    for w in knots.windows(2) {
        total += q.integrate_smooth(
            |u| {
                let (lg, sg) = ln_g(libm::exp(u));
                sg * libm::exp(lg + u)
            },
            libm::log(w[0]),
            libm::log(w[1]),
        )?;
    }
    total += half_line(q, 1.0, 0.0, p_inf, ln_g)?;
    Ok(total)
}

/// Both sides of the Dixon-type identity (with `b_0 → −∞`), each evaluated by
/// quadrature. `a_0 < … < a_n`, `b_1 < … < b_m < a_0`, `Σα = Σβ` with `β` listing
/// `β_0..β_m`.
pub fn dixon_check(a: &[f64], alpha: &[f64], b: &[f64], beta: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || a.len() != alpha.len() {
        return Err(Error::LengthMismatch { expected: a.len().max(1), found: alpha.len() });
    }
    if beta.len() != b.len() + 1 {
        return Err(Error::LengthMismatch { expected: b.len() + 1, found: beta.len() });
    }
    if alpha.iter().chain(beta).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParams("exponents alpha, beta must be positive".into()));
    }
    let sa: f64 = alpha.iter().sum();
    let sb: f64 = beta.iter().sum();
    if libm::fabs(sa - sb) > 1e-12 * sa.max(sb) {
        return Err(Error::InvalidParams(format!("sum(alpha) != sum(beta) ({sa} != {sb})")));
    }
    if a.windows(2).any(|w| w[0] >= w[1]) || b.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams("knots must be strictly increasing".into()));
    }
    if let Some(&bm) = b.last() {
        if bm >= a[0] {
            return Err(Error::InvalidParams("knots b must lie below a_0".into()));
        }
    }
    let n = a.len() - 1;
    let m = b.len();
    let q = Quad::new(20, 1e-13);

    let mut lhs_m = Matrix::zeros(n, n);
    for i in 1..=n {
        for j in 0..n {
            lhs_m[(i - 1, j)] = q.integrate(
                |x| {
                    let mut v = libm::pow(x, j as f64);
                    for (k, (&ak, &al)) in a.iter().zip(alpha).enumerate() {
                        if k != i - 1 && k != i {
                            v *= libm::pow(libm::fabs(ak - x), al - 1.0);
                        }
                    }
                    for (&bk, &be) in b.iter().zip(&beta[1..]) {
                        v *= libm::pow(x - bk, -be);
                    }
                    v
                },
                a[i - 1],
                a[i],
                alpha[i - 1] - 1.0,
                alpha[i] - 1.0,
            )?;
        }
    }
    let lhs = if n == 0 { 1.0 } else { lhs_m.det() };

    let w_prime = |x: f64, skip: &[usize]| -> (f64, f64) {
        let mut ln = 0.0;
        for (&ak, &al) in a.iter().zip(alpha) {
            ln -= al * libm::log(ak - x);
        }
        for (k, (&bk, &be)) in b.iter().zip(&beta[1..]).enumerate() {
            if !skip.contains(&(k + 1)) {
                ln += (be - 1.0) * libm::log(libm::fabs(bk - x));
            }
        }
        (ln, 1.0)
    };
    let mut rhs_m = Matrix::zeros(m, m);
    for k in 1..=m {
        for j in 0..m {
            rhs_m[(k - 1, j)] = if k == 1 {
                let p_inf = j as f64 - beta[0] - m as f64;
                half_line(&q, 0.0, beta[1] - 1.0, p_inf, |s| {
                    let x = b[0] - s;
                    let (ln, _) = w_prime(x, &[]);
                    let sign = if j % 2 == 1 && x < 0.0 { -1.0 } else { 1.0 };
                    let lx = if j == 0 { 0.0 } else { j as f64 * libm::log(libm::fabs(x)) };
                    (ln + lx, sign)
                })?
            } else {
                q.integrate(
                    |x| {
                        let (ln, _) = w_prime(x, &[k - 1, k]);
                        libm::pow(x, j as f64) * libm::exp(ln)
                    },
                    b[k - 2],
                    b[k - 1],
                    beta[k - 1] - 1.0,
                    beta[k] - 1.0,
                )?
            };
        }
    }
    let integral = if m == 0 { 1.0 } else { rhs_m.det() };

    let mut ln_pre = 0.0;
    for j in 0..=n {
        for i in 0..j {
            ln_pre += (alpha[i] + alpha[j] - 1.0) * libm::log(a[j] - a[i]);
        }
    }
    for j in 1..=m {
        for i in 1..j {
            ln_pre += (1.0 - beta[i] - beta[j]) * libm::log(b[j - 1] - b[i - 1]);
        }
    }
    for i in 0..=n {
        for j in 1..=m {
            ln_pre += (alpha[i] - beta[j]) * libm::log(libm::fabs(b[j - 1] - a[i]));
        }
    }
    ln_pre += alpha.iter().map(|&v| ln_gamma(v)).sum::<f64>() - beta.iter().map(|&v| ln_gamma(v)).sum::<f64>();
    Ok((lhs, libm::exp(ln_pre) * integral))
}

/// `ln W_{n,p}`.
pub fn ln_w(params: &ChainParams) -> f64 {
    let th = params.theta;
    let n = params.n as f64;
    let m1 = params.m_k(1) as f64;
    let nu1 = params.nu_k(1) as f64;
    let mut w = 0.0;
    for r in 2..=params.p() {
        let nur = params.nu_k(r) as f64;
        let rf = r as f64;
        w += ln_gamma(th * (m1 - n - nur)) + ln_gamma(th * (nur - nu1 + 1.0))
            - (n - rf + 2.0) * ln_gamma(th)
            - ln_gamma(th * (m1 - 2.0 * n - nu1 + rf - 1.0));
    }
    w
}

/// Integral-representation parameters that keep `I` finite.
fn check_integral_params(params: &ChainParams) -> Result<()> {
    let p = params.p();
    if p > 3 {
        return Err(Error::UnsupportedDimension(p));
    }
    let nu1 = params.nu_k(1);
    let m1 = params.m_k(1);
    for r in 2..=p {
        if params.nu_k(r) < nu1 {
            return Err(Error::InvalidParams(format!(
                "divergent integrand: integral representation needs nu_{r} >= nu_1"
            )));
        }
        if params.nu_k(r) + params.n >= m1 {
            return Err(Error::InvalidParams(format!(
                "divergent integrand: integral representation needs m_1 - n > nu_{r}"
            )));
        }
    }
    Ok(())
}

/// `ln I` of the integral representation; `p ≤ 3`.
pub fn ln_integral_i(x: &[f64], params: &ChainParams, q: &Quad) -> Result<f64> {
    check_integral_params(params)?;
    let th = params.theta;
    let n = params.n as f64;
    let m1 = params.m_k(1) as f64;
    let nu1 = params.nu_k(1) as f64;
    let p = params.p();
    if p == 1 {
        return Ok(0.0);
    }
    let nup = params.nu_k(p) as f64;
    let c = m1 - 2.0 * n - nu1 + (p - 1) as f64;
    // f(s) = (1+s)^{−θc} s^{θ(ν_p−ν_1+1)−1} Π (x_i+s)^{−θ}
    let e_f = th * (nup - nu1 + 1.0) - 1.0;
    let ln_f = |s: f64| -> f64 {
        let mut v = -th * c * libm::log1p(s) + e_f * libm::log(s);
        for &xi in x {
            v -= th * libm::log(xi + s);
        }
        v
    };
    let p_f = -th * c + e_f - th * n;
    if p == 2 {
        let v = positive_line(q, e_f, p_f, x, |s| (ln_f(s), 1.0))?;
        return Ok(libm::log(v));
    }
    let nu2 = params.nu_k(2) as f64;
    let inner = Quad::new(q.order, 1e-13);
    let smooth_f = |s: f64| -> f64 {
        let mut v = -th * c * libm::log1p(s);
        for &xi in x {
            v -= th * libm::log(xi + s);
        }
        libm::exp(v)
    };
    let g = |s11: f64| -> Result<f64> {
        let a0 = half_line(&inner, s11, th - 1.0, p_f + th - 1.0, |s| {
            (ln_f(s) + (th - 1.0) * libm::log(s - s11), 1.0)
        })?;
        let a_t = half_line(&inner, s11, th, p_f + th, |s| (ln_f(s) + th * libm::log(s - s11), 1.0))?;
        let b0 = inner.integrate(smooth_f, 0.0, s11, e_f, th - 1.0)?;
        let b_t = inner.integrate(smooth_f, 0.0, s11, e_f, th)?;
        Ok(a_t * b0 + a0 * b_t)
    };
    let e_out = th * (nu2 - nu1 + 1.0) - 1.0;
    let p_out = -th * (m1 - n - nu2) - 1.0;
    let outer_exp = th * (nu2 - nup - 1.0);
    let failure = core::cell::Cell::new(None);
    let v = positive_line(q, e_out, p_out, x, |s| match g(s) {
        Ok(val) if val > 0.0 => (outer_exp * libm::log(s) + libm::log(val), 1.0),
        Ok(_) => (f64::NEG_INFINITY, 1.0),
        Err(e) => {
            failure.set(Some(e));
            (f64::NEG_INFINITY, 1.0)
        }
    })?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(libm::log(v))
}

/// Log-density of the squared singular values of `T_p⋯T_1` through the nested
/// integral representation; `p ≤ 3`.
pub fn product_log_density_integral(x: &Config, params: &ChainParams) -> Result<f64> {
    validate_chain_params(params)?;
    check_integral_params(params)?;
    check_len(x, params.n)?;
    check_interior(x)?;
    let th = params.theta;
    let n = params.n;
    let p = params.p();
    let nu1 = params.nu_k(1) as f64;
    let m1 = params.m_k(1);
    let v = x.values();
    let q = Quad::new(20, 1e-10);
    let ln_i = ln_integral_i(v, params, &q)?;
    let b = th * ((m1 - 2 * n) as f64 - nu1 + p as f64) - 1.0;
    let mut s = 2.0 * th * log_vandermonde(v) + ln_i;
    for &xi in v {
        s += b * libm::log1p(-xi) + (th * (nu1 + 1.0) - 1.0) * libm::log(xi);
    }
    Ok(s - ln_z_process(params) - ln_w(params))
}

/// A chain for which the Jack representation applies.
#[derive(Clone, Debug, PartialEq)]
pub struct JackDensityData {
    pub big_m: usize,
    pub mu: Partition,
    pub params: ChainParams,
}

/// Finds `μ` with `{μ_j + θ(M−j)} = {θ(ν_i+1), …, θ(m_i−n)}`.
pub fn build_mu(params: &ChainParams) -> Result<JackDensityData> {
    validate_chain_params(params)?;
    let th = params.theta;
    let n = params.n;
    let mut vals: Vec<f64> = Vec::new();
    for i in 1..=params.p() {
        for k in params.nu_k(i) + 1..=params.m_k(i) - n {
            vals.push(th * k as f64);
        }
    }
    let big_m = vals.len();
    vals.sort_by(|a, b| b.total_cmp(a));
    let mut parts = Vec::with_capacity(big_m);
    for (j, &s) in vals.iter().enumerate() {
        let mu = s - th * (big_m - j - 1) as f64;
        let r = libm::round(mu);
        if libm::fabs(mu - r) > 1e-9 * (1.0 + libm::fabs(mu)) || r < 0.0 {
            return Err(Error::NoAdmissiblePartition);
        }
        parts.push(r as usize);
    }
    let mu = Partition::new(&parts).map_err(|_| Error::NoAdmissiblePartition)?;
    Ok(JackDensityData { big_m, mu, params: params.clone() })
}

/// `ln Ẑ_{n,p,θ}`.
pub fn ln_z_hat(params: &ChainParams, big_m: usize) -> f64 {
    let th = params.theta;
    let n = params.n;
    let mut z = 0.0;
    for i in 1..=params.p() {
        for j in params.nu_k(i) + 1..=params.m_k(i) - n {
            z += ln_gamma(th * j as f64) - ln_gamma(th * (j + n) as f64);
        }
    }
    for i in 1..=n {
        z += ln_gamma(th * (big_m - n + i) as f64) + ln_gamma(th * i as f64) - ln_gamma(th);
    }
    z
}

/// Log-density through the Jack representation.
pub fn product_log_density_jack(x: &Config, data: &JackDensityData) -> Result<f64> {
    let params = &data.params;
    validate_chain_params(params)?;
    check_len(x, params.n)?;
    check_interior(x)?;
    let th = params.theta;
    let n = params.n;
    let cache = JackCache::new(th)?;
    let num = cache.eval_with_ones(&data.mu, x.values(), data.big_m - n)?;
    let den = cache.principal(&data.mu, data.big_m);
    if !(num > 0.0 && den > 0.0) {
        return Err(Error::Numerical(format!("non-positive Jack ratio {num}/{den}")));
    }
    let v = x.values();
    let mut s = libm::log(num) - libm::log(den) + 2.0 * th * log_vandermonde(v);
    let b = th * (data.big_m - n) as f64 + th - 1.0;
    for &xi in v {
        s += b * libm::log1p(-xi) - libm::log(xi);
    }
    Ok(s - ln_z_hat(params, data.big_m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ln_beta;
    use alloc::vec;

    fn cfg(v: &[f64]) -> Config {
        Config::new(v.to_vec()).unwrap()
    }

    #[test]
    fn jacobi_n1_closed_form() {
        let jp = JacobiParams::new(1, 5, 0, 1.0).unwrap();
        let v = jacobi_log_density(&cfg(&[0.3]), &jp).unwrap();
        assert!((v - (4.0f64.ln() + 3.0 * 0.7f64.ln())).abs() < 1e-13);
    }

    #[test]
    fn kernel_n1_integrates_to_one() {
        let q = Quad::default();
        for (th, nu) in [(0.5, 0), (1.0, 1), (2.0, 0)] {
            let kp = KernelParams::new(1, nu, th).unwrap();
            let x = cfg(&[0.7]);
            let a = th * (nu as f64 + 1.0) - 1.0;
            let total = q
                .integrate(
                    |y| {
                        let d = kernel_log_density(&cfg(&[y]), &x, &kp).unwrap();
                        libm::exp(d) / (libm::pow(y, a) * libm::pow(0.7 - y, th - 1.0))
                    },
                    0.0,
                    0.7,
                    a,
                    th - 1.0,
                )
                .unwrap();
            assert!((total - 1.0).abs() < 1e-10, "{th} {nu}: {total}");
        }
    }

    #[test]
    fn kernel_off_support() {
        let kp = KernelParams::new(2, 0, 0.5).unwrap();
        let v = kernel_log_density(&cfg(&[0.3, 0.5]), &cfg(&[0.2, 0.6]), &kp).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
        let v = kernel_log_density(&cfg(&[0.2, 0.5]), &cfg(&[0.2, 0.6]), &kp).unwrap();
        assert_eq!(v, f64::INFINITY);
    }

    #[test]
    fn process_factorizes() {
        let params = ChainParams::new(0.7, 2, vec![6, 4, 3], &[1, 1, 0]);
        let t = Trajectory::new(vec![cfg(&[0.3, 0.8]), cfg(&[0.2, 0.5]), cfg(&[0.1, 0.4])]).unwrap();
        let lhs = process_log_density(&t, &params).unwrap();
        let mut rhs = jacobi_log_density(&t.configs[0], &JacobiParams::new(2, 6, 1, 0.7).unwrap()).unwrap();
        for k in 1..3 {
            let kp = KernelParams::new(2, params.nu_k(k + 1), 0.7).unwrap();
            rhs += kernel_log_density(&t.configs[k], &t.configs[k - 1], &kp).unwrap();
        }
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn selberg_small_cases() {
        let v = selberg(1, 0.5, 1.5, 3.0).unwrap();
        assert!((v - libm::exp(ln_beta(1.5, 2.5))).abs() < 1e-14);
        let v = selberg(2, 0.0, 0.0, 1.0).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-14);
        let v = selberg_jack_average(&Partition::new(&[1]).unwrap(), 1, 0.3, 1.2, 2.0).unwrap();
        assert!((v - 1.3 / 3.5).abs() < 1e-14);
    }

    #[test]
    fn dixon_small() {
        let (l, r) = dixon_check(&[0.0, 1.0], &[1.5, 2.0], &[-1.0], &[1.2, 2.3]).unwrap();
        assert!((l - r).abs() < 1e-8 * l.abs(), "{l} {r}");
        assert!(dixon_check(&[0.0, 1.0], &[1.5, 2.0], &[-1.0], &[1.2, 2.0]).is_err());
    }

    #[test]
    fn build_mu_examples() {
        let e = build_mu(&ChainParams::new(1.0, 1, vec![3, 2], &[0, 0])).unwrap_err();
        assert_eq!(e, Error::NoAdmissiblePartition);
        let d = build_mu(&ChainParams::new(1.0, 2, vec![7], &[1])).unwrap();
        assert_eq!(d.mu, Partition::rectangle(4, 2));
        let d = build_mu(&ChainParams::new(2.0, 1, vec![2, 3], &[0, 1])).unwrap();
        assert_eq!(d.mu.parts(), &[2, 2]);
    }

    #[test]
    fn jack_density_matches_jacobi_at_p1() {
        let params = ChainParams::new(1.0, 2, vec![7], &[1]);
        let data = build_mu(&params).unwrap();
        let jp = JacobiParams::new(2, 7, 1, 1.0).unwrap();
        let x = cfg(&[0.15, 0.6]);
        let a = product_log_density_jack(&x, &data).unwrap();
        let b = jacobi_log_density(&x, &jp).unwrap();
        assert!((a - b).abs() < 1e-11, "{a} vs {b}");
    }

    #[test]
    fn integral_density_reduces_at_p1() {
        let params = ChainParams::new(0.5, 2, vec![6], &[1]);
        let jp = JacobiParams::new(2, 6, 1, 0.5).unwrap();
        let x = cfg(&[0.15, 0.6]);
        let a = product_log_density_integral(&x, &params).unwrap();
        let b = jacobi_log_density(&x, &jp).unwrap();
        assert!((a - b).abs() < 1e-11);
        let p4 = ChainParams::new(0.5, 1, vec![3, 2, 2, 2], &[0, 0, 0, 0]);
        assert_eq!(product_log_density_integral(&cfg(&[0.5]), &p4).unwrap_err(), Error::UnsupportedDimension(4));
    }
}
