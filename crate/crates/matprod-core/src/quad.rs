//! Gauss rules (Golub–Welsch) and an adaptive integrator for integrands with
//! algebraic endpoint singularities.

use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::error::{Error, Result};
use crate::linalg::tridiagonal_eigen;
use crate::special::ln_gamma;

/// Nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// `Σ w_i f(t_i)`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    /// The same rule moved to `[lo, hi]` for the weight `(hi−t)^α (t−lo)^β`.
    pub fn mapped(&self, lo: f64, hi: f64, alpha: f64, beta: f64) -> Rule {
        let half = 0.5 * (hi - lo);
        let scale = libm::pow(half, alpha + beta + 1.0);
        Rule {
            nodes: self.nodes.iter().map(|&s| lo + half * (1.0 + s)).collect(),
            weights: self.weights.iter().map(|&w| w * scale).collect(),
        }
    }
}

/// Gauss–Jacobi rule for the weight `(1−t)^α (1+t)^β`, `α, β > −1`.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<Rule> {
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::InvalidParams(alloc::format!(
            "Gauss-Jacobi exponents must exceed -1, got ({alpha}, {beta})"
        )));
    }
    if n == 0 {
        return Ok(Rule { nodes: Vec::new(), weights: Vec::new() });
    }
    let ab = alpha + beta;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let kf = k as f64;
        let d = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        diag.push(d);
    }
    for k in 1..n {
        let kf = k as f64;
        let b = if k == 1 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab))
        } else {
            let s = 2.0 * kf + ab;
            4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        off.push(libm::sqrt(b));
    }
    let (nodes, z) = tridiagonal_eigen(&diag, &off)?;
    let ln_mu0 = (ab + 1.0) * core::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
        - ln_gamma(ab + 2.0);
    let mu0 = libm::exp(ln_mu0);
    let weights = z.iter().map(|v| mu0 * v * v).collect();
    Ok(Rule { nodes, weights })
}

pub fn gauss_legendre(n: usize) -> Rule {
    gauss_jacobi(n, 0.0, 0.0).expect("Legendre rule")
}

type RuleKey = (usize, u64, u64);

/// Adaptive integrator for `∫_lo^hi (t−lo)^{e_lo} (hi−t)^{e_hi} f(t) dt` with `f`
/// smooth on the closed interval.
///
/// Pieces touching a singular end use Gauss–Jacobi rules carrying the endpoint
/// exponent; interior pieces use Gauss–Legendre. A piece is accepted when the
/// rule on the piece agrees with the sum over its two halves.
pub struct Quad {
    pub order: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
    rules: RefCell<BTreeMap<RuleKey, Rc<Rule>>>,
}

impl Default for Quad {
    fn default() -> Self {
        Quad::new(20, 1e-11)
    }
}

impl Quad {
    pub fn new(order: usize, rel_tol: f64) -> Self {
        Quad { order, rel_tol, abs_tol: 1e-300, max_depth: 40, rules: RefCell::new(BTreeMap::new()) }
    }

    pub fn rule(&self, n: usize, alpha: f64, beta: f64) -> Result<Rc<Rule>> {
        let key = (n, alpha.to_bits(), beta.to_bits());
        if let Some(r) = self.rules.borrow().get(&key) {
            return Ok(r.clone());
        }
        let r = Rc::new(gauss_jacobi(n, alpha, beta)?);
        self.rules.borrow_mut().insert(key, r.clone());
        Ok(r)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, lo: f64, hi: f64, e_lo: f64, e_hi: f64) -> Result<f64> {
        if !(hi > lo) {
            if hi == lo {
                return Ok(0.0);
            }
            return Err(Error::InvalidParams(alloc::format!("empty interval [{lo}, {hi}]")));
        }
        if !(e_lo > -1.0 && e_hi > -1.0) {
            return Err(Error::Numerical(alloc::format!(
                "non-integrable endpoint exponents ({e_lo}, {e_hi})"
            )));
        }
        let mut job = Job { f: &f, lo, hi, e_lo, e_hi, budget: 0.0 };
        let whole = self.piece(&job, lo, hi)?;
        let tol = (self.rel_tol * libm::fabs(whole)).max(self.abs_tol);
        job.budget = tol;
        let v = self.refine(&job, lo, hi, whole, tol, 0)?;
        if !v.is_finite() {
            return Err(Error::Numerical("quadrature produced a non-finite value".into()));
        }
        Ok(v)
    }

    /// Plain integral of a smooth function.
    pub fn integrate_smooth(&self, f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
        self.integrate(f, lo, hi, 0.0, 0.0)
    }

    fn piece(&self, job: &Job<'_>, l: f64, h: f64) -> Result<f64> {
        let left = l == job.lo && job.e_lo != 0.0;
        let right = h == job.hi && job.e_hi != 0.0;
        let el = if left { job.e_lo } else { 0.0 };
        let eh = if right { job.e_hi } else { 0.0 };
        let rule = self.rule(self.order, eh, el)?;
        let half = 0.5 * (h - l);
        let mut s = 0.0;
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let x = l + half * (1.0 + t);
            let mut v = (job.f)(x);
            if !left && job.e_lo != 0.0 {
                v *= libm::pow(x - job.lo, job.e_lo);
            }
            if !right && job.e_hi != 0.0 {
                v *= libm::pow(job.hi - x, job.e_hi);
            }
            s += w * v;
        }
        Ok(s * libm::pow(half, el + eh + 1.0))
    }

    fn refine(&self, job: &Job<'_>, l: f64, h: f64, est: f64, tol: f64, depth: usize) -> Result<f64> {
        let mid = 0.5 * (l + h);
        let a = self.piece(job, l, mid)?;
        let b = self.piece(job, mid, h)?;
        let sum = a + b;
        let err = libm::fabs(sum - est);
        // rounding floor of the piece sums
        let floor = 64.0 * f64::EPSILON * (libm::fabs(a) + libm::fabs(b));
        let tol = tol.max(floor);
        if err <= tol || depth >= self.max_depth || !(mid > l && mid < h) {
            if depth >= self.max_depth && err > job.budget {
                return Err(Error::Numerical(alloc::format!(
                    "adaptive quadrature failed to converge on [{l:e}, {h:e}] (err {err:e})"
                )));
            }
            return Ok(sum);
        }
        let t = 0.5 * tol;
        Ok(self.refine(job, l, mid, a, t.max(self.abs_tol), depth + 1)?
            + self.refine(job, mid, h, b, t.max(self.abs_tol), depth + 1)?)
    }
}

struct Job<'a> {
    f: &'a dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    e_lo: f64,
    e_hi: f64,
    budget: f64,
}
