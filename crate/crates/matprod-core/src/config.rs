//! Particle configurations, chain parameters and Vandermonde/Cauchy helpers.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Strictly increasing points of `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    values: Vec<f64>,
}

impl Config {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidParams(format!("config values must lie in [0,1]: {values:?}")));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Degenerate(format!("config must be strictly increasing: {values:?}")));
        }
        Ok(Config { values })
    }

    /// Sorts the values first; used for eigenvalue output.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(f64::total_cmp);
        Self::new(values)
    }

    pub(crate) fn new_unchecked(values: Vec<f64>) -> Self {
        Config { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// True when every point lies strictly inside `(0, 1)`.
    pub fn is_interior(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0 && v < 1.0)
    }
}

/// The configurations `x^1, …, x^p` of a product chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub configs: Vec<Config>,
}

impl Trajectory {
    pub fn new(configs: Vec<Config>) -> Result<Self> {
        for k in 1..configs.len() {
            if !interlaces(&configs[k], &configs[k - 1])? {
                return Err(Error::Degenerate(format!("x^{} does not interlace x^{}", k + 1, k)));
            }
        }
        Ok(Trajectory { configs })
    }

    pub fn p(&self) -> usize {
        self.configs.len()
    }

    pub fn last(&self) -> &Config {
        self.configs.last().expect("empty trajectory")
    }
}

/// `(θ, n, m_1..m_p, ν_0..ν_p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainParams {
    pub theta: f64,
    pub n: usize,
    pub m: Vec<usize>,
    pub nu: Vec<usize>,
}

impl ChainParams {
    /// `nu` lists `ν_1..ν_p`; `ν_0 = 0` is prepended.
    pub fn new(theta: f64, n: usize, m: Vec<usize>, nu: &[usize]) -> Self {
        let mut full = Vec::with_capacity(nu.len() + 1);
        full.push(0);
        full.extend_from_slice(nu);
        ChainParams { theta, n, m, nu: full }
    }

    pub fn p(&self) -> usize {
        self.m.len()
    }

    /// `m_k` for `1 ≤ k ≤ p`.
    pub fn m_k(&self, k: usize) -> usize {
        self.m[k - 1]
    }

    /// `ν_k` for `0 ≤ k ≤ p`.
    pub fn nu_k(&self, k: usize) -> usize {
        self.nu[k]
    }

    /// True for the three matrix-model values of θ.
    pub fn has_matrix_model(&self) -> bool {
        self.theta == 0.5 || self.theta == 1.0 || self.theta == 2.0
    }
}

/// Checks `(c1)`, `(c2)` and `ν_0 = 0`, reporting the first violation.
pub fn validate_chain_params(params: &ChainParams) -> Result<()> {
    let p = params.p();
    let n = params.n;
    if !(params.theta > 0.0 && params.theta.is_finite()) {
        return Err(Error::InvalidParams(format!("theta must be positive, got {}", params.theta)));
    }
    if n == 0 {
        return Err(Error::InvalidParams("n must be positive".into()));
    }
    if p == 0 {
        return Err(Error::InvalidParams("at least one factor is required (p >= 1)".into()));
    }
    if params.nu.len() != p + 1 {
        return Err(Error::InvalidParams(format!(
            "expected {} values nu_0..nu_p, found {}",
            p + 1,
            params.nu.len()
        )));
    }
    if params.nu[0] != 0 {
        return Err(Error::InvalidParams("nu_0 must be 0".into()));
    }
    let m1 = params.m_k(1);
    let nu1 = params.nu_k(1);
    if m1 < 2 * n + nu1 {
        return Err(Error::InvalidParams(format!("m_1 < 2n+nu_1 ({m1} < {})", 2 * n + nu1)));
    }
    for k in 2..=p {
        let want = n + params.nu_k(k) + 1;
        if params.m_k(k) != want {
            return Err(Error::InvalidParams(format!(
                "m_{k} != n+nu_{k}+1 ({} != {want})",
                params.m_k(k)
            )));
        }
    }
    Ok(())
}

/// `y_i ≤ x_i` and `x_{i-1} ≤ y_i` for all `i`.
pub fn interlaces(y: &Config, x: &Config) -> Result<bool> {
    interlaces_slice(y.values(), x.values())
}

pub(crate) fn interlaces_slice(y: &[f64], x: &[f64]) -> Result<bool> {
    if y.len() != x.len() {
        return Err(Error::LengthMismatch { expected: x.len(), found: y.len() });
    }
    Ok((0..y.len()).all(|i| y[i] <= x[i] && (i == 0 || x[i - 1] <= y[i])))
}

/// `Σ_{i<j} ln(x_j − x_i)`; `-∞` flags repeated coordinates.
pub fn log_vandermonde(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..x.len() {
        for i in 0..j {
            let d = x[j] - x[i];
            if d == 0.0 {
                return f64::NEG_INFINITY;
            }
            s += libm::log(libm::fabs(d));
        }
    }
    s
}

/// Sign of `Π_{i<j}(x_j − x_i)`.
pub fn vandermonde_sign(x: &[f64]) -> f64 {
    let mut s = 1.0;
    for j in 0..x.len() {
        for i in 0..j {
            if x[j] < x[i] {
                s = -s;
            }
        }
    }
    s
}

/// A real number stored as `sign · exp(ln_abs)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedLog {
    pub ln_abs: f64,
    pub sign: f64,
}

impl SignedLog {
    pub fn value(&self) -> f64 {
        self.sign * libm::exp(self.ln_abs)
    }
}

/// `det[1/(x_i − y_j)]` through `Δ(x)Δ(y)/Π(x_i − y_j)` with the sign of the
/// `i<j` ordering convention `Δ(x) = Π_{i<j}(x_j − x_i)` and the classical
/// identity `det = Π_{i<j}(x_j−x_i)(y_i−y_j) / Π_{i,j}(x_i−y_j)`.
pub fn cauchy_det(x: &[f64], y: &[f64]) -> Result<SignedLog> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), found: y.len() });
    }
    let n = x.len();
    let mut ln = 0.0;
    let mut sign = 1.0;
    for j in 0..n {
        for i in 0..j {
            let dx = x[j] - x[i];
            let dy = y[i] - y[j];
            if dx == 0.0 || dy == 0.0 {
                return Ok(SignedLog { ln_abs: f64::NEG_INFINITY, sign: 0.0 });
            }
            ln += libm::log(libm::fabs(dx)) + libm::log(libm::fabs(dy));
            if (dx < 0.0) != (dy < 0.0) {
                sign = -sign;
            }
        }
    }
    for &xi in x {
        for &yj in y {
            let d = xi - yj;
            if d == 0.0 {
                return Err(Error::Degenerate(format!("x_i = y_j = {xi} in Cauchy determinant")));
            }
            ln -= libm::log(libm::fabs(d));
            if d < 0.0 {
                sign = -sign;
            }
        }
    }
    Ok(SignedLog { ln_abs: ln, sign })
}
