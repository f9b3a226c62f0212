//! Exact rational evaluation of the skew-symmetric Hankel-type matrix and its
//! closed-form inverse for odd integer `a`, `b`, where every Gamma value
//! involved is a factorial.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use matprod_core::linalg::Matrix;
use matprod_core::pfaffian::{hankel_inverse, hankel_matrix};

use crate::error::{CliError, Result};

pub type Rational = BigRational;
pub type RMatrix = Vec<Vec<Rational>>;

fn factorial(k: u64) -> BigInt {
    (2..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `Γ(k)` for an integer `k ≥ 1`.
fn gamma_int(k: i64) -> Result<BigInt> {
    if k < 1 {
        return Err(CliError::Numerical(format!("Gamma at non-positive integer {k}")));
    }
    Ok(factorial(k as u64 - 1))
}

fn binom(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

fn ratio(num: BigInt, den: BigInt) -> Rational {
    Rational::new(num, den)
}

fn check_odd(a: i64, b: i64) -> Result<()> {
    if a < 1 || b < 1 || a % 2 == 0 || b % 2 == 0 {
        return Err(CliError::validation(format!("exact Hankel evaluation needs odd a, b >= 1 (a={a}, b={b})")));
    }
    Ok(())
}

/// `C_{ij} = (j−i) Γ(a+i+j) / Γ(a+b+i+j+1)`, `0 ≤ i, j < 2n`.
pub fn hankel_exact(n: usize, a: i64, b: i64) -> Result<RMatrix> {
    check_odd(a, b)?;
    let dim = 2 * n;
    let mut c = vec![vec![Rational::zero(); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                let s = (i + j) as i64;
                let v = ratio(gamma_int(a + s)?, gamma_int(a + b + s + 1)?);
                c[i][j] = v * Rational::from_integer(BigInt::from(j as i64 - i as i64));
            }
        }
    }
    Ok(c)
}

/// `Θ(x) = Γ(x)/Γ(2x)` at an integer.
fn theta(x: i64) -> Result<Rational> {
    Ok(ratio(gamma_int(x)?, gamma_int(2 * x)?))
}

fn coef(k: i64, l: i64, a: i64, b: i64) -> Result<Rational> {
    let h = (a + b) / 2;
    let (ha, hb) = ((a + 1) / 2, (b + 1) / 2);
    let pow2 = Rational::from_integer(BigInt::from(2).pow((4 * (k - l)) as u32));
    let f = Rational::from_integer(BigInt::from((a + b + 4 * l - 1) * (a + b + 4 * k + 1)));
    let num = gamma_int(a + 2 * l)? * gamma_int(a + 1 + 2 * k)?;
    let den = factorial(l as u64) * gamma_int(h + l)? * gamma_int(ha + l)? * gamma_int(hb + l)?;
    Ok(pow2 * f * ratio(num, den) * theta(k + 1)? * theta(ha + k)? * theta(hb + k)? * theta(h + k)?)
}

fn term(i: i64, j: i64, k: i64, l: i64, a: i64, b: i64) -> Result<Rational> {
    let bi = binom((2 * l) as u64, i as u64);
    let bj = binom((2 * k + 1) as u64, j as u64);
    if bi.is_zero() || bj.is_zero() {
        return Ok(Rational::zero());
    }
    let num = bi * bj * gamma_int(a + b + 2 * l + i - 1)? * gamma_int(a + b + 2 * k + j)? * gamma_int(b + 1)?;
    Ok(ratio(num, gamma_int(a + i)? * gamma_int(a + j)?))
}

/// The closed-form inverse evaluated exactly.
pub fn hankel_inverse_exact(n: usize, a: i64, b: i64) -> Result<RMatrix> {
    check_odd(a, b)?;
    let dim = 2 * n;
    let coefs: Vec<Vec<Rational>> =
        (0..n as i64).map(|k| (0..=k).map(|l| coef(k, l, a, b)).collect::<Result<_>>()).collect::<Result<_>>()?;
    let mut q = vec![vec![Rational::zero(); dim]; dim];
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut s = Rational::zero();
            for k in 0..n {
                for l in 0..=k {
                    let (ii, jj, kk, ll) = (i as i64, j as i64, k as i64, l as i64);
                    s += &coefs[k][l] * (term(ii, jj, kk, ll, a, b)? - term(jj, ii, kk, ll, a, b)?);
                }
            }
            if (i + j) % 2 == 1 {
                s = -s;
            }
            q[j][i] = -s.clone();
            q[i][j] = s;
        }
    }
    Ok(q)
}

pub fn matmul(x: &RMatrix, y: &RMatrix) -> RMatrix {
    let (r, inner, c) = (x.len(), y.len(), y.first().map_or(0, Vec::len));
    let mut out = vec![vec![Rational::zero(); c]; r];
    for i in 0..r {
        for k in 0..inner {
            if x[i][k].is_zero() {
                continue;
            }
            for j in 0..c {
                out[i][j] += &x[i][k] * &y[k][j];
            }
        }
    }
    out
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Residuals of the closed-form inverse at one `(n, a, b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HankelResiduals {
    /// `‖Q·C − I‖_max` in exact arithmetic (rounded once at the end).
    pub exact: f64,
    /// The same with the floating-point `Q` and `C`.
    pub float: f64,
    /// Largest `|Q_f64 − Q| / max|Q|` over the entries.
    pub entry_error: f64,
    /// `max_ij Σ_k |Q_ik||C_kj|`, the size of the cancellation in `Q·C`.
    pub cancellation: f64,
}

pub fn hankel_residuals(n: usize, a: i64, b: i64) -> Result<HankelResiduals> {
    let c = hankel_exact(n, a, b)?;
    let q = hankel_inverse_exact(n, a, b)?;
    let qc = matmul(&q, &c);
    let dim = 2 * n;
    let mut exact: f64 = 0.0;
    for (i, row) in qc.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { Rational::one() } else { Rational::zero() };
            exact = exact.max(to_f64(&(v - target).abs()));
        }
    }
    let (af, bf) = (a as f64, b as f64);
    let qf = hankel_inverse(n, af, bf)?;
    let cf = hankel_matrix(n, af, bf);
    let float = qf.matmul(&cf).max_abs_diff(&Matrix::identity(dim));
    let qe = Matrix::from_fn(dim, dim, |i, j| to_f64(&q[i][j]));
    let scale = qe.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let entry_error = qf.max_abs_diff(&qe) / scale;
    let mut cancellation: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let s: f64 = (0..dim).map(|k| (qe[(i, k)] * cf[(k, j)]).abs()).sum();
            cancellation = cancellation.max(s);
        }
    }
    Ok(HankelResiduals { exact, float, entry_error, cancellation })
}
