//! The β → ∞ limit: crystal configurations of the Jacobi ensemble and of the
//! product process, and the Gaussian field of the `1/√β` fluctuations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const MAX_ITER: usize = 200;

fn check_input(x: &Config) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidParams("empty configuration".into()));
    }
    if !x.is_interior() {
        return Err(Error::Degenerate(format!("points must lie strictly inside (0,1): {:?}", x.values())));
    }
    Ok(())
}

/// Coefficients (constant term first) of
/// `(1/n) Σ_i (z − c x_i) Π_{j≠i} (z − x_j)` with `c = (ν+1)/(n+ν+1)`.
pub fn crystal_polynomial(x: &[f64], nu: usize) -> Vec<f64> {
    let n = x.len();
    let c = (nu as f64 + 1.0) / (n + nu + 1) as f64;
    let mut total = vec![0.0; n + 1];
    for i in 0..n {
        let mut poly = vec![1.0];
        for (j, &xj) in x.iter().enumerate() {
            let root = if j == i { c * xj } else { xj };
            let mut next = vec![0.0; poly.len() + 1];
            for (k, &a) in poly.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= root * a;
            }
            poly = next;
        }
        for (t, a) in total.iter_mut().zip(&poly) {
            *t += a / n as f64;
        }
    }
    total
}

fn horner(coef: &[f64], z: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &a| acc * z + a)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if (flo > 0.0) == (fhi > 0.0) {
        return Err(Error::Numerical(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One step of the crystal recursion: the roots of [`crystal_polynomial`],
/// one in each gap `(x_{i−1}, x_i)` with `x_0 = 0`.
pub fn crystal_step(x: &Config, nu: usize) -> Result<Config> {
    check_input(x)?;
    let v = x.values();
    let coef = crystal_polynomial(v, nu);
    let mut out = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let lo = if i == 0 { 0.0 } else { v[i - 1] };
        out.push(bisect(|z| horner(&coef, z), lo, v[i])?);
    }
    if out.len() != v.len() {
        return Err(Error::Numerical("root count differs from n".into()));
    }
    Ok(Config::new_unchecked(out))
}

/// Left side of the critical-point equation for coordinate `y`.
pub fn argmax_residual(y: f64, x: &[f64], nu: usize) -> f64 {
    x.iter().map(|&xj| 1.0 / (y - xj)).sum::<f64>() + (nu as f64 + 1.0) / y
}

/// Maximizer of `Π|x_i − y_j| Π y_i^{ν+1}` over `y` interlacing `x`, solved
/// coordinate-wise by safeguarded Newton.
pub fn argmax_solver(x: &Config, nu: usize) -> Result<Config> {
    check_input(x)?;
    let v = x.values();
    if v.len() == 1 {
        return Ok(Config::new_unchecked(vec![(nu as f64 + 1.0) / (nu as f64 + 2.0) * v[0]]));
    }
    let mut out = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let (mut lo, mut hi) = (if i == 0 { 0.0 } else { v[i - 1] }, v[i]);
        let mut y = 0.5 * (lo + hi);
        let mut converged = false;
        for _ in 0..MAX_ITER {
            let r = argmax_residual(y, v, nu);
            if r == 0.0 {
                converged = true;
                break;
            }
            // residual is decreasing in y
            if r > 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            let d: f64 = -v.iter().map(|&xj| 1.0 / ((y - xj) * (y - xj))).sum::<f64>()
                - (nu as f64 + 1.0) / (y * y);
            let mut next = y - r / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if libm::fabs(next - y) <= 4.0 * f64::EPSILON * libm::fabs(y) || !(hi > lo) {
                y = next;
                converged = true;
                break;
            }
            y = next;
        }
        if !converged {
            return Err(Error::Numerical(format!("argmax solver did not converge for coordinate {i}")));
        }
        out.push(y);
    }
    Ok(Config::new_unchecked(out))
}

/// Gradient of `log h` with `h = Δ(x)² Π x_i^{ν+1} (1−x_i)^{m−2n−ν+1}`.
pub fn jacobi_crystal_gradient(x: &[f64], m: usize, nu: usize) -> Vec<f64> {
    let n = x.len();
    let a = nu as f64 + 1.0;
    let b = (m - 2 * n - nu) as f64 + 1.0;
    (0..n)
        .map(|i| {
            let mut g = a / x[i] - b / (1.0 - x[i]);
            for j in 0..n {
                if j != i {
                    g += 2.0 / (x[i] - x[j]);
                }
            }
            g
        })
        .collect()
}

fn log_h(x: &[f64], a: f64, b: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        s += a * libm::log(x[i]) + b * libm::log1p(-x[i]);
        for j in 0..i {
            s += 2.0 * libm::log(x[i] - x[j]);
        }
    }
    s
}

/// Maximizer of `h` on the ordered cell (damped Newton on the log-gradient).
pub fn jacobi_crystal(n: usize, m: usize, nu: usize) -> Result<Config> {
    if n == 0 || m < 2 * n + nu {
        return Err(Error::InvalidParams(format!("need n >= 1 and m >= 2n+nu, got n={n}, m={m}, nu={nu}")));
    }
    if n == 1 {
        return Ok(Config::new_unchecked(vec![(nu as f64 + 1.0) / m as f64]));
    }
    let a = nu as f64 + 1.0;
    let b = (m - 2 * n - nu) as f64 + 1.0;
    let mut x: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
    for _ in 0..MAX_ITER {
        let g = jacobi_crystal_gradient(&x, m, nu);
        let gmax = g.iter().fold(0.0f64, |acc, v| acc.max(libm::fabs(*v)));
        if gmax <= 1e-13 {
            return Ok(Config::new_unchecked(x));
        }
        let hess = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                let mut d = -a / (x[i] * x[i]) - b / ((1.0 - x[i]) * (1.0 - x[i]));
                for k in 0..n {
                    if k != i {
                        d -= 2.0 / ((x[i] - x[k]) * (x[i] - x[k]));
                    }
                }
                d
            } else {
                2.0 / ((x[i] - x[j]) * (x[i] - x[j]))
            }
        });
        let step = hess.lu().solve(&g);
        let f0 = log_h(&x, a, b);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&step).map(|(xi, s)| xi - t * s).collect();
            let ordered = cand.windows(2).all(|w| w[0] < w[1]);
            if ordered && cand[0] > 0.0 && cand[n - 1] < 1.0 && log_h(&cand, a, b) >= f0 - 1e-12 * libm::fabs(f0) {
                x = cand;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let g = jacobi_crystal_gradient(&x, m, nu);
    if g.iter().all(|v| libm::fabs(*v) <= 1e-10) {
        return Ok(Config::new_unchecked(x));
    }
    Err(Error::Numerical("jacobi_crystal did not converge".into()))
}

/// Crystal configurations `x̃^1, …, x̃^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrystalChain {
    pub configs: Vec<Config>,
    /// `ν_2, …, ν_p`.
    pub nu: Vec<usize>,
}

impl CrystalChain {
    /// Runs the recursion from `x1` with parameters `ν_2..ν_p`.
    pub fn new(x1: Config, nu: &[usize]) -> Result<Self> {
        let mut configs = vec![x1];
        for &v in nu {
            let next = crystal_step(configs.last().expect("nonempty"), v)?;
            configs.push(next);
        }
        Ok(CrystalChain { configs, nu: nu.to_vec() })
    }

    pub fn n(&self) -> usize {
        self.configs[0].len()
    }

    pub fn p(&self) -> usize {
        self.configs.len()
    }
}

/// Gaussian limit of `√β (x^k − x̃^k)`, `k = 2..p`, with coordinate `(k, i)` at
/// index `(k−2) n + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussField {
    pub n: usize,
    pub p: usize,
    pub precision: Matrix,
    pub covariance: Matrix,
}

impl GaussField {
    pub fn index(&self, k: usize, i: usize) -> usize {
        (k - 2) * self.n + i
    }
}

/// Assembles the precision matrix of the quadratic form of the limiting
/// Gaussian density (with `ξ^1 = 0`) and inverts it.
pub fn gauss_field(chain: &CrystalChain) -> Result<GaussField> {
    let n = chain.n();
    let p = chain.p();
    if p < 2 {
        return Err(Error::InvalidParams("gauss_field needs p >= 2".into()));
    }
    let dim = n * (p - 1);
    let mut prec = Matrix::zeros(dim, dim);
    let idx = |k: usize, i: usize| if k == 1 { None } else { Some((k - 2) * n + i) };
    // exponent term c·(ξ_a − ξ_b)²
    let pair = |prec: &mut Matrix, a: Option<usize>, b: Option<usize>, c: f64| {
        if let Some(a) = a {
            prec[(a, a)] -= 2.0 * c;
        }
        if let Some(b) = b {
            prec[(b, b)] -= 2.0 * c;
        }
        if let (Some(a), Some(b)) = (a, b) {
            prec[(a, b)] += 2.0 * c;
            prec[(b, a)] += 2.0 * c;
        }
    };
    for k in 2..=p {
        let prev = chain.configs[k - 2].values();
        let cur = chain.configs[k - 1].values();
        let nu = chain.nu[k - 2] as f64;
        for i in 0..n {
            for j in i + 1..n {
                let d = prev[i] - prev[j];
                if d == 0.0 {
                    return Err(Error::Degenerate("coincident crystal points".into()));
                }
                pair(&mut prec, idx(k - 1, i), idx(k - 1, j), 0.5 / (d * d));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let d = prev[i] - cur[j];
                if d == 0.0 {
                    return Err(Error::Degenerate("crystal levels do not interlace strictly".into()));
                }
                pair(&mut prec, idx(k - 1, i), idx(k, j), -0.25 / (d * d));
            }
        }
        for i in 0..n {
            pair(&mut prec, idx(k - 1, i), None, (nu + 2.0) / 4.0 / (prev[i] * prev[i]));
            pair(&mut prec, idx(k, i), None, -(nu + 1.0) / 4.0 / (cur[i] * cur[i]));
        }
    }
    prec.cholesky()
        .map_err(|_| Error::Numerical("precision matrix of the Gaussian field is not positive definite".into()))?;
    let covariance = prec.inverse()?;
    Ok(GaussField { n, p, precision: prec, covariance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(v: &[f64]) -> Config {
        Config::new(v.to_vec()).unwrap()
    }

    #[test]
    fn n1_cases() {
        let y = crystal_step(&cfg(&[0.6]), 2).unwrap();
        assert!((y.values()[0] - 0.45).abs() < 1e-15);
        let y = argmax_solver(&cfg(&[0.6]), 2).unwrap();
        assert!((y.values()[0] - 0.45).abs() < 1e-15);
        assert_eq!(jacobi_crystal(1, 7, 2).unwrap().values()[0], 3.0 / 7.0);
    }

    #[test]
    fn lemma_small() {
        let x = cfg(&[0.3, 0.8]);
        let a = crystal_step(&x, 0).unwrap();
        let b = argmax_solver(&x, 0).unwrap();
        for i in 0..2 {
            assert!((a.values()[i] - b.values()[i]).abs() < 1e-12);
            assert!(argmax_residual(b.values()[i], x.values(), 0).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobi_crystal_residual() {
        let x = jacobi_crystal(3, 9, 1).unwrap();
        let g = jacobi_crystal_gradient(x.values(), 9, 1);
        assert!(g.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn gauss_field_p2_n1() {
        let chain = CrystalChain::new(cfg(&[0.6]), &[1]).unwrap();
        let f = gauss_field(&chain).unwrap();
        let (x1, x2) = (0.6, chain.configs[1].values()[0]);
        let want = 2.0 / (2.0 * x2 * x2) + 1.0 / (2.0 * (x1 - x2) * (x1 - x2));
        assert!((f.precision[(0, 0)] - want).abs() < 1e-12 * want);
    }
}
