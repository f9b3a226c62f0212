//! The product of two truncated symplectic matrices: Meijer G evaluators, the
//! determinantal density, skew-orthogonal Jacobi polynomials, the closed-form
//! inverse of the skew-Hankel matrix, the 2×2 correlation kernel and its
//! Pfaffian correlation functions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::{log_vandermonde, vandermonde_sign, Config};
use crate::error::{Error, Result};
use crate::jack::{jack_principal, schur_eval};
use crate::linalg::Matrix;
use crate::partition::Partition;
use crate::quad::Quad;
use crate::special::{binomial, ln_factorial, ln_gamma, ln_gamma_signed, ln_theta_ratio};

/// Antisymmetry tolerance for Pfaffian input.
pub const ANTISYMMETRY_TOL: f64 = 1e-12;

fn quad() -> Quad {
    Quad::new(20, 1e-13)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TwoProductParams {
    pub n: usize,
    pub nu1: usize,
    pub nu2: usize,
    pub m1: usize,
}

impl TwoProductParams {
    pub fn new(n: usize, nu1: usize, nu2: usize, m1: usize) -> Result<Self> {
        let tp = TwoProductParams { n, nu1, nu2, m1 };
        tp.validate()?;
        Ok(tp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be positive".into()));
        }
        if self.m1 < 2 * self.n + self.nu1 {
            return Err(Error::InvalidParams(format!("m_1 < 2n+nu_1 ({} < {})", self.m1, 2 * self.n + self.nu1)));
        }
        Ok(())
    }

    pub fn a1(&self) -> f64 {
        2.0 * self.nu1 as f64 + 1.0
    }

    pub fn a2(&self) -> f64 {
        2.0 * self.nu2 as f64 + 1.0
    }

    pub fn b1(&self) -> f64 {
        2.0 * (self.m1 - 2 * self.n - self.nu1) as f64 + 1.0
    }

    /// `m_2 = n + ν_2 + 1`.
    pub fn m2(&self) -> usize {
        self.n + self.nu2 + 1
    }

    /// `ψ_j = W_{j+1}`, `j = 0..2n−1`.
    pub fn psi(&self, j: usize, x: f64) -> Result<f64> {
        let nu2 = self.nu2 as f64;
        let a = 2.0 * (self.m1 - 2 * self.n + 1) as f64 + j as f64;
        let b = 2.0 * self.nu1 as f64 + j as f64;
        meijer_g20_22(2.0 * nu2 + 2.0, 2.0 * nu2 + 1.0, a, b, x)
    }

    pub fn psi_vec(&self, x: f64) -> Result<Vec<f64>> {
        (0..2 * self.n).map(|j| self.psi(j, x)).collect()
    }
}

/// `G^{1,0}_{1,1}(a; b | x) = x^b (1−x)^{a−b−1}/Γ(a−b)` on `[0,1]`.
pub fn meijer_g10_11(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a - b > 0.0) {
        return Err(Error::InvalidParams(format!("G^(1,0)_(1,1) needs a > b, got a={a}, b={b}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Ok(0.0);
    }
    Ok(libm::pow(x, b) * libm::pow(1.0 - x, a - b - 1.0) * libm::exp(-ln_gamma(a - b)))
}

/// `G^{2,0}_{2,2}(α, a; β, b | y)` as the Mellin convolution
/// `Γ(α−β)^{-1} ∫_y^1 x^β (1−x)^{α−β−1} G^{1,0}_{1,1}(a; b | y/x) dx/x`.
pub fn meijer_g20_22(alpha: f64, beta: f64, a: f64, b: f64, y: f64) -> Result<f64> {
    if !(alpha - beta > 0.0 && a - b > 0.0) {
        return Err(Error::InvalidParams(format!(
            "divergent G^(2,0)_(2,2) parameters (alpha={alpha}, beta={beta}, a={a}, b={b})"
        )));
    }
    if !(y > 0.0 && y < 1.0) {
        return Ok(0.0);
    }
    // x = e^u on [ln y, 0], endpoint factors split off as (u − ln y)^e and (−u)^e
    let ly = libm::log(y);
    let (el, eh) = (a - b - 1.0, alpha - beta - 1.0);
    let ratio = |t: f64| if t == 0.0 { 1.0 } else { libm::expm1(t) / t };
    let v = quad().integrate(
        |u| {
            let t = u - ly;
            libm::exp((beta - a + 1.0) * u) * libm::pow(y * ratio(t), el) * libm::pow(ratio(u), eh)
        },
        ly,
        0.0,
        el,
        eh,
    )?;
    Ok(v * libm::pow(y, b) * libm::exp(-ln_gamma(a - b) - ln_gamma(alpha - beta)))
}

/// `G^{p,0}_{p,p}(a_1..a_p; b_1..b_p | y)` by iterated beta convolution.
pub fn meijer_gpp(upper: &[f64], lower: &[f64], y: f64) -> Result<f64> {
    if upper.len() != lower.len() {
        return Err(Error::LengthMismatch { expected: upper.len(), found: lower.len() });
    }
    if upper.is_empty() {
        return Err(Error::InvalidParams("G^(p,0)_(p,p) needs p >= 1".into()));
    }
    if upper.iter().zip(lower).any(|(a, b)| !(a - b > 0.0)) {
        return Err(Error::InvalidParams(format!("divergent G^(p,0)_(p,p) parameters {upper:?}; {lower:?}")));
    }
    gpp(upper, lower, y, &quad())
}

fn gpp(upper: &[f64], lower: &[f64], y: f64, q: &Quad) -> Result<f64> {
    let p = upper.len();
    if p == 1 {
        return meijer_g10_11(upper[0], lower[0], y);
    }
    if !(y > 0.0 && y < 1.0) {
        return Ok(0.0);
    }
    let (a, b) = (upper[p - 1], lower[p - 1]);
    let (iu, il) = (&upper[..p - 1], &lower[..p - 1]);
    let e_in: f64 = iu.iter().zip(il).map(|(u, l)| u - l).sum::<f64>() - 1.0;
    let err = core::cell::RefCell::new(None);
    let v = q.integrate(
        |x| {
            let z = y / x;
            match gpp(iu, il, z, q) {
                Ok(g) => libm::pow(x, b - 1.0 + e_in) * g / libm::pow(x - y, e_in),
                Err(e) => {
                    *err.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        y,
        1.0,
        e_in,
        a - b - 1.0,
    )?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(v * libm::exp(-ln_gamma(a - b)))
}

/// `ln Z` of the determinantal density with `Π_{j=1}^m` read as `Π_{j=1}^n`.
fn ln_z_printed(tp: &TwoProductParams) -> f64 {
    let n = tp.n as f64;
    let nu2 = tp.nu2 as f64;
    let mut z = ln_gamma(2.0 * (nu2 + 1.0)) - ln_gamma(2.0 * (nu2 + n + 1.0));
    for j in (tp.nu1 + 1)..=(tp.m1 - tp.n) {
        let j = j as f64;
        z += ln_gamma(2.0 * j) - ln_gamma(2.0 * (j + n));
    }
    let base = (tp.m1 - 2 * tp.n - tp.nu1) as f64;
    for j in 1..=tp.n {
        let j = j as f64;
        z += ln_gamma(2.0 * (base + j)) + ln_gamma(2.0 * j);
    }
    z
}

/// The `2n×2n` matrix with rows `x_i^j` then `ψ_j(x_i)`.
fn density_matrix(x: &[f64], tp: &TwoProductParams) -> Result<Matrix> {
    let n = tp.n;
    let mut m = Matrix::zeros(2 * n, 2 * n);
    for (i, &xi) in x.iter().enumerate() {
        let mut pw = 1.0;
        for j in 0..2 * n {
            m[(i, j)] = pw;
            pw *= xi;
            m[(n + i, j)] = tp.psi(j, xi)?;
        }
    }
    Ok(m)
}

/// Log-density of the ordered squared singular values of `T_2 T_1`; `−∞` when
/// the determinant is below its rounding-error bound (nearly coincident points).
pub fn two_product_log_density(x: &Config, tp: &TwoProductParams) -> Result<f64> {
    tp.validate()?;
    if x.len() != tp.n {
        return Err(Error::LengthMismatch { expected: tp.n, found: x.len() });
    }
    if !x.is_interior() {
        return Ok(f64::NEG_INFINITY);
    }
    let mut m = density_matrix(x.values(), tp)?;
    let n = tp.n;
    let dim = 2 * n;
    // equilibrate rows then columns; the scaled determinant is compared with its rounding bound
    let mut ln_scale = 0.0;
    for i in 0..dim {
        let r = (0..dim).map(|j| libm::fabs(m[(i, j)])).fold(0.0, f64::max);
        if r == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        ln_scale += libm::log(r);
        for j in 0..dim {
            m[(i, j)] /= r;
        }
    }
    for j in 0..dim {
        let c = (0..dim).map(|i| libm::fabs(m[(i, j)])).fold(0.0, f64::max);
        ln_scale += libm::log(c);
        for i in 0..dim {
            m[(i, j)] /= c;
        }
    }
    let lu = m.lu();
    if lu.singular {
        return Ok(f64::NEG_INFINITY);
    }
    let mut det = lu.det();
    if det.ln_abs < libm::log(16.0 * dim as f64 * f64::EPSILON) {
        return Ok(f64::NEG_INFINITY);
    }
    det.ln_abs += ln_scale;
    let sign = if (n * (n - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    if det.sign * sign < 0.0 {
        return Err(Error::Numerical(format!("negative density at {:?}", x.values())));
    }
    Ok(det.ln_abs + n as f64 * ln_gamma(tp.b1() + 1.0) - ln_z_printed(tp))
}

/// `c_{i,j} = (j−i)/((2ν_2+i+2)(2ν_2+j+2)) · Γ(i+j+2ν_1+1)/Γ(2(m_1−2n+1)+i+j+1)`.
pub fn c_product(i: usize, j: usize, tp: &TwoProductParams) -> f64 {
    if i == j {
        return 0.0;
    }
    let nu2 = tp.nu2 as f64;
    let (fi, fj) = (i as f64, j as f64);
    let s = fi + fj;
    let top = 2.0 * (tp.m1 - 2 * tp.n + 1) as f64;
    (fj - fi) / ((2.0 * nu2 + fi + 2.0) * (2.0 * nu2 + fj + 2.0))
        * libm::exp(ln_gamma(s + 2.0 * tp.nu1 as f64 + 1.0) - ln_gamma(top + s + 1.0))
}

pub fn c_product_matrix(tp: &TwoProductParams) -> Matrix {
    Matrix::from_fn(2 * tp.n, 2 * tp.n, |i, j| c_product(i, j, tp))
}

/// `C = ((j−i) Γ(a+i+j)/Γ(a+b+i+j+1))`, `i,j = 0..2n−1`.
pub fn hankel_matrix(n: usize, a: f64, b: f64) -> Matrix {
    Matrix::from_fn(2 * n, 2 * n, |i, j| {
        if i == j {
            0.0
        } else {
            let s = (i + j) as f64;
            (j as f64 - i as f64) * libm::exp(ln_gamma(a + s) - ln_gamma(a + b + s + 1.0))
        }
    })
}

/// Signed log of the `(k,l)` coefficient shared by the inverse and the kernel:
/// `2^{4k−4l}(a+b+4l−1)(a+b+4k+1)Γ(a+2l)Γ(a+1+2k) / (l! Γ((a+b)/2+l) Γ((a+1)/2+l) Γ((b+1)/2+l))
///  · Θ(k+1)Θ((a+1)/2+k)Θ((b+1)/2+k)Θ((a+b)/2+k)`.
fn skew_coef(k: usize, l: usize, a: f64, b: f64) -> (f64, f64) {
    let (kf, lf) = (k as f64, l as f64);
    let f1 = a + b + 4.0 * lf - 1.0;
    let f2 = a + b + 4.0 * kf + 1.0;
    let sign = f1.signum() * f2.signum();
    let h = 0.5 * (a + b);
    let ln = (4.0 * kf - 4.0 * lf) * core::f64::consts::LN_2 + libm::log(libm::fabs(f1)) + libm::log(libm::fabs(f2))
        + ln_gamma(a + 2.0 * lf)
        + ln_gamma(a + 1.0 + 2.0 * kf)
        - ln_factorial(l)
        - ln_gamma(h + lf)
        - ln_gamma(0.5 * (a + 1.0) + lf)
        - ln_gamma(0.5 * (b + 1.0) + lf)
        + ln_theta_ratio(kf + 1.0)
        + ln_theta_ratio(0.5 * (a + 1.0) + kf)
        + ln_theta_ratio(0.5 * (b + 1.0) + kf)
        + ln_theta_ratio(h + kf);
    (ln, sign)
}

fn check_hankel_params(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > -1.0 && a + b > 1.0) {
        return Err(Error::InvalidParams(format!("hankel_inverse needs a > 0, b > -1, a + b > 1 (a={a}, b={b})")));
    }
    Ok(())
}

/// Closed-form inverse of [`hankel_matrix`].
pub fn hankel_inverse(n: usize, a: f64, b: f64) -> Result<Matrix> {
    check_hankel_params(a, b)?;
    if n == 0 {
        return Err(Error::InvalidParams("n must be positive".into()));
    }
    let dim = 2 * n;
    let coefs: Vec<Vec<(f64, f64)>> = (0..n).map(|k| (0..=k).map(|l| skew_coef(k, l, a, b)).collect()).collect();
    let ln_b1 = ln_gamma(b + 1.0);
    let term = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        let bi = binomial(2 * l, i);
        let bj = binomial(2 * k + 1, j);
        if bi == 0.0 || bj == 0.0 {
            return 0.0;
        }
        let (g1, s1) = ln_gamma_signed(a + b + (2 * l + i) as f64 - 1.0);
        let (g2, s2) = ln_gamma_signed(a + b + (2 * k + j) as f64);
        s1 * s2 * bi * bj * libm::exp(g1 + g2 - ln_gamma(a + i as f64) - ln_gamma(a + j as f64) + ln_b1)
    };
    let mut q = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut s = 0.0;
            for k in 0..n {
                for l in 0..=k {
                    let (lc, sc) = coefs[k][l];
                    let c = sc * libm::exp(lc);
                    s += c * (term(i, j, k, l) - term(j, i, k, l));
                }
            }
            let v = if (i + j) % 2 == 0 { s } else { -s };
            if !v.is_finite() {
                return Err(Error::Numerical(format!("non-finite inverse entry ({i},{j})")));
            }
            q[(i, j)] = v;
            q[(j, i)] = -v;
        }
    }
    Ok(q)
}

/// Polynomial in the monomial basis, lowest degree first.
fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

fn poly_add_scaled(dst: &mut Vec<f64>, src: &[f64], s: f64) {
    if dst.len() < src.len() {
        dst.resize(src.len(), 0.0);
    }
    for (d, &v) in dst.iter_mut().zip(src) {
        *d += s * v;
    }
}

/// Monomial coefficients of the Jacobi polynomials `P_0..P_{deg}` with
/// parameters `(a, b)`.
pub fn jacobi_polynomials(deg: usize, a: f64, b: f64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![1.0]];
    if deg == 0 {
        return out;
    }
    out.push(vec![0.5 * (a - b), 0.5 * (a + b + 2.0)]);
    for k in 1..deg {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let den = 2.0 * (kf + 1.0) * (kf + a + b + 1.0) * s;
        let c1 = (s + 1.0) * (s + 2.0) * s / den;
        let c0 = (s + 1.0) * (a * a - b * b) / den;
        let cm = 2.0 * (kf + a) * (kf + b) * (s + 2.0) / den;
        let mut next = vec![0.0; k + 2];
        for (i, &v) in out[k].iter().enumerate() {
            next[i + 1] += c1 * v;
            next[i] += c0 * v;
        }
        for (i, &v) in out[k - 1].iter().enumerate() {
            next[i] -= cm * v;
        }
        out.push(next);
    }
    out
}

/// Skew-orthogonal polynomials for the weight `(1−x)^{a+1}(1+x)^{b+1}` on `[−1,1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewPolySystem {
    pub a: f64,
    pub b: f64,
    /// `q_0..q_{2n−1}` in the monomial basis, lowest degree first.
    pub q: Vec<Vec<f64>>,
    /// `r_0..r_{n−1}`.
    pub r: Vec<f64>,
}

impl SkewPolySystem {
    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn eval(&self, k: usize, x: f64) -> f64 {
        poly_eval(&self.q[k], x)
    }

    pub fn eval_derivative(&self, k: usize, x: f64) -> f64 {
        let d: Vec<f64> = self.q[k].iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect();
        poly_eval(&d, x)
    }
}

pub fn skew_jacobi_system(n: usize, a: f64, b: f64) -> Result<SkewPolySystem> {
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::InvalidParams(format!("skew Jacobi system needs a, b > -1 (a={a}, b={b})")));
    }
    if n == 0 {
        return Err(Error::InvalidParams("n must be positive".into()));
    }
    let jac = jacobi_polynomials(2 * n - 1, a, b);
    let p: Vec<Vec<f64>> = jac
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let kf = k as f64;
            let s = libm::exp(kf * core::f64::consts::LN_2 + ln_factorial(k) + ln_gamma(a + b + kf + 1.0) - ln_gamma(a + b + 2.0 * kf + 1.0));
            c.iter().map(|v| v * s).collect()
        })
        .collect();
    let (ha, hb, hab) = (0.5 * a, 0.5 * b, 0.5 * (a + b));
    let mut q = Vec::with_capacity(2 * n);
    let mut r = Vec::with_capacity(n);
    for k in 0..n {
        let kf = k as f64;
        let mut even = Vec::new();
        for l in 0..=k {
            let lf = l as f64;
            let ln = (6.0 * kf - 6.0 * lf) * core::f64::consts::LN_2 + ln_factorial(k) - ln_factorial(l)
                + ln_gamma(hab + kf + 1.0)
                + ln_gamma(ha + kf + 1.0)
                + ln_gamma(hb + kf + 1.0)
                - ln_gamma(hab + lf + 1.0)
                - ln_gamma(ha + lf + 1.0)
                - ln_gamma(hb + lf + 1.0)
                + ln_gamma(a + b + 4.0 * lf + 2.0)
                - ln_gamma(a + b + 4.0 * kf + 2.0);
            poly_add_scaled(&mut even, &p[2 * l], libm::exp(ln));
        }
        q.push(even);
        q.push(p[2 * k + 1].clone());
        let inv_r = ln_gamma(a + b + 4.0 * kf + 2.0) + ln_gamma(a + b + 4.0 * kf + 4.0)
            - (a + b + 4.0 * kf + 2.0) * core::f64::consts::LN_2
            - ln_factorial(2 * k + 1)
            - ln_gamma(a + 2.0 * kf + 2.0)
            - ln_gamma(b + 2.0 * kf + 2.0)
            - ln_gamma(a + b + 2.0 * kf + 2.0);
        r.push(libm::exp(-inv_r));
    }
    if q.iter().flatten().chain(&r).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("Gamma pole in skew Jacobi system".into()));
    }
    Ok(SkewPolySystem { a, b, q, r })
}

/// The 2×2 correlation kernel of the two-product ensemble.
#[derive(Clone, Debug)]
pub struct Kernel2x2 {
    pub params: TwoProductParams,
    pub c: Matrix,
    pub q: Matrix,
    /// `P_0..P_{2n−1}` of the skew-polynomial form, monomial coefficients.
    pub p_polys: Vec<Vec<f64>>,
    /// `Γ(b_1+1)·coef(k,l)` for `l ≤ k < n`.
    pub weights: Vec<Vec<f64>>,
}

/// Largest `‖Q·C − I‖_max` accepted when assembling the kernel.
pub const INVERSE_TOL: f64 = 1e-8;

pub fn kernel_assemble(tp: &TwoProductParams) -> Result<Kernel2x2> {
    tp.validate()?;
    let n = tp.n;
    let dim = 2 * n;
    let (a1, a2, b1) = (tp.a1(), tp.a2(), tp.b1());
    let c = c_product_matrix(tp);
    let q0 = hankel_inverse(n, a1, b1)?;
    let q = Matrix::from_fn(dim, dim, |i, j| (a2 + 1.0 + i as f64) * q0[(i, j)] * (a2 + 1.0 + j as f64));
    let resid = q.matmul(&c).max_abs_diff(&Matrix::identity(dim));
    if !(resid <= INVERSE_TOL) {
        return Err(Error::Numerical(format!("closed-form inverse fails Q*C = I (residual {resid:e})")));
    }
    let direct = c.inverse()?;
    let scale = q.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = q.max_abs_diff(&direct);
    if !(gap <= 1e-6 * scale) {
        return Err(Error::Numerical(format!("closed-form and direct inverses differ by {gap:e}")));
    }
    let p_polys = (0..dim)
        .map(|m| {
            (0..=m)
                .map(|i| {
                    let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                    s * binomial(m, i) * (a2 + i as f64 + 1.0)
                        * libm::exp(ln_gamma(a1 + b1 + (m + i) as f64 - 1.0) - ln_gamma(a1 + i as f64))
                })
                .collect()
        })
        .collect();
    let lg = ln_gamma(b1 + 1.0);
    let weights = (0..n)
        .map(|k| {
            (0..=k)
                .map(|l| {
                    let (lc, sc) = skew_coef(k, l, a1, b1);
                    sc * libm::exp(lc + lg)
                })
                .collect()
        })
        .collect();
    Ok(Kernel2x2 { params: *tp, c, q, p_polys, weights })
}

/// Values at one point needed by every kernel entry.
#[derive(Clone, Debug)]
pub struct KernelPoint {
    pub x: f64,
    pub mono: Vec<f64>,
    pub psi: Vec<f64>,
}

impl Kernel2x2 {
    pub fn dim(&self) -> usize {
        2 * self.params.n
    }

    pub fn point(&self, x: f64) -> Result<KernelPoint> {
        let mut mono = Vec::with_capacity(self.dim());
        let mut pw = 1.0;
        for _ in 0..self.dim() {
            mono.push(pw);
            pw *= x;
        }
        Ok(KernelPoint { x, mono, psi: self.params.psi_vec(x)? })
    }

    fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for k in 0..d {
            for l in 0..d {
                s += u[k] * self.q[(k, l)] * v[l];
            }
        }
        s
    }

    pub fn k11(&self, x: &KernelPoint, y: &KernelPoint) -> f64 {
        self.form(&x.psi, &y.mono)
    }

    pub fn k12(&self, x: &KernelPoint, y: &KernelPoint) -> f64 {
        -self.form(&x.psi, &y.psi)
    }

    pub fn k21(&self, x: &KernelPoint, y: &KernelPoint) -> f64 {
        self.form(&x.mono, &y.mono)
    }

    pub fn k22(&self, x: &KernelPoint, y: &KernelPoint) -> f64 {
        -self.form(&x.mono, &y.psi)
    }

    /// `P_m(x)` of the skew-polynomial form.
    pub fn p_poly(&self, m: usize, x: &KernelPoint) -> f64 {
        self.p_polys[m].iter().zip(&x.mono).map(|(c, v)| c * v).sum()
    }

    /// `Q_m(x)`: the same coefficients applied to `ψ_0..ψ_m`.
    pub fn q_func(&self, m: usize, x: &KernelPoint) -> f64 {
        self.p_polys[m].iter().zip(&x.psi).map(|(c, v)| c * v).sum()
    }

    fn sum_form(&self, f: impl Fn(usize) -> f64, g: impl Fn(usize) -> f64) -> f64 {
        let mut s = 0.0;
        for (k, row) in self.weights.iter().enumerate() {
            for (l, w) in row.iter().enumerate() {
                s += w * (f(2 * l) * g(2 * k + 1) - f(2 * k + 1) * g(2 * l));
            }
        }
        s
    }

    pub fn k11_sum(&self, x: &KernelPoint, y: &KernelPoint) -> f64 {
        self.sum_form(|m| self.q_func(m, x), |m| self.p_poly(m, y))
    }

    pub fn k12_sum(&self, x: &KernelPoint, y: &KernelPoint) -> f64 {
        -self.sum_form(|m| self.q_func(m, x), |m| self.q_func(m, y))
    }

    pub fn k21_sum(&self, x: &KernelPoint, y: &KernelPoint) -> f64 {
        self.sum_form(|m| self.p_poly(m, x), |m| self.p_poly(m, y))
    }

    pub fn k22_sum(&self, x: &KernelPoint, y: &KernelPoint) -> f64 {
        -self.sum_form(|m| self.p_poly(m, x), |m| self.q_func(m, y))
    }

    /// One-point function `ρ_1(x) = K^{(1,1)}(x,x)`.
    pub fn rho1(&self, x: f64) -> Result<f64> {
        let p = self.point(x)?;
        Ok(self.k11(&p, &p))
    }

    /// `ρ_k(x_1..x_k)` as the Pfaffian of the `2k×2k` matrix with blocks
    /// `[[−K12(x_i,x_j), K11(x_i,x_j)], [−K11(x_j,x_i), K21(x_i,x_j)]]`.
    pub fn rho(&self, xs: &[f64]) -> Result<f64> {
        let pts: Vec<KernelPoint> = xs.iter().map(|&x| self.point(x)).collect::<Result<_>>()?;
        let k = pts.len();
        let mut a = Matrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            for j in 0..k {
                let (pi, pj) = (&pts[i], &pts[j]);
                a[(2 * i, 2 * j)] = if i == j { 0.0 } else { -self.k12(pi, pj) };
                a[(2 * i, 2 * j + 1)] = self.k11(pi, pj);
                a[(2 * i + 1, 2 * j)] = -self.k11(pj, pi);
                a[(2 * i + 1, 2 * j + 1)] = if i == j { 0.0 } else { self.k21(pi, pj) };
            }
        }
        pfaffian(&a)
    }

    /// `ρ_2(x,y) = K11(x,x)K11(y,y) − K11(x,y)K11(y,x) + K12(x,y)K21(x,y)`.
    pub fn rho2(&self, x: f64, y: f64) -> Result<f64> {
        let (px, py) = (self.point(x)?, self.point(y)?);
        Ok(self.rho2_at(&px, &py))
    }

    /// [`Kernel2x2::rho2`] at precomputed points.
    pub fn rho2_at(&self, px: &KernelPoint, py: &KernelPoint) -> f64 {
        self.k11(px, px) * self.k11(py, py) - self.k11(px, py) * self.k11(py, px) + self.k12(px, py) * self.k21(px, py)
    }
}

/// Pfaffian of an even antisymmetric matrix by skew `LTLᵀ` elimination with
/// pivoting. Input is symmetrized as `(A − Aᵀ)/2` after the antisymmetry check.
pub fn pfaffian(a: &Matrix) -> Result<f64> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::InvalidParams(format!("Pfaffian of a non-square {}x{} matrix", a.rows, a.cols)));
    }
    if n % 2 == 1 {
        return Err(Error::InvalidParams(format!("Pfaffian of odd dimension {n}")));
    }
    let scale = a.data.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            dev = dev.max((a[(i, j)] + a[(j, i)]).abs());
        }
    }
    if !(dev <= ANTISYMMETRY_TOL * scale) {
        return Err(Error::InvalidParams(format!("matrix is not antisymmetric (deviation {dev:e})")));
    }
    let mut m = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] - a[(j, i)]));
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let mut kp = k + 1;
        for i in (k + 2)..n {
            if m[(i, k)].abs() > m[(kp, k)].abs() {
                kp = i;
            }
        }
        if kp != k + 1 {
            for c in 0..n {
                let t = m[(k + 1, c)];
                m[(k + 1, c)] = m[(kp, c)];
                m[(kp, c)] = t;
            }
            for r in 0..n {
                let t = m[(r, k + 1)];
                m[(r, k + 1)] = m[(r, kp)];
                m[(r, kp)] = t;
            }
            pf = -pf;
        }
        let piv = m[(k, k + 1)];
        if piv == 0.0 {
            return Ok(0.0);
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<f64> = ((k + 2)..n).map(|j| m[(k, j)] / piv).collect();
            let col: Vec<f64> = ((k + 2)..n).map(|i| m[(i, k + 1)]).collect();
            for (ii, i) in ((k + 2)..n).enumerate() {
                for (jj, j) in ((k + 2)..n).enumerate() {
                    m[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    Ok(pf)
}

/// Both sides of the Meijer-G expression of the normalized Schur function
/// `s_μ(x, 1^{M−n}) / s_μ(1^M)`.
pub fn schur_meijer_ratio_check(mu: &Partition, n: usize, big_m: usize, p: usize, x: &Config) -> Result<(f64, f64)> {
    if p == 0 || mu.len() > p - 1 || p - 1 > big_m || big_m + 1 < p + n {
        return Err(Error::InvalidParams(format!(
            "need l(mu) <= p-1 <= M and M-p+1 >= n (mu={mu}, n={n}, M={big_m}, p={p})"
        )));
    }
    if x.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: x.len() });
    }
    if !x.is_interior() {
        return Err(Error::Degenerate("x must lie strictly inside (0,1)".into()));
    }
    let mut full = x.values().to_vec();
    full.resize(big_m, 1.0);
    let lhs = schur_eval(mu, &full)? / jack_principal(mu, big_m, 1.0)?;
    let mf = big_m as f64;
    let nf = n as f64;
    let pf = p as f64;
    let mut upper = Vec::with_capacity(p);
    let mut lower = Vec::with_capacity(p);
    for i in 1..p {
        let mi = mu.part(i - 1) as f64;
        upper.push(mi + mf - i as f64 + 1.0);
        lower.push(mi + mf - i as f64);
    }
    upper.push(0.0);
    lower.push(0.0);
    let q = quad();
    let mut w = Matrix::zeros(n, n);
    for j in 1..=n {
        let jf = j as f64;
        upper[p - 1] = mf - pf - nf + jf + 1.0;
        lower[p - 1] = jf - 1.0;
        let pre = libm::exp(ln_gamma(mf - nf - pf + 2.0) + ln_gamma(mf - nf + jf) - ln_gamma(mf - nf - pf + 1.0 + jf));
        for (i, &xi) in x.values().iter().enumerate() {
            w[(i, j - 1)] = pre * gpp(&upper, &lower, xi, &q)?;
        }
    }
    let det = w.lu().det();
    let xs = x.values();
    let ln_rest = log_vandermonde(xs) + (mf - nf) * xs.iter().map(|v| libm::log1p(-v)).sum::<f64>();
    let rhs = det.sign * vandermonde_sign(xs) * libm::exp(det.ln_abs - ln_rest);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn meijer_small_cases() {
        assert!((meijer_g10_11(2.0, 0.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(meijer_g10_11(2.0, 0.0, 1.5).unwrap(), 0.0);
        assert!(meijer_g10_11(1.0, 1.0, 0.5).is_err());
        // G^{2,0}_{2,2}(b+1, a; b, c) with a-c = 1: ∫_y^1 x^{b-a} y^c dx
        let (b, a, c, y) = (3.0, 3.0, 2.0, 0.3);
        let want = libm::pow(y, c) * (1.0 - libm::pow(y, b - a + 1.0)) / (b - a + 1.0);
        assert!(rel(meijer_g20_22(b + 1.0, b, a, c, y).unwrap(), want) < 1e-12);
        let g = meijer_gpp(&[b + 1.0, a], &[b, c], y).unwrap();
        assert!(rel(g, want) < 1e-10);
        assert_eq!(meijer_g20_22(3.0, 2.0, 3.0, 2.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn c_product_example() {
        let tp = TwoProductParams::new(1, 0, 0, 3).unwrap();
        assert!(rel(c_product(0, 1, &tp), 1.0 / 720.0) < 1e-14);
        assert_eq!(c_product(1, 1, &tp), 0.0);
        assert_eq!(c_product(1, 0, &tp), -c_product(0, 1, &tp));
    }

    #[test]
    fn hankel_inverse_small() {
        let (a, b) = (3.0, 5.0);
        let q = hankel_inverse(1, a, b).unwrap();
        let c = libm::exp(ln_gamma(a + 1.0) - ln_gamma(a + b + 2.0));
        assert!(rel(q[(0, 1)], -1.0 / c) < 1e-12);
        let q = hankel_inverse(2, a, b).unwrap();
        let resid = q.matmul(&hankel_matrix(2, a, b)).max_abs_diff(&Matrix::identity(4));
        assert!(resid < 1e-8, "{resid}");
    }

    #[test]
    fn pfaffian_small() {
        let a = Matrix::from_fn(2, 2, |i, j| if i < j { 3.5 } else if i > j { -3.5 } else { 0.0 });
        assert_eq!(pfaffian(&a).unwrap(), 3.5);
        let b = Matrix::from_fn(4, 4, |i, j| {
            let v = [[0.0, 1.0, 2.0, 3.0], [-1.0, 0.0, 4.0, 5.0], [-2.0, -4.0, 0.0, 6.0], [-3.0, -5.0, -6.0, 0.0]];
            v[i][j]
        });
        // a12 a34 − a13 a24 + a14 a23
        assert!((pfaffian(&b).unwrap() - (6.0 - 10.0 + 12.0)).abs() < 1e-12);
        assert!(pfaffian(&Matrix::identity(2)).is_err());
        assert!(pfaffian(&Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn skew_system_relations() {
        let (a, b) = (1.0, 3.0);
        let sys = skew_jacobi_system(2, a, b).unwrap();
        let rule = crate::quad::gauss_jacobi(12, a + 1.0, b + 1.0).unwrap();
        let ip = |i: usize, j: usize| {
            0.5 * rule.apply(|x| sys.eval(i, x) * sys.eval_derivative(j, x) - sys.eval(j, x) * sys.eval_derivative(i, x))
        };
        assert!(rel(ip(0, 1), sys.r[0]) < 1e-8, "{} vs {}", ip(0, 1), sys.r[0]);
        assert!(rel(ip(2, 3), sys.r[1]) < 1e-8, "{} vs {}", ip(2, 3), sys.r[1]);
        assert!(ip(0, 2).abs() < 1e-8 * sys.r[0]);
        assert!(ip(1, 3).abs() < 1e-8 * sys.r[1]);
    }

    #[test]
    fn rho2_vanishes_for_one_point() {
        let tp = TwoProductParams::new(1, 0, 1, 3).unwrap();
        let k = kernel_assemble(&tp).unwrap();
        for (x, y) in [(0.2, 0.7), (0.5, 0.55), (0.9, 0.1)] {
            let r = k.rho2(x, y).unwrap();
            let scale = k.rho1(x).unwrap() * k.rho1(y).unwrap();
            assert!(r.abs() < 1e-9 * scale, "{r} vs {scale}");
            assert!((k.rho(&[x, y]).unwrap() - r).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn kernel_forms_agree() {
        let tp = TwoProductParams::new(2, 0, 1, 5).unwrap();
        let k = kernel_assemble(&tp).unwrap();
        let (x, y) = (k.point(0.3).unwrap(), k.point(0.65).unwrap());
        for (d, s) in [
            (k.k11(&x, &y), k.k11_sum(&x, &y)),
            (k.k12(&x, &y), k.k12_sum(&x, &y)),
            (k.k21(&x, &y), k.k21_sum(&x, &y)),
            (k.k22(&x, &y), k.k22_sum(&x, &y)),
        ] {
            assert!(rel(s, d) < 1e-8, "{d} vs {s}");
        }
    }

    #[test]
    fn schur_meijer_empty_and_small() {
        let x = Config::new(vec![0.3, 0.6]).unwrap();
        let (l, r) = schur_meijer_ratio_check(&Partition::empty(), 2, 4, 2, &x).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && (r - 1.0).abs() < 1e-8, "{l} {r}");
        let x1 = Config::new(vec![0.4]).unwrap();
        let (l, r) = schur_meijer_ratio_check(&Partition::new(&[2]).unwrap(), 1, 3, 2, &x1).unwrap();
        assert!(rel(r, l) < 1e-6, "{l} {r}");
    }
}
