//! Jack polynomials in the monic (`P`) normalization, Schur polynomials and the
//! Jack-moment identity for product chains.
//!
//! Evaluation peels one variable at a time:
//! `J_λ(x_1..x_N) = Σ_μ ψ_{λ/μ} x_N^{|λ|−|μ|} J_μ(x_1..x_{N−1})` over horizontal
//! strips `λ/μ`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::config::{validate_chain_params, ChainParams};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::partition::Partition;
use crate::special::{binomial, ln_gamma};

/// Values closer than this are treated as one repeated argument by [`schur_eval`].
pub const CONFLUENT_THRESHOLD: f64 = 1e-8;

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParams(alloc::format!("theta must be positive, got {theta}")));
    }
    Ok(())
}

/// `b_λ(s) = (a + θl + θ)/(a + θl + 1)` for the box `s = (i, j)` of `λ`.
fn hook_b(lambda: &Partition, conj: &Partition, i: usize, j: usize, theta: f64) -> f64 {
    let a = lambda.arm(i, j) as f64;
    let l = lambda.leg(conj, i, j) as f64;
    (a + theta * l + theta) / (a + theta * l + 1.0)
}

/// Branching coefficient `ψ_{λ/μ}(θ)` for a horizontal strip `λ/μ`.
pub fn psi(lambda: &Partition, mu: &Partition, theta: f64) -> f64 {
    let lc = lambda.conjugate();
    let mc = mu.conjugate();
    let mut r = 1.0;
    for i in 0..mu.len() {
        if lambda.part(i) == mu.part(i) {
            continue;
        }
        for j in 0..mu.part(i) {
            if lc.part(j) != mc.part(j) {
                continue;
            }
            r *= hook_b(mu, &mc, i, j, theta) / hook_b(lambda, &lc, i, j, theta);
        }
    }
    r
}

/// Memo of principal specializations `J_λ(1^n; θ)` for one value of θ.
#[derive(Debug)]
pub struct JackCache {
    theta: f64,
    principal: RefCell<BTreeMap<(Partition, usize), f64>>,
}

impl JackCache {
    pub fn new(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(JackCache { theta, principal: RefCell::new(BTreeMap::new()) })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `J_λ(1^n; θ)`; zero when `ℓ(λ) > n`.
    pub fn principal(&self, lambda: &Partition, n: usize) -> f64 {
        if lambda.len() > n {
            return 0.0;
        }
        if lambda.is_empty() {
            return 1.0;
        }
        let key = (lambda.clone(), n);
        if let Some(&v) = self.principal.borrow().get(&key) {
            return v;
        }
        let mut s = 0.0;
        for mu in lambda.horizontal_strip_predecessors(n - 1) {
            s += psi(lambda, &mu, self.theta) * self.principal(&mu, n - 1);
        }
        self.principal.borrow_mut().insert(key, s);
        s
    }

    /// `J_λ(1^ones, x_1..x_k; θ)`.
    pub fn eval_with_ones(&self, lambda: &Partition, x: &[f64], ones: usize) -> Result<f64> {
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParams("NaN argument".into()));
        }
        let mut memo = BTreeMap::new();
        Ok(self.eval_rec(lambda, x, ones, &mut memo))
    }

    fn eval_rec(&self, lambda: &Partition, x: &[f64], ones: usize, memo: &mut BTreeMap<(Partition, usize), f64>) -> f64 {
        if x.is_empty() {
            return self.principal(lambda, ones);
        }
        let k = x.len();
        if lambda.len() > k + ones {
            return 0.0;
        }
        if lambda.is_empty() {
            return 1.0;
        }
        let key = (lambda.clone(), k);
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let last = x[k - 1];
        let mut s = 0.0;
        for mu in lambda.horizontal_strip_predecessors(k - 1 + ones) {
            let d = (lambda.weight() - mu.weight()) as i32;
            let c = psi(lambda, &mu, self.theta) * libm::pow(last, d as f64);
            if c == 0.0 {
                continue;
            }
            s += c * self.eval_rec(&mu, &x[..k - 1], ones, memo);
        }
        memo.insert(key, s);
        s
    }
}

/// `J_λ(x_1..x_n; θ)`, monic in `m_λ`.
pub fn jack_eval(lambda: &Partition, x: &[f64], theta: f64) -> Result<f64> {
    JackCache::new(theta)?.eval_with_ones(lambda, x, 0)
}

/// `J_λ(1^n; θ)`.
pub fn jack_principal(lambda: &Partition, n: usize, theta: f64) -> Result<f64> {
    Ok(JackCache::new(theta)?.principal(lambda, n))
}

/// Schur polynomial by the bialternant formula; clusters of (nearly) equal
/// arguments use the confluent form with derivative rows.
pub fn schur_eval(lambda: &Partition, x: &[f64]) -> Result<f64> {
    let n = x.len();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("non-finite argument".into()));
    }
    if lambda.len() > n {
        return Ok(0.0);
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut prefactor = 1.0;
    let mut parts: Vec<usize> = (0..n).map(|i| lambda.part(i)).collect();
    // s_λ = (x_1⋯x_n)^{λ_n} s_{λ − λ_n}
    let base = parts[n - 1];
    if base > 0 {
        for &v in x {
            prefactor *= libm::pow(v, base as f64);
        }
        parts.iter_mut().for_each(|p| *p -= base);
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || sorted[i] - sorted[start] >= CONFLUENT_THRESHOLD {
            let block = &sorted[start..i];
            let z = block.iter().sum::<f64>() / block.len() as f64;
            clusters.push((z, block.len()));
            start = i;
        }
    }
    let num_exp: Vec<usize> = (0..n).map(|j| parts[j] + n - 1 - j).collect();
    let den_exp: Vec<usize> = (0..n).map(|j| n - 1 - j).collect();
    let build = |exps: &[usize]| {
        let mut m = Matrix::zeros(n, n);
        let mut row = 0;
        for &(z, r) in &clusters {
            for k in 0..r {
                for (j, &e) in exps.iter().enumerate() {
                    m[(row, j)] = if e < k { 0.0 } else { binomial(e, k) * libm::pow(z, (e - k) as f64) };
                }
                row += 1;
            }
        }
        m
    };
    let num = build(&num_exp).lu().det();
    let den = build(&den_exp).lu().det();
    if den.sign == 0.0 {
        return Err(Error::Numerical("singular Vandermonde in bialternant".into()));
    }
    Ok(prefactor * num.sign * den.sign * libm::exp(num.ln_abs - den.ln_abs))
}

/// `E[J_κ(x^p)/J_κ(1^n)]` for the product chain, as a product of Gamma ratios.
pub fn jack_moment(kappa: &Partition, params: &ChainParams) -> Result<f64> {
    validate_chain_params(params)?;
    let n = params.n;
    if kappa.len() > n {
        return Err(Error::InvalidParams(alloc::format!("l(kappa) = {} exceeds n = {n}", kappa.len())));
    }
    let th = params.theta;
    let mut ln = 0.0;
    for i in 1..=params.p() {
        let nu = params.nu_k(i) as f64;
        let m = params.m_k(i) as f64;
        for j in 1..=n {
            let kj = kappa.part(j - 1) as f64;
            let jf = j as f64;
            let u = th * (nu + n as f64 - jf + 1.0);
            let w = th * (m - jf + 1.0);
            ln += (ln_gamma(u + kj) - ln_gamma(u)) - (ln_gamma(w + kj) - ln_gamma(w));
        }
    }
    Ok(libm::exp(ln))
}

/// `P_λ(1^n; θ)` from the hook-product formula; used to cross-check the branching.
pub fn principal_hook_formula(lambda: &Partition, n: usize, theta: f64) -> f64 {
    if lambda.len() > n {
        return 0.0;
    }
    let conj = lambda.conjugate();
    let mut r = 1.0;
    for i in 0..lambda.len() {
        for j in 0..lambda.part(i) {
            let a = lambda.arm(i, j) as f64;
            let l = lambda.leg(&conj, i, j) as f64;
            let a_co = j as f64;
            let l_co = i as f64;
            r *= (n as f64 * theta - l_co * theta + a_co) / (a + theta * l + theta);
        }
    }
    r
}

/// Monomial coefficients helper: all partitions `μ ⊆ λ` with `ℓ(μ) ≤ n`.
pub fn sub_partitions(lambda: &Partition, n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    let l = lambda.len().min(n);
    let mut cur = vec![0usize; l];
    fn rec(lambda: &Partition, i: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if i == cur.len() {
            out.push(Partition::new(cur).expect("weakly decreasing by construction"));
            return;
        }
        let hi = if i == 0 { lambda.part(0) } else { lambda.part(i).min(cur[i - 1]) };
        for v in 0..=hi {
            cur[i] = v;
            rec(lambda, i + 1, cur, out);
        }
    }
    rec(lambda, 0, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(parts: &[usize]) -> Partition {
        Partition::new(parts).unwrap()
    }

    #[test]
    fn small_cases() {
        for th in [0.5, 1.0, 2.0, 3.7] {
            let v = jack_eval(&p(&[1]), &[0.3, 0.4], th).unwrap();
            assert!((v - 0.7).abs() < 1e-15);
            let v = jack_eval(&p(&[3]), &[0.6], th).unwrap();
            assert!((v - 0.216).abs() < 1e-15);
            let (a, b) = (0.3, 0.8);
            let v = jack_eval(&p(&[2]), &[a, b], th).unwrap();
            let want = a * a + b * b + 2.0 * th / (th + 1.0) * a * b;
            assert!((v - want).abs() < 1e-14);
        }
    }

    #[test]
    fn principal_matches_hook_formula() {
        for th in [0.5, 1.0, 2.0, 0.7] {
            let cache = JackCache::new(th).unwrap();
            for k in 0..7 {
                for lam in Partition::all_of_weight(k) {
                    for n in 1..5 {
                        let a = cache.principal(&lam, n);
                        let b = principal_hook_formula(&lam, n, th);
                        assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "{lam} n={n} th={th}: {a} vs {b}");
                    }
                }
            }
        }
        assert_eq!(jack_principal(&p(&[2, 1]), 3, 1.0).unwrap().round(), 8.0);
    }

    #[test]
    fn schur_examples() {
        assert!((schur_eval(&p(&[1]), &[0.2, 0.5]).unwrap() - 0.7).abs() < 1e-15);
        assert!((schur_eval(&p(&[2, 1]), &[1.0, 1.0, 1.0]).unwrap() - 8.0).abs() < 1e-12);
        let x = [0.2, 0.45];
        let v = schur_eval(&Partition::rectangle(5, 2), &[x[0], x[1], 1.0, 1.0, 1.0]).unwrap();
        let want = (x[0] * x[1]).powi(2);
        assert!((v - want).abs() < 1e-12 * want);
    }

    #[test]
    fn moment_examples() {
        let params = ChainParams::new(0.7, 2, vec![5, 4], &[1, 1]);
        assert_eq!(jack_moment(&Partition::empty(), &params).unwrap(), 1.0);
        let v = jack_moment(&p(&[1]), &params).unwrap();
        assert!((v - (3.0 / 5.0) * (3.0 / 4.0)).abs() < 1e-14);
    }
}
