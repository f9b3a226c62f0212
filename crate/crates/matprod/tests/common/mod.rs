//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type RMatrix = Vec<Vec<BigRational>>;

/// Inverse by Gauss–Jordan elimination over the rationals; `None` if singular.
pub fn rational_inverse(a: &RMatrix) -> Option<RMatrix> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (v, p) in m[r].iter_mut().zip(&pivot_row) {
                    *v = &*v - &f * p;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn rational(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn max_abs_rational(a: &RMatrix) -> BigRational {
    let mut best = BigRational::zero();
    for v in a.iter().flatten() {
        if v.abs() > best {
            best = v.abs();
        }
    }
    best
}

/// Partitions of `k` in increasing lexicographic order, `(1^k)` first.
pub fn partitions(k: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=rest.min(max)).rev() {
            cur.push(part);
            rec(rest - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, k, &mut Vec::new(), &mut out);
    out.reverse();
    out
}

fn z_factor(mu: &[usize]) -> f64 {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &p in mu {
        *counts.entry(p).or_default() += 1;
    }
    counts
        .iter()
        .map(|(&i, &c)| (i as f64).powi(c as i32) * (1..=c).map(|j| j as f64).product::<f64>())
        .product()
}

/// Coefficients of `p_ν` in the monomial basis, by expanding the product of
/// power sums in `k` variables.
fn power_to_monomial(parts: &[Vec<usize>], k: usize) -> RMatrix {
    parts
        .iter()
        .map(|nu| {
            let mut poly: BTreeMap<Vec<usize>, i64> = BTreeMap::new();
            poly.insert(vec![0; k], 1);
            for &r in nu {
                let mut next = BTreeMap::new();
                for (e, c) in &poly {
                    for i in 0..k {
                        let mut e2 = e.clone();
                        e2[i] += r;
                        *next.entry(e2).or_insert(0) += c;
                    }
                }
                poly = next;
            }
            parts
                .iter()
                .map(|mu| {
                    let mut e = mu.clone();
                    e.resize(k, 0);
                    rational(*poly.get(&e).unwrap_or(&0))
                })
                .collect()
        })
        .collect()
}

/// Monic Jack polynomials of weight `k` by Gram–Schmidt on the monomial basis
/// under `⟨p_μ, p_ν⟩ = δ z_μ α^{ℓ(μ)}`, `α = 1/θ`, in lexicographic order.
/// Returns each partition with its monomial coefficients (indexed like `partitions(k)`).
pub fn gram_schmidt_jack(k: usize, theta: f64) -> Vec<(Vec<usize>, Vec<f64>)> {
    let parts = partitions(k);
    let d = parts.len();
    let l = power_to_monomial(&parts, k);
    let linv = rational_inverse(&l).expect("power sums span the degree-k symmetric polynomials");
    let linv: Vec<Vec<f64>> = linv.iter().map(|r| r.iter().map(to_f64).collect()).collect();
    let alpha = 1.0 / theta;
    let w: Vec<f64> = parts.iter().map(|nu| z_factor(nu) * alpha.powi(nu.len() as i32)).collect();
    let gram: Vec<Vec<f64>> =
        (0..d).map(|a| (0..d).map(|b| (0..d).map(|v| linv[a][v] * linv[b][v] * w[v]).sum()).collect()).collect();
    let inner = |u: &[f64], v: &[f64]| -> f64 { (0..d).map(|a| (0..d).map(|b| u[a] * gram[a][b] * v[b]).sum::<f64>()).sum() };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    for i in 0..d {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        for q in &basis {
            let c = inner(&v, q) / inner(q, q);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
        basis.push(v);
    }
    parts.into_iter().zip(basis).collect()
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `m_μ(x)`: the sum over distinct rearrangements of `μ` padded to `x.len()`.
pub fn monomial(mu: &[usize], x: &[f64]) -> f64 {
    if mu.len() > x.len() {
        return 0.0;
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..x.len() {
        *counts.entry(mu.get(i).copied().unwrap_or(0)).or_default() += 1;
    }
    fn rec(i: usize, x: &[f64], counts: &mut BTreeMap<usize, usize>) -> f64 {
        if i == x.len() {
            return 1.0;
        }
        let keys: Vec<usize> = counts.iter().filter(|(_, &c)| c > 0).map(|(&e, _)| e).collect();
        let mut s = 0.0;
        for e in keys {
            *counts.get_mut(&e).unwrap() -= 1;
            s += x[i].powi(e as i32) * rec(i + 1, x, counts);
            *counts.get_mut(&e).unwrap() += 1;
        }
        s
    }
    rec(0, x, &mut counts)
}

pub fn eval_in_monomials(parts: &[Vec<usize>], coef: &[f64], x: &[f64]) -> f64 {
    parts.iter().zip(coef).map(|(mu, c)| c * monomial(mu, x)).sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
