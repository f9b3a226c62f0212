//! Haar-distributed orthogonal, unitary and compact symplectic matrices,
//! truncations, squared singular values and matrix product chains.
//!
//! All three groups are stored as complex matrices. A symplectic matrix of
//! quaternionic size `m` is a `2m × 2m` complex matrix made of blocks
//! `[[a+bi, c+di], [−c+di, a−bi]]`.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{validate_chain_params, ChainParams, Config, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Kramers pairs of a symplectic Gram spectrum may differ by at most this much.
pub const KRAMERS_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    Orthogonal,
    Unitary,
    Symplectic,
}

impl Group {
    /// `θ = 1/2, 1, 2`.
    pub fn from_theta(theta: f64) -> Result<Group> {
        if theta == 0.5 {
            Ok(Group::Orthogonal)
        } else if theta == 1.0 {
            Ok(Group::Unitary)
        } else if theta == 2.0 {
            Ok(Group::Symplectic)
        } else {
            Err(Error::InvalidParams(format!(
                "matrix sampling needs theta in {{0.5, 1, 2}}, got {theta}"
            )))
        }
    }

    pub fn theta(self) -> f64 {
        match self {
            Group::Orthogonal => 0.5,
            Group::Unitary => 1.0,
            Group::Symplectic => 2.0,
        }
    }

    /// Complex rows per group row.
    pub fn block(self) -> usize {
        match self {
            Group::Symplectic => 2,
            _ => 1,
        }
    }
}

/// Seeded ChaCha8 stream; `(seed, stream)` fixes the output bit for bit.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngState { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// A (possibly truncated) group element in its complex representation.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSample {
    pub group: Group,
    pub entries: CMatrix,
}

impl MatrixSample {
    /// Rows counted in group units (quaternionic rows for the symplectic group).
    pub fn rows(&self) -> usize {
        self.entries.rows / self.group.block()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols / self.group.block()
    }
}

fn gaussian_entry(group: Group, rng: &mut RngState) -> Complex64 {
    match group {
        Group::Orthogonal => Complex64::new(rng.normal(), 0.0),
        _ => Complex64::new(rng.normal(), rng.normal()) * core::f64::consts::FRAC_1_SQRT_2,
    }
}

/// `(u_1, u_2) ↦ (−ū_2, ū_1)` on every quaternionic row.
fn partner(u: &[Complex64]) -> Vec<Complex64> {
    let mut v = Vec::with_capacity(u.len());
    for pair in u.chunks(2) {
        v.push(-pair[1].conj());
        v.push(pair[0].conj());
    }
    v
}

fn orthonormalize(u: &mut [Complex64], basis: &[Vec<Complex64>]) -> Result<()> {
    for _pass in 0..2 {
        for b in basis {
            let dot: Complex64 = b.iter().zip(u.iter()).map(|(x, y)| x.conj() * y).sum();
            for (x, y) in u.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
    }
    let norm = libm::sqrt(u.iter().map(|z| z.norm_sqr()).sum::<f64>());
    if !(norm > 1e-12) {
        return Err(Error::Numerical("rank-deficient Gaussian sample".into()));
    }
    u.iter_mut().for_each(|z| *z /= norm);
    Ok(())
}

/// The first `r` columns of a Haar element of the group of size `m`, by
/// Gram–Schmidt on Gaussian columns (the triangular factor has a positive
/// diagonal, which makes the law exactly Haar).
pub fn haar_columns(group: Group, m: usize, r: usize, rng: &mut RngState) -> Result<MatrixSample> {
    if m == 0 || r > m {
        return Err(Error::InvalidParams(format!("need 1 <= r <= m, got m = {m}, r = {r}")));
    }
    let dim = m * group.block();
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(r * group.block());
    for _ in 0..r {
        let mut u: Vec<Complex64> = (0..dim).map(|_| gaussian_entry(group, rng)).collect();
        orthonormalize(&mut u, &cols)?;
        if group == Group::Symplectic {
            let v = partner(&u);
            cols.push(u);
            cols.push(v);
        } else {
            cols.push(u);
        }
    }
    let mut entries = CMatrix::zeros(dim, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for (i, z) in c.iter().enumerate() {
            entries[(i, j)] = *z;
        }
    }
    Ok(MatrixSample { group, entries })
}

/// A Haar element of `O(m)`, `U(m)` or `Sp(m)`.
pub fn sample_haar(group: Group, m: usize, rng: &mut RngState) -> Result<MatrixSample> {
    haar_columns(group, m, m, rng)
}

/// Upper-left `k × r` block (quaternionic units for the symplectic group).
pub fn truncate(s: &MatrixSample, k: usize, r: usize) -> Result<MatrixSample> {
    if k == 0 || r == 0 || k > s.rows() || r > s.cols() {
        return Err(Error::InvalidParams(format!(
            "truncation {k}x{r} out of range for a {}x{} matrix",
            s.rows(),
            s.cols()
        )));
    }
    let b = s.group.block();
    let mut entries = CMatrix::zeros(k * b, r * b);
    for i in 0..k * b {
        for j in 0..r * b {
            entries[(i, j)] = s.entries[(i, j)];
        }
    }
    Ok(MatrixSample { group: s.group, entries })
}

/// Eigenvalues of `T*T` in increasing order, Kramers pairs collapsed for the
/// symplectic group.
pub fn squared_singular_values(t: &MatrixSample) -> Result<Config> {
    if t.cols() > t.rows() {
        return Err(Error::InvalidParams("squared singular values need cols <= rows".into()));
    }
    let vals = gram_spectrum(t.group, &t.entries)?;
    Ok(Config::new_unchecked(vals))
}

fn gram_spectrum(group: Group, x: &CMatrix) -> Result<Vec<f64>> {
    let ev = x.gram().hermitian_eigenvalues()?;
    let mut vals = if group == Group::Symplectic {
        let mut out = Vec::with_capacity(ev.len() / 2);
        for pair in ev.chunks(2) {
            if libm::fabs(pair[0] - pair[1]) > KRAMERS_TOL {
                return Err(Error::Numerical(format!(
                    "Kramers pair mismatch {:e}",
                    libm::fabs(pair[0] - pair[1])
                )));
            }
            out.push(0.5 * (pair[0] + pair[1]));
        }
        out
    } else {
        ev
    };
    for v in vals.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(vals)
}

/// Squared singular values of `T_1, T_2T_1, …, T_p⋯T_1` where `T_j` is the
/// `(n+ν_j) × (n+ν_{j−1})` truncation of an independent Haar element of size `m_j`.
pub fn sample_product_chain(params: &ChainParams, rng: &mut RngState) -> Result<Trajectory> {
    validate_chain_params(params)?;
    let group = Group::from_theta(params.theta)?;
    let n = params.n;
    let mut configs = Vec::with_capacity(params.p());
    let mut x: Option<CMatrix> = None;
    for k in 1..=params.p() {
        let rows = n + params.nu_k(k);
        let cols = n + params.nu_k(k - 1);
        let s = haar_columns(group, params.m_k(k), cols, rng)?;
        let t = truncate(&s, rows, cols)?;
        let next = match &x {
            None => t.entries,
            Some(prev) => t.entries.matmul(prev),
        };
        configs.push(Config::new_unchecked(gram_spectrum(group, &next)?));
        x = Some(next);
    }
    Ok(Trajectory { configs })
}

/// Squared singular values of `T diag(√x)` with `T` the `(n+ν) × n` truncation
/// of a Haar element of size `n+ν+1`: one step of the chain from `x`.
pub fn sample_transition(x: &Config, nu: usize, group: Group, rng: &mut RngState) -> Result<Config> {
    let n = x.len();
    if n == 0 {
        return Err(Error::InvalidParams("empty configuration".into()));
    }
    let s = haar_columns(group, n + nu + 1, n, rng)?;
    let mut t = truncate(&s, n + nu, n)?;
    let b = group.block();
    for (j, &xj) in x.values().iter().enumerate() {
        let r = libm::sqrt(xj.max(0.0));
        for c in j * b..(j + 1) * b {
            for i in 0..t.entries.rows {
                t.entries[(i, c)] *= r;
            }
        }
    }
    Ok(Config::new_unchecked(gram_spectrum(group, &t.entries)?))
}
