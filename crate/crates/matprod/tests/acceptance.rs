//! Acceptance suite: one PASS/FAIL line per criterion, runtime limits included.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use matprod::integrate::TanhSinh;
use matprod::par::{run_blocks, BLOCK};
use matprod::stats::{chi2_gof, ks_two_sample};
use matprod::verify::{self, Report, Scale, VerifyOptions, MIN_P};
use matprod_core::config::{ChainParams, Config, Trajectory};
use matprod_core::density::{
    build_mu, jacobi_log_density, process_log_density, product_log_density_integral, product_log_density_jack,
    JacobiParams, KernelParams,
};
use matprod_core::haar::{sample_product_chain, sample_transition, Group, RngState};
use matprod_core::jack::{jack_eval, schur_eval};
use matprod_core::partition::Partition;
use matprod_core::pfaffian::{two_product_log_density, TwoProductParams};
use matprod_core::sampler::{sample_kernel_beta, GibbsSettings};

use common::{eval_in_monomials, gram_schmidt_jack, partitions, rational, rational_inverse, rel_err};

type Outcome = Result<(bool, String), String>;

const BINS: usize = 10;
const TRIANGLE_TOL: f64 = 1e-3;
const SCHUR_TOL: f64 = 1e-10;
const GRAM_SCHMIDT_TOL: f64 = 1e-8;
const RECTANGLE_TOL: f64 = 1e-12;

fn seed(c: u64) -> u64 {
    1000 + c
}

fn cfg(v: &[f64]) -> matprod::Result<Config> {
    Ok(Config::new(v.to_vec())?)
}

fn report(r: Report) -> Outcome {
    let failed: Vec<String> = r.checks.iter().filter(|c| !c.passed).map(|c| c.to_string()).collect();
    let detail = format!("{} of {} checks passed", r.checks.len() - failed.len(), r.checks.len());
    if failed.is_empty() {
        Ok((r.passed(), detail))
    } else {
        Ok((false, format!("{detail}; {}", failed.join("; "))))
    }
}

fn full(c: u64) -> VerifyOptions {
    VerifyOptions { scale: Scale::Full, seed: seed(c) }
}

/// Probability of each ordered cell `(i ≤ j)` of the 10×10 grid, `x_1` in bin `i`, `x_2` in bin `j`.
fn jacobi_cell_probs(jp: &JacobiParams) -> matprod::Result<Vec<f64>> {
    let o = TanhSinh::new(1e-10);
    let i = TanhSinh::new(1e-10);
    let h = 1.0 / BINS as f64;
    let dens = |x1: f64, x2: f64| -> matprod::Result<f64> {
        if x1 >= x2 {
            return Ok(0.0);
        }
        Ok(jacobi_log_density(&cfg(&[x1, x2])?, jp)?.exp())
    };
    let mut probs = Vec::new();
    for a in 0..BINS {
        for b in a..BINS {
            let (la, lb) = (a as f64 * h, b as f64 * h);
            let v = if a == b {
                o.integrate(|x2| i.integrate(|x1| dens(x1, x2), la, x2), lb, lb + h)?
            } else {
                o.integrate(|x2| i.integrate(|x1| dens(x1, x2), la, la + h), lb, lb + h)?
            };
            probs.push(v);
        }
    }
    Ok(probs)
}

fn cell_index(x1: f64, x2: f64) -> usize {
    let a = ((x1 * BINS as f64) as usize).min(BINS - 1);
    let b = ((x2 * BINS as f64) as usize).min(BINS - 1).max(a);
    a * BINS - a * (a + 1) / 2 + b
}

fn jacobi_law() -> Outcome {
    let n = 2;
    let count = 100_000;
    let mut worst = (f64::INFINITY, String::new());
    let mut tests = 0;
    let mut mass_err: f64 = 0.0;
    for (t, theta) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        for nu in 0..=1 {
            for extra in [0, 2] {
                let m = 2 * n + nu + extra;
                let jp = JacobiParams::new(n, m, nu, theta).map_err(|e| e.to_string())?;
                let params = ChainParams::new(theta, n, vec![m], &[nu]);
                let stream = seed(1) + 100 * t as u64 + 10 * nu as u64 + extra as u64;
                let draws = run_blocks(count, BLOCK, stream, |len, rng| {
                    (0..len)
                        .map(|_| {
                            let x = sample_product_chain(&params, rng)?;
                            let v = x.last().values();
                            Ok(cell_index(v[0], v[1]))
                        })
                        .collect()
                })
                .map_err(|e| e.to_string())?;
                let probs = jacobi_cell_probs(&jp).map_err(|e| e.to_string())?;
                mass_err = mass_err.max((probs.iter().sum::<f64>() - 1.0).abs());
                let mut counts = vec![0u64; probs.len()];
                for c in draws {
                    counts[c] += 1;
                }
                let chi = chi2_gof(&counts, &probs, 5.0);
                tests += 1;
                if chi.p_value < worst.0 {
                    worst = (chi.p_value, format!("theta={theta} nu={nu} m={m} chi2={:.1} dof={}", chi.statistic, chi.dof));
                }
            }
        }
    }
    let adjusted = (worst.0 * tests as f64).min(1.0);
    Ok((
        adjusted > MIN_P && mass_err < 1e-6,
        format!(
            "{tests} configs x {count} samples, smallest p = {:.4} ({}), Bonferroni p = {adjusted:.4}; cell mass error {mass_err:.1e}",
            worst.0, worst.1
        ),
    ))
}

fn markov_kernel() -> Outcome {
    let (n, nu) = (2, 1);
    let x = cfg(&[0.3, 0.75]).map_err(|e| e.to_string())?;
    let count = 50_000;
    let settings = GibbsSettings { burn_in: 20, sweeps: 10, ..GibbsSettings::default() };
    let mut ps = Vec::new();
    for (t, theta) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let group = Group::from_theta(theta).map_err(|e| e.to_string())?;
        let kp = KernelParams::new(n, nu, theta).map_err(|e| e.to_string())?;
        let base = seed(2) + 10 * t as u64;
        let matrix = run_blocks(count, BLOCK, base, |len, rng| {
            (0..len).map(|_| Ok(sample_transition(&x, nu, group, rng)?.into_values())).collect()
        })
        .map_err(|e| e.to_string())?;
        let gibbs = run_blocks(count, BLOCK, base + 1, |len, rng| {
            (0..len).map(|_| Ok(sample_kernel_beta(&x, &kp, &settings, rng)?.into_values())).collect()
        })
        .map_err(|e| e.to_string())?;
        for i in 0..n {
            let a: Vec<f64> = matrix.iter().map(|y| y[i]).collect();
            let b: Vec<f64> = gibbs.iter().map(|y| y[i]).collect();
            let ks = ks_two_sample(&a, &b);
            ps.push((ks.p_value, format!("theta={theta} y{}: D={:.4}", i + 1, ks.statistic)));
        }
    }
    let (pmin, at) = ps.iter().min_by(|a, b| a.0.total_cmp(&b.0)).cloned().unwrap_or_default();
    let adjusted = (pmin * ps.len() as f64).min(1.0);
    Ok((
        adjusted > MIN_P,
        format!(
            "x=(0.3,0.75), nu={nu}, {count} draws per side, {} KS tests, smallest p = {pmin:.4} ({at}), Bonferroni p = {adjusted:.4}",
            ps.len()
        ),
    ))
}

/// `∫ p(x^1, x^2) dx^1` over the cells `x^2_i ≤ x^1_i ≤ x^2_{i+1}`.
fn marginal_process(y: &[f64], params: &ChainParams) -> matprod::Result<f64> {
    let ts = TanhSinh::new(1e-10);
    let dens = |x: &[f64]| -> matprod::Result<f64> {
        let t = Trajectory::new(vec![cfg(x)?, cfg(y)?])?;
        Ok(process_log_density(&t, params)?.exp())
    };
    match y.len() {
        1 => ts.integrate(|a| dens(&[a]), y[0], 1.0),
        2 => ts.integrate(|b| ts.integrate(|a| dens(&[a, b]), y[0], y[1]), y[1], 1.0),
        n => panic!("marginal_process: n = {n} not covered"),
    }
}

fn density_triangle() -> Outcome {
    let theta = 2.0;
    // (n, m, nu): the first admits the integral representation, the second the Jack density
    let cases: [(usize, [usize; 2], [usize; 2]); 4] =
        [(1, [3, 3], [0, 1]), (1, [3, 4], [0, 2]), (2, [5, 4], [0, 1]), (2, [4, 5], [0, 2])];
    let mut worst: (f64, String) = (0.0, String::new());
    let mut notes = Vec::new();
    for (n, m, nu) in cases {
        let params = ChainParams::new(theta, n, m.to_vec(), &nu);
        let tp = TwoProductParams::new(n, nu[0], nu[1], m[0]).map_err(|e| e.to_string())?;
        let jack = build_mu(&params).ok();
        let mut forms = vec!["two-product", "process"];
        if jack.is_some() {
            forms.push("jack");
        }
        let grid: Vec<Vec<f64>> = if n == 1 {
            (0..50).map(|k| vec![(k as f64 + 0.5) / 50.0]).collect()
        } else {
            let mid = |k: usize| (k as f64 + 0.5) / 11.0;
            (0..11).flat_map(|i| (i + 1..11).map(move |j| vec![mid(i), mid(j)])).collect()
        };
        let mut with_integral = true;
        for y in &grid {
            let x = cfg(y).map_err(|e| e.to_string())?;
            let mut vals = vec![
                ("two-product", two_product_log_density(&x, &tp).map_err(|e| e.to_string())?.exp()),
                ("process", marginal_process(y, &params).map_err(|e| e.to_string())?),
            ];
            if let Some(data) = &jack {
                vals.push(("jack", product_log_density_jack(&x, data).map_err(|e| e.to_string())?.exp()));
            }
            match product_log_density_integral(&x, &params) {
                Ok(v) => vals.push(("integral", v.exp())),
                Err(_) => with_integral = false,
            }
            for a in 0..vals.len() {
                for b in a + 1..vals.len() {
                    let e = rel_err(vals[a].1, vals[b].1);
                    if e > worst.0 || e.is_nan() {
                        worst = (e, format!("{} vs {} at n={n} m={m:?} nu={nu:?} x={y:?}", vals[a].0, vals[b].0));
                    }
                }
            }
        }
        if with_integral {
            forms.push("integral");
        }
        notes.push(format!("n={n} m={m:?} nu={nu:?}: {}", forms.join("/")));
    }
    Ok((
        worst.0 <= TRIANGLE_TOL,
        format!("max pairwise relative error {:.2e} ({}); 50 points (n=1) / 55 lattice points (n=2) per case; {}", worst.0, worst.1, notes.join(", ")),
    ))
}

fn factorial(k: i64) -> num_rational::BigRational {
    (1..=k).fold(rational(1), |acc, j| acc * rational(j))
}

fn hankel_inverse() -> Outcome {
    let (ok, detail) = report(verify::hankel(&full(6)))?;
    let mut mismatches = Vec::new();
    for n in 1..=4usize {
        for a in (1..=11i64).step_by(2) {
            for b in (1..=11i64).step_by(2) {
                let dim = 2 * n;
                let c: Vec<Vec<_>> = (0..dim as i64)
                    .map(|i| {
                        (0..dim as i64)
                            .map(|j| rational(j - i) * factorial(a + i + j - 1) / factorial(a + b + i + j))
                            .collect()
                    })
                    .collect();
                let lib_c = matprod::exact::hankel_exact(n, a, b).map_err(|e| e.to_string())?;
                let q = matprod::exact::hankel_inverse_exact(n, a, b).map_err(|e| e.to_string())?;
                let oracle = rational_inverse(&c).ok_or("singular Hankel matrix")?;
                if lib_c != c || q != oracle {
                    mismatches.push(format!("2n={dim} a={a} b={b}"));
                }
            }
        }
    }
    Ok((
        ok && mismatches.is_empty(),
        format!(
            "{detail}; closed form equals the Gauss-Jordan inverse exactly on {} of 144 cases{}",
            144 - mismatches.len(),
            if mismatches.is_empty() { String::new() } else { format!(" (differs at {})", mismatches.join(", ")) }
        ),
    ))
}

fn jack_engine() -> Outcome {
    let mut rng = RngState::new(seed(8), 0);
    let mut point = |n: usize| -> Vec<f64> { (0..n).map(|_| 0.05 + 0.9 * rng.uniform()).collect() };
    let mut schur_worst: f64 = 0.0;
    for k in 1..=6 {
        for lam in partitions(k) {
            let p = Partition::new(&lam).map_err(|e| e.to_string())?;
            for n in [3, 4, 6] {
                let x = point(n);
                let a = jack_eval(&p, &x, 1.0).map_err(|e| e.to_string())?;
                let b = schur_eval(&p, &x).map_err(|e| e.to_string())?;
                schur_worst = schur_worst.max(rel_err(a, b));
            }
        }
    }
    let mut gs_worst: f64 = 0.0;
    for theta in [0.5, 2.0, 3.7] {
        for k in 1..=5 {
            let oracle = gram_schmidt_jack(k, theta);
            let parts: Vec<Vec<usize>> = oracle.iter().map(|(p, _)| p.clone()).collect();
            for (lam, coef) in &oracle {
                let p = Partition::new(lam).map_err(|e| e.to_string())?;
                for n in [2, 4, 5] {
                    let x = point(n);
                    let a = jack_eval(&p, &x, theta).map_err(|e| e.to_string())?;
                    let b = eval_in_monomials(&parts, coef, &x);
                    gs_worst = gs_worst.max(rel_err(a, b));
                }
            }
        }
    }
    let mut rect_worst: f64 = 0.0;
    let mut mu_ok = true;
    for (n, nu, m1) in [(1, 0, 2), (1, 2, 5), (2, 0, 4), (2, 1, 7), (3, 0, 8), (2, 3, 9)] {
        let rows = m1 - n - nu;
        let rect = Partition::rectangle(rows, nu + 1);
        let data = build_mu(&ChainParams::new(1.0, n, vec![m1], &[nu])).map_err(|e| e.to_string())?;
        mu_ok &= data.mu == rect;
        let x = point(n);
        let mut args = x.clone();
        args.extend(std::iter::repeat_n(1.0, m1 - 2 * n - nu));
        let want: f64 = x.iter().map(|v| v.powi(nu as i32 + 1)).product();
        let s = schur_eval(&rect, &args).map_err(|e| e.to_string())?;
        let j = jack_eval(&rect, &args, 1.0).map_err(|e| e.to_string())?;
        rect_worst = rect_worst.max(rel_err(s, want)).max(rel_err(j, want));
    }
    Ok((
        schur_worst <= SCHUR_TOL && gs_worst <= GRAM_SCHMIDT_TOL && rect_worst <= RECTANGLE_TOL && mu_ok,
        format!(
            "Schur {schur_worst:.1e} (|lambda| <= 6, tol {SCHUR_TOL:e}); Gram-Schmidt {gs_worst:.1e} (|lambda| <= 5, theta in {{0.5,2,3.7}}, tol {GRAM_SCHMIDT_TOL:e}); rectangle {rect_worst:.1e} (tol {RECTANGLE_TOL:e}), mu rectangular: {mu_ok}"
        ),
    ))
}

fn main() -> ExitCode {
    matprod::par::init_threads(matprod::par::threads_from_env().ok().flatten()).ok();
    type Criterion = (&'static str, u64, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("Jacobi law", 120, jacobi_law),
        ("Markov kernel", 300, markov_kernel),
        ("moment oracle", 600, || report(verify::moments(&full(3)))),
        ("density-formula triangle", 300, density_triangle),
        ("Dixon identity", 120, || report(verify::dixon(&full(5)))),
        ("Hankel inverse", 10, hankel_inverse),
        ("Pfaffian kernel", 600, || report(verify::pfaffian(&full(7)))),
        ("Jack engine", 60, jack_engine),
        ("crystallization", 900, || report(verify::crystal(&full(9)))),
        ("normalization sweep", 300, || report(verify::normalization(&full(10)))),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let within = elapsed <= Duration::from_secs(limit);
        let (passed, detail) = match outcome {
            Ok((p, d)) => (p && within, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.1} s, limit {limit} s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
