use matprod_core::config::{interlaces, Config};
use matprod_core::crystal::{argmax_solver, crystal_step};
use matprod_core::haar::{sample_haar, sample_transition, Group, RngState};
use matprod_core::linalg::{CMatrix, Matrix};
use matprod_core::pfaffian::pfaffian;
use proptest::prelude::*;

fn group() -> impl Strategy<Value = Group> {
    prop_oneof![Just(Group::Orthogonal), Just(Group::Unitary), Just(Group::Symplectic)]
}

fn config(n: usize) -> impl Strategy<Value = Config> {
    prop::collection::vec(0.01f64..0.99, n).prop_filter_map("distinct points", |mut v| {
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] > 1e-3) {
            Config::new(v).ok()
        } else {
            None
        }
    })
}

fn antisymmetric(k: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0f64..2.0, k * k).prop_map(move |v| {
        Matrix::from_fn(k, k, |i, j| {
            if i < j {
                v[i * k + j]
            } else if i > j {
                -v[j * k + i]
            } else {
                0.0
            }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn haar_samples_are_unitary(g in group(), m in 1usize..7, seed in any::<u64>()) {
        let mut rng = RngState::new(seed, 0);
        let u = sample_haar(g, m, &mut rng).unwrap();
        let dim = m * g.block();
        let gram = u.entries.adjoint().matmul(&u.entries);
        prop_assert!(gram.max_abs_diff(&CMatrix::identity(dim)) < 1e-12);
        if g == Group::Orthogonal {
            for i in 0..dim {
                for j in 0..dim {
                    prop_assert_eq!(u.entries[(i, j)].im, 0.0);
                }
            }
        }
        if g == Group::Symplectic {
            // every odd column is the quaternionic partner of the one before it
            for c in (0..dim).step_by(2) {
                for r in (0..dim).step_by(2) {
                    prop_assert!((u.entries[(r, c + 1)] + u.entries[(r + 1, c)].conj()).norm() < 1e-14);
                    prop_assert!((u.entries[(r + 1, c + 1)] - u.entries[(r, c)].conj()).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn transitions_interlace(g in group(), x in (1usize..5).prop_flat_map(config), nu in 0usize..3, seed in any::<u64>()) {
        let mut rng = RngState::new(seed, 1);
        let y = sample_transition(&x, nu, g, &mut rng).unwrap();
        prop_assert_eq!(y.len(), x.len());
        prop_assert!(interlaces(&y, &x).unwrap(), "y = {:?}, x = {:?}", y.values(), x.values());
    }

    #[test]
    fn crystal_step_interlaces_and_maximizes(x in (1usize..5).prop_flat_map(config), nu in 0usize..4) {
        let y = crystal_step(&x, nu).unwrap();
        prop_assert!(interlaces(&y, &x).unwrap());
        let z = argmax_solver(&x, nu).unwrap();
        for (a, b) in y.values().iter().zip(z.values()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pfaffian_squares_to_determinant(a in (1usize..5).prop_flat_map(|k| antisymmetric(2 * k))) {
        let pf = pfaffian(&a).unwrap();
        let det = a.det();
        prop_assert!((pf * pf - det).abs() <= 1e-9 * (1.0 + det.abs()), "pf^2 = {}, det = {}", pf * pf, det);
    }

    #[test]
    fn pfaffian_congruence(
        (a, b) in (1usize..4).prop_flat_map(|k| (antisymmetric(2 * k), prop::collection::vec(-1.5f64..1.5, 4 * k * k)))
    ) {
        let dim = a.rows;
        let b = Matrix::from_fn(dim, dim, |i, j| b[i * dim + j]);
        let lhs = pfaffian(&b.transpose().matmul(&a).matmul(&b)).unwrap();
        let rhs = b.det() * pfaffian(&a).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{} vs {}", lhs, rhs);
    }
}

#[test]
fn pfaffian_rejects_odd_and_non_antisymmetric_input() {
    assert!(pfaffian(&Matrix::zeros(3, 3)).is_err());
    let mut a = Matrix::zeros(2, 2);
    a[(0, 1)] = 1.0;
    a[(1, 0)] = 0.5;
    assert!(pfaffian(&a).is_err());
    a[(1, 0)] = -1.0;
    assert_eq!(pfaffian(&a).unwrap(), 1.0);
}
