use nmr_pps::circuit::{circuit_for_method, circuit_to_unitary, verify_circuit};
use nmr_pps::pps::{build_permutation, permutation_to_unitary, populations, prepare_pps, Method, Realization};
use nmr_pps::{CMatrix, Error, SpinSystem};
use num_rational::Ratio;
use proptest::prelude::*;

/// `sum_i gamma_i I_z^i` populations written out bit by bit.
fn oracle_thermal(gamma: &[f64]) -> Vec<f64> {
    let n = gamma.len();
    (0..1usize << n)
        .map(|b| {
            (0..n)
                .map(|i| {
                    let up = (b >> (n - 1 - i)) & 1 == 0;
                    if up {
                        gamma[i] / 2.0
                    } else {
                        -gamma[i] / 2.0
                    }
                })
                .sum()
        })
        .collect()
}

fn oracle_target(method: Method, gamma: &[f64]) -> Vec<f64> {
    let dim = 1usize << gamma.len();
    let mut t = vec![0.0; dim];
    match method {
        Method::Tt1 => {
            let s: f64 = gamma.iter().sum();
            t[0] = s;
            t[dim - 1] = -s;
        }
        Method::Tt2 | Method::Tt3 => {
            t[0] = gamma[0];
            t[dim / 2] = -gamma[0];
        }
    }
    t
}

fn max_off_diagonal(m: &CMatrix<f64>) -> f64 {
    let d = m.dim();
    let mut worst = 0.0_f64;
    for r in 0..d {
        for c in 0..d {
            if r != c {
                worst = worst.max(m[(r, c)].norm());
            }
        }
    }
    worst
}

/// Rows as printed, `1` at `(row, col)` meaning `|col> -> |row>`.
const PRINTED_U1: [[u8; 8]; 8] = [
    [1, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 1],
];
const PRINTED_U2: [[u8; 8]; 8] = [
    [0, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 1],
    [0, 0, 1, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 0, 0, 0],
];
const PRINTED_U3: [[u8; 8]; 8] = [
    [1, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 0, 1],
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0],
];

#[test]
fn three_spin_permutations_match_printed_matrices() {
    for (method, printed) in [(Method::Tt1, PRINTED_U1), (Method::Tt2, PRINTED_U2), (Method::Tt3, PRINTED_U3)] {
        let u = permutation_to_unitary::<f64>(&build_permutation(method, 3).unwrap());
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(u[(r, c)].re, f64::from(printed[r][c]), "{method} ({r},{c})");
                assert_eq!(u[(r, c)].im, 0.0);
            }
        }
    }
}

#[test]
fn worked_example_two_spin_tt1() {
    let system = SpinSystem::new(vec![1.0, 4.0]).unwrap();
    let r = prepare_pps(Method::Tt1, &system, Realization::Matrix).unwrap();
    assert_eq!(r.rho_in.real_diag(), vec![2.5, -1.5, 1.5, -2.5]);
    assert_eq!(r.rho_u.real_diag(), vec![2.5, 1.5, -1.5, -2.5]);
    assert_eq!(r.rho_sum.real_diag(), vec![5.0, 0.0, 0.0, -5.0]);
    assert_eq!(r.max_abs_residual, 0.0);
}

#[test]
fn worked_example_two_spin_tt2_tt3() {
    let system = SpinSystem::new(vec![1.0, 4.0]).unwrap();
    for method in [Method::Tt2, Method::Tt3] {
        let r = prepare_pps(method, &system, Realization::Matrix).unwrap();
        let d = r.rho_sum.real_diag();
        for (got, want) in d.iter().zip([1.0_f64, 0.0, -1.0, 0.0]) {
            assert!((got - want).abs() < 1e-12, "{method}: {d:?}");
        }
        assert!(max_off_diagonal(r.rho_sum.matrix()) < 1e-12);
    }
    // The same vectors in exact arithmetic.
    let g = [Ratio::from_integer(1i64), Ratio::from_integer(4)];
    for method in Method::ALL {
        let spec = build_permutation(method, 2).unwrap();
        assert_eq!(populations::sum_identity_mismatch(method, &g, &spec), None);
    }
    let tt1_in = populations::input(Method::Tt1, &g);
    assert_eq!(tt1_in, [5, -3, 3, -5].map(|v| Ratio::new(v, 2)).to_vec());
}

#[test]
fn permutations_are_bijections_with_expected_involutions() {
    for n in 2..=8 {
        for method in Method::ALL {
            let spec = build_permutation(method, n).unwrap();
            let mut seen = spec.map().to_vec();
            seen.sort_unstable();
            assert_eq!(seen, (0..1usize << n).collect::<Vec<_>>());
            assert!(spec.compose(&spec.inverse()).is_identity());
            let involution = spec.compose(&spec).is_identity();
            assert_eq!(involution, method != Method::Tt2, "{method} n={n}");
        }
    }
}

#[test]
fn single_spin_is_rejected() {
    for method in Method::ALL {
        assert_eq!(build_permutation(method, 1), Err(Error::TooFewSpins(1)));
    }
}

#[test]
fn circuits_induce_the_permutations() {
    for n in 2..=6 {
        for method in Method::ALL {
            let circuit = circuit_for_method(method, n).unwrap();
            let spec = build_permutation(method, n).unwrap();
            let check = verify_circuit(&circuit, &spec).unwrap();
            assert!(check.equal, "{method} n={n}: {check}");
            let perm = circuit_to_unitary(&circuit).as_permutation().unwrap();
            assert_eq!(perm, spec.map());
        }
    }
}

#[test]
fn circuit_realization_agrees_with_matrix() {
    let system = SpinSystem::new(vec![1.0, 2.5, -0.7, 3.0]).unwrap();
    for method in Method::ALL {
        let a = prepare_pps(method, &system, Realization::Matrix).unwrap();
        let b = prepare_pps(method, &system, Realization::Circuit).unwrap();
        assert!(a.rho_sum.max_abs_diff(&b.rho_sum) < 1e-13);
    }
}

fn gamma_strategy() -> impl Strategy<Value = Vec<f64>> {
    (2usize..=7).prop_flat_map(|n| {
        prop::collection::vec(
            prop_oneof![0.05f64..10.0, -10.0f64..-0.05],
            n,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sum_identity_matches_oracle(gamma in gamma_strategy()) {
        let system = SpinSystem::new(gamma.clone()).unwrap();
        let scale = gamma.iter().map(|g| g.abs()).sum::<f64>();
        for method in Method::ALL {
            let r = prepare_pps(method, &system, Realization::Matrix).unwrap();
            let want = oracle_target(method, &gamma);
            for (got, w) in r.rho_sum.real_diag().iter().zip(&want) {
                prop_assert!((got - w).abs() <= 1e-12 * scale, "{} {:?}", method, gamma);
            }
            prop_assert!(max_off_diagonal(r.rho_sum.matrix()) <= 1e-12 * scale);
            if method != Method::Tt3 {
                let thermal = oracle_thermal(&gamma);
                for (got, w) in r.rho_in.real_diag().iter().zip(&thermal) {
                    prop_assert!((got - w).abs() <= 1e-13 * scale);
                }
            }
        }
    }

    #[test]
    fn sum_identity_exact_over_rationals(
        gamma in (2usize..=8).prop_flat_map(|n| prop::collection::vec(
            prop_oneof![1i64..60, -60i64..0], n)),
        den in 1i64..12,
    ) {
        let g: Vec<Ratio<i64>> = gamma.iter().map(|&v| Ratio::new(v, den)).collect();
        for method in Method::ALL {
            let spec = build_permutation(method, g.len()).unwrap();
            prop_assert_eq!(populations::sum_identity_mismatch(method, &g, &spec), None);
        }
    }

    #[test]
    fn swapping_two_images_breaks_the_identity(a in 0usize..16, b in 0usize..16) {
        prop_assume!(a != b);
        let g: Vec<Ratio<i64>> = [3, 5, 7, 11].iter().map(|&v| Ratio::from_integer(v)).collect();
        for method in Method::ALL {
            let mut spec = build_permutation(method, 4).unwrap();
            let (ia, ib) = (spec.image(a), spec.image(b));
            let input = populations::input(method, &g);
            spec.corrupt(a, b);
            let mismatch = populations::sum_identity_mismatch(method, &g, &spec);
            // Only a swap of two equal populations can go unnoticed.
            prop_assert_eq!(mismatch.is_none(), input[a] == input[b], "{} {} {} -> {} {}", method, a, b, ia, ib);
        }
    }
}
