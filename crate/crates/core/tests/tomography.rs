use nmr_pps::pps::{prepare_pps, Method, Realization};
use nmr_pps::spin::thermal_deviation;
use nmr_pps::tomography::{
    add_noise, completed_pulse_set, fidelity, monte_carlo, pulse_set, simulate_readouts, PUBLISHED_FOUR_SPIN,
};
use nmr_pps::{parse_molecule, CMatrix, DeviationMatrix, Error, ProductOperator, PulseSet, Reconstructor, SpinSystem};
use num_complex::Complex64;
use proptest::prelude::*;

const CHLOROFORM: &str = include_str!("../../../fixtures/chloroform_2spin.mol");
const CROTONIC: &str = include_str!("../../../fixtures/crotonic_4spin.mol");

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(-i sigma pi/4)` by its closed form `(1 - i sigma) / sqrt 2`.
fn quarter_turn(letter: char) -> CMatrix<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rows = match letter {
        'I' => return CMatrix::identity(2),
        'X' => vec![vec![c(s, 0.), c(0., -s)], vec![c(0., -s), c(s, 0.)]],
        'Y' => vec![vec![c(s, 0.), c(-s, 0.)], vec![c(s, 0.), c(s, 0.)]],
        _ => unreachable!(),
    };
    CMatrix::from_rows(&rows)
}

fn random_traceless(n: usize, seed: u64) -> DeviationMatrix<f64> {
    let d = 1 << n;
    let mut x = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let mut next = || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let a = CMatrix::from_fn(d, |_, _| c(next(), next()));
    let h = a.add(&a.adjoint());
    let shift = h.trace().re / d as f64;
    let h = h.sub(&CMatrix::identity(d).scale_real(shift));
    DeviationMatrix::new(n, h).unwrap()
}

#[test]
fn readouts_match_independent_rotation_model() {
    let system: SpinSystem<f64> = parse_molecule(CHLOROFORM).unwrap();
    let set = PulseSet::new(2, &["II", "XY", "YI", "XX"]).unwrap();
    let rho = random_traceless(2, 7);
    let records = simulate_readouts(&rho, &system, &set).unwrap();
    for rec in &records {
        let chars: Vec<char> = rec.pulse.chars().collect();
        let u = quarter_turn(chars[0]).kron(&quarter_turn(chars[1]));
        let m = rho.matrix().conjugate_by(&u);
        // Spin 1 lines: <1x|m|0x>; spin 2 lines: <x1|m|x0>.
        let want = [[m[(2, 0)], m[(3, 1)]], [m[(1, 0)], m[(3, 2)]]];
        for (k, table) in rec.tables.iter().enumerate() {
            for (j, p) in table.peaks.iter().enumerate() {
                assert!((p.amplitude - want[k][j]).norm() < 1e-14, "{} spin {}", rec.pulse, k + 1);
            }
        }
    }
}

#[test]
fn noiseless_round_trip_two_and_four_spins() {
    for (text, set) in [(CHLOROFORM, pulse_set(2).unwrap()), (CROTONIC, completed_pulse_set(4).unwrap())] {
        let system: SpinSystem<f64> = parse_molecule(text).unwrap();
        let recon = Reconstructor::new(&set).unwrap();
        assert_eq!(recon.rank(), recon.unknowns());
        for method in Method::ALL {
            let r = prepare_pps(method, &system, Realization::Matrix).unwrap();
            for rho in [&r.rho_in, &r.rho_u, &r.rho_sum] {
                let out = recon.reconstruct(&simulate_readouts(rho, &system, &set).unwrap()).unwrap();
                assert!(out.residual < 1e-8);
                assert!(fidelity(rho, &out.sigma).unwrap() > 0.999);
                assert!(out.sigma.max_abs_diff(rho) < 1e-10);
            }
        }
    }
}

#[test]
fn arbitrary_states_round_trip() {
    let system: SpinSystem<f64> = parse_molecule(CROTONIC).unwrap();
    let set = completed_pulse_set(4).unwrap();
    let recon = Reconstructor::new(&set).unwrap();
    for seed in 0..3 {
        let rho = random_traceless(4, seed);
        let out = recon.reconstruct(&simulate_readouts(&rho, &system, &set).unwrap()).unwrap();
        assert!(out.sigma.max_abs_diff(&rho) < 1e-10);
    }
}

#[test]
fn published_set_leaves_two_coefficients_unresolved() {
    let set = pulse_set(4).unwrap();
    assert_eq!(set.strings(), PUBLISHED_FOUR_SPIN);
    let recon = Reconstructor::<f64>::new(&set).unwrap();
    assert_eq!(recon.unknowns(), 255);
    assert_eq!(recon.rank(), 253);
    assert_eq!(recon.unresolved(), ["YZZZ", "ZZYZ"]);

    let system: SpinSystem<f64> = parse_molecule(CROTONIC).unwrap();
    let rho = thermal_deviation(&system).unwrap();
    let records = simulate_readouts(&rho, &system, &set).unwrap();
    match recon.reconstruct(&records) {
        Err(Error::RankDeficient { rank, expected, unresolved }) => {
            assert_eq!((rank, expected), (253, 255));
            assert_eq!(unresolved, ["YZZZ", "ZZYZ"]);
        }
        other => panic!("expected rank deficiency, got {other:?}"),
    }
    // Diagonal states carry no weight on the blind directions.
    let out = recon.reconstruct_min_norm(&records).unwrap();
    assert!(out.sigma.max_abs_diff(&rho) < 1e-10);
}

/// Each unresolved string is a real state that every published pulse maps
/// to zero signal on every line; direct acquisition sees it.
#[test]
fn unresolved_strings_are_invisible_to_the_published_set() {
    let system: SpinSystem<f64> = parse_molecule(CROTONIC).unwrap();
    for name in ["YZZZ", "ZZYZ"] {
        let op: ProductOperator = name.parse().unwrap();
        let rho = DeviationMatrix::from_product_operator(&op, 1.0);
        let published = simulate_readouts(&rho, &system, &pulse_set(4).unwrap()).unwrap();
        let loudest = published.iter().fold(0.0_f64, |a, r| a.max(r.max_magnitude()));
        assert!(loudest < 1e-15, "{name}: {loudest}");
        let direct = simulate_readouts(&rho, &system, &PulseSet::new(4, &["IIII"]).unwrap()).unwrap();
        assert!((direct[0].max_magnitude() - 1.0 / 16.0).abs() < 1e-15);
    }
}

#[test]
fn dropping_a_pulse_loses_rank() {
    let system: SpinSystem<f64> = parse_molecule(CHLOROFORM).unwrap();
    let set = pulse_set(2).unwrap();
    let recon = Reconstructor::new(&set).unwrap();
    let rho = thermal_deviation(&system).unwrap();
    let records = simulate_readouts(&rho, &system, &set).unwrap();
    for skip in 0..records.len() {
        let partial: Vec<_> = records.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, r)| r.clone()).collect();
        assert!(matches!(recon.reconstruct(&partial), Err(Error::RankDeficient { .. })), "without {skip}");
    }
}

#[test]
fn pulse_sets_are_validated() {
    assert!(PulseSet::new(2, &["IZ"]).is_err());
    assert!(PulseSet::new(2, &["III"]).is_err());
    assert!(PulseSet::new(2, &["IX", "IX"]).is_err());
    assert!(PulseSet::new::<&str>(2, &[]).is_err());
    assert_eq!(pulse_set(3).unwrap_err(), Error::UnsupportedTomography(3));
    let system: SpinSystem<f64> = parse_molecule(CHLOROFORM).unwrap();
    let set = pulse_set(2).unwrap();
    let recon = Reconstructor::<f64>::new(&set).unwrap();
    let mut records = simulate_readouts(&thermal_deviation(&system).unwrap(), &system, &set).unwrap();
    records[0].pulse = "YY".into();
    assert!(matches!(recon.reconstruct(&records), Err(Error::InvalidPulseSet(_))));
}

#[test]
fn noise_is_seeded_and_scaled() {
    let system: SpinSystem<f64> = parse_molecule(CHLOROFORM).unwrap();
    let set = pulse_set(2).unwrap();
    let clean = simulate_readouts(&thermal_deviation(&system).unwrap(), &system, &set).unwrap();
    assert_eq!(add_noise(&clean, 0.0, 3).unwrap(), clean);
    assert_eq!(add_noise(&clean, 0.05, 3).unwrap(), add_noise(&clean, 0.05, 3).unwrap());
    assert_ne!(add_noise(&clean, 0.05, 3).unwrap(), add_noise(&clean, 0.05, 4).unwrap());
    assert!(add_noise(&clean, -0.1, 3).is_err());
    assert!(add_noise(&clean, f64::NAN, 3).is_err());
}

#[test]
fn fidelity_degrades_with_noise() {
    let system: SpinSystem<f64> = parse_molecule(CROTONIC).unwrap();
    let recon = Reconstructor::new(&completed_pulse_set(4).unwrap()).unwrap();
    let rho = prepare_pps(Method::Tt2, &system, Realization::Matrix).unwrap().rho_sum;
    let mut previous = 1.0 + 1e-12;
    for sigma in [0.0, 0.02, 0.1, 0.4] {
        let mut f = monte_carlo(&recon, &rho, &system, sigma, 0..15).unwrap();
        f.sort_by(f64::total_cmp);
        let median = f[f.len() / 2];
        assert!(median <= previous, "sigma {sigma}: {median} > {previous}");
        previous = median;
    }
    assert!(previous < 0.9);
}

#[test]
fn fidelity_rejects_zero_states() {
    let z = DeviationMatrix::<f64>::zeros(2);
    let rho = random_traceless(2, 1);
    assert_eq!(fidelity(&z, &rho).unwrap_err(), Error::ZeroNorm);
    assert_eq!(fidelity(&rho, &z).unwrap_err(), Error::ZeroNorm);
    assert!(matches!(fidelity(&rho, &random_traceless(3, 1)), Err(Error::DimensionMismatch { .. })));
}

proptest! {
    #[test]
    fn fidelity_is_symmetric_bounded_and_scale_free(a in 0u64..10_000, b in 0u64..10_000, s in 0.01f64..100.0) {
        let (x, y) = (random_traceless(3, a), random_traceless(3, b));
        let f = fidelity(&x, &y).unwrap();
        prop_assert!((f - fidelity(&y, &x).unwrap()).abs() < 1e-14);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((fidelity(&x.scaled(s), &y).unwrap() - f).abs() < 1e-12);
        prop_assert!((fidelity(&x.scaled(-s), &y).unwrap() - f).abs() < 1e-12);
        prop_assert!((fidelity(&x, &x.scaled(s)).unwrap() - 1.0).abs() < 1e-12);
    }
}
