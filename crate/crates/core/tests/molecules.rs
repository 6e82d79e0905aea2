use nmr_pps::molecule::format_molecule;
use nmr_pps::{parse_molecule, Error, SpinSystem};
use proptest::prelude::*;

#[test]
fn fixtures_parse() {
    let chloroform: SpinSystem<f64> = parse_molecule(include_str!("../../../fixtures/chloroform_2spin.mol")).unwrap();
    assert_eq!(chloroform.species(), ["C", "H"]);
    assert_eq!(chloroform.gamma(), [1.0, 4.0]);
    assert_eq!(chloroform.coupling(2, 1), 215.0);

    let crotonic: SpinSystem<f64> = parse_molecule(include_str!("../../../fixtures/crotonic_4spin.mol")).unwrap();
    assert_eq!(crotonic.n(), 4);
    assert_eq!(crotonic.spins_of_species("C"), [1, 2, 3, 4]);
    assert_eq!(crotonic.coupling(3, 4), 41.6);
}

#[test]
fn errors_carry_line_numbers() {
    let text = "[system]\nn = 2\nspecies = C H\ngamma = 1 4\n[j]\n1 3 10\n";
    match parse_molecule::<f64>(text) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_molecule::<f64>("[system]\nn = 2\n"), Err(Error::Parse { .. })));
    assert!(matches!(parse_molecule::<f64>("[nonsense]\n"), Err(Error::Parse { line: 1, .. })));
}

proptest! {
    #[test]
    fn format_then_parse_is_identity(
        n in 1usize..=5,
        gamma in prop::collection::vec(prop_oneof![0.1f64..10.0, -10.0f64..-0.1], 5),
        shifts in prop::collection::vec(-5e3f64..5e3, 5),
        j in prop::collection::vec(prop_oneof![Just(0.0f64), -300.0f64..300.0], 10),
        t2 in prop::collection::vec(prop_oneof![Just(f64::INFINITY), 0.01f64..5.0], 5),
    ) {
        let mut system = SpinSystem::new(gamma[..n].to_vec()).unwrap()
            .with_shifts(shifts[..n].to_vec()).unwrap()
            .with_t2(t2[..n].to_vec()).unwrap();
        let mut k = 0;
        for a in 1..=n {
            for b in a + 1..=n {
                system = system.with_coupling(a, b, j[k]).unwrap();
                k += 1;
            }
        }
        let back: SpinSystem<f64> = parse_molecule(&format_molecule(&system)).unwrap();
        prop_assert_eq!(back, system);
    }
}
