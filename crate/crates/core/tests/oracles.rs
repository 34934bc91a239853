use stftpr::forge::{forge_default, separable_with_gap, Claim};
use stftpr::signal::{conj_reflect, GridSpec, C64};
use stftpr::stft::{measure, FrequencyGrid, TimeNodes};
use stftpr::verify::{
    measurements_equal, node_equivalence_check, semidiscrete_refinement_check, uniqueness_oracle, AlphabetFamily,
    OracleConfig, TrigFamily,
};
use stftpr::window::WindowPair;
use stftpr::Error;

#[test]
fn lattice_pair_has_equal_lattice_data() {
    let fp = forge_default(Claim::RationalLattice, 0).unwrap();
    let freqs = FrequencyGrid::critical(&fp.pair.grid);
    let m1 = measure(&fp.f, &fp.pair, &fp.nodes, &freqs).unwrap();
    let m2 = measure(&fp.g, &fp.pair, &fp.nodes, &freqs).unwrap();
    assert!(measurements_equal(&m1, &m2, 1e-10).unwrap().0);
}

#[test]
fn refinement_forces_lattice_pair_off_the_lattice() {
    let fp = forge_default(Claim::RationalLattice, 0).unwrap();
    let r = semidiscrete_refinement_check(&fp.f, &fp.g, &fp.pair, fp.params["a"], 3).unwrap();
    assert!(r.levels[0].equal);
    assert_eq!(r.forced_at, Some(1));
}

#[test]
fn fully_separated_pair_is_never_forced() {
    let pair = WindowPair::rectangular(GridSpec::centered(1.0, 8, 64).unwrap(), 0.25).unwrap();
    let fp = separable_with_gap(&pair, 0.5, 8, 9).unwrap();
    let r = semidiscrete_refinement_check(&fp.f, &fp.g, &pair, 1.0, 3).unwrap();
    assert!(!r.equivalent);
    assert_eq!(r.levels.last().unwrap().step, 0.25);
    assert!(r.levels.iter().all(|l| l.equal), "{r:?}");
    assert_eq!(r.forced_at, None);
}

#[test]
fn node_equivalence_over_several_nodes() {
    let fp = forge_default(Claim::WideStep, 5).unwrap();
    for t in [-1.0, 0.0, 0.75] {
        let r = conj_reflect(&fp.f, t).unwrap();
        assert!(node_equivalence_check(&fp.f, &r, &fp.pair, t, 4).unwrap());
        assert!(node_equivalence_check(&fp.f, &fp.f.scaled(C64::i()), &fp.pair, t, 4).unwrap());
        assert!(node_equivalence_check(&fp.f, &fp.g, &fp.pair, t, 4).unwrap());
    }
}

#[test]
fn oversize_family_rejected() {
    let grid = GridSpec::centered(1.0, 4, 32).unwrap();
    let alphabet = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::i(), -C64::i()];
    match AlphabetFamily::new(grid, -5, 10, alphabet.clone(), vec![], None, "big") {
        Err(Error::FamilyTooLarge { count, .. }) => assert_eq!(count, 9_765_625),
        other => panic!("expected FamilyTooLarge, got {other:?}"),
    }
    let grid = GridSpec::centered(1.0, 16, 64).unwrap();
    assert!(matches!(
        TrigFamily::new(grid, 1.75, 5, alphabet, C64::new(1.0, 0.0), "big"),
        Err(Error::FamilyTooLarge { .. })
    ));
}

#[test]
fn half_step_family_is_unique() {
    let pair = WindowPair::rectangular(GridSpec::centered(1.0, 4, 16).unwrap(), 0.5).unwrap();
    let alphabet = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::i(), C64::new(-1.0, 0.0)];
    let fam = AlphabetFamily::new(pair.grid, -2, 5, alphabet, vec![], Some(1.5), "blocks").unwrap();
    let r = uniqueness_oracle(&OracleConfig::lattice(&pair, 0.5).unwrap(), &fam).unwrap();
    assert!(r.violations.is_empty(), "{:?}", r.violations);
}

#[test]
fn anchored_separable_pair_depends_on_anchor() {
    let fp = forge_default(Claim::SeparableGap, 1).unwrap();
    let a = fp.params["a"];
    let freqs = FrequencyGrid::critical(&fp.pair.grid);
    for (t, admissible) in [(-0.5, true), (0.0, true), (-0.25, false)] {
        assert_eq!(stftpr::forge::separable_anchor_admissible(a, t), admissible);
        let nodes = TimeNodes::explicit(vec![t]).unwrap();
        let equal = measurements_equal(
            &measure(&fp.f, &fp.pair, &nodes, &freqs).unwrap(),
            &measure(&fp.g, &fp.pair, &nodes, &freqs).unwrap(),
            1e-10,
        )
        .unwrap()
        .0;
        assert_eq!(equal, admissible, "anchor {t}");
    }
}
