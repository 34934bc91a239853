use proptest::prelude::*;
use stftpr::local::{class_distance, recover_segment, SegmentGeometry};
use stftpr::signal::{conj_reflect, phase_align, random_nonseparable, GridSpec, Signal, C64};
use stftpr::stft::{measure, FrequencyGrid, TimeNodes};
use stftpr::stitch::{lattice_measurements, reconstruct};
use stftpr::window::WindowPair;

fn segment(max_len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((0.05f64..1.0, 0.0f64..std::f64::consts::TAU), 2..=max_len)
        .prop_map(|v| v.into_iter().map(|(r, t)| C64::from_polar(r, t)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn measurements_ignore_global_phase(seed in 0u64..1000, theta in 0.0f64..6.3) {
        let grid = GridSpec::centered(1.0, 8, 48).unwrap();
        let pair = WindowPair::rectangular(grid, 0.25).unwrap();
        let f = random_nonseparable(grid, 24, 1.0, seed).unwrap();
        let nodes = TimeNodes::lattice(&grid, 0.5).unwrap();
        let freqs = FrequencyGrid::critical(&grid);
        let m1 = measure(&f, &pair, &nodes, &freqs).unwrap();
        let m2 = measure(&f.scaled(C64::from_polar(1.0, theta)), &pair, &nodes, &freqs).unwrap();
        for (x, y) in m1.phi.iter().chain(&m1.psi).flatten().zip(m2.phi.iter().chain(&m2.psi).flatten()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn reflection_is_an_involution(seed in 0u64..1000, center in -8i64..8) {
        let grid = GridSpec::centered(1.0, 8, 64).unwrap();
        let f = random_nonseparable(grid, 20, 1.0, seed).unwrap();
        let c = center as f64 * grid.delta();
        let twice = conj_reflect(&conj_reflect(&f, c).unwrap(), c).unwrap();
        prop_assert_eq!(twice, f);
    }

    #[test]
    fn local_class_contains_segment(h in segment(10), b_half in any::<bool>()) {
        let geom = SegmentGeometry { len: h.len(), delta: 2.0 / h.len() as f64, b: if b_half { 0.5 } else { 0.25 } };
        let (phi, psi) = geom.predict(&h);
        let class = recover_segment(&phi, &psi, &geom, 0.0, 0.0).unwrap();
        prop_assert!(class_distance(&class, &h) <= 1e-6);
    }

    #[test]
    fn reconstruction_matches_truth(seed in 0u64..10_000, len in 8usize..40, half_step in any::<bool>()) {
        let grid = GridSpec::centered(1.0, 8, 64).unwrap();
        let a = if half_step { 0.5 } else { 1.0 };
        let pair = WindowPair::rectangular(grid, 0.25).unwrap();
        let f = random_nonseparable(grid, len, 2.0 - a, seed).unwrap();
        let r = reconstruct(&lattice_measurements(&f, &pair, a, None).unwrap(), &pair).unwrap();
        prop_assert!(phase_align(&f.samples, &r.signal.samples).1 <= 1e-8);
    }

    #[test]
    fn signal_json_roundtrip(seed in 0u64..1000) {
        let grid = GridSpec::centered(1.0, 8, 32).unwrap();
        let f = random_nonseparable(grid, 16, 1.0, seed).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        let back: Signal = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, f);
    }
}
