use std::path::{Path, PathBuf};

use serde_json::Value;
use stftpr::cli::main_with_args;
use stftpr::io::{load_measurements, load_signal, save_measurements, save_signal, ForgeManifest};
use stftpr::signal::{GridSpec, Signal, C64};
use stftpr::stitch::lattice_measurements;
use stftpr::window::WindowPair;

struct Scratch(tempfile::TempDir);

impl Scratch {
    fn join(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn scratch() -> Scratch {
    Scratch(tempfile::tempdir().unwrap())
}

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("stftpr").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn measurement_file_roundtrip() {
    let dir = scratch();
    let m = dir.join("m.json");
    assert_eq!(run(&["measure", "--output", p(&m), "--anchor", "incommensurate", "--a", "0.5"]), 0);
    let ms = load_measurements(&m).unwrap();
    let again = dir.join("again.json");
    save_measurements(&again, &ms).unwrap();
    assert_eq!(load_measurements(&again).unwrap(), ms);
    assert_eq!(std::fs::read(&m).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn zero_signal_measures_to_zero() {
    let dir = scratch();
    let f = dir.join("zero.json");
    save_signal(&f, &Signal::zeros(GridSpec::centered(1.0, 8, 64).unwrap())).unwrap();
    let m = dir.join("m.json");
    assert_eq!(run(&["measure", "--input", p(&f), "--output", p(&m)]), 0);
    let ms = load_measurements(&m).unwrap();
    assert!(ms.phi.iter().chain(&ms.psi).flatten().all(|v| *v == 0.0));
}

#[test]
fn golden_measurement_file() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/seed7_measurements.json");
    let dir = scratch();
    let m = dir.join("m.json");
    assert_eq!(run(&["measure", "--seed", "7", "--output", p(&m)]), 0);
    if std::env::var_os("STFTPR_BLESS").is_some() {
        std::fs::copy(&m, &golden).unwrap();
    }
    assert_eq!(
        std::fs::read(&m).unwrap(),
        std::fs::read(&golden).unwrap(),
        "regenerated output differs from the golden file"
    );
}

#[test]
fn recover_exit_codes() {
    let dir = scratch();
    let m = dir.join("m.json");
    let f = dir.join("f.json");
    assert_eq!(run(&["measure", "--seed", "11", "--output", p(&m), "--signal-out", p(&f)]), 0);
    let report = dir.join("r.json");
    let rec = dir.join("rec.json");
    let code =
        run(&["recover", "--input", p(&m), "--output", p(&report), "--signal-out", p(&rec), "--reference", p(&f)]);
    assert_eq!(code, 0);
    let r = json(&report);
    assert_eq!(r["ambiguity"], "phase_only");
    assert!(r["reference_distance"].as_f64().unwrap() < 1e-8);
    let truth = load_signal(&f).unwrap();
    let lambda: C64 = serde_json::from_value(r["lambda"].clone()).unwrap();
    let back = load_signal(&rec).unwrap().scaled(lambda);
    assert!(truth.samples.iter().zip(&back.samples).all(|(x, y)| (x - y).norm() < 1e-8));

    assert_eq!(run(&["forge", "separable", "--out-dir", p(&dir.join("sep"))]), 0);
    let sm = dir.join("sep-m.json");
    assert_eq!(run(&["measure", "--input", p(&dir.join("sep/f.json")), "--a", "0.5", "--output", p(&sm)]), 0);
    assert_eq!(run(&["recover", "--input", p(&sm), "--output", p(&dir.join("sep-r.json"))]), 1);

    let wm = dir.join("wide-m.json");
    assert_eq!(run(&["measure", "--seed", "11", "--a", "1.5", "--output", p(&wm)]), 0);
    assert_eq!(run(&["recover", "--input", p(&wm), "--output", p(&dir.join("wide-r.json"))]), 1);

    let fp = stftpr::forge::forge_default(stftpr::forge::Claim::RationalLattice, 0).unwrap();
    let lm = dir.join("lattice-m.json");
    let ms = stftpr::stft::measure(&fp.f, &fp.pair, &fp.nodes, &stftpr::stft::FrequencyGrid::critical(&fp.pair.grid))
        .unwrap();
    save_measurements(&lm, &ms).unwrap();
    assert_eq!(run(&["recover", "--input", p(&lm), "--output", p(&dir.join("lattice-r.json"))]), 2);
}

#[test]
fn forged_pairs_verify() {
    let dir = scratch();
    for claim in ["separable_gap", "wide_step", "rational_periodic", "quasiperiodic_flip", "rational_lattice"] {
        let out = dir.join(claim);
        assert_eq!(run(&["forge", claim, "--out-dir", p(&out)]), 0, "{claim}");
        let manifest: ForgeManifest = serde_json::from_value(json(&out.join("manifest.json"))).unwrap();
        assert_eq!(manifest.claim, claim);
        for key in ["B", "L", "b", "horizon", "seed"] {
            assert!(manifest.params.contains_key(key), "{claim} manifest lacks {key}");
        }
        assert!(manifest.measurement_deviation <= 1e-10);
        let verdict = out.join("verdict.json");
        assert_eq!(run(&["verify", "--manifest", p(&out.join("manifest.json")), "--output", p(&verdict)]), 0);
        assert_eq!(json(&verdict)["verdict"], "equal measurements, inequivalent signals", "{claim}");
    }
    assert_eq!(run(&["forge", "no-such-claim", "--out-dir", p(&dir.join("x"))]), 1);
    assert_eq!(run(&["forge", "wide_step", "--a", "0.5", "--out-dir", p(&dir.join("y"))]), 1);
}

#[test]
fn rotated_copy_is_equivalent() {
    let dir = scratch();
    let grid = GridSpec::centered(1.0, 8, 64).unwrap();
    let f = stftpr::signal::random_nonseparable(grid, 30, 1.0, 2).unwrap();
    save_signal(&dir.join("f.json"), &f).unwrap();
    save_signal(&dir.join("g.json"), &f.scaled(C64::from_polar(1.0, 2.2))).unwrap();
    let out = dir.join("v.json");
    let code = run(&["verify", "--f", p(&dir.join("f.json")), "--g", p(&dir.join("g.json")), "--output", p(&out)]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["verdict"], "equivalent");
}

#[test]
fn oracle_modes_match_predictions() {
    let dir = scratch();
    for (args, expect) in [(vec!["--a", "1"], false), (vec!["--a", "1.5"], true), (vec!["--family", "separable"], true)]
    {
        let out = dir.join("o.json");
        let mut full = vec!["verify", "--mode", "oracle", "--output", p(&out)];
        full.extend(args.iter().copied());
        assert_eq!(run(&full), 0, "{args:?}");
        let v = json(&out);
        assert_eq!(v["expected_violations"], expect);
        assert_eq!(v["report"]["violations"].as_array().unwrap().is_empty(), !expect);
    }
}

#[test]
fn plot_outputs() {
    let dir = scratch();
    assert_eq!(run(&["forge", "quasiperiodic_flip", "--out-dir", p(dir.0.path())]), 0);
    let csv = dir.join("steps.csv");
    assert_eq!(run(&["plot", p(&dir.join("manifest.json")), "--output", p(&csv)]), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let xs: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(xs, vec![-1.0, -0.5, -0.25, 0.5, 1.0, 1.25, 2.0, 2.5]);

    let m = dir.join("m.json");
    assert_eq!(run(&["measure", "--output", p(&m)]), 0);
    let heat = dir.join("heat.csv");
    assert_eq!(run(&["plot", p(&m), "--output", p(&heat)]), 0);
    let first = std::fs::read_to_string(&heat).unwrap();
    assert!(first.starts_with("t,n,omega,mag_phi,mag_psi\n"));
    assert_eq!(run(&["plot", p(&m), "--output", p(&heat)]), 0);
    assert_eq!(std::fs::read_to_string(&heat).unwrap(), first);

    let sig = dir.join("sig.csv");
    assert_eq!(run(&["plot", p(&dir.join("f.json")), "--output", p(&sig)]), 0);
    assert!(std::fs::read_to_string(&sig).unwrap().starts_with("x,re_f,im_f,abs_f\n"));
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["measure"]), 1);
    assert_eq!(run(&["measure", "--output", "x.json", "--L", "7"]), 1);
    assert_eq!(run(&["measure", "--output", "x.json", "--anchor", "sometimes"]), 1);
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn selftest_single_criterion() {
    assert_eq!(run(&["selftest", "--only", "6"]), 0);
    assert_eq!(run(&["selftest", "--only", "11"]), 1);
}

#[test]
fn lattice_helper_matches_cli_nodes() {
    let dir = scratch();
    let grid = GridSpec::centered(1.0, 8, 64).unwrap();
    let f = stftpr::signal::random_nonseparable(grid, 20, 1.0, 4).unwrap();
    save_signal(&dir.join("f.json"), &f).unwrap();
    let m = dir.join("m.json");
    assert_eq!(run(&["measure", "--input", p(&dir.join("f.json")), "--a", "0.5", "--b", "0.5", "--output", p(&m)]), 0);
    let pair = WindowPair::rectangular(grid, 0.5).unwrap();
    assert_eq!(load_measurements(&m).unwrap(), lattice_measurements(&f, &pair, 0.5, None).unwrap());
}
