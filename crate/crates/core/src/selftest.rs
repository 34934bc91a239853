//! Acceptance suite shared by the integration test and the `selftest` subcommand.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forge::{forge_default, forge_separable, forge_wide_step, Claim, ForgedPair};
use crate::io::step_profile;
use crate::local::{
    autocorrelation_from_magnitudes, class_distance, recover_segment, Autocorrelation, SegmentGeometry,
};
use crate::signal::{phase_align, random_nonseparable, GridSpec, Signal, C64};
use crate::stft::{check_difference_identity, measure, stft_value, FrequencyGrid, TimeNodes};
use crate::stitch::{lattice_measurements, periodic_verdict, reconstruct, PeriodicFamily};
use crate::verify::{
    is_conjugate_coefficient_mate, matches_wide_step, measurements_equal, pipeline_agreement, uniqueness_oracle,
    AlphabetFamily, Equivalence, OracleConfig, OracleReport, SignalFamily, TrigFamily,
};
use crate::window::{WindowKind, WindowPair};

pub const MEASUREMENT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{verdict}] {:>2} {}: {} ({:.2} s)", self.id, self.name, self.detail, self.seconds)
    }
}

type Check = fn() -> Result<(bool, String)>;

pub const CRITERIA: [(&str, Check); 10] = [
    ("roundtrip", roundtrip),
    ("sharpness of the lattice step", wide_step_sharpness),
    ("sharpness of nonseparability", separable_sharpness),
    ("difference identity", difference_identity),
    ("local dichotomy", local_dichotomy),
    ("autocorrelation oracle", autocorrelation_oracle),
    ("two-line periodic scan", periodic_scan),
    ("quasi-periodic counterexample", quasiperiodic_counterexample),
    ("lattice insufficiency", lattice_insufficiency),
    ("oracle and pipeline agree", oracle_pipeline_consistency),
];

pub fn run_criterion(id: usize) -> CriterionOutcome {
    let (name, check) = CRITERIA[id - 1];
    let started = Instant::now();
    let (passed, detail) = match check() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionOutcome { id, name, passed, detail, seconds: started.elapsed().as_secs_f64() }
}

pub fn run_all() -> Vec<CriterionOutcome> {
    (1..=CRITERIA.len()).map(run_criterion).collect()
}

fn grid(horizon: usize) -> Result<GridSpec> {
    GridSpec::centered(1.0, 8, horizon)
}

fn max_deviation(f: &Signal, g: &Signal, pair: &WindowPair, nodes: &TimeNodes) -> Result<f64> {
    let freqs = FrequencyGrid::critical(&pair.grid);
    Ok(measurements_equal(&measure(f, pair, nodes, &freqs)?, &measure(g, pair, nodes, &freqs)?, MEASUREMENT_TOL)?.1)
}

fn forged_ok(fp: &ForgedPair) -> Result<(bool, f64)> {
    let dev = max_deviation(&fp.f, &fp.g, &fp.pair, &fp.nodes)?;
    Ok((dev <= MEASUREMENT_TOL && fp.min_distance >= 0.1, dev))
}

/// 200 random signals, each under every `(a, b)` configuration.
fn roundtrip() -> Result<(bool, String)> {
    let grid = grid(64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let configs = [(1.0, 0.25), (1.0, 0.5), (0.5, 0.25), (0.5, 0.5)];
    let pairs: Vec<WindowPair> =
        configs.iter().map(|&(_, b)| WindowPair::rectangular(grid, b)).collect::<Result<_>>()?;
    for s in 0..200u64 {
        let support = rng.gen_range(8..=48);
        let f = random_nonseparable(grid, support, 1.0, 1000 + s)?;
        for (&(a, _), pair) in configs.iter().zip(&pairs) {
            let residual = lattice_measurements(&f, pair, a, None)
                .and_then(|ms| reconstruct(&ms, pair))
                .map(|r| phase_align(&f.samples, &r.signal.samples).1);
            match residual {
                Ok(r) if r <= 1e-8 => worst = worst.max(r),
                Ok(r) => failures.push(format!("seed {s} a={a} b={}: residual {r:.2e}", pair.b)),
                Err(e) => failures.push(format!("seed {s} a={a} b={}: {e}", pair.b)),
            }
        }
    }
    let detail = format!("800 reconstructions, worst residual {worst:.2e}, {} failures", failures.len());
    Ok((failures.is_empty(), detail + &first_failure(&failures)))
}

fn first_failure(failures: &[String]) -> String {
    failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
}

fn unit_alphabet() -> Vec<C64> {
    vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0)]
}

fn five_levels() -> Vec<C64> {
    vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)]
}

/// Small grid with `L = 4` used by the exhaustive scans.
fn small_pair(horizon: usize) -> Result<WindowPair> {
    WindowPair::rectangular(GridSpec::centered(1.0, 4, horizon)?, 0.25)
}

fn wide_step_sharpness() -> Result<(bool, String)> {
    let pair = WindowPair::rectangular(grid(64)?, 0.25)?;
    let mut ok = true;
    let mut worst_dev = 0.0f64;
    let mut min_dist = f64::INFINITY;
    for seed in 0..5 {
        let fp = forge_wide_step(&pair, 1.5, seed)?;
        let (good, dev) = forged_ok(&fp)?;
        ok &= good;
        worst_dev = worst_dev.max(dev);
        min_dist = min_dist.min(fp.min_distance);
    }
    let small = small_pair(12)?;
    let fam = AlphabetFamily::new(small.grid, -2, 4, unit_alphabet(), vec![], Some(1.0), "length-4 blocks")?;
    let config = OracleConfig::lattice(&small, 1.5)?;
    let report = uniqueness_oracle(&config, &fam)?;
    let structured = report
        .violations
        .iter()
        .filter(|v| matches_wide_step(&fam.instance(v.f), &fam.instance(v.g), &config.nodes, 1.5))
        .count();
    ok &= !report.violations.is_empty() && structured == report.violations.len();
    Ok((
        ok,
        format!(
            "forged deviation {worst_dev:.1e}, distance >= {min_dist:.3}; scan at a = 1.5: {} violations, {structured} with the wide-step structure",
            report.violations.len()
        ),
    ))
}

fn separable_sharpness() -> Result<(bool, String)> {
    let pair = WindowPair::rectangular(grid(64)?, 0.25)?;
    let mut ok = true;
    let mut outcomes = Vec::new();
    for seed in 0..5 {
        let fp = forge_separable(&pair, 0.5, seed)?;
        ok &= forged_ok(&fp)?.0;
        let ms = measure(&fp.f, &pair, &fp.nodes, &FrequencyGrid::critical(&pair.grid))?;
        match reconstruct(&ms, &pair) {
            Err(Error::PropagationBroken { node }) => outcomes.push(format!("broken at node {node}")),
            Err(e) => {
                ok = false;
                outcomes.push(format!("unexpected error {e}"));
            }
            Ok(r) => {
                ok = false;
                outcomes.push(format!("silent {} result", r.ambiguity.name()));
            }
        }
    }
    outcomes.dedup();
    Ok((ok, format!("5 forged pairs equal and distinct; reconstruct: {}", outcomes.join(", "))))
}

fn difference_identity() -> Result<(bool, String)> {
    let grid = grid(64)?;
    let mut worst = 0.0f64;
    let mut evaluations = 0usize;
    for b in [0.25, 0.5] {
        let pair = WindowPair::rectangular(grid, b)?;
        for s in 0..25u64 {
            let f = random_nonseparable(grid, 24 + s as usize, 1.0, 500 + s)?;
            let nodes = TimeNodes::lattice(&grid, 1.0)?;
            for t in &nodes.times {
                for n in -8..8 {
                    worst = worst.max(check_difference_identity(&f, &pair, *t, n)?);
                    evaluations += 1;
                }
            }
        }
    }
    Ok((worst <= 1e-10, format!("{evaluations} evaluations over 50 signals, max defect {worst:.2e}")))
}

fn random_segment(rng: &mut ChaCha8Rng) -> Vec<C64> {
    let len = rng.gen_range(2..=10);
    let mut h: Vec<C64> =
        (0..len).map(|_| C64::from_polar(rng.gen_range(0.1..1.0), rng.gen_range(0.0..std::f64::consts::TAU))).collect();
    if len > 2 && rng.gen_bool(0.3) {
        let j = rng.gen_range(0..len);
        h[j] = C64::new(0.0, 0.0);
    }
    h
}

fn segment_geometry(len: usize, rng: &mut ChaCha8Rng) -> SegmentGeometry {
    let delta = 2.0 / len as f64;
    let b = if rng.gen_bool(0.5) { 0.25 } else { 0.5 };
    SegmentGeometry { len, delta, b }
}

fn local_dichotomy() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..500 {
        let h = random_segment(&mut rng);
        let geom = segment_geometry(h.len(), &mut rng);
        let (phi, psi) = geom.predict(&h);
        match recover_segment(&phi, &psi, &geom, 0.0, 0.0) {
            Ok(class) => {
                let d = class_distance(&class, &h);
                worst = worst.max(d);
                if d > 1e-6 {
                    failures.push(format!("segment {i}: class misses h by {d:.2e}"));
                }
            }
            Err(e) => failures.push(format!("segment {i}: {e}")),
        }
    }
    Ok((
        failures.is_empty(),
        format!("500 segments, survivors within {worst:.1e} of {{h, h*}}, {} failures", failures.len())
            + &first_failure(&failures),
    ))
}

fn autocorrelation_oracle() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let h = random_segment(&mut rng);
        let geom = segment_geometry(h.len(), &mut rng);
        let (phi, _) = geom.predict(&h);
        let from_mags = autocorrelation_from_magnitudes(&phi, h.len(), geom.delta)?;
        let direct = Autocorrelation::direct(&h);
        for (x, y) in from_mags.lags.iter().zip(&direct.lags) {
            worst = worst.max((x - y).norm());
        }
    }
    Ok((worst <= 1e-10, format!("500 segments, max lag deviation {worst:.2e}")))
}

/// Trig families on an `L = 8` grid: period 7 cells with offset 3 cells (ratio 6/7, beyond
/// what degree 3 can resonate with) and period 8 cells with offset 2 cells (ratio 1/2).
fn trig_setup(period_cells: usize, offset_cells: i64, alphabet: Vec<C64>) -> Result<(TrigFamily, OracleConfig)> {
    let grid = grid(32)?;
    let pair = WindowPair::rectangular(grid, 0.25)?;
    let d = grid.delta();
    let fam = TrigFamily::new(grid, period_cells as f64 * d, 3, alphabet, C64::new(1.0, 0.0), "trig polynomials")?;
    let config = OracleConfig {
        nodes: TimeNodes::two_lines(0.0, offset_cells as f64 * d)?,
        freqs: FrequencyGrid::critical(&grid),
        pair,
        equivalence: Equivalence::Phase,
    };
    Ok((fam, config))
}

fn periodic_scan() -> Result<(bool, String)> {
    let (fam, config) = trig_setup(7, 3, five_levels())?;
    let clean = uniqueness_oracle(&config, &fam)?;
    let (fam2, config2) = trig_setup(8, 2, five_levels())?;
    let rational = uniqueness_oracle(&config2, &fam2)?;
    let start = fam2.grid.cell_range().0;
    let matched = rational
        .violations
        .iter()
        .filter(|v| is_conjugate_coefficient_mate(&fam2.instance(v.f), &fam2.instance(v.g), start, 8))
        .count();
    let ok = clean.violations.is_empty() && !rational.violations.is_empty() && matched == rational.violations.len();
    Ok((
        ok,
        format!(
            "ratio 6/7: {} members, {} violations; ratio 1/2: {} violations, {matched} conjugate-coefficient mates",
            clean.instances,
            clean.violations.len(),
            rational.violations.len()
        ),
    ))
}

fn quasiperiodic_counterexample() -> Result<(bool, String)> {
    let fp = forge_default(Claim::QuasiperiodicFlip, 0)?;
    let (b, t, alpha) = (fp.params["B"], fp.params["T"], fp.params["alpha"]);
    let grid = fp.f.grid;
    let cells =
        |lo: f64, hi: f64| -> Result<Vec<i64>> { Ok((grid.require_edge(lo)?..grid.require_edge(hi)?).collect()) };
    let same = cells(-b, b)?.iter().all(|k| fp.f.at_cell(*k) == fp.g.at_cell(*k));
    let flipped = cells(alpha * t - b, alpha * t + b)?.iter().all(|k| fp.f.at_cell(*k) == -fp.g.at_cell(*k));
    let (equal, dev) = forged_ok(&fp)?;
    let hints = fp.plot.clone().ok_or_else(|| Error::ForgePrecondition("no plot hints".into()))?;
    let xs: Vec<f64> = step_profile(&fp.f, &fp.g, hints.range, &hints.marks)?.iter().map(|r| r.x).collect();
    let expected = [-b, b - t, -b + alpha * t, -b + t, b, -b + (alpha + 1.0) * t, -b + 2.0 * t, b + t];
    let on_grid = expected.iter().all(|x| grid.edge_of(*x).is_some());
    let breakpoints = xs == expected;
    Ok((
        same && flipped && equal && on_grid && breakpoints,
        format!("f = g near 0: {same}, f = -g near alpha T: {flipped}, deviation {dev:.1e}, breakpoints {xs:?}"),
    ))
}

fn lattice_insufficiency() -> Result<(bool, String)> {
    let fp = forge_default(Claim::RationalLattice, 0)?;
    let (lattice_equal, dev) = forged_ok(&fp)?;
    let a = fp.params["a"];
    let grid = fp.f.grid;
    let mut anchors: Vec<f64> = (-3..3).map(|j| (j as f64 + 0.5) * a).collect();
    anchors.push(TimeNodes::default_anchor(&grid, a));
    anchors.push(0.3 * a);
    let mut weakest = f64::INFINITY;
    let mut direct_ok = true;
    for t in &anchors {
        let d = max_deviation(&fp.f, &fp.g, &fp.pair, &TimeNodes::explicit(vec![*t])?)?;
        weakest = weakest.min(d);
        let omegas = FrequencyGrid::critical(&grid).omegas(&grid);
        let direct = omegas
            .iter()
            .map(|w| {
                let vf = stft_value(&fp.f, &fp.pair, WindowKind::Phi, *t, *w)?.norm();
                let vg = stft_value(&fp.g, &fp.pair, WindowKind::Phi, *t, *w)?.norm();
                Ok((vf - vg).abs())
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        direct_ok &= direct >= 1e-3;
    }
    Ok((
        lattice_equal && weakest >= 1e-3 && direct_ok,
        format!("lattice deviation {dev:.1e}; smallest anchor deviation {weakest:.3} over {} anchors", anchors.len()),
    ))
}

fn agreement_line(label: &str, report: &OracleReport, disagreements: usize, classes: usize, unique: usize) -> String {
    format!("{label}: {} members, {classes} classes ({unique} unique), {disagreements} disagreements", report.instances)
}

fn oracle_pipeline_consistency() -> Result<(bool, String)> {
    let mut lines = Vec::new();
    let mut ok = true;
    let small = small_pair(16)?;
    let lattice_pipeline = |a: f64| {
        let pair = small.clone();
        move |f: &Signal| lattice_measurements(f, &pair, a, None).and_then(|ms| reconstruct(&ms, &pair))
    };
    let families: Vec<(AlphabetFamily, f64)> = vec![
        (AlphabetFamily::new(small.grid, -2, 4, unit_alphabet(), vec![], Some(1.0), "blocks at a = B")?, 1.0),
        (AlphabetFamily::new(small.grid, -4, 6, five_levels(), vec![2, 3], None, "separable blocks")?, 1.0),
        (AlphabetFamily::new(small.grid, -3, 5, unit_alphabet(), vec![], None, "blocks at a = B/2")?, 0.5),
    ];
    for (fam, a) in &families {
        let report = uniqueness_oracle(&OracleConfig::lattice(&small, *a)?, fam)?;
        let agreement = pipeline_agreement(&report, fam, lattice_pipeline(*a));
        ok &= agreement.disagreements.is_empty();
        lines.push(
            agreement_line(
                &fam.describe(),
                &report,
                agreement.disagreements.len(),
                agreement.classes,
                agreement.unique_classes,
            ) + &first_failure(&agreement.disagreements),
        );
    }
    let conj_closed = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)];
    for (period, offset) in [(7, 3), (8, 2)] {
        let (fam, config) = trig_setup(period, offset, conj_closed.clone())?;
        let family = PeriodicFamily { period: fam.period, degree: fam.degree, mu: Some(fam.mu) };
        let pair = config.pair.clone();
        let nodes = config.nodes.clone();
        let report = uniqueness_oracle(&config, &fam)?;
        let agreement = pipeline_agreement(&report, &fam, |f| {
            measure(f, &pair, &nodes, &FrequencyGrid::critical(&pair.grid))
                .and_then(|ms| periodic_verdict(&ms, &pair, &family))
        });
        ok &= agreement.disagreements.is_empty();
        lines.push(
            agreement_line(
                &format!("trig period {period} cells, offset {offset}"),
                &report,
                agreement.disagreements.len(),
                agreement.classes,
                agreement.unique_classes,
            ) + &first_failure(&agreement.disagreements),
        );
    }
    Ok((ok, lines.join("; ")))
}
