//! Brute-force uniqueness oracles, and cross-checks of the pipeline against them.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::{
    conj_reflect, is_separable, make_periodic, norm, phase_align, GridSpec, PeriodicSpec, Signal, C64,
};
use crate::stft::{measure, windowed_segment, FrequencyGrid, MeasurementSet, TimeNodes};
use crate::stitch::{period_coefficients, ReconstructionReport};
use crate::window::{WindowKind, WindowPair};

pub const FAMILY_LIMIT: usize = 1_000_000;
pub const FINGERPRINT_QUANTUM: f64 = 1e-7;
const EQUIV_TOL: f64 = 1e-6;

/// Sup-norm comparison of two measurement sets over the same index set.
pub fn measurements_equal(m1: &MeasurementSet, m2: &MeasurementSet, tol: f64) -> Result<(bool, f64)> {
    if m1.nodes != m2.nodes || m1.freqs != m2.freqs || m1.phi.len() != m2.phi.len() {
        return Err(Error::InvalidNodes("measurement index sets differ".into()));
    }
    let mut dev = 0.0f64;
    for (a, b) in m1.phi.iter().chain(&m1.psi).zip(m2.phi.iter().chain(&m2.psi)) {
        if a.len() != b.len() {
            return Err(Error::InvalidNodes("measurement index sets differ".into()));
        }
        for (x, y) in a.iter().zip(b) {
            dev = dev.max((x - y).abs());
        }
    }
    Ok((dev <= tol, dev))
}

/// An enumerable set of signals on a common grid.
pub trait SignalFamily: Sync {
    fn describe(&self) -> String;
    fn len(&self) -> usize;
    fn instance(&self, i: usize) -> Signal;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Blocks of consecutive cells with values from a finite alphabet.
#[derive(Clone, Debug)]
pub struct AlphabetFamily {
    pub grid: GridSpec,
    pub start: i64,
    pub length: usize,
    pub alphabet: Vec<C64>,
    /// Offsets inside the block that are held at zero.
    pub fixed_zero: Vec<usize>,
    label: String,
    codes: Vec<usize>,
}

impl AlphabetFamily {
    /// Every block, optionally keeping only those not separable at `nonseparable_at`.
    pub fn new(
        grid: GridSpec,
        start: i64,
        length: usize,
        alphabet: Vec<C64>,
        fixed_zero: Vec<usize>,
        nonseparable_at: Option<f64>,
        label: &str,
    ) -> Result<Self> {
        let free = length - fixed_zero.iter().filter(|&&j| j < length).count();
        let count = (alphabet.len() as f64).powi(free as i32);
        if count > FAMILY_LIMIT as f64 {
            return Err(Error::FamilyTooLarge { count: count as usize, limit: FAMILY_LIMIT });
        }
        if grid.index_of_cell(start).is_none() || grid.index_of_cell(start + length as i64 - 1).is_none() {
            return Err(Error::InvalidGrid("alphabet block leaves the horizon".into()));
        }
        let mut fam = AlphabetFamily {
            grid,
            start,
            length,
            alphabet,
            fixed_zero,
            label: label.to_string(),
            codes: (0..count as usize).collect(),
        };
        if let Some(gap) = nonseparable_at {
            let codes = fam.codes.iter().copied().filter(|&c| !is_separable(&fam.build(c), gap, 0.0)).collect();
            fam.codes = codes;
        }
        Ok(fam)
    }

    fn build(&self, mut code: usize) -> Signal {
        let base = self.alphabet.len();
        let mut values = vec![C64::new(0.0, 0.0); self.length];
        for (j, v) in values.iter_mut().enumerate() {
            if self.fixed_zero.contains(&j) {
                continue;
            }
            *v = self.alphabet[code % base];
            code /= base;
        }
        Signal::from_cells(self.grid, self.start, &values).expect("block inside horizon")
    }
}

impl SignalFamily for AlphabetFamily {
    fn describe(&self) -> String {
        format!(
            "{}: {} cells from {} over {} symbols ({} members)",
            self.label,
            self.length,
            self.start,
            self.alphabet.len(),
            self.codes.len()
        )
    }

    fn len(&self) -> usize {
        self.codes.len()
    }

    fn instance(&self, i: usize) -> Signal {
        self.build(self.codes[i])
    }
}

/// Trigonometric polynomials `sum_{|k| <= degree} c_k e^{2 pi i k x / T}` with `c_k` from an alphabet.
#[derive(Clone, Debug)]
pub struct TrigFamily {
    pub grid: GridSpec,
    pub period: f64,
    pub degree: usize,
    pub alphabet: Vec<C64>,
    pub mu: C64,
    label: String,
}

impl TrigFamily {
    pub fn new(grid: GridSpec, period: f64, degree: usize, alphabet: Vec<C64>, mu: C64, label: &str) -> Result<Self> {
        let count = (alphabet.len() as f64).powi(2 * degree as i32 + 1);
        if count > FAMILY_LIMIT as f64 {
            return Err(Error::FamilyTooLarge { count: count as usize, limit: FAMILY_LIMIT });
        }
        let fam = TrigFamily { grid, period, degree, alphabet, mu, label: label.to_string() };
        fam.spec(0).cells(&grid)?;
        Ok(fam)
    }

    pub fn spec(&self, mut code: usize) -> PeriodicSpec {
        let base = self.alphabet.len();
        let q = self.degree as i64;
        let mut coefficients = std::collections::BTreeMap::new();
        for k in -q..=q {
            let c = self.alphabet[code % base];
            code /= base;
            if c.norm() > 0.0 {
                coefficients.insert(k, c);
            }
        }
        PeriodicSpec { period: self.period, mu: self.mu, coefficients }
    }
}

impl SignalFamily for TrigFamily {
    fn describe(&self) -> String {
        format!(
            "{}: degree <= {} with period {} over {} symbols ({} members)",
            self.label,
            self.degree,
            self.period,
            self.alphabet.len(),
            self.len()
        )
    }

    fn len(&self) -> usize {
        self.alphabet.len().pow(2 * self.degree as u32 + 1)
    }

    fn instance(&self, i: usize) -> Signal {
        make_periodic(&self.spec(i), self.grid).expect("validated period")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Equivalence {
    Phase,
    /// Phase, or phase after conjugate reflection about one of the centers.
    PhaseOrReflection(Vec<f64>),
}

impl Equivalence {
    pub fn distance(&self, f: &Signal, g: &Signal) -> f64 {
        let direct = phase_align(&f.samples, &g.samples).1;
        match self {
            Equivalence::Phase => direct,
            Equivalence::PhaseOrReflection(centers) => centers
                .iter()
                .filter_map(|c| conj_reflect(g, *c).ok())
                .map(|r| phase_align(&f.samples, &r.samples).1)
                .fold(direct, f64::min),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub pair: WindowPair,
    pub nodes: TimeNodes,
    pub freqs: FrequencyGrid,
    pub equivalence: Equivalence,
}

impl OracleConfig {
    pub fn lattice(pair: &WindowPair, a: f64) -> Result<Self> {
        Ok(OracleConfig {
            pair: pair.clone(),
            nodes: TimeNodes::lattice(&pair.grid, a)?,
            freqs: FrequencyGrid::critical(&pair.grid),
            equivalence: Equivalence::Phase,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub f: usize,
    pub g: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FingerprintClass {
    pub members: Vec<usize>,
    /// Members grouped by equivalence; one group means the class is unique.
    pub equivalence_classes: Vec<Vec<usize>>,
}

impl FingerprintClass {
    pub fn is_unique(&self) -> bool {
        self.equivalence_classes.len() == 1
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub family: String,
    pub instances: usize,
    pub fingerprint_classes: usize,
    pub ambiguous_classes: usize,
    #[serde(skip)]
    pub classes: Vec<FingerprintClass>,
    pub violations: Vec<Violation>,
    pub elapsed: Duration,
}

fn fingerprint(m: &MeasurementSet) -> Vec<i64> {
    m.phi.iter().chain(&m.psi).flatten().map(|v| (v / FINGERPRINT_QUANTUM).round() as i64).collect()
}

/// Groups the family by quantized measurements and reports inequivalent members sharing a group.
pub fn uniqueness_oracle(config: &OracleConfig, family: &dyn SignalFamily) -> Result<OracleReport> {
    let started = Instant::now();
    let n = family.len();
    if n > FAMILY_LIMIT {
        return Err(Error::FamilyTooLarge { count: n, limit: FAMILY_LIMIT });
    }
    let prints = (0..n)
        .into_par_iter()
        .map(|i| measure(&family.instance(i), &config.pair, &config.nodes, &config.freqs).map(|m| fingerprint(&m)))
        .collect::<Result<Vec<_>>>()?;
    let mut groups: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in prints.into_iter().enumerate() {
        groups.entry(p).or_default().push(i);
    }
    let mut members: Vec<Vec<usize>> = groups.into_values().collect();
    members.sort_by_key(|m| m[0]);
    let classes: Vec<FingerprintClass> = members
        .into_par_iter()
        .map(|members| {
            let mut reps: Vec<(Signal, Vec<usize>)> = Vec::new();
            for &i in &members {
                let f = family.instance(i);
                match reps.iter_mut().find(|(r, _)| config.equivalence.distance(r, &f) <= EQUIV_TOL) {
                    Some((_, v)) => v.push(i),
                    None => reps.push((f, vec![i])),
                }
            }
            FingerprintClass { members, equivalence_classes: reps.into_iter().map(|(_, v)| v).collect() }
        })
        .collect();
    let mut violations = Vec::new();
    for c in classes.iter().filter(|c| !c.is_unique()) {
        for x in 0..c.equivalence_classes.len() {
            for y in x + 1..c.equivalence_classes.len() {
                let (i, j) = (c.equivalence_classes[x][0], c.equivalence_classes[y][0]);
                let distance = config.equivalence.distance(&family.instance(i), &family.instance(j));
                violations.push(Violation { f: i, g: j, distance });
            }
        }
    }
    Ok(OracleReport {
        family: family.describe(),
        instances: n,
        fingerprint_classes: classes.len(),
        ambiguous_classes: classes.iter().filter(|c| !c.is_unique()).count(),
        classes,
        violations,
        elapsed: started.elapsed(),
    })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Agreement {
    pub classes: usize,
    pub unique_classes: usize,
    pub pipeline_successes: usize,
    pub disagreements: Vec<String>,
}

/// Runs `pipeline` on one member of every fingerprint class. Success means a resolved report
/// equivalent to that member; it must occur exactly on the classes the oracle marks unique.
pub fn pipeline_agreement<P>(report: &OracleReport, family: &dyn SignalFamily, pipeline: P) -> Agreement
where
    P: Fn(&Signal) -> Result<ReconstructionReport> + Sync,
{
    let outcomes: Vec<(bool, bool, usize, String)> = report
        .classes
        .par_iter()
        .map(|c| {
            let i = c.members[0];
            let f = family.instance(i);
            let (ok, why) = match pipeline(&f) {
                Ok(r) if r.ambiguity.is_resolved() => {
                    let d = phase_align(&f.samples, &r.signal.samples).1;
                    (d <= EQUIV_TOL, format!("resolved, distance {d:.2e}"))
                }
                Ok(r) => (false, format!("unresolved ({})", r.ambiguity.name())),
                Err(e) => (false, format!("error: {e}")),
            };
            (c.is_unique(), ok, i, why)
        })
        .collect();
    let mut agreement = Agreement { classes: outcomes.len(), ..Default::default() };
    for (unique, ok, i, why) in outcomes {
        agreement.unique_classes += usize::from(unique);
        agreement.pipeline_successes += usize::from(ok);
        if unique != ok {
            agreement.disagreements.push(format!("instance {i}: oracle unique = {unique}, pipeline {why}"));
        }
    }
    agreement
}

/// Checks at node `t`: equal node measurements iff the windowed segments agree up to phase,
/// directly or after conjugate reflection about `t`. Both sides are re-evaluated after
/// `trials` random global phases applied to `g`.
pub fn node_equivalence_check(f: &Signal, g: &Signal, pair: &WindowPair, t: f64, trials: usize) -> Result<bool> {
    let nodes = TimeNodes::explicit(vec![t])?;
    let freqs = FrequencyGrid::critical(&pair.grid);
    let sides = |g: &Signal| -> Result<(bool, bool)> {
        let mf = measure(f, pair, &nodes, &freqs)?;
        let mg = measure(g, pair, &nodes, &freqs)?;
        let scale = mf.max_value().max(mg.max_value()).max(1e-300);
        let equal = measurements_equal(&mf, &mg, 1e-10 * scale.max(1.0))?.0;
        let hf = windowed_segment(f, pair, t)?;
        let hg = windowed_segment(g, pair, t)?;
        let hr: Vec<C64> = hg.iter().rev().map(|z| z.conj()).collect();
        let same = phase_align(&hf, &hg).1 <= 1e-8 || phase_align(&hf, &hr).1 <= 1e-8;
        Ok((equal, same))
    };
    let (equal, same) = sides(g)?;
    let mut holds = equal == same;
    let mut rng = ChaCha8Rng::seed_from_u64(0x32);
    for _ in 0..trials {
        let rotated = g.scaled(C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)));
        let (e, s) = sides(&rotated)?;
        holds &= e == s && e == equal && s == same;
    }
    Ok(holds)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementLevel {
    pub step: f64,
    pub nodes: usize,
    pub equal: bool,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementReport {
    pub equivalent: bool,
    pub levels: Vec<RefinementLevel>,
    /// Coarsest level at which the data rule out `g` as an inequivalent mate.
    pub forced_at: Option<usize>,
}

/// Compares `f` and `g` on lattices of step `base_step / 2^l`, `l = 0..levels`, as a finite
/// surrogate for measurements at every real time.
pub fn semidiscrete_refinement_check(
    f: &Signal,
    g: &Signal,
    pair: &WindowPair,
    base_step: f64,
    levels: usize,
) -> Result<RefinementReport> {
    let equivalent = phase_align(&f.samples, &g.samples).1 <= EQUIV_TOL;
    let freqs = FrequencyGrid::critical(&pair.grid);
    let mut out = Vec::new();
    for l in 0..levels {
        let step = base_step / f64::from(1u32 << l);
        let nodes = match TimeNodes::lattice_inside(&pair.grid, step) {
            Ok(n) => n,
            Err(_) => break,
        };
        let (equal, deviation) =
            measurements_equal(&measure(f, pair, &nodes, &freqs)?, &measure(g, pair, &nodes, &freqs)?, 1e-10)?;
        out.push(RefinementLevel { step, nodes: nodes.len(), equal, deviation });
    }
    let forced_at = if equivalent { Some(0) } else { out.iter().position(|l| !l.equal) };
    Ok(RefinementReport { equivalent, levels: out, forced_at })
}

fn restricted_distance(u: &[C64], v: &[C64]) -> f64 {
    if norm(u) == 0.0 && norm(v) == 0.0 {
        0.0
    } else {
        phase_align(u, v).1
    }
}

/// Structure of a wide-lattice mate: for some node `t`, `g` matches the conjugate
/// reflection of `f` about `t` on the window at `t` and matches `f` (with its own phase)
/// off the strip `|x - t| < a - B`.
pub fn matches_wide_step(f: &Signal, g: &Signal, nodes: &TimeNodes, a: f64) -> bool {
    let grid = f.grid;
    let half = grid.cells as i64 / 2;
    let strip = match grid.edge_of(a - grid.half_support) {
        Some(s) if s > 0 => s,
        _ => return false,
    };
    let (lo, hi) = grid.cell_range();
    nodes.times.iter().filter_map(|t| grid.edge_of(*t)).any(|e| {
        let window: Vec<i64> = (e - half..e + half).collect();
        let fr: Vec<C64> = window.iter().map(|k| f.at_cell(2 * e - k - 1).conj()).collect();
        let gw: Vec<C64> = window.iter().map(|k| g.at_cell(*k)).collect();
        let outside: Vec<i64> = (lo..hi).filter(|k| *k < e - strip || *k >= e + strip).collect();
        let fo: Vec<C64> = outside.iter().map(|k| f.at_cell(*k)).collect();
        let go: Vec<C64> = outside.iter().map(|k| g.at_cell(*k)).collect();
        restricted_distance(&fr, &gw) <= EQUIV_TOL && restricted_distance(&fo, &go) <= EQUIV_TOL
    })
}

/// `g` is the conjugate-coefficient mate of `f`: its coefficients over one period starting
/// at cell `start` equal `lambda conj(f_k)` for a single unimodular `lambda`.
pub fn is_conjugate_coefficient_mate(f: &Signal, g: &Signal, start: i64, cells: usize) -> bool {
    let one = C64::new(1.0, 0.0);
    let cf: Vec<C64> = period_coefficients(f, start, cells, one).into_iter().map(|(_, c)| c.conj()).collect();
    let cg: Vec<C64> = period_coefficients(g, start, cells, one).into_iter().map(|(_, c)| c).collect();
    restricted_distance(&cf, &cg) <= EQUIV_TOL
}

/// Measurements of both windows at a single time.
pub fn node_magnitudes(f: &Signal, pair: &WindowPair, t: f64) -> Result<[Vec<f64>; 2]> {
    let m = measure(f, pair, &TimeNodes::explicit(vec![t])?, &FrequencyGrid::critical(&pair.grid))?;
    Ok([m.mags(WindowKind::Phi, 0).to_vec(), m.mags(WindowKind::Psi, 0).to_vec()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::{forge_default, Claim};
    use crate::signal::GridSpec;

    fn unit_alphabet() -> Vec<C64> {
        vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0)]
    }

    #[test]
    fn equality_of_identical_sets() {
        let fp = forge_default(Claim::SeparableGap, 1).unwrap();
        let freqs = FrequencyGrid::critical(&fp.pair.grid);
        let m = measure(&fp.f, &fp.pair, &fp.nodes, &freqs).unwrap();
        assert_eq!(measurements_equal(&m, &m, 0.0).unwrap(), (true, 0.0));
        let rotated = measure(&fp.f.scaled(C64::from_polar(1.0, 1.1)), &fp.pair, &fp.nodes, &freqs).unwrap();
        assert!(measurements_equal(&m, &rotated, 1e-12).unwrap().0);
        let other = measure(&fp.f, &fp.pair, &TimeNodes::explicit(vec![0.0]).unwrap(), &freqs).unwrap();
        assert!(measurements_equal(&m, &other, 1.0).is_err());
    }

    #[test]
    fn small_alphabet_family_is_unique() {
        let grid = GridSpec::new(1.0, 4, 6, 12).unwrap();
        let pair = WindowPair::rectangular(grid, 0.25).unwrap();
        let fam = AlphabetFamily::new(grid, -2, 4, unit_alphabet(), vec![], Some(1.0), "block").unwrap();
        let report = uniqueness_oracle(&OracleConfig::lattice(&pair, 1.0).unwrap(), &fam).unwrap();
        assert!(report.violations.is_empty());
        assert!(report.instances < 256);
    }

    #[test]
    fn node_equivalence_directions() {
        let fp = forge_default(Claim::SeparableGap, 4).unwrap();
        let f = &fp.f;
        let t = -1.5;
        let pair = &fp.pair;
        assert!(node_equivalence_check(f, &f.scaled(C64::from_polar(1.0, 0.4)), pair, t, 3).unwrap());
        let r = conj_reflect(f, t).unwrap();
        assert!(node_equivalence_check(f, &r, pair, t, 3).unwrap());
        let mut bumped = f.clone();
        let i = f.grid.index_of_cell(f.grid.edge_of(t).unwrap() + 1).unwrap();
        bumped.samples[i] += C64::new(0.5, 0.2);
        assert!(node_equivalence_check(f, &bumped, pair, t, 3).unwrap());
        let mf = node_magnitudes(f, pair, t).unwrap();
        let mb = node_magnitudes(&bumped, pair, t).unwrap();
        assert!(mf[0].iter().zip(&mb[0]).any(|(a, b)| (a - b).abs() > 1e-6));
    }

    #[test]
    fn refinement_levels() {
        let fp = forge_default(Claim::RationalLattice, 0).unwrap();
        let r = semidiscrete_refinement_check(&fp.f, &fp.g, &fp.pair, 0.5, 2).unwrap();
        assert_eq!(r.forced_at, Some(1));
        assert!(r.levels[0].equal);
        let same = semidiscrete_refinement_check(&fp.f, &fp.f.scaled(C64::i()), &fp.pair, 0.5, 2).unwrap();
        assert_eq!(same.forced_at, Some(0));
        let sep = forge_default(Claim::SeparableGap, 2).unwrap();
        let r = semidiscrete_refinement_check(&sep.f, &sep.g, &sep.pair, 0.5, 3).unwrap();
        assert!(!r.equivalent);
        assert!(r.levels[0].equal);
        assert_eq!(r.forced_at, Some(1));
    }
}
