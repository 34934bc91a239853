//! Assembly of local classes into a full signal.
//!
//! Each lattice node contributes its segment in one of two orientations (direct or
//! conjugate-reflected about the node). A depth-first search over orientations keeps every
//! assignment whose segments agree on all overlaps up to one phase per connected run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local::{normalize_phase, recover_local, LocalClass, ACCEPT_TOL};
use crate::signal::{norm, phase_align, GridSpec, Signal, C64};
use crate::stft::{measure, FrequencyGrid, MeasurementSet, NodeMode, TimeNodes};
use crate::window::WindowPair;

pub const COND_MAX: f64 = 1e6;
pub const BRANCH_LIMIT: usize = 4096;
/// Relative residual below which two segments agree on an overlap.
const LINK_TOL: f64 = 1e-6;
/// Energy fraction below which an overlap counts as dead.
const DEAD_TOL: f64 = 1e-9;
const DISTINCT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambiguity {
    PhaseOnly,
    PhaseOrReflection,
    ExponentialFamily,
}

impl Ambiguity {
    pub fn name(self) -> &'static str {
        match self {
            Ambiguity::PhaseOnly => "phase_only",
            Ambiguity::PhaseOrReflection => "phase_or_reflection",
            Ambiguity::ExponentialFamily => "exponential_family",
        }
    }

    pub fn is_resolved(self) -> bool {
        self != Ambiguity::PhaseOrReflection
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionReport {
    pub signal: Signal,
    pub ambiguity: Ambiguity,
    pub anchor_used: bool,
    pub node_phases: Vec<C64>,
    /// Relative sup deviation between the measurements of `signal` and the input.
    pub residual: f64,
    /// Further signals consistent with the data when the ambiguity is unresolved.
    pub alternatives: Vec<Signal>,
    /// Relative cell range `[lo, hi)` determined by the node set.
    pub coverage: (i64, i64),
    pub notes: Vec<String>,
}

/// One consistent orientation assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub signal: Signal,
    pub node_phases: Vec<C64>,
    pub reflected: Vec<bool>,
    /// Lattice index of the first node starting a second nonzero component.
    pub break_at: Option<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assembly {
    pub branches: Vec<Branch>,
    pub coverage: (i64, i64),
}

struct NodeOptions {
    m: i64,
    start: i64,
    options: Vec<(Vec<C64>, bool)>,
}

#[derive(Clone)]
struct State {
    values: Vec<C64>,
    assigned: Vec<bool>,
    comp: Vec<usize>,
    node_comp: Vec<usize>,
    phases: Vec<C64>,
    reflected: Vec<bool>,
    live: Vec<bool>,
    break_at: Option<i64>,
}

/// Aligns consecutive lattice classes into every consistent full signal.
pub fn align_overlaps(classes: &[LocalClass], pair: &WindowPair, a: f64) -> Result<Assembly> {
    let grid = pair.grid;
    if a > grid.half_support * (1.0 + 1e-12) {
        return Err(Error::WideStep { a, b: grid.half_support });
    }
    let cond = pair.condition();
    if cond > COND_MAX {
        return Err(Error::IllConditioned { cond, limit: COND_MAX });
    }
    if classes.is_empty() {
        return Err(Error::InvalidNodes("no lattice nodes".into()));
    }
    let half = grid.cells as i64 / 2;
    let mut nodes = Vec::with_capacity(classes.len());
    for (i, c) in classes.iter().enumerate() {
        let m = crate::signal::snap(c.node / a)
            .ok_or_else(|| Error::InvalidNodes(format!("node {} is not a multiple of a = {a}", c.node)))?;
        if i > 0 && m != nodes.last().map_or(m, |n: &NodeOptions| n.m + 1) {
            return Err(Error::InvalidNodes("lattice nodes must be consecutive".into()));
        }
        let start = grid.require_edge(c.node)? - half;
        let divide = |h: &[C64]| -> Vec<C64> { h.iter().zip(&pair.phi).map(|(v, p)| v / p.conj()).collect() };
        let options = if c.is_zero() {
            vec![(vec![C64::new(0.0, 0.0); grid.cells], false)]
        } else if c.is_self_reflective() {
            vec![(divide(&c.representative), false)]
        } else {
            vec![(divide(&c.representative), false), (divide(&c.mate()), true)]
        };
        nodes.push(NodeOptions { m, start, options });
    }
    let lo = nodes[0].start;
    let hi = nodes.last().expect("nonempty").start + grid.cells as i64;
    let scale = nodes.iter().flat_map(|n| n.options.iter().map(|o| norm(&o.0))).fold(0.0, f64::max);
    let span = (hi - lo) as usize;
    let init = State {
        values: vec![C64::new(0.0, 0.0); span],
        assigned: vec![false; span],
        comp: vec![usize::MAX; span],
        node_comp: Vec::new(),
        phases: Vec::new(),
        reflected: Vec::new(),
        live: Vec::new(),
        break_at: None,
    };
    let mut finished = Vec::new();
    let mut visits = 0usize;
    let ctx = Search { nodes: &nodes, lo, dead: DEAD_TOL * scale, grid: &grid };
    ctx.descend(init, 0, &mut finished, &mut visits)?;
    let branches = finished
        .into_iter()
        .map(|s| {
            let samples = (0..grid.horizon)
                .map(|i| {
                    let k = grid.cell_of_index(i);
                    if k >= lo && k < hi {
                        s.values[(k - lo) as usize]
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect();
            Branch {
                signal: Signal { grid, samples },
                node_phases: s.phases,
                reflected: s.reflected,
                break_at: s.break_at,
            }
        })
        .collect();
    let (hlo, hhi) = grid.cell_range();
    Ok(Assembly { branches, coverage: (lo.max(hlo), hi.min(hhi)) })
}

struct Search<'a> {
    nodes: &'a [NodeOptions],
    lo: i64,
    dead: f64,
    grid: &'a GridSpec,
}

impl Search<'_> {
    fn descend(&self, state: State, depth: usize, out: &mut Vec<State>, visits: &mut usize) -> Result<()> {
        *visits += 1;
        if *visits > BRANCH_LIMIT * 16 || out.len() > BRANCH_LIMIT {
            return Err(Error::BranchLimit(BRANCH_LIMIT));
        }
        if depth == self.nodes.len() {
            if self.outside_horizon_vanishes(&state) {
                let mut state = state;
                if state.live_components() <= 1 {
                    state.break_at = None;
                }
                out.push(state);
            }
            return Ok(());
        }
        let node = &self.nodes[depth];
        for (seg, reflected) in &node.options {
            if let Some(next) = self.place(&state, node, seg, *reflected) {
                self.descend(next, depth + 1, out, visits)?;
            }
        }
        Ok(())
    }

    fn place(&self, state: &State, node: &NodeOptions, seg: &[C64], reflected: bool) -> Option<State> {
        let base = (node.start - self.lo) as usize;
        let mut comps: Vec<usize> =
            (0..seg.len()).filter(|&j| state.assigned[base + j]).map(|j| state.comp[base + j]).collect();
        comps.sort_unstable();
        comps.dedup();
        let mut links: Vec<(usize, C64)> = Vec::new();
        for &c in &comps {
            let idx: Vec<usize> =
                (0..seg.len()).filter(|&j| state.assigned[base + j] && state.comp[base + j] == c).collect();
            let u: Vec<C64> = idx.iter().map(|&j| state.values[base + j]).collect();
            let v: Vec<C64> = idx.iter().map(|&j| seg[j]).collect();
            let (nu, nv) = (norm(&u), norm(&v));
            match (nu <= self.dead, nv <= self.dead) {
                (true, true) => continue,
                (false, false) => {
                    let (lambda, res) = phase_align(&u, &v);
                    if res > LINK_TOL {
                        return None;
                    }
                    links.push((c, lambda));
                }
                _ => return None,
            }
        }
        let mut next = state.clone();
        let seg_live = norm(seg) > self.dead;
        let (comp, lambda) = match links.first() {
            Some(&(c, l)) => (c, l),
            None => {
                let id = next.live.len();
                next.live.push(false);
                (id, C64::new(1.0, 0.0))
            }
        };
        for &(c, l) in links.iter().skip(1) {
            let rot = lambda / l;
            for k in 0..next.values.len() {
                if next.assigned[k] && next.comp[k] == c {
                    next.values[k] *= rot;
                    next.comp[k] = comp;
                }
            }
            for (i, nc) in next.node_comp.iter_mut().enumerate() {
                if *nc == c {
                    next.phases[i] *= rot;
                    *nc = comp;
                }
            }
            next.live[comp] |= next.live[c];
            next.live[c] = false;
        }
        if seg_live && links.is_empty() && next.live.iter().any(|&l| l) && next.break_at.is_none() {
            next.break_at = Some(node.m);
        }
        next.live[comp] |= seg_live;
        for (j, v) in seg.iter().enumerate() {
            if !next.assigned[base + j] {
                next.values[base + j] = lambda * v;
                next.assigned[base + j] = true;
                next.comp[base + j] = comp;
            }
        }
        next.node_comp.push(comp);
        next.phases.push(lambda);
        next.reflected.push(reflected);
        Some(next)
    }

    fn outside_horizon_vanishes(&self, state: &State) -> bool {
        let (hlo, hhi) = self.grid.cell_range();
        state
            .values
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let cell = self.lo + *k as i64;
                cell < hlo || cell >= hhi
            })
            .all(|(_, v)| v.norm() <= self.dead)
    }
}

impl State {
    fn live_components(&self) -> usize {
        self.live.iter().filter(|&&l| l).count()
    }
}

/// Relative sup deviation between the measurements of `f` and `ms`.
pub fn measurement_residual(f: &Signal, ms: &MeasurementSet) -> Result<f64> {
    let pred = measure(f, &ms.pair, &ms.nodes, &ms.freqs)?;
    let scale = ms.max_value();
    let dev = ms
        .phi
        .iter()
        .chain(&ms.psi)
        .zip(pred.phi.iter().chain(&pred.psi))
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    Ok(if scale > 0.0 { dev / scale } else { dev })
}

fn lattice_only(ms: &MeasurementSet) -> MeasurementSet {
    let keep = ms.nodes.lattice_len();
    let mut nodes = ms.nodes.clone();
    nodes.times.truncate(keep);
    nodes.anchor = None;
    nodes.mode = NodeMode::Lattice;
    MeasurementSet {
        pair: ms.pair.clone(),
        nodes,
        freqs: ms.freqs.clone(),
        phi: ms.phi[..keep].to_vec(),
        psi: ms.psi[..keep].to_vec(),
    }
}

/// Rotates `f` and its node phases so the first nonzero node has phase one.
fn fix_phase(mut signal: Signal, mut phases: Vec<C64>, classes: &[LocalClass]) -> (Signal, Vec<C64>) {
    if let Some(i) = classes.iter().position(|c| !c.is_zero()) {
        let rot = phases[i].conj();
        signal = signal.scaled(rot);
        for p in phases.iter_mut() {
            *p *= rot;
        }
    }
    (signal, phases)
}

/// Picks among the assembled branches using finite support and, when present, the anchor node.
pub fn resolve_reflection(
    assembly: Assembly,
    ms: &MeasurementSet,
    classes: &[LocalClass],
) -> Result<ReconstructionReport> {
    if let Some(b) = assembly.branches.iter().find(|b| b.break_at.is_some()) {
        return Err(Error::PropagationBroken { node: b.break_at.expect("break") });
    }
    if assembly.branches.is_empty() {
        return Err(Error::Inconsistent("no orientation assignment agrees on every overlap".into()));
    }
    let lattice = lattice_only(ms);
    let mut distinct: Vec<Branch> = Vec::new();
    for b in assembly.branches {
        if measurement_residual(&b.signal, &lattice)? > ACCEPT_TOL {
            continue;
        }
        if !distinct.iter().any(|d| phase_align(&d.signal.samples, &b.signal.samples).1 <= DISTINCT_TOL) {
            distinct.push(b);
        }
    }
    if distinct.is_empty() {
        return Err(Error::Inconsistent("assembled signals do not reproduce the lattice data".into()));
    }
    let mut notes = Vec::new();
    let mut anchor_used = false;
    if distinct.len() > 1 {
        if let Some(t0) = ms.nodes.anchor {
            anchor_used = true;
            let mut kept = Vec::new();
            for b in distinct {
                if measurement_residual(&b.signal, ms)? <= ACCEPT_TOL {
                    kept.push(b);
                }
            }
            if kept.is_empty() {
                return Err(Error::Inconsistent(format!("no assembled branch matches the anchor at t0 = {t0}")));
            }
            if kept.len() > 1 {
                notes.push(format!("anchor t0 = {t0} is matched by {} inequivalent branches", kept.len()));
            }
            distinct = kept;
        } else {
            notes.push(format!(
                "{} inequivalent branches match every lattice node; no anchor available",
                distinct.len()
            ));
        }
    }
    let ambiguity = if distinct.len() == 1 { Ambiguity::PhaseOnly } else { Ambiguity::PhaseOrReflection };
    let mut it = distinct.into_iter();
    let first = it.next().expect("nonempty");
    let (signal, node_phases) = fix_phase(first.signal, first.node_phases, classes);
    let alternatives = it.map(|b| fix_phase(b.signal, b.node_phases, classes).0).collect();
    let (hlo, hhi) = ms.pair.grid.cell_range();
    if assembly.coverage != (hlo, hhi) {
        notes.push(format!(
            "cells [{}, {}) are determined; the rest of the horizon is unobserved",
            assembly.coverage.0, assembly.coverage.1
        ));
    }
    let residual = measurement_residual(&signal, ms)?;
    Ok(ReconstructionReport {
        signal,
        ambiguity,
        anchor_used,
        node_phases,
        residual,
        alternatives,
        coverage: assembly.coverage,
        notes,
    })
}

fn check_critical(ms: &MeasurementSet, pair: &WindowPair) -> Result<()> {
    if !pair.grid.compatible(&ms.pair.grid) || pair.phi != ms.pair.phi || pair.b != ms.pair.b {
        return Err(Error::GridMismatch("measurement set was taken with a different window pair".into()));
    }
    if !matches!(ms.freqs, FrequencyGrid::Critical { n } if n == pair.grid.cells) {
        return Err(Error::InvalidFrequencies("reconstruction needs the critical grid with N = L".into()));
    }
    Ok(())
}

/// Full pipeline on lattice (optionally anchored) measurements.
pub fn reconstruct(ms: &MeasurementSet, pair: &WindowPair) -> Result<ReconstructionReport> {
    check_critical(ms, pair)?;
    let a = match (ms.nodes.mode, ms.nodes.a) {
        (NodeMode::Lattice | NodeMode::LatticePlusAnchor, Some(a)) => a,
        _ => return Err(Error::InvalidNodes("reconstruction needs lattice nodes".into())),
    };
    if ms.nodes.is_wide(&pair.grid) {
        return Err(Error::WideStep { a, b: pair.grid.half_support });
    }
    let classes =
        (0..ms.nodes.lattice_len()).into_par_iter().map(|i| recover_local(ms, pair, i)).collect::<Result<Vec<_>>>()?;
    let assembly = align_overlaps(&classes, pair, a)?;
    resolve_reflection(assembly, ms, &classes)
}

/// Trigonometric polynomials of degree at most `degree` with period `period`,
/// optionally twisted by the quasi-period phase `mu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicFamily {
    pub period: f64,
    pub degree: usize,
    pub mu: Option<C64>,
}

/// Fourier coefficients of one period of `f(x) e^{i theta x / T}` with `mu = e^{i theta}`,
/// indexed `k` in `[-(P-1)/2, P/2]` (stored from the lowest index).
pub fn period_coefficients(f: &Signal, start: i64, cells: usize, mu: C64) -> Vec<(i64, C64)> {
    let p = cells as i64;
    let grid = f.grid;
    let period = cells as f64 * grid.delta();
    let theta = mu.arg();
    let lo = -(p - 1) / 2;
    (lo..lo + p)
        .map(|k| {
            let s: C64 = (0..p)
                .map(|s| {
                    let cell = start + s;
                    let x = grid.midpoint(cell);
                    f.at_cell(cell)
                        * C64::from_polar(1.0, theta * x / period - std::f64::consts::TAU * k as f64 * x / period)
                })
                .sum();
            (k, s / p as f64)
        })
        .collect()
}

/// Uniqueness verdict on two-line measurements of a periodic or quasi-periodic signal.
pub fn periodic_verdict(
    ms: &MeasurementSet,
    pair: &WindowPair,
    family: &PeriodicFamily,
) -> Result<ReconstructionReport> {
    check_critical(ms, pair)?;
    if ms.nodes.len() != 2 {
        return Err(Error::InvalidNodes("periodic verdict needs exactly two lines".into()));
    }
    let grid = pair.grid;
    let p = match grid.edge_of(family.period) {
        Some(p) if p > 0 => p as usize,
        _ => return Err(Error::InvalidPeriodic(format!("T = {} is not a grid multiple", family.period))),
    };
    if p > grid.cells {
        return Err(Error::InvalidPeriodic(format!("period of {p} cells exceeds the window ({} cells)", grid.cells)));
    }
    if 2 * family.degree + 1 > p {
        return Err(Error::InvalidPeriodic(format!(
            "degree {} is not identifiable from {p} cells per period",
            family.degree
        )));
    }
    let (t0, t1) = (ms.nodes.times[0], ms.nodes.times[1]);
    let (e0, e1) = (grid.require_edge(t0)?, grid.require_edge(t1)?);
    let c0 = recover_local(ms, pair, 0)?;
    let c1 = recover_local(ms, pair, 1)?;
    let full = (grid.cell_range().0, grid.cell_range().1);
    if c0.is_zero() {
        if !c1.is_zero() {
            return Err(Error::Inconsistent("a periodic signal cannot vanish on one line only".into()));
        }
        return Ok(ReconstructionReport {
            signal: Signal::zeros(grid),
            ambiguity: Ambiguity::PhaseOnly,
            anchor_used: false,
            node_phases: vec![C64::new(1.0, 0.0); 2],
            residual: 0.0,
            alternatives: Vec::new(),
            coverage: full,
            notes: Vec::new(),
        });
    }
    let half = grid.cells as i64 / 2;
    let start = e0 - half;
    let mut orientations = vec![c0.representative.clone()];
    if !c0.is_self_reflective() {
        orientations.push(c0.mate());
    }
    let mut survivors: Vec<(Signal, C64)> = Vec::new();
    let mut notes = Vec::new();
    for h in orientations {
        let seg: Vec<C64> = h.iter().zip(&pair.phi).map(|(v, w)| v / w.conj()).collect();
        let mu = match family.mu {
            Some(mu) => mu,
            None if grid.cells > p => {
                let (mu, res) = phase_align(&seg[..grid.cells - p], &seg[p..]);
                if res > LINK_TOL {
                    continue;
                }
                mu
            }
            None => return Err(Error::InvalidPeriodic("quasi-period phase is not observable; supply mu".into())),
        };
        if grid.cells > p {
            let shifted: Vec<C64> = seg[p..].iter().map(|v| v * mu).collect();
            if phase_align(&seg[..grid.cells - p], &shifted).1 > LINK_TOL {
                continue;
            }
        }
        let samples = (0..grid.horizon)
            .map(|i| {
                let off = grid.cell_of_index(i) - start;
                let r = off.div_euclid(p as i64);
                seg[off.rem_euclid(p as i64) as usize] * mu.conj().powi(r as i32)
            })
            .collect();
        let cand = Signal { grid, samples };
        let coeffs = period_coefficients(&cand, start, p, mu);
        let total: f64 = coeffs.iter().map(|(_, c)| c.norm_sqr()).sum();
        let outside: f64 =
            coeffs.iter().filter(|(k, _)| k.unsigned_abs() as usize > family.degree).map(|(_, c)| c.norm_sqr()).sum();
        if outside > 1e-18 * total.max(f64::MIN_POSITIVE) {
            continue;
        }
        if measurement_residual(&cand, ms)? > ACCEPT_TOL {
            continue;
        }
        if !survivors.iter().any(|(s, _)| phase_align(&s.samples, &cand.samples).1 <= DISTINCT_TOL) {
            survivors.push((cand, mu));
        }
    }
    if survivors.is_empty() {
        return Err(Error::Inconsistent(
            "no orientation at the first line extends to a family member matching both lines".into(),
        ));
    }
    let (signal, mu) = survivors[0].clone();
    let coeffs = period_coefficients(&signal, start, p, mu);
    let scale = coeffs.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    let active = coeffs.iter().filter(|(_, c)| c.norm() > 1e-9 * scale).count();
    let shift = 2 * (e1 - e0);
    let q = p as i64 / gcd(shift.abs(), p as i64);
    let ambiguity = if survivors.len() > 1 {
        notes.push(format!(
            "offset ratio 2(t1 - t0)/T = {}/{q}; the conjugate-coefficient mate matches both lines",
            shift / gcd(shift.abs(), p as i64)
        ));
        Ambiguity::PhaseOrReflection
    } else if active == 1 {
        Ambiguity::ExponentialFamily
    } else {
        Ambiguity::PhaseOnly
    };
    if q as usize > 2 * family.degree {
        notes.push(format!("offset denominator {q} exceeds twice the family degree"));
    }
    let mut seg1: Vec<C64> = crate::stft::windowed_segment(&signal, pair, t1)?;
    normalize_phase(&mut seg1);
    let l1 = phase_align(&seg1, &c1.representative);
    let l1b = phase_align(&seg1, &c1.mate());
    let lambda1 = if l1.1 <= l1b.1 { l1.0 } else { l1b.0 };
    let residual = measurement_residual(&signal, ms)?;
    Ok(ReconstructionReport {
        signal,
        ambiguity,
        anchor_used: false,
        node_phases: vec![C64::new(1.0, 0.0), lambda1],
        residual,
        alternatives: survivors.into_iter().skip(1).map(|(s, _)| s).collect(),
        coverage: full,
        notes,
    })
}

pub fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Measures `f` on a lattice with step `a` covering the horizon, plus an optional anchor.
pub fn lattice_measurements(f: &Signal, pair: &WindowPair, a: f64, anchor: Option<f64>) -> Result<MeasurementSet> {
    let mut nodes = TimeNodes::lattice(&f.grid, a)?;
    if let Some(t0) = anchor {
        nodes = nodes.with_anchor(t0)?;
    }
    measure(f, pair, &nodes, &FrequencyGrid::critical(&f.grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{conj_reflect, global_phase_align, random_nonseparable, GridSpec};

    fn setup(b: f64) -> (GridSpec, WindowPair) {
        let g = GridSpec::centered(1.0, 8, 64).unwrap();
        (g, WindowPair::rectangular(g, b).unwrap())
    }

    #[test]
    fn roundtrip_random_signal() {
        let (g, w) = setup(0.25);
        let f = random_nonseparable(g, 30, 1.0, 7).unwrap();
        let ms = lattice_measurements(&f, &w, 1.0, None).unwrap();
        let r = reconstruct(&ms, &w).unwrap();
        assert_eq!(r.ambiguity, Ambiguity::PhaseOnly);
        assert!(global_phase_align(&f, &r.signal).unwrap().residual < 1e-8);
        assert!(r.residual < 1e-8);
        for p in &r.node_phases {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_signal_reconstructs_to_zero() {
        let (g, w) = setup(0.5);
        let ms = lattice_measurements(&Signal::zeros(g), &w, 0.5, None).unwrap();
        let r = reconstruct(&ms, &w).unwrap();
        assert_eq!(r.signal, Signal::zeros(g));
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn wide_step_refused() {
        let (g, w) = setup(0.25);
        let f = random_nonseparable(g, 20, 0.5, 1).unwrap();
        let ms = lattice_measurements(&f, &w, 1.5, None).unwrap();
        assert!(matches!(reconstruct(&ms, &w), Err(Error::WideStep { .. })));
    }

    #[test]
    fn reflected_signal_reconstructs_too() {
        let (g, w) = setup(0.5);
        let f = random_nonseparable(g, 24, 1.5, 3).unwrap();
        let r0 = conj_reflect(&f, 0.25).unwrap();
        let ms = lattice_measurements(&r0, &w, 0.5, None).unwrap();
        let r = reconstruct(&ms, &w).unwrap();
        assert!(global_phase_align(&r0, &r.signal).unwrap().residual < 1e-8);
    }
}
