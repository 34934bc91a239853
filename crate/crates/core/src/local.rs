//! Recovery of one windowed segment from its `phi` and `psi` magnitudes.
//!
//! The `phi` magnitudes give the autocorrelation of the segment. Its spectral
//! factorizations are enumerated through root pairing, and the `psi` magnitudes
//! reject every factorization except the segment and its conjugate reflection.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::roots::{clustered_roots, poly_from_roots};
use crate::signal::{norm, phase_align, C64};
use crate::stft::{FrequencyGrid, MeasurementSet, SpectrumTable};
use crate::window::{modulation, WindowKind, WindowPair};

pub const ACCEPT_TOL: f64 = 1e-8;
pub const PAIRING_TOL: f64 = 1e-6;
pub const L_MAX: usize = 16;
/// Lags below this fraction of `a_0` are treated as exact zeros.
const LAG_FLOOR: f64 = 1e-12;
/// Candidates within this defect are refined before the acceptance test.
const POLISH_TOL: f64 = 1e-3;
const POLISH_ITER: usize = 50;

/// Survivors closer than this after phase alignment are one class.
const CLASS_TOL: f64 = 1e-6;

/// Sample spacing and modulation of a segment; positions are centered on the segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentGeometry {
    pub len: usize,
    pub delta: f64,
    pub b: f64,
}

impl SegmentGeometry {
    pub fn of_window(pair: &WindowPair) -> Self {
        SegmentGeometry { len: pair.grid.cells, delta: pair.grid.delta(), b: pair.b }
    }

    pub fn offset(&self, j: usize) -> f64 {
        (j as f64 - (self.len as f64 - 1.0) / 2.0) * self.delta
    }

    /// Factors turning a `phi` segment into the matching `psi` segment.
    pub fn psi_factors(&self) -> Vec<C64> {
        (0..self.len).map(|j| modulation(self.b, self.offset(j)).conj()).collect()
    }

    pub fn table(&self) -> SpectrumTable {
        SpectrumTable::critical(self.len, self.delta)
    }

    /// Critical-grid magnitudes of `h` for both windows.
    pub fn predict(&self, h: &[C64]) -> (Vec<f64>, Vec<f64>) {
        let table = self.table();
        let factors = self.psi_factors();
        let hp: Vec<C64> = h.iter().zip(&factors).map(|(a, b)| a * b).collect();
        (table.magnitudes(h), table.magnitudes(&hp))
    }
}

/// Lags `a_k`, `k` in `[-(L-1), L-1]`, stored at index `k + L - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Autocorrelation {
    pub lags: Vec<C64>,
}

impl Autocorrelation {
    pub fn segment_len(&self) -> usize {
        self.lags.len().div_ceil(2)
    }

    pub fn lag(&self, k: i64) -> C64 {
        let l = self.segment_len() as i64;
        if k.abs() >= l {
            C64::new(0.0, 0.0)
        } else {
            self.lags[(k + l - 1) as usize]
        }
    }

    /// `a_k = sum_l h_{l+k} conj(h_l)`.
    pub fn direct(h: &[C64]) -> Self {
        let l = h.len() as i64;
        let lags = (-(l - 1)..l)
            .map(|k| {
                (0..l).filter(|&i| (0..l).contains(&(i + k))).map(|i| h[(i + k) as usize] * h[i as usize].conj()).sum()
            })
            .collect();
        Autocorrelation { lags }
    }
}

/// Inverse discrete Fourier sum of squared critical magnitudes (order `n = -L..L-1`).
pub fn autocorrelation_from_magnitudes(mags: &[f64], len: usize, delta: f64) -> Result<Autocorrelation> {
    if mags.len() != 2 * len || len == 0 {
        return Err(Error::SampleCount { expected: 2 * len, got: mags.len() });
    }
    let l = len as i64;
    let scale = 1.0 / (2.0 * len as f64 * delta * delta);
    let raw: Vec<C64> = (-(l - 1)..l)
        .map(|k| {
            mags.iter()
                .enumerate()
                .map(|(i, m)| {
                    let n = i as i64 - l;
                    C64::from_polar(m * m, TAU * (k * n) as f64 / (2.0 * len as f64))
                })
                .sum::<C64>()
                * scale
        })
        .collect();
    let last = raw.len() - 1;
    let lags = (0..raw.len()).map(|i| (raw[i] + raw[last - i].conj()) * 0.5).collect();
    Ok(Autocorrelation { lags })
}

/// Every spectral factor of `a` up to phase, including all placements of a short factor
/// inside the segment. Each is scaled to energy `a_0` with its largest entry real positive.
pub fn enumerate_candidates(a: &Autocorrelation) -> Result<Vec<Vec<C64>>> {
    let len = a.segment_len();
    if len > L_MAX {
        return Err(Error::SegmentTooLong { len, max: L_MAX });
    }
    let a0 = a.lag(0).re;
    if a0.is_nan() || a0 <= 0.0 {
        return Err(Error::NotRealizable(format!("zero-lag energy {a0} is not positive")));
    }
    let reach = (1..len as i64).rev().find(|&k| a.lag(k).norm() > LAG_FLOOR * a0).unwrap_or(0) as usize;
    let factors: Vec<Vec<C64>> = if reach == 0 {
        vec![vec![C64::new(1.0, 0.0)]]
    } else {
        let poly: Vec<C64> = (0..=2 * reach).map(|j| a.lag(j as i64 - reach as i64)).collect();
        let options = pairing_options(&poly)?;
        let mut out = Vec::new();
        let mut digits = vec![0usize; options.len()];
        loop {
            let chosen: Vec<C64> = options.iter().zip(&digits).flat_map(|(o, &d)| o[d].iter().copied()).collect();
            out.push(poly_from_roots(&chosen));
            let mut i = 0;
            while i < digits.len() {
                digits[i] += 1;
                if digits[i] < options[i].len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == digits.len() {
                break;
            }
        }
        out
    };
    let mut candidates = Vec::with_capacity(factors.len() * (len - reach));
    for q in &factors {
        let s = (a0 / q.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        for p in 0..len - reach {
            let mut h = vec![C64::new(0.0, 0.0); len];
            for (j, v) in q.iter().enumerate() {
                h[p + j] = v * s;
            }
            normalize_phase(&mut h);
            candidates.push(h);
        }
    }
    Ok(candidates)
}

/// Per root group, the admissible root lists contributed to the factor.
fn pairing_options(poly: &[C64]) -> Result<Vec<Vec<Vec<C64>>>> {
    let clusters = clustered_roots(poly);
    let mut used = vec![false; clusters.len()];
    let mut options = Vec::new();
    for i in 0..clusters.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let c = clusters[i];
        let mirror = c.center.conj().inv();
        if (c.center - mirror).norm() <= PAIRING_TOL * c.center.norm().max(1.0) {
            if !c.multiplicity.is_multiple_of(2) {
                return Err(Error::NotRealizable(format!(
                    "unit-circle root {:.6} has odd multiplicity {}",
                    c.center, c.multiplicity
                )));
            }
            let z = c.center / c.center.norm();
            options.push(vec![vec![z; c.multiplicity / 2]]);
            continue;
        }
        let mate = (0..clusters.len())
            .filter(|&j| !used[j] && clusters[j].multiplicity == c.multiplicity)
            .min_by(|&x, &y| (clusters[x].center - mirror).norm().total_cmp(&(clusters[y].center - mirror).norm()))
            .filter(|&j| (clusters[j].center - mirror).norm() <= PAIRING_TOL * mirror.norm().max(1.0))
            .ok_or_else(|| Error::NotRealizable(format!("root {:.6} has no reciprocal mate", c.center)))?;
        used[mate] = true;
        let inner = (c.center + clusters[mate].center.conj().inv()) * 0.5;
        let outer = inner.conj().inv();
        let m = c.multiplicity;
        options.push((0..=m).map(|k| [vec![inner; k], vec![outer; m - k]].concat()).collect());
    }
    Ok(options)
}

/// Rotates `h` so its largest-modulus entry is real and positive.
pub fn normalize_phase(h: &mut [C64]) {
    let pivot = h.iter().copied().fold(C64::new(0.0, 0.0), |best, z| if z.norm() > best.norm() { z } else { best });
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        for z in h.iter_mut() {
            *z *= rot;
        }
    }
}

/// `h*_j = conj(h_{L-1-j})`, the segment of the conjugate reflection about the node.
pub fn reflect_segment(h: &[C64]) -> Vec<C64> {
    h.iter().rev().map(|z| z.conj()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalClass {
    pub representative: Vec<C64>,
    pub includes_reflection: bool,
    pub node: f64,
    pub residual: f64,
}

impl LocalClass {
    pub fn zero(len: usize, node: f64) -> Self {
        LocalClass { representative: vec![C64::new(0.0, 0.0); len], includes_reflection: true, node, residual: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.representative.iter().all(|z| z.norm() == 0.0)
    }

    /// Normalized conjugate reflection of the representative.
    pub fn mate(&self) -> Vec<C64> {
        let mut m = reflect_segment(&self.representative);
        normalize_phase(&mut m);
        m
    }

    /// True when the representative equals its own reflection up to phase.
    pub fn is_self_reflective(&self) -> bool {
        phase_align(&self.representative, &self.mate()).1 <= CLASS_TOL
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateScore {
    pub id: usize,
    pub defect: f64,
}

/// Relative l2 defect of predicted against observed magnitudes over both windows.
pub fn defect(h: &[C64], phi: &[f64], psi: &[f64], table: &SpectrumTable, factors: &[C64]) -> f64 {
    let mut buf = Vec::with_capacity(table.rows());
    let mut err = 0.0;
    table.magnitudes_into(h, &mut buf);
    err += buf.iter().zip(phi).map(|(p, o)| (p - o).powi(2)).sum::<f64>();
    let hp: Vec<C64> = h.iter().zip(factors).map(|(a, b)| a * b).collect();
    table.magnitudes_into(&hp, &mut buf);
    err += buf.iter().zip(psi).map(|(p, o)| (p - o).powi(2)).sum::<f64>();
    let energy: f64 = phi.iter().chain(psi).map(|o| o * o).sum();
    if energy == 0.0 {
        err.sqrt()
    } else {
        (err / energy).sqrt()
    }
}

pub fn score_candidates(
    candidates: &[Vec<C64>],
    phi: &[f64],
    psi: &[f64],
    geom: &SegmentGeometry,
) -> Vec<CandidateScore> {
    let table = geom.table();
    let factors = geom.psi_factors();
    candidates
        .iter()
        .enumerate()
        .map(|(id, h)| CandidateScore { id, defect: defect(h, phi, psi, &table, &factors) })
        .collect()
}

/// Squared-magnitude residuals of `h` against both windows, relative to the observed energy.
fn squared_residuals(h: &[C64], phi: &[f64], psi: &[f64], table: &SpectrumTable, factors: &[C64]) -> DVector<f64> {
    let scale = phi.iter().chain(psi).map(|o| o * o).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let d = table.delta;
    let rows = table.rows();
    DVector::from_fn(2 * rows, |r, _| {
        let (n, obs, psi_row) = if r < rows { (r, phi[r], false) } else { (r - rows, psi[r - rows], true) };
        let y: C64 = table
            .row(n)
            .iter()
            .zip(h)
            .zip(factors)
            .map(|((k, v), f)| if psi_row { k * v * f } else { k * v })
            .sum::<C64>()
            * d;
        (y.norm_sqr() - obs * obs) / scale
    })
}

/// Damped Gauss-Newton refinement of a candidate against both magnitude sequences.
/// Root clusters of high multiplicity leave candidates off by about 1e-6; this removes that.
pub fn polish_candidate(h: &[C64], phi: &[f64], psi: &[f64], table: &SpectrumTable, factors: &[C64]) -> Vec<C64> {
    let len = h.len();
    let rows = table.rows();
    let scale = phi.iter().chain(psi).map(|o| o * o).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let d = table.delta;
    let mut x = h.to_vec();
    let mut r = squared_residuals(&x, phi, psi, table, factors);
    let mut cost = r.norm_squared();
    let mut damping = 1e-6;
    for _ in 0..POLISH_ITER {
        if cost <= 1e-30 {
            break;
        }
        let jac = DMatrix::from_fn(2 * rows, 2 * len, |row, col| {
            let (n, psi_row) = if row < rows { (row, false) } else { (row - rows, true) };
            let kernel = table.row(n);
            let coef = |j: usize| if psi_row { kernel[j] * factors[j] * d } else { kernel[j] * d };
            let y: C64 = (0..len).map(|j| coef(j) * x[j]).sum();
            let j = col % len;
            let g = y.conj() * coef(j);
            let v = if col < len { 2.0 * g.re } else { -2.0 * g.im };
            v / scale
        });
        let jt = jac.transpose();
        let normal = &jt * &jac;
        let grad = &jt * &r;
        let mut improved = false;
        for _ in 0..8 {
            let mut m = normal.clone();
            let bump = damping * (1.0 + normal.diagonal().max());
            for i in 0..2 * len {
                m[(i, i)] += bump;
            }
            let Some(step) = m.cholesky().map(|c| c.solve(&(-&grad))) else {
                damping *= 10.0;
                continue;
            };
            let trial: Vec<C64> = (0..len).map(|j| x[j] + C64::new(step[j], step[j + len])).collect();
            let rt = squared_residuals(&trial, phi, psi, table, factors);
            let ct = rt.norm_squared();
            if ct < cost {
                x = trial;
                r = rt;
                cost = ct;
                damping = (damping / 10.0).max(1e-15);
                improved = true;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    x
}

/// Keeps candidates reproducing both magnitude sequences and checks that they form one
/// class or one conjugate-reflection pair.
pub fn prune_with_second_window(
    candidates: &[Vec<C64>],
    phi: &[f64],
    psi: &[f64],
    geom: &SegmentGeometry,
    node: f64,
) -> Result<LocalClass> {
    if candidates.is_empty() {
        return Err(Error::Inconsistent("no candidates to prune".into()));
    }
    let table = geom.table();
    let factors = geom.psi_factors();
    let mut scores = score_candidates(candidates, phi, psi, geom);
    let mut polished: Vec<Vec<C64>> = candidates.to_vec();
    for s in scores.iter_mut().filter(|s| s.defect > ACCEPT_TOL && s.defect <= POLISH_TOL) {
        let h = polish_candidate(&candidates[s.id], phi, psi, &table, &factors);
        s.defect = defect(&h, phi, psi, &table, &factors);
        polished[s.id] = h;
    }
    let candidates = &polished;
    let best = scores.iter().map(|s| s.defect).fold(f64::INFINITY, f64::min);
    let mut classes: Vec<(Vec<C64>, f64)> = Vec::new();
    for s in scores.iter().filter(|s| s.defect <= ACCEPT_TOL) {
        let h = &candidates[s.id];
        match classes.iter_mut().find(|(rep, _)| phase_align(rep, h).1 <= CLASS_TOL) {
            Some(entry) => entry.1 = entry.1.min(s.defect),
            None => classes.push((h.clone(), s.defect)),
        }
    }
    let (rep, residual) = match classes.len() {
        0 => {
            return Err(Error::Inconsistent(format!(
                "no candidate reproduces the magnitudes at node {node} (best defect {best:.3e})"
            )))
        }
        1 => classes.pop().expect("one class"),
        2 => {
            let mirrored = reflect_segment(&classes[0].0);
            if phase_align(&mirrored, &classes[1].0).1 > CLASS_TOL {
                return Err(Error::AmbiguityViolation(format!(
                    "two survivors at node {node} are not conjugate reflections"
                )));
            }
            let residual = classes[0].1.max(classes[1].1);
            (classes.swap_remove(0).0, residual)
        }
        n => {
            return Err(Error::AmbiguityViolation(format!("{n} distinct survivor classes at node {node}")));
        }
    };
    Ok(LocalClass { representative: canonical(rep), includes_reflection: true, node, residual })
}

/// Lexicographically smaller of `h` and its reflection, both phase-normalized.
fn canonical(mut h: Vec<C64>) -> Vec<C64> {
    normalize_phase(&mut h);
    let mut m = reflect_segment(&h);
    normalize_phase(&mut m);
    let key = |v: &[C64]| -> Vec<(i64, i64)> {
        v.iter().map(|z| ((z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64)).collect()
    };
    if key(&m) < key(&h) {
        m
    } else {
        h
    }
}

/// Recovers a segment from critical-grid magnitudes; magnitudes at or below `zero_floor` give the zero class.
pub fn recover_segment(
    phi: &[f64],
    psi: &[f64],
    geom: &SegmentGeometry,
    node: f64,
    zero_floor: f64,
) -> Result<LocalClass> {
    if phi.iter().chain(psi).all(|m| *m <= zero_floor) {
        return Ok(LocalClass::zero(geom.len, node));
    }
    let a = autocorrelation_from_magnitudes(phi, geom.len, geom.delta)?;
    let candidates = enumerate_candidates(&a)?;
    prune_with_second_window(&candidates, phi, psi, geom, node)
}

/// Local class at one on-grid node of a critical-grid measurement set.
pub fn recover_local(ms: &MeasurementSet, pair: &WindowPair, node: usize) -> Result<LocalClass> {
    if !matches!(ms.freqs, FrequencyGrid::Critical { n } if n == pair.grid.cells) {
        return Err(Error::InvalidFrequencies("local recovery needs the critical grid with N = L".into()));
    }
    let t = *ms.nodes.times.get(node).ok_or_else(|| Error::InvalidNodes(format!("no node {node}")))?;
    pair.grid.require_edge(t)?;
    let floor = 1e-12 * ms.max_value();
    recover_segment(
        ms.mags(WindowKind::Phi, node),
        ms.mags(WindowKind::Psi, node),
        &SegmentGeometry::of_window(pair),
        t,
        floor,
    )
}

/// Phase-normalized copy of `h`.
pub fn normalized(h: &[C64]) -> Vec<C64> {
    let mut v = h.to_vec();
    normalize_phase(&mut v);
    v
}

/// Relative distance between `h` and a class, over both orientations.
pub fn class_distance(class: &LocalClass, h: &[C64]) -> f64 {
    if class.is_zero() {
        return if norm(h) == 0.0 { 0.0 } else { 1.0 };
    }
    phase_align(&class.representative, h).1.min(phase_align(&class.mate(), h).1)
}
