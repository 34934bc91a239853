//! STFT evaluation, windowed segments and magnitude measurement sets.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{snap, GridSpec, Signal, C64};
use crate::window::{WindowKind, WindowPair};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum FrequencyGrid {
    /// `omega_n = n / (4B)` for `n` in `[-N, N - 1]`.
    Critical {
        #[serde(rename = "N")]
        n: usize,
    },
    Custom {
        omegas: Vec<f64>,
        density_ok: bool,
    },
}

impl FrequencyGrid {
    /// One alias period of the critical grid.
    pub fn critical(grid: &GridSpec) -> Self {
        FrequencyGrid::Critical { n: grid.cells }
    }

    /// Custom grid; `density_ok` records whether the largest positive `omega`
    /// satisfies the finite-prefix density surrogate `n / omega_n > 4B`.
    pub fn custom(mut omegas: Vec<f64>, grid: &GridSpec) -> Result<Self> {
        if omegas.is_empty() || omegas.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidFrequencies("custom grid needs finite frequencies".into()));
        }
        let mut positive: Vec<f64> = omegas.iter().copied().filter(|w| *w > 0.0).collect();
        positive.sort_by(f64::total_cmp);
        positive.dedup();
        let density_ok = positive.last().is_some_and(|w| positive.len() as f64 / w > 4.0 * grid.half_support);
        omegas.shrink_to_fit();
        Ok(FrequencyGrid::Custom { omegas, density_ok })
    }

    /// Frequency indices in storage order.
    pub fn indices(&self) -> Vec<i64> {
        match self {
            FrequencyGrid::Critical { n } => (-(*n as i64)..*n as i64).collect(),
            FrequencyGrid::Custom { omegas, .. } => (0..omegas.len() as i64).collect(),
        }
    }

    pub fn omegas(&self, grid: &GridSpec) -> Vec<f64> {
        match self {
            FrequencyGrid::Critical { .. } => {
                self.indices().iter().map(|n| *n as f64 / (4.0 * grid.half_support)).collect()
            }
            FrequencyGrid::Custom { omegas, .. } => omegas.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FrequencyGrid::Critical { n } => 2 * n,
            FrequencyGrid::Custom { omegas, .. } => omegas.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeMode {
    Lattice,
    LatticePlusAnchor,
    TwoLines,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeNodes {
    pub mode: NodeMode,
    /// Lattice step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Lattice index `m` of `times[0]` in lattice modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first: Option<i64>,
    /// Anchor time; stored as the last entry of `times` as well.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<f64>,
    pub times: Vec<f64>,
}

fn lattice_step(grid: &GridSpec, a: f64) -> Result<i64> {
    match grid.edge_of(a) {
        Some(s) if s >= 1 => Ok(s),
        _ => {
            Err(Error::InvalidNodes(format!("lattice step {a} is not a positive multiple of delta = {}", grid.delta())))
        }
    }
}

impl TimeNodes {
    /// Every lattice node `m a` whose window meets the horizon.
    pub fn lattice(grid: &GridSpec, a: f64) -> Result<Self> {
        let step = lattice_step(grid, a)?;
        let half = grid.cells as i64 / 2;
        let (lo, hi) = grid.cell_range();
        let m_min = (lo - half).div_euclid(step) + 1;
        let m_max = (hi + half - 1).div_euclid(step);
        Ok(Self::lattice_range(a, m_min, m_max))
    }

    /// Lattice nodes whose whole window lies inside the horizon.
    pub fn lattice_inside(grid: &GridSpec, a: f64) -> Result<Self> {
        let step = lattice_step(grid, a)?;
        let half = grid.cells as i64 / 2;
        let (lo, hi) = grid.cell_range();
        let m_min = -((-(lo + half)).div_euclid(step));
        let m_max = (hi - half).div_euclid(step);
        if m_max < m_min {
            return Err(Error::InvalidNodes("no lattice window fits inside the horizon".into()));
        }
        Ok(Self::lattice_range(a, m_min, m_max))
    }

    fn lattice_range(a: f64, m_min: i64, m_max: i64) -> Self {
        TimeNodes {
            mode: NodeMode::Lattice,
            a: Some(a),
            first: Some(m_min),
            anchor: None,
            times: (m_min..=m_max).map(|m| m as f64 * a).collect(),
        }
    }

    /// Adds an anchor `t0` that is not a lattice multiple.
    pub fn with_anchor(mut self, t0: f64) -> Result<Self> {
        let a = self.a.ok_or_else(|| Error::InvalidNodes("anchor needs a lattice".into()))?;
        if self.anchor.is_some() {
            return Err(Error::InvalidNodes("node set already has an anchor".into()));
        }
        if !t0.is_finite() || snap(t0 / a).is_some() {
            return Err(Error::InvalidNodes(format!("anchor {t0} is an integer multiple of a = {a}")));
        }
        self.mode = NodeMode::LatticePlusAnchor;
        self.anchor = Some(t0);
        self.times.push(t0);
        Ok(self)
    }

    /// Anchor that avoids every lattice coset representable within the horizon.
    pub fn default_anchor(grid: &GridSpec, a: f64) -> f64 {
        a * (0.5 + 0.5 / grid.horizon as f64)
    }

    pub fn two_lines(t0: f64, t1: f64) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t0 == t1 {
            return Err(Error::InvalidNodes("two lines need distinct finite times".into()));
        }
        Ok(TimeNodes { mode: NodeMode::TwoLines, a: None, first: None, anchor: None, times: vec![t0, t1] })
    }

    pub fn explicit(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidNodes("explicit node list needs finite times".into()));
        }
        Ok(TimeNodes { mode: NodeMode::Explicit, a: None, first: None, anchor: None, times })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of lattice entries (excludes the anchor).
    pub fn lattice_len(&self) -> usize {
        self.times.len() - usize::from(self.anchor.is_some())
    }

    /// Lattice index of node `i`, if it belongs to the lattice part.
    pub fn lattice_index(&self, i: usize) -> Option<i64> {
        (i < self.lattice_len()).then(|| self.first.map(|m| m + i as i64)).flatten()
    }

    /// Lattice steps larger than `B` admit counterexamples; positive results need `a <= B`.
    pub fn is_wide(&self, grid: &GridSpec) -> bool {
        self.a.is_some_and(|a| a > grid.half_support * (1.0 + 1e-12))
    }
}

/// `delta * sum_k f(x_k) conj(w(x_k - t)) e^{-2 pi i x_k omega}`.
pub fn stft_value(f: &Signal, pair: &WindowPair, kind: WindowKind, t: f64, omega: f64) -> Result<C64> {
    f.grid.require_compatible(&pair.grid)?;
    let grid = f.grid;
    let delta = grid.delta();
    let mut acc = C64::new(0.0, 0.0);
    let mut add = |k: i64, w: C64| {
        let v = f.at_cell(k);
        if v != C64::new(0.0, 0.0) {
            let x = grid.midpoint(k);
            acc += v * w.conj() * C64::from_polar(1.0, -TAU * x * omega);
        }
    };
    if let Some(e) = grid.edge_of(t) {
        let half = grid.cells as i64 / 2;
        for (j, w) in pair.samples(kind).iter().enumerate() {
            add(e + j as i64 - half, *w);
        }
    } else {
        if !pair.is_analytic() {
            return Err(Error::OffGridTime { t });
        }
        let b = grid.half_support;
        let k_lo = ((t - b) / delta - 0.5).floor() as i64 - 1;
        let k_hi = ((t + b) / delta - 0.5).ceil() as i64 + 1;
        for k in k_lo..=k_hi {
            let w = pair.at(kind, grid.midpoint(k) - t).expect("analytic window");
            if w != C64::new(0.0, 0.0) {
                add(k, w);
            }
        }
    }
    Ok(acc * delta)
}

/// `h_j = f(t + y_j) conj(phi(y_j))` over the `L` window samples.
pub fn windowed_segment(f: &Signal, pair: &WindowPair, t: f64) -> Result<Vec<C64>> {
    f.grid.require_compatible(&pair.grid)?;
    let e = f.grid.require_edge(t)?;
    let half = f.grid.cells as i64 / 2;
    Ok(pair.phi.iter().enumerate().map(|(j, p)| f.at_cell(e + j as i64 - half) * p.conj()).collect())
}

/// `delta * sum_j h_j e^{-2 pi i y_j omega}` with `y_j` centered on the segment.
pub fn segment_dtft(h: &[C64], delta: f64, omega: f64) -> C64 {
    let center = (h.len() as f64 - 1.0) / 2.0;
    h.iter().enumerate().map(|(j, v)| v * C64::from_polar(1.0, -TAU * (j as f64 - center) * delta * omega)).sum::<C64>()
        * delta
}

/// Precomputed kernels `e^{-2 pi i y_j omega}` for one segment geometry.
#[derive(Clone, Debug)]
pub struct SpectrumTable {
    pub len: usize,
    pub delta: f64,
    kernel: Vec<C64>,
    rows: usize,
}

impl SpectrumTable {
    pub fn new(len: usize, delta: f64, omegas: &[f64]) -> Self {
        let center = (len as f64 - 1.0) / 2.0;
        let mut kernel = Vec::with_capacity(len * omegas.len());
        for w in omegas {
            for j in 0..len {
                kernel.push(C64::from_polar(1.0, -TAU * (j as f64 - center) * delta * w));
            }
        }
        SpectrumTable { len, delta, kernel, rows: omegas.len() }
    }

    /// One critical period: `omega_n = n / (2 len delta)`, `n` in `[-len, len - 1]`.
    pub fn critical(len: usize, delta: f64) -> Self {
        let omegas: Vec<f64> = (-(len as i64)..len as i64).map(|n| n as f64 / (2.0 * len as f64 * delta)).collect();
        Self::new(len, delta, &omegas)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Kernel entries of row `n`, before the factor `delta`.
    pub fn row(&self, n: usize) -> &[C64] {
        &self.kernel[n * self.len..(n + 1) * self.len]
    }

    pub fn magnitudes_into(&self, h: &[C64], out: &mut Vec<f64>) {
        debug_assert_eq!(h.len(), self.len);
        out.clear();
        for row in self.kernel.chunks_exact(self.len) {
            let s: C64 = row.iter().zip(h).map(|(k, v)| k * v).sum();
            out.push(s.norm() * self.delta);
        }
    }

    pub fn magnitudes(&self, h: &[C64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows);
        self.magnitudes_into(h, &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub pair: WindowPair,
    pub nodes: TimeNodes,
    pub freqs: FrequencyGrid,
    /// `phi[node][freq]`.
    pub phi: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
}

impl MeasurementSet {
    pub fn mags(&self, kind: WindowKind, node: usize) -> &[f64] {
        match kind {
            WindowKind::Phi => &self.phi[node],
            WindowKind::Psi => &self.psi[node],
        }
    }

    pub fn max_value(&self) -> f64 {
        self.phi.iter().chain(&self.psi).flatten().copied().fold(0.0, f64::max)
    }

    /// Same window pair, node set and frequency grid.
    pub fn same_index_set(&self, other: &MeasurementSet) -> bool {
        self.nodes == other.nodes && self.freqs == other.freqs && self.pair == other.pair
    }
}

/// Magnitudes of both windows at every node and frequency.
pub fn measure(f: &Signal, pair: &WindowPair, nodes: &TimeNodes, freqs: &FrequencyGrid) -> Result<MeasurementSet> {
    f.grid.require_compatible(&pair.grid)?;
    let grid = f.grid;
    let omegas = freqs.omegas(&grid);
    let table = SpectrumTable::new(grid.cells, grid.delta(), &omegas);
    let half = grid.cells as i64 / 2;
    let mut phi = Vec::with_capacity(nodes.len());
    let mut psi = Vec::with_capacity(nodes.len());
    let mut seg = vec![C64::new(0.0, 0.0); grid.cells];
    for &t in &nodes.times {
        if let Some(e) = grid.edge_of(t) {
            for kind in WindowKind::BOTH {
                for (j, w) in pair.samples(kind).iter().enumerate() {
                    seg[j] = f.at_cell(e + j as i64 - half) * w.conj();
                }
                let row = table.magnitudes(&seg);
                match kind {
                    WindowKind::Phi => phi.push(row),
                    WindowKind::Psi => psi.push(row),
                }
            }
        } else {
            let mut rows = [Vec::new(), Vec::new()];
            for (slot, kind) in rows.iter_mut().zip(WindowKind::BOTH) {
                *slot =
                    omegas.iter().map(|w| stft_value(f, pair, kind, t, *w).map(|z| z.norm())).collect::<Result<_>>()?;
            }
            let [p, q] = rows;
            phi.push(p);
            psi.push(q);
        }
    }
    Ok(MeasurementSet { pair: pair.clone(), nodes: nodes.clone(), freqs: freqs.clone(), phi, psi })
}

/// `| |e^{2 pi i t (w + b)} V_phi f(t, w + b) - e^{2 pi i t w} V_phi f(t, w)| - |V_psi f(t, w)| |`
/// at `w = n / (4B)`.
pub fn check_difference_identity(f: &Signal, pair: &WindowPair, t: f64, n: i64) -> Result<f64> {
    let quarter = 1.0 / (4.0 * pair.grid.half_support);
    if snap(pair.b / quarter).is_none() {
        return Err(Error::InvalidFrequencies(format!(
            "b = {} is not a multiple of the bin spacing {quarter}",
            pair.b
        )));
    }
    let w = n as f64 * quarter;
    let shifted = C64::from_polar(1.0, TAU * t * (w + pair.b)) * stft_value(f, pair, WindowKind::Phi, t, w + pair.b)?;
    let base = C64::from_polar(1.0, TAU * t * w) * stft_value(f, pair, WindowKind::Phi, t, w)?;
    let psi = stft_value(f, pair, WindowKind::Psi, t, w)?;
    Ok(((shifted - base).norm() - psi.norm()).abs())
}
