//! Sampled signals on a cell grid and the constructions built on them.
//!
//! Sample `i` of a grid represents the cell `[(i - origin) * delta, (i - origin + 1) * delta)`
//! and is evaluated at the cell midpoint. With this convention a window on `[-B, B)`
//! holds exactly `L` samples placed symmetrically about zero, so conjugate reflection
//! about any half-cell multiple maps the grid onto itself.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative tolerance used to decide whether a real coordinate lands on a grid point.
pub const GRID_SNAP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "B")]
    pub half_support: f64,
    #[serde(rename = "L")]
    pub cells: usize,
    pub origin: i64,
    pub horizon: usize,
}

impl GridSpec {
    pub fn new(half_support: f64, cells: usize, origin: i64, horizon: usize) -> Result<Self> {
        let grid = GridSpec { half_support, cells, origin, horizon };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid with `x = 0` in the middle of the horizon.
    pub fn centered(half_support: f64, cells: usize, horizon: usize) -> Result<Self> {
        Self::new(half_support, cells, (horizon / 2) as i64, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_support.is_finite() && self.half_support > 0.0) {
            return Err(Error::InvalidGrid(format!("B must be positive, got {}", self.half_support)));
        }
        if self.cells < 2 || !self.cells.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("L must be even and at least 2, got {}", self.cells)));
        }
        if self.horizon < self.cells {
            return Err(Error::InvalidGrid(format!(
                "horizon {} shorter than one window ({} cells)",
                self.horizon, self.cells
            )));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        2.0 * self.half_support / self.cells as f64
    }

    /// Relative cell range `[lo, hi)` covered by the horizon.
    pub fn cell_range(&self) -> (i64, i64) {
        (-self.origin, self.horizon as i64 - self.origin)
    }

    pub fn index_of_cell(&self, k: i64) -> Option<usize> {
        let i = k + self.origin;
        (i >= 0 && (i as usize) < self.horizon).then_some(i as usize)
    }

    pub fn cell_of_index(&self, i: usize) -> i64 {
        i as i64 - self.origin
    }

    pub fn midpoint(&self, k: i64) -> f64 {
        (k as f64 + 0.5) * self.delta()
    }

    /// Cell-edge index of `t`, if `t` is a grid multiple of delta.
    pub fn edge_of(&self, t: f64) -> Option<i64> {
        snap(t / self.delta())
    }

    pub fn require_edge(&self, t: f64) -> Result<i64> {
        self.edge_of(t).ok_or(Error::OffGridTime { t })
    }

    pub fn compatible(&self, other: &GridSpec) -> bool {
        self.cells == other.cells
            && self.origin == other.origin
            && self.horizon == other.horizon
            && (self.half_support - other.half_support).abs() <= 1e-12 * self.half_support
    }

    pub fn require_compatible(&self, other: &GridSpec) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Nearest integer to `v` when `v` is within `GRID_SNAP_TOL` of it.
pub fn snap(v: f64) -> Option<i64> {
    let r = v.round();
    ((v - r).abs() <= GRID_SNAP_TOL * v.abs().max(1.0)).then_some(r as i64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub grid: GridSpec,
    pub samples: Vec<C64>,
}

impl Signal {
    pub fn new(grid: GridSpec, samples: Vec<C64>) -> Result<Self> {
        grid.validate()?;
        if samples.len() != grid.horizon {
            return Err(Error::SampleCount { expected: grid.horizon, got: samples.len() });
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidGrid("non-finite sample".into()));
        }
        Ok(Signal { grid, samples })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Signal { grid, samples: vec![C64::new(0.0, 0.0); grid.horizon] }
    }

    /// Samples `f` at every cell midpoint.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64) -> C64) -> Self {
        let samples = (0..grid.horizon).map(|i| f(grid.midpoint(grid.cell_of_index(i)))).collect();
        Signal { grid, samples }
    }

    /// Places `values` on consecutive cells starting at relative cell `start`.
    pub fn from_cells(grid: GridSpec, start: i64, values: &[C64]) -> Result<Self> {
        let mut s = Self::zeros(grid);
        for (j, v) in values.iter().enumerate() {
            let k = start + j as i64;
            let i = grid.index_of_cell(k).ok_or_else(|| Error::InvalidGrid(format!("cell {k} outside the horizon")))?;
            s.samples[i] = *v;
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Value on relative cell `k`; zero outside the horizon.
    pub fn at_cell(&self, k: i64) -> C64 {
        self.grid.index_of_cell(k).map_or(C64::new(0.0, 0.0), |i| self.samples[i])
    }

    /// Minimal inclusive index interval holding every nonzero sample.
    pub fn support(&self) -> Option<(usize, usize)> {
        let first = self.samples.iter().position(|z| *z != C64::new(0.0, 0.0))?;
        let last = self.samples.iter().rposition(|z| *z != C64::new(0.0, 0.0))?;
        Some((first, last))
    }

    pub fn norm(&self) -> f64 {
        norm(&self.samples)
    }

    pub fn scaled(&self, lambda: C64) -> Signal {
        Signal { grid: self.grid, samples: self.samples.iter().map(|z| z * lambda).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

/// Unit scalar `lambda` minimizing `|u - lambda v|` and the relative residual
/// `|u - lambda v| / sqrt(|u|^2 + |v|^2)` (zero when both vanish).
pub fn phase_align(u: &[C64], v: &[C64]) -> (C64, f64) {
    let s = inner(u, v);
    let lambda = if s.norm() > 0.0 { s / s.norm() } else { C64::new(1.0, 0.0) };
    let energy = u.iter().chain(v).map(|z| z.norm_sqr()).sum::<f64>();
    if energy == 0.0 {
        return (lambda, 0.0);
    }
    let diff: f64 = u.iter().zip(v).map(|(a, b)| (a - lambda * b).norm_sqr()).sum();
    (lambda, (diff / energy).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseAlignment {
    pub lambda: C64,
    pub residual: f64,
    pub reflected: bool,
    pub reflection_center: f64,
}

pub fn global_phase_align(f: &Signal, g: &Signal) -> Result<PhaseAlignment> {
    f.grid.require_compatible(&g.grid)?;
    let (lambda, residual) = phase_align(&f.samples, &g.samples);
    Ok(PhaseAlignment { lambda, residual, reflected: false, reflection_center: 0.0 })
}

/// Best alignment of `g` to `f` over both orientations: `g` itself and its
/// conjugate reflection about `center`.
pub fn align_either_orientation(f: &Signal, g: &Signal, center: f64) -> Result<PhaseAlignment> {
    let direct = global_phase_align(f, g)?;
    let reflected = match conj_reflect(g, center) {
        Ok(r) => {
            let a = global_phase_align(f, &r)?;
            PhaseAlignment { reflected: true, reflection_center: center, ..a }
        }
        Err(Error::ReflectionOutsideHorizon { .. }) => return Ok(direct),
        Err(e) => return Err(e),
    };
    Ok(if reflected.residual < direct.residual { reflected } else { direct })
}

/// `x -> conj(f(2 * center - x))` on the same grid.
pub fn conj_reflect(f: &Signal, center: f64) -> Result<Signal> {
    let grid = f.grid;
    let m = snap(2.0 * center / grid.delta()).ok_or_else(|| Error::OffGridCenter {
        center,
        nearest: (2.0 * center / grid.delta()).round() * grid.delta() / 2.0,
    })?;
    let mut out = Signal::zeros(grid);
    for (i, z) in f.samples.iter().enumerate() {
        if *z == C64::new(0.0, 0.0) {
            continue;
        }
        let k = grid.cell_of_index(i);
        let j = grid.index_of_cell(m - k - 1).ok_or(Error::ReflectionOutsideHorizon { center })?;
        out.samples[j] = z.conj();
    }
    Ok(out)
}

/// True iff `f` vanishes (modulus at most `tol`) on `ceil(length / delta)` consecutive
/// cells strictly inside the span of its significant samples. The zero signal is separable.
pub fn is_separable(f: &Signal, length: f64, tol: f64) -> bool {
    let run = ((length / f.grid.delta()) - GRID_SNAP_TOL).ceil().max(1.0) as usize;
    let big: Vec<bool> = f.samples.iter().map(|z| z.norm() > tol).collect();
    let (Some(first), Some(last)) = (big.iter().position(|&b| b), big.iter().rposition(|&b| b)) else {
        return true;
    };
    let mut current = 0;
    for &b in &big[first..=last] {
        if b {
            current = 0;
        } else {
            current += 1;
            if current >= run {
                return true;
            }
        }
    }
    false
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSpec {
    #[serde(rename = "T")]
    pub period: f64,
    pub mu: C64,
    pub coefficients: BTreeMap<i64, C64>,
}

impl PeriodicSpec {
    pub fn periodic(period: f64, coefficients: BTreeMap<i64, C64>) -> Self {
        PeriodicSpec { period, mu: C64::new(1.0, 0.0), coefficients }
    }

    /// Number of cells per period.
    pub fn cells(&self, grid: &GridSpec) -> Result<usize> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::InvalidPeriodic(format!("T must be positive, got {}", self.period)));
        }
        if (self.mu.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPeriodic(format!("|mu| = {} is not 1", self.mu.norm())));
        }
        match grid.edge_of(self.period) {
            Some(p) if p > 0 => Ok(p as usize),
            _ => Err(Error::InvalidPeriodic(format!(
                "T = {} is not a multiple of delta = {}",
                self.period,
                grid.delta()
            ))),
        }
    }

    /// Trigonometric sum of one period at `x`.
    pub fn eval_base(&self, x: f64) -> C64 {
        self.coefficients
            .iter()
            .map(|(k, c)| c * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * *k as f64 * x / self.period))
            .sum()
    }
}

/// Samples one period on `[0, T)` and extends it by `f(x) = mu f(x + T)`.
pub fn make_periodic(spec: &PeriodicSpec, grid: GridSpec) -> Result<Signal> {
    let p = spec.cells(&grid)? as i64;
    let mut out = Signal::zeros(grid);
    for i in 0..grid.horizon {
        let k = grid.cell_of_index(i);
        let r = k.div_euclid(p);
        let s = k.rem_euclid(p);
        out.samples[i] = spec.eval_base(grid.midpoint(s)) * spec.mu.conj().powi(r as i32);
    }
    Ok(out)
}

/// Seeded random signal on `support_len` centered cells that is not separable at `gap_bound`.
pub fn random_nonseparable(grid: GridSpec, support_len: usize, gap_bound: f64, seed: u64) -> Result<Signal> {
    grid.validate()?;
    if support_len == 0 || support_len > grid.horizon {
        return Err(Error::Unsatisfiable(format!("support length {support_len} must lie in 1..={}", grid.horizon)));
    }
    if gap_bound >= support_len as f64 * grid.delta() {
        return Err(Error::Unsatisfiable(format!(
            "gap bound {gap_bound} is not shorter than the support ({} cells)",
            support_len
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = (grid.horizon - support_len) / 2;
    loop {
        let mut samples = vec![C64::new(0.0, 0.0); grid.horizon];
        for (j, slot) in samples[start..start + support_len].iter_mut().enumerate() {
            let edge = j == 0 || j + 1 == support_len;
            if !edge && rng.gen_bool(0.1) {
                continue;
            }
            let r = rng.gen_range(0.2..1.0);
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            *slot = C64::from_polar(r, theta);
        }
        let f = Signal { grid, samples };
        if !is_separable(&f, gap_bound, 1e-9) {
            return Ok(f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn small_grid(horizon: usize, origin: i64) -> GridSpec {
        GridSpec::new(1.0, 2, origin, horizon).unwrap()
    }

    #[test]
    fn align_matches_scaled_copy() {
        let g = small_grid(2, 0);
        let f = Signal::new(g, vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let h = Signal::new(g, vec![c(0.0, 1.0), c(-1.0, 0.0)]).unwrap();
        let a = global_phase_align(&f, &h).unwrap();
        assert!((a.lambda - c(0.0, -1.0)).norm() < 1e-15);
        assert!(a.residual < 1e-15);
    }

    #[test]
    fn orthogonal_signals_have_unit_residual() {
        let g = small_grid(2, 0);
        let f = Signal::new(g, vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let h = Signal::new(g, vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let a = global_phase_align(&f, &h).unwrap();
        assert!((a.residual - 1.0).abs() < 1e-15);
        assert_eq!(a.lambda, c(1.0, 0.0));
    }

    #[test]
    fn zero_signals_align_trivially() {
        let g = small_grid(4, 2);
        let a = global_phase_align(&Signal::zeros(g), &Signal::zeros(g)).unwrap();
        assert_eq!(a.residual, 0.0);
        assert_eq!(a.lambda, c(1.0, 0.0));
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let f = Signal::zeros(small_grid(4, 2));
        let g = Signal::zeros(small_grid(4, 1));
        assert!(matches!(global_phase_align(&f, &g), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn reflect_three_cells_about_their_middle() {
        // cells -1, 0, 1 have midpoints -delta/2, delta/2, 3delta/2; their middle is delta/2
        let g = small_grid(4, 2);
        let vals = [c(1.0, 2.0), c(3.0, -1.0), c(0.5, 0.5)];
        let f = Signal::from_cells(g, -1, &vals).unwrap();
        let r = conj_reflect(&f, g.delta() / 2.0).unwrap();
        assert_eq!(r.at_cell(-1), vals[2].conj());
        assert_eq!(r.at_cell(0), vals[1].conj());
        assert_eq!(r.at_cell(1), vals[0].conj());
    }

    #[test]
    fn reflect_support_zero_to_three() {
        let g = GridSpec::new(1.0, 4, 2, 8).unwrap();
        let vals = [c(1.0, 0.0), c(2.0, 1.0), c(0.0, 3.0), c(-1.0, 0.0)];
        let f = Signal::from_cells(g, 0, &vals).unwrap();
        let r = conj_reflect(&f, 2.0 * g.delta()).unwrap();
        assert_eq!(r.support(), f.support());
        for j in 0..4 {
            assert_eq!(r.at_cell(j), vals[3 - j as usize].conj());
        }
    }

    #[test]
    fn real_even_signal_is_reflection_invariant() {
        let g = GridSpec::centered(1.0, 8, 16).unwrap();
        let f = Signal::from_fn(g, |x| c((-x * x).exp(), 0.0));
        assert_eq!(conj_reflect(&f, 0.0).unwrap(), f);
    }

    #[test]
    fn off_grid_center_names_nearest() {
        let g = GridSpec::centered(1.0, 8, 16).unwrap();
        let f = Signal::zeros(g);
        match conj_reflect(&f, 0.3) {
            Err(Error::OffGridCenter { nearest, .. }) => assert!((nearest - 0.25).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn separability_examples() {
        let g = GridSpec::new(1.0, 4, 0, 4).unwrap();
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let gap = Signal::new(g, vec![one, zero, zero, one]).unwrap();
        assert!(is_separable(&gap, 2.0 * g.delta(), 0.0));
        let full = Signal::new(g, vec![one; 4]).unwrap();
        for k in 1..=4 {
            assert!(!is_separable(&full, k as f64 * g.delta(), 0.0));
        }
        assert!(is_separable(&Signal::zeros(g), 1.0, 0.0));
    }

    #[test]
    fn bounded_modulus_signal_is_nonseparable() {
        let a = 0.25;
        let g = GridSpec::centered(1.0, 8, 64).unwrap();
        let f = Signal::from_fn(g, |x| {
            C64::from_polar(2.0 + (std::f64::consts::PI * x / a).sin(), std::f64::consts::PI * x / (6.0 * a))
        });
        assert!(!is_separable(&f, 2.0 - a, 1e-9));
    }

    #[test]
    fn periodic_constant_and_exponential() {
        let g = GridSpec::centered(1.0, 8, 16).unwrap();
        let cst = make_periodic(&PeriodicSpec::periodic(1.0, [(0, c(2.0, -1.0))].into()), g).unwrap();
        assert!(cst.samples.iter().all(|z| *z == c(2.0, -1.0)));
        let t = g.horizon as f64 * g.delta();
        let e = make_periodic(&PeriodicSpec::periodic(t, [(1, c(1.0, 0.0))].into()), g).unwrap();
        for i in 0..g.horizon {
            let x = g.midpoint(g.cell_of_index(i));
            let expect = C64::from_polar(1.0, std::f64::consts::TAU * x / t);
            assert!((e.samples[i] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn quasi_periodic_relation_holds() {
        let g = GridSpec::centered(1.0, 8, 32).unwrap();
        let mu = C64::from_polar(1.0, std::f64::consts::PI / 3.0);
        let spec = PeriodicSpec { period: 1.25, mu, coefficients: [(0, c(1.0, 0.0)), (2, c(0.0, 1.0))].into() };
        let f = make_periodic(&spec, g).unwrap();
        let p = 5;
        for i in 0..g.horizon - p {
            assert!((f.samples[i] - mu * f.samples[i + p]).norm() < 1e-12);
        }
    }

    #[test]
    fn periodic_rejects_off_grid_period() {
        let g = GridSpec::centered(1.0, 8, 16).unwrap();
        assert!(make_periodic(&PeriodicSpec::periodic(0.3, BTreeMap::new()), g).is_err());
    }

    #[test]
    fn random_nonseparable_is_deterministic() {
        let g = GridSpec::centered(1.0, 8, 64).unwrap();
        let a = random_nonseparable(g, 30, 1.0, 1).unwrap();
        let b = random_nonseparable(g, 30, 1.0, 1).unwrap();
        let d = random_nonseparable(g, 30, 1.0, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
        assert!(!is_separable(&a, 1.0, 1e-9));
        assert!(random_nonseparable(g, 4, 1.0, 1).is_err());
    }
}
