//! Explicit pairs `(f, g)` with equal measurements and `f` not equal to `g` up to phase.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{make_periodic, phase_align, snap, GridSpec, PeriodicSpec, Signal, C64};
use crate::stft::TimeNodes;
use crate::window::WindowPair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    SeparableGap,
    WideStep,
    RationalPeriodic,
    QuasiperiodicFlip,
    RationalLattice,
}

impl Claim {
    pub const ALL: [Claim; 5] = [
        Claim::SeparableGap,
        Claim::WideStep,
        Claim::RationalPeriodic,
        Claim::QuasiperiodicFlip,
        Claim::RationalLattice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Claim::SeparableGap => "separable_gap",
            Claim::WideStep => "wide_step",
            Claim::RationalPeriodic => "rational_periodic",
            Claim::QuasiperiodicFlip => "quasiperiodic_flip",
            Claim::RationalLattice => "rational_lattice",
        }
    }

    pub fn parse(s: &str) -> Option<Claim> {
        let s = s.replace('-', "_");
        Claim::ALL.into_iter().find(|c| c.name() == s || c.name().split('_').next() == Some(s.as_str()))
    }
}

/// Abscissae and plotting range for a step-profile rendering of a pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotHints {
    pub range: (f64, f64),
    /// Structural abscissae beyond value changes, such as quasi-period cell edges.
    pub marks: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForgedPair {
    pub f: Signal,
    pub g: Signal,
    pub nodes: TimeNodes,
    pub pair: WindowPair,
    pub claim: Claim,
    pub min_distance: f64,
    pub params: BTreeMap<String, f64>,
    pub plot: Option<PlotHints>,
}

/// Phase-aligned relative distance, taken in both directions.
pub fn pair_distance(f: &Signal, g: &Signal) -> f64 {
    phase_align(&f.samples, &g.samples).1.min(phase_align(&g.samples, &f.samples).1)
}

fn finish(
    f: Signal,
    g: Signal,
    nodes: TimeNodes,
    pair: WindowPair,
    claim: Claim,
    params: &[(&str, f64)],
    plot: Option<PlotHints>,
) -> ForgedPair {
    let min_distance = pair_distance(&f, &g);
    let params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    ForgedPair { f, g, nodes, pair, claim, min_distance, params, plot }
}

fn cells_of(grid: &GridSpec, x: f64, what: &str) -> Result<i64> {
    grid.edge_of(x)
        .ok_or_else(|| Error::ForgePrecondition(format!("{what} = {x} is not a multiple of delta = {}", grid.delta())))
}

fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::from_polar(rng.gen_range(0.3..1.0), rng.gen_range(0.0..std::f64::consts::TAU))).collect()
}

fn fits(grid: &GridSpec, lo: i64, hi: i64) -> Result<()> {
    let (hlo, hhi) = grid.cell_range();
    if lo < hlo || hi > hhi {
        return Err(Error::ForgePrecondition(format!(
            "horizon cells [{hlo}, {hhi}) do not contain the construction [{lo}, {hi})"
        )));
    }
    Ok(())
}

/// `f` vanishes on the overlap of the windows at `-a` and `0`; `g` negates everything right of it.
pub fn forge_separable(pair: &WindowPair, a: f64, seed: u64) -> Result<ForgedPair> {
    let grid = pair.grid;
    let step = cells_of(&grid, a, "a")?;
    if a > grid.half_support * (1.0 + 1e-12) {
        return Err(Error::ForgePrecondition("separable gap needs a <= B".into()));
    }
    separable_with_gap(pair, a, grid.cells as i64 - step, seed)
}

/// Separable construction with an explicit gap of `gap` cells starting at `-L/2`.
pub fn separable_with_gap(pair: &WindowPair, a: f64, gap: i64, seed: u64) -> Result<ForgedPair> {
    let grid = pair.grid;
    let l = grid.cells as i64;
    let gap_start = -l / 2;
    let (left, right) = (gap_start - l, gap_start + gap);
    fits(&grid, left, right + l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lv = random_values(&mut rng, l as usize);
    let rv = random_values(&mut rng, l as usize);
    let mut f = Signal::zeros(grid);
    let mut g = Signal::zeros(grid);
    for j in 0..l {
        let (il, ir) = (grid.index_of_cell(left + j).expect("fits"), grid.index_of_cell(right + j).expect("fits"));
        f.samples[il] = lv[j as usize];
        g.samples[il] = lv[j as usize];
        f.samples[ir] = rv[j as usize];
        g.samples[ir] = -rv[j as usize];
    }
    let nodes = TimeNodes::lattice(&grid, a)?;
    Ok(finish(
        f,
        g,
        nodes,
        pair.clone(),
        Claim::SeparableGap,
        &[("B", grid.half_support), ("a", a), ("gap", gap as f64 * grid.delta()), ("seed", seed as f64)],
        None,
    ))
}

/// Anchors at which the separable pair keeps equal measurements: `t <= -a` or `t >= 0`.
pub fn separable_anchor_admissible(a: f64, t: f64) -> bool {
    t <= -a || t >= 0.0
}

/// `f = -f*` beyond `a - B`; `g = -f*` on `[-(a - B), a - B)` and `g = f` elsewhere.
pub fn forge_wide_step(pair: &WindowPair, a: f64, seed: u64) -> Result<ForgedPair> {
    let grid = pair.grid;
    if a <= grid.half_support * (1.0 + 1e-12) {
        return Err(Error::ForgePrecondition("wide_step requires a > B".into()));
    }
    let step = cells_of(&grid, a, "a")?;
    let l = grid.cells as i64;
    let c = step - l / 2;
    let outer = l;
    fits(&grid, -c - outer, c + outer)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Signal::zeros(grid);
    let at = |k: i64| grid.index_of_cell(k).expect("fits");
    for (j, v) in random_values(&mut rng, outer as usize).into_iter().enumerate() {
        let k = c + j as i64;
        f.samples[at(k)] = v;
        f.samples[at(-1 - k)] = -v.conj();
    }
    for (j, v) in random_values(&mut rng, 2 * c as usize).into_iter().enumerate() {
        f.samples[at(-c + j as i64)] = v;
    }
    let mut g = f.clone();
    for k in -c..c {
        g.samples[at(k)] = -f.samples[at(-1 - k)].conj();
    }
    let nodes = TimeNodes::lattice(&grid, a)?;
    Ok(finish(
        f,
        g,
        nodes,
        pair.clone(),
        Claim::WideStep,
        &[("B", grid.half_support), ("a", a), ("seed", seed as f64)],
        None,
    ))
}

/// Anchors at which the wide-step pair keeps equal measurements: `t = 0` or `|t| >= a`.
pub fn wide_step_anchor_admissible(a: f64, t: f64) -> bool {
    t == 0.0 || t.abs() >= a
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RationalPeriodicParams {
    pub period: f64,
    pub q: i64,
    pub t0: f64,
    /// Defaults to `t0 + T / (2q)`.
    pub t1: Option<f64>,
    pub c0: C64,
    pub cq: C64,
}

/// `f = c0 + cq e^{2 pi i q x / T}` and its conjugate reflection about `t0`, on two lines
/// with `2 q (t1 - t0) / T` an integer.
pub fn forge_rational_periodic(pair: &WindowPair, p: RationalPeriodicParams) -> Result<ForgedPair> {
    let grid = pair.grid;
    if p.q <= 0 {
        return Err(Error::ForgePrecondition("q must be positive".into()));
    }
    let t1 = p.t1.unwrap_or(p.t0 + p.period / (2.0 * p.q as f64));
    let ratio = 2.0 * p.q as f64 * (t1 - p.t0) / p.period;
    if snap(ratio).is_none() || t1 == p.t0 {
        return Err(Error::ForgePrecondition(format!(
            "2q(t1 - t0)/T = {ratio} is not a nonzero integer; the offset is not rational with denominator q"
        )));
    }
    let twist = C64::from_polar(1.0, -4.0 * PI * p.q as f64 * p.t0 / p.period);
    let lhs = p.c0.conj() / p.c0;
    let rhs = p.cq.conj() / p.cq * twist;
    if p.c0.norm() == 0.0 || p.cq.norm() == 0.0 || (lhs - rhs).norm() < 1e-9 {
        return Err(Error::ForgePrecondition("pair would be equivalent".into()));
    }
    let spec_f = PeriodicSpec::periodic(p.period, [(0, p.c0), (p.q, p.cq)].into());
    let spec_g = PeriodicSpec::periodic(p.period, [(0, p.c0.conj()), (p.q, p.cq.conj() * twist)].into());
    let f = make_periodic(&spec_f, grid)?;
    let g = make_periodic(&spec_g, grid)?;
    for t in [p.t0, t1] {
        let e = cells_of(&grid, t, "line")?;
        let half = grid.cells as i64 / 2;
        fits(&grid, e - half, e + half)?;
    }
    let nodes = TimeNodes::two_lines(p.t0, t1)?;
    Ok(finish(
        f,
        g,
        nodes,
        pair.clone(),
        Claim::RationalPeriodic,
        &[
            ("T", p.period),
            ("q", p.q as f64),
            ("t0", p.t0),
            ("t1", t1),
            ("c0_re", p.c0.re),
            ("c0_im", p.c0.im),
            ("cq_re", p.cq.re),
            ("cq_im", p.cq.im),
        ],
        None,
    ))
}

/// Piecewise-constant `f` of period `T` and its sign-flipping quasi-periodic twin `g`.
pub fn forge_quasiperiodic_flip(pair: &WindowPair, period: f64, alpha: f64, c: C64) -> Result<ForgedPair> {
    let grid = pair.grid;
    let b = grid.half_support;
    if !(b < period && period < 2.0 * b) {
        return Err(Error::ForgePrecondition(format!("need B < T < 2B, got T = {period}")));
    }
    if !(2.0 * b / period - 1.0 < alpha && alpha < 1.0) {
        return Err(Error::ForgePrecondition(format!("alpha = {alpha} outside (2B/T - 1, 1)")));
    }
    let p = cells_of(&grid, period, "T")?;
    let shift = cells_of(&grid, alpha * period, "alpha T")?;
    let base = cells_of(&grid, -b, "-B")?;
    let on = (cells_of(&grid, b - period, "B - T")?, cells_of(&grid, -b + alpha * period, "-B + alpha T")?);
    let half = grid.cells as i64 / 2;
    fits(&grid, -half, shift + half)?;
    let mut f = Signal::zeros(grid);
    let mut g = Signal::zeros(grid);
    for i in 0..grid.horizon {
        let k = grid.cell_of_index(i);
        let r = (k - base).div_euclid(p);
        let s = base + (k - base).rem_euclid(p);
        let v = if s >= on.0 && s < on.1 { c } else { C64::new(0.0, 0.0) };
        f.samples[i] = v;
        g.samples[i] = if r % 2 == 0 { v } else { -v };
    }
    let nodes = TimeNodes::two_lines(0.0, alpha * period)?;
    let (lo, hi) = (-b, b + period);
    let marks = (0..).map(|k| -b + k as f64 * period).take_while(|x| *x <= hi + 1e-12).collect();
    Ok(finish(
        f,
        g,
        nodes,
        pair.clone(),
        Claim::QuasiperiodicFlip,
        &[("B", b), ("T", period), ("alpha", alpha), ("c_re", c.re), ("c_im", c.im)],
        Some(PlotHints { range: (lo, hi), marks }),
    ))
}

/// `(2 +- sin(pi x / a)) e^{i pi x / (6a)}` on the lattice nodes whose windows fit the horizon.
pub fn forge_rational_lattice(pair: &WindowPair, a: f64) -> Result<ForgedPair> {
    let grid = pair.grid;
    cells_of(&grid, a, "a")?;
    let span = grid.horizon as f64 * grid.delta() / (12.0 * a);
    if snap(span).is_none() {
        return Err(Error::ForgePrecondition(format!("horizon is not a multiple of 12a = {}", 12.0 * a)));
    }
    let f = Signal::from_fn(grid, |x| C64::from_polar(2.0 + (PI * x / a).sin(), PI * x / (6.0 * a)));
    let g = Signal::from_fn(grid, |x| C64::from_polar(2.0 - (PI * x / a).sin(), PI * x / (6.0 * a)));
    let nodes = TimeNodes::lattice_inside(&grid, a)?;
    Ok(finish(f, g, nodes, pair.clone(), Claim::RationalLattice, &[("B", grid.half_support), ("a", a)], None))
}

/// Forge with the default parameters of each claim.
pub fn forge_default(claim: Claim, seed: u64) -> Result<ForgedPair> {
    let b = 1.0;
    let pair = |horizon: usize, origin: i64| -> Result<WindowPair> {
        WindowPair::rectangular(GridSpec::new(b, 8, origin, horizon)?, 1.0 / (4.0 * b))
    };
    match claim {
        Claim::SeparableGap => forge_separable(&pair(64, 32)?, 0.5, seed),
        Claim::WideStep => forge_wide_step(&pair(64, 32)?, 1.5, seed),
        Claim::RationalPeriodic => forge_rational_periodic(
            &pair(48, 24)?,
            RationalPeriodicParams {
                period: 2.0,
                q: 1,
                t0: 0.0,
                t1: None,
                c0: C64::new(1.0, 0.0),
                cq: C64::new(0.0, 1.0),
            },
        ),
        Claim::QuasiperiodicFlip => forge_quasiperiodic_flip(&pair(24, 8)?, 1.5, 0.5, C64::new(1.0, 0.0)),
        Claim::RationalLattice => forge_rational_lattice(&pair(48, 24)?, 0.5),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{conj_reflect, is_separable};
    use crate::stft::{measure, FrequencyGrid};
    use crate::window::WindowKind;

    fn max_dev(fp: &ForgedPair, nodes: &TimeNodes) -> f64 {
        let freqs = FrequencyGrid::critical(&fp.pair.grid);
        let mf = measure(&fp.f, &fp.pair, nodes, &freqs).unwrap();
        let mg = measure(&fp.g, &fp.pair, nodes, &freqs).unwrap();
        let mut d = 0.0f64;
        for i in 0..nodes.len() {
            for k in WindowKind::BOTH {
                for (x, y) in mf.mags(k, i).iter().zip(mg.mags(k, i)) {
                    d = d.max((x - y).abs());
                }
            }
        }
        d
    }

    #[test]
    fn every_default_pair_has_equal_measurements() {
        for claim in Claim::ALL {
            let fp = forge_default(claim, 1).unwrap();
            assert!(max_dev(&fp, &fp.nodes) <= 1e-10, "{}", claim.name());
            assert!(fp.min_distance >= 0.1, "{} {}", claim.name(), fp.min_distance);
        }
    }

    #[test]
    fn example_periodic_formulas() {
        let fp = forge_default(Claim::RationalPeriodic, 0).unwrap();
        let t = 2.0;
        for i in 0..fp.f.len() {
            let x = fp.f.grid.midpoint(fp.f.grid.cell_of_index(i));
            let e = C64::from_polar(1.0, 2.0 * PI * x / t);
            assert!((fp.f.samples[i] - (1.0 + C64::i() * e)).norm() < 1e-12);
            assert!((fp.g.samples[i] - (1.0 - C64::i() * e)).norm() < 1e-12);
        }
        // g is the conjugate reflection of f about t0 = 0, away from the horizon ends
        let r = conj_reflect(&fp.f, 0.0).unwrap();
        assert!(r.samples.iter().zip(&fp.g.samples).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn periodic_guards() {
        let pair = WindowPair::rectangular(GridSpec::new(1.0, 8, 24, 48).unwrap(), 0.25).unwrap();
        let base = RationalPeriodicParams {
            period: 2.0,
            q: 1,
            t0: 0.0,
            t1: Some(0.75),
            c0: C64::new(1.0, 0.0),
            cq: C64::new(0.0, 1.0),
        };
        assert!(forge_rational_periodic(&pair, base).is_err());
        let equivalent = RationalPeriodicParams { t1: None, cq: C64::new(1.0, 0.0), ..base };
        let err = forge_rational_periodic(&pair, equivalent).unwrap_err();
        assert!(err.to_string().contains("pair would be equivalent"));
    }

    #[test]
    fn quasiperiodic_structure() {
        let fp = forge_default(Claim::QuasiperiodicFlip, 0).unwrap();
        let grid = fp.f.grid;
        for i in 0..grid.horizon {
            let x = grid.midpoint(grid.cell_of_index(i));
            if (-1.0..1.0).contains(&x) {
                assert_eq!(fp.f.samples[i], fp.g.samples[i]);
            }
            if (-0.25..1.75).contains(&x) {
                assert_eq!(fp.f.samples[i], -fp.g.samples[i]);
            }
        }
        assert!(is_separable(&fp.f, 0.5, 0.0));
    }

    #[test]
    fn narrower_gap_breaks_equality() {
        let pair = WindowPair::rectangular(GridSpec::new(1.0, 8, 32, 64).unwrap(), 0.25).unwrap();
        let fp = separable_with_gap(&pair, 0.5, 5, 2).unwrap();
        assert!(max_dev(&fp, &fp.nodes) > 1e-3);
    }

    #[test]
    fn wide_step_needs_wide_lattice() {
        let pair = WindowPair::rectangular(GridSpec::new(1.0, 8, 32, 64).unwrap(), 0.25).unwrap();
        assert!(forge_wide_step(&pair, 1.0, 3).is_err());
        let fp = forge_wide_step(&pair, 1.5, 3).unwrap();
        let narrow = TimeNodes::lattice(&pair.grid, 1.0).unwrap();
        assert!(max_dev(&fp, &narrow) > 1e-3);
    }

    #[test]
    fn claim_names_parse() {
        for c in Claim::ALL {
            assert_eq!(Claim::parse(c.name()), Some(c));
        }
        assert_eq!(Claim::parse("separable"), Some(Claim::SeparableGap));
        assert_eq!(Claim::parse("bogus"), None);
    }
}
