//! File formats and run configuration for the command-line tool.
//!
//! Structured data is JSON and plot data is CSV. Floats go through the shortest
//! round-trip representation, so every file reads back bit-exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forge::{ForgedPair, PlotHints};
use crate::local::CandidateScore;
use crate::signal::{GridSpec, Signal, C64};
use crate::stft::{FrequencyGrid, MeasurementSet, TimeNodes};
use crate::stitch::{Ambiguity, ReconstructionReport};
use crate::window::{build_window, WindowKind, WindowPair, WindowProfile};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let context = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| Error::Io { context: context.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| Error::Json { context, source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let context = path.display().to_string();
    let text =
        serde_json::to_string_pretty(value).map_err(|source| Error::Json { context: context.clone(), source })?;
    write_text(path, &(text + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io { context: dir.display().to_string(), source })?;
    }
    fs::write(path, text).map_err(|source| Error::Io { context: path.display().to_string(), source })
}

/// Window description; samples are regenerated and re-validated on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowFile {
    pub grid: GridSpec,
    pub profile: WindowProfile,
    pub b: f64,
}

impl WindowFile {
    pub fn of(pair: &WindowPair) -> Self {
        WindowFile { grid: pair.grid, profile: pair.profile.clone(), b: pair.b }
    }

    pub fn build(&self) -> Result<WindowPair> {
        build_window(self.profile.clone(), self.grid, self.b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEntry {
    pub w: WindowKind,
    pub t_index: usize,
    pub n: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFile {
    pub window: WindowFile,
    pub nodes: TimeNodes,
    pub freqs: FrequencyGrid,
    pub mags: Vec<MeasurementEntry>,
}

impl MeasurementFile {
    pub fn of(ms: &MeasurementSet) -> Self {
        let mut mags = Vec::with_capacity(2 * ms.phi.len() * ms.freqs.len());
        for w in WindowKind::BOTH {
            let rows = match w {
                WindowKind::Phi => &ms.phi,
                WindowKind::Psi => &ms.psi,
            };
            for (t_index, row) in rows.iter().enumerate() {
                for (n, &value) in row.iter().enumerate() {
                    mags.push(MeasurementEntry { w, t_index, n, value });
                }
            }
        }
        MeasurementFile { window: WindowFile::of(&ms.pair), nodes: ms.nodes.clone(), freqs: ms.freqs.clone(), mags }
    }

    /// Every (window, node, frequency) triple must appear exactly once.
    pub fn into_set(self) -> Result<MeasurementSet> {
        let pair = self.window.build()?;
        let (nt, nf) = (self.nodes.len(), self.freqs.len());
        let mut phi = vec![vec![f64::NAN; nf]; nt];
        let mut psi = vec![vec![f64::NAN; nf]; nt];
        for (i, e) in self.mags.iter().enumerate() {
            if e.t_index >= nt || e.n >= nf {
                return Err(Error::InvalidNodes(format!("entry {i}: index ({}, {}) out of range", e.t_index, e.n)));
            }
            let slot = match e.w {
                WindowKind::Phi => &mut phi[e.t_index][e.n],
                WindowKind::Psi => &mut psi[e.t_index][e.n],
            };
            if !slot.is_nan() {
                return Err(Error::InvalidNodes(format!("entry {i}: duplicate index ({}, {})", e.t_index, e.n)));
            }
            if !(e.value >= 0.0 && e.value.is_finite()) {
                return Err(Error::InvalidNodes(format!(
                    "entry {i}: magnitude {} is not a finite nonnegative number",
                    e.value
                )));
            }
            *slot = e.value;
        }
        if phi.iter().chain(&psi).flatten().any(|v| v.is_nan()) {
            return Err(Error::InvalidNodes("measurement file is missing entries".into()));
        }
        Ok(MeasurementSet { pair, nodes: self.nodes, freqs: self.freqs, phi, psi })
    }
}

pub fn save_measurements(path: &Path, ms: &MeasurementSet) -> Result<()> {
    write_json(path, &MeasurementFile::of(ms))
}

pub fn load_measurements(path: &Path) -> Result<MeasurementSet> {
    read_json::<MeasurementFile>(path)?.into_set()
}

pub fn save_signal(path: &Path, f: &Signal) -> Result<()> {
    write_json(path, f)
}

pub fn load_signal(path: &Path) -> Result<Signal> {
    let f: Signal = read_json(path)?;
    Signal::new(f.grid, f.samples)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub ambiguity: Ambiguity,
    pub residual: f64,
    /// Phase taking the recovered signal to the reference, when one was supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<C64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_distance: Option<f64>,
    pub signal: Signal,
    pub anchor_used: bool,
    pub node_phases: Vec<C64>,
    pub alternatives: Vec<Signal>,
    pub coverage: (i64, i64),
    pub notes: Vec<String>,
}

impl ReportFile {
    pub fn of(r: &ReconstructionReport, reference: Option<&Signal>) -> Self {
        let aligned = reference.map(|f| crate::signal::phase_align(&f.samples, &r.signal.samples));
        ReportFile {
            ambiguity: r.ambiguity,
            residual: r.residual,
            lambda: aligned.map(|a| a.0),
            reference_distance: aligned.map(|a| a.1),
            signal: r.signal.clone(),
            anchor_used: r.anchor_used,
            node_phases: r.node_phases.clone(),
            alternatives: r.alternatives.clone(),
            coverage: r.coverage,
            notes: r.notes.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForgeManifest {
    pub claim: String,
    pub params: BTreeMap<String, f64>,
    pub min_distance: f64,
    pub measurement_deviation: f64,
    pub window: WindowFile,
    pub nodes: TimeNodes,
    pub f: PathBuf,
    pub g: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotHints>,
}

impl ForgeManifest {
    pub fn of(fp: &ForgedPair, deviation: f64, f: PathBuf, g: PathBuf) -> Self {
        ForgeManifest {
            claim: fp.claim.name().to_string(),
            params: fp.params.clone(),
            min_distance: fp.min_distance,
            measurement_deviation: deviation,
            window: WindowFile::of(&fp.pair),
            nodes: fp.nodes.clone(),
            f,
            g,
            plot: fp.plot.clone(),
        }
    }
}

/// Columns `w,t,n,omega,value`, one row per magnitude.
pub fn measurement_csv(ms: &MeasurementSet) -> String {
    let omegas = ms.freqs.omegas(&ms.pair.grid);
    let idx = ms.freqs.indices();
    let mut out = String::from("w,t,n,omega,value\n");
    for w in WindowKind::BOTH {
        for (ti, t) in ms.nodes.times.iter().enumerate() {
            for (k, v) in ms.mags(w, ti).iter().enumerate() {
                let _ = writeln!(out, "{},{t},{},{},{v}", w.name(), idx[k], omegas[k]);
            }
        }
    }
    out
}

/// Columns `t,n,omega,mag_phi,mag_psi`: spectrogram heat data for both windows.
pub fn spectrogram_csv(ms: &MeasurementSet) -> String {
    let omegas = ms.freqs.omegas(&ms.pair.grid);
    let idx = ms.freqs.indices();
    let mut out = String::from("t,n,omega,mag_phi,mag_psi\n");
    for (ti, t) in ms.nodes.times.iter().enumerate() {
        for k in 0..omegas.len() {
            let _ = writeln!(out, "{t},{},{},{},{}", idx[k], omegas[k], ms.phi[ti][k], ms.psi[ti][k]);
        }
    }
    out
}

/// Maps negative zeros to zero so CSV columns never print `-0`.
fn unsigned(z: C64) -> C64 {
    C64::new(z.re + 0.0, z.im + 0.0)
}

/// Columns `x,re_f,im_f,abs_f`, one row per cell midpoint.
pub fn signal_csv(f: &Signal) -> String {
    let mut out = String::from("x,re_f,im_f,abs_f\n");
    for (i, z) in f.samples.iter().enumerate() {
        let z = unsigned(*z);
        let _ = writeln!(out, "{},{},{},{}", f.grid.midpoint(f.grid.cell_of_index(i)), z.re, z.im, z.norm());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRow {
    pub x: f64,
    pub f: C64,
    pub g: C64,
}

/// Step profile of a pair over `range`: one row per breakpoint, holding the values on
/// `[x, next)`. Breakpoints are the range ends plus the `marks`; each cell edge where
/// `f` or `g` changes value is one as well.
pub fn step_profile(f: &Signal, g: &Signal, range: (f64, f64), marks: &[f64]) -> Result<Vec<StepRow>> {
    f.grid.require_compatible(&g.grid)?;
    let grid = f.grid;
    let lo = grid.require_edge(range.0)?;
    let hi = grid.require_edge(range.1)?;
    let mut edges: Vec<i64> = vec![lo, hi];
    for m in marks {
        let e = grid.require_edge(*m)?;
        if (lo..=hi).contains(&e) {
            edges.push(e);
        }
    }
    for e in lo + 1..hi {
        if f.at_cell(e) != f.at_cell(e - 1) || g.at_cell(e) != g.at_cell(e - 1) {
            edges.push(e);
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges.into_iter().map(|e| StepRow { x: e as f64 * grid.delta(), f: f.at_cell(e), g: g.at_cell(e) }).collect())
}

/// Columns `x,re_f,im_f,abs_f,re_g,im_g,abs_g`.
pub fn step_profile_csv(rows: &[StepRow]) -> String {
    let mut out = String::from("x,re_f,im_f,abs_f,re_g,im_g,abs_g\n");
    for r in rows {
        let (f, g) = (unsigned(r.f), unsigned(r.g));
        let _ = writeln!(out, "{},{},{},{},{},{},{}", r.x + 0.0, f.re, f.im, f.norm(), g.re, g.im, g.norm());
    }
    out
}

/// Columns `id,defect`.
pub fn candidate_csv(scores: &[CandidateScore]) -> String {
    let mut out = String::from("id,defect\n");
    for s in scores {
        let _ = writeln!(out, "{},{}", s.id, s.defect);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorPolicy {
    None,
    /// The default off-lattice anchor `a (1/2 + 1/(2 horizon))`.
    Incommensurate,
    Value(f64),
}

impl AnchorPolicy {
    /// Accepts a policy name or a time, optionally written `value:<t>`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AnchorPolicy::None),
            "incommensurate" => Ok(AnchorPolicy::Incommensurate),
            _ => s
                .strip_prefix("value:")
                .or(Some(s))
                .and_then(|v| v.parse().ok())
                .map(AnchorPolicy::Value)
                .ok_or_else(|| Error::Config(format!("anchor must be none, incommensurate or a number, got {s:?}"))),
        }
    }

    pub fn resolve(self, grid: &GridSpec, a: f64) -> Option<f64> {
        match self {
            AnchorPolicy::None => None,
            AnchorPolicy::Incommensurate => Some(TimeNodes::default_anchor(grid, a)),
            AnchorPolicy::Value(t) => Some(t),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(rename = "B")]
    pub half_support: f64,
    #[serde(rename = "L")]
    pub cells: usize,
    pub a: f64,
    pub b: f64,
    pub horizon: usize,
    pub anchor: AnchorPolicy,
    pub seed: u64,
    /// Overrides the measurement comparison tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            half_support: 1.0,
            cells: 8,
            a: 1.0,
            b: 0.25,
            horizon: 64,
            anchor: AnchorPolicy::None,
            seed: 7,
            tol: None,
            input: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let c: RunConfig = read_json(path)?;
        c.validate()?;
        Ok(c)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::centered(self.half_support, self.cells, self.horizon)
    }

    pub fn window(&self) -> Result<WindowPair> {
        WindowPair::rectangular(self.grid()?, self.b)
    }

    pub fn nodes(&self) -> Result<TimeNodes> {
        let grid = self.grid()?;
        let nodes = TimeNodes::lattice(&grid, self.a)?;
        match self.anchor.resolve(&grid, self.a) {
            Some(t) => nodes.with_anchor(t),
            None => Ok(nodes),
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tol.unwrap_or(1e-10)
    }

    pub fn validate(&self) -> Result<()> {
        self.window()?;
        self.nodes()?;
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("tolerance must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::{forge_default, Claim};
    use crate::signal::random_nonseparable;
    use crate::stft::measure;

    #[test]
    fn measurement_roundtrip_is_exact() {
        let c = RunConfig { anchor: AnchorPolicy::Incommensurate, ..RunConfig::default() };
        let f = random_nonseparable(c.grid().unwrap(), 20, 1.0, 3).unwrap();
        let ms = measure(&f, &c.window().unwrap(), &c.nodes().unwrap(), &FrequencyGrid::critical(&f.grid)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        save_measurements(&p, &ms).unwrap();
        assert_eq!(load_measurements(&p).unwrap(), ms);
        let s = dir.path().join("f.json");
        save_signal(&s, &f).unwrap();
        assert_eq!(load_signal(&s).unwrap(), f);
    }

    #[test]
    fn incomplete_file_rejected() {
        let c = RunConfig::default();
        let f = Signal::zeros(c.grid().unwrap());
        let ms = measure(&f, &c.window().unwrap(), &c.nodes().unwrap(), &FrequencyGrid::critical(&f.grid)).unwrap();
        let mut file = MeasurementFile::of(&ms);
        file.mags.pop();
        assert!(file.clone().into_set().is_err());
        let last = file.mags[0].clone();
        file.mags.push(last);
        assert!(file.into_set().is_err());
    }

    #[test]
    fn parse_errors_carry_position() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        write_text(&p, "{\n  \"grid\": 3,\n").unwrap();
        let e = load_signal(&p).unwrap_err().to_string();
        assert!(e.contains("bad.json") && e.contains("line"), "{e}");
    }

    #[test]
    fn anchor_policies() {
        assert_eq!(AnchorPolicy::parse("none").unwrap(), AnchorPolicy::None);
        assert_eq!(AnchorPolicy::parse("value:0.3").unwrap(), AnchorPolicy::Value(0.3));
        assert_eq!(AnchorPolicy::parse("-0.7").unwrap(), AnchorPolicy::Value(-0.7));
        assert!(AnchorPolicy::parse("later").is_err());
        let bad = RunConfig { a: 0.3, ..RunConfig::default() };
        assert!(bad.validate().is_err());
        let bad = RunConfig { anchor: AnchorPolicy::Value(1.0), ..RunConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn flip_pair_breakpoints() {
        let fp = forge_default(Claim::QuasiperiodicFlip, 0).unwrap();
        let hints = fp.plot.clone().unwrap();
        let rows = step_profile(&fp.f, &fp.g, hints.range, &hints.marks).unwrap();
        let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
        assert_eq!(xs, vec![-1.0, -0.5, -0.25, 0.5, 1.0, 1.25, 2.0, 2.5]);
        assert!(step_profile_csv(&rows).starts_with("x,re_f,im_f,abs_f,re_g,im_g,abs_g\n"));
    }

    #[test]
    fn empty_measurement_csv_is_header_only() {
        let c = RunConfig::default();
        let f = Signal::zeros(c.grid().unwrap());
        let ms = measure(&f, &c.window().unwrap(), &c.nodes().unwrap(), &FrequencyGrid::critical(&f.grid)).unwrap();
        let empty =
            MeasurementSet { phi: vec![], psi: vec![], nodes: TimeNodes { times: vec![], ..ms.nodes.clone() }, ..ms };
        assert_eq!(spectrogram_csv(&empty), "t,n,omega,mag_phi,mag_psi\n");
        assert_eq!(measurement_csv(&empty), "w,t,n,omega,value\n");
    }
}
