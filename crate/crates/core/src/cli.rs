//! Command-line front end. Exit codes: 0 success or unique, 2 unresolved ambiguity or
//! unexpected oracle outcome, 1 error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forge::{
    forge_quasiperiodic_flip, forge_rational_lattice, forge_rational_periodic, forge_separable, forge_wide_step, Claim,
    ForgedPair, RationalPeriodicParams,
};
use crate::io::{
    load_measurements, load_signal, measurement_csv, read_json, save_measurements, save_signal, signal_csv,
    spectrogram_csv, step_profile, step_profile_csv, write_json, write_text, AnchorPolicy, ForgeManifest, ReportFile,
    RunConfig,
};
use crate::signal::{phase_align, random_nonseparable, GridSpec, Signal, C64};
use crate::stft::{measure, FrequencyGrid, MeasurementSet, TimeNodes};
use crate::stitch::reconstruct;
use crate::verify::{
    matches_wide_step, measurements_equal, uniqueness_oracle, AlphabetFamily, OracleConfig, SignalFamily,
};
use crate::window::WindowPair;

#[derive(Parser, Debug)]
#[command(name = "stftpr", version, about = "Phase retrieval from two-window STFT magnitudes")]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

/// Grid and lattice parameters; unset values take the defaults of the command.
#[derive(clap::Args, Debug, Clone, Default)]
pub struct GlobalOpts {
    /// Window half-width.
    #[arg(long = "B", global = true)]
    pub half_support: Option<f64>,
    /// Samples per window (even).
    #[arg(long = "L", global = true)]
    pub cells: Option<usize>,
    /// Lattice step.
    #[arg(long, global = true)]
    pub a: Option<f64>,
    /// Modulation of the second window.
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// Number of samples in the signal horizon.
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Measurement comparison tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Anchor policy name, or a time value.
    #[arg(long, global = true)]
    pub anchor: Option<String>,
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Measure a signal file, or a seeded random signal when no input is given.
    Measure {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        /// Also write the generated signal here.
        #[arg(long)]
        signal_out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Reconstruct from a measurement file.
    Recover {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        signal_out: Option<PathBuf>,
        /// Ground truth used to report the aligning phase.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Write a counterexample pair and its manifest.
    Forge {
        claim: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Compare two signals, or run an exhaustive oracle scan.
    Verify {
        #[arg(long, value_enum, default_value_t = VerifyMode::Pair)]
        mode: VerifyMode,
        /// Forge manifest naming the pair, its nodes and its window.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        f: Option<PathBuf>,
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OracleFamily::Blocks)]
        family: OracleFamily,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emit CSV from any JSON file this tool writes.
    Plot {
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Selftest {
        /// Run only this criterion.
        #[arg(long)]
        only: Option<usize>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    Pair,
    Oracle,
    Selftest,
}

/// Exhaustive families with their predicted outcome.
#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleFamily {
    /// Length-4 blocks on `L = 4`, nonseparable, lattice step `a`: no violations for `a <= B`.
    Blocks,
    /// Blocks around a forced gap of `2B - a`: violations expected.
    Separable,
}

impl GlobalOpts {
    /// Merges flags over the config file over `base`, then validates.
    pub fn resolve(&self, base: RunConfig) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => read_json(p)?,
            None => base,
        };
        if let Some(v) = self.half_support {
            c.half_support = v;
        }
        if let Some(v) = self.cells {
            c.cells = v;
        }
        if let Some(v) = self.a {
            c.a = v;
        }
        if let Some(v) = self.b {
            c.b = v;
        }
        if let Some(v) = self.horizon {
            c.horizon = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.tol {
            c.tol = Some(v);
        }
        if let Some(v) = &self.anchor {
            c.anchor = AnchorPolicy::parse(v)?;
        }
        c.validate()?;
        Ok(c)
    }
}

fn claim_defaults(claim: Claim) -> RunConfig {
    let (a, horizon) = match claim {
        Claim::SeparableGap => (0.5, 64),
        Claim::WideStep => (1.5, 64),
        Claim::RationalPeriodic => (1.0, 48),
        Claim::QuasiperiodicFlip => (1.0, 24),
        Claim::RationalLattice => (0.5, 48),
    };
    RunConfig { a, horizon, ..RunConfig::default() }
}

/// Forges with the claim's defaults overridden by the run configuration.
pub fn forge_configured(claim: Claim, c: &RunConfig) -> Result<ForgedPair> {
    let origin = match claim {
        Claim::QuasiperiodicFlip => c.horizon as i64 / 3,
        _ => c.horizon as i64 / 2,
    };
    let pair = WindowPair::rectangular(GridSpec::new(c.half_support, c.cells, origin, c.horizon)?, c.b)?;
    let b = c.half_support;
    match claim {
        Claim::SeparableGap => forge_separable(&pair, c.a, c.seed),
        Claim::WideStep => forge_wide_step(&pair, c.a, c.seed),
        Claim::RationalPeriodic => forge_rational_periodic(
            &pair,
            RationalPeriodicParams {
                period: 2.0 * b,
                q: 1,
                t0: 0.0,
                t1: None,
                c0: C64::new(1.0, 0.0),
                cq: C64::new(0.0, 1.0),
            },
        ),
        Claim::QuasiperiodicFlip => forge_quasiperiodic_flip(&pair, 1.5 * b, 0.5, C64::new(1.0, 0.0)),
        Claim::RationalLattice => forge_rational_lattice(&pair, c.a),
    }
}

#[derive(Serialize)]
struct PairVerdict {
    verdict: &'static str,
    measurements_equal: bool,
    max_deviation: f64,
    distance: f64,
    tolerance: f64,
}

fn compare(f: &Signal, g: &Signal, pair: &WindowPair, nodes: &TimeNodes, tol: f64) -> Result<PairVerdict> {
    let freqs = FrequencyGrid::critical(&pair.grid);
    let (equal, dev) = measurements_equal(&measure(f, pair, nodes, &freqs)?, &measure(g, pair, nodes, &freqs)?, tol)?;
    let distance = phase_align(&f.samples, &g.samples).1.min(phase_align(&g.samples, &f.samples).1);
    let verdict = match (equal, distance <= 1e-6) {
        (true, true) => "equivalent",
        (true, false) => "equal measurements, inequivalent signals",
        (false, true) => "equivalent signals with unequal measurements",
        (false, false) => "different measurements",
    };
    Ok(PairVerdict { verdict, measurements_equal: equal, max_deviation: dev, distance, tolerance: tol })
}

fn emit<T: Serialize>(output: Option<&Path>, value: &T) -> Result<()> {
    match output {
        Some(p) => write_json(p, value),
        None => {
            println!(
                "{}",
                serde_json::to_string_pretty(value)
                    .map_err(|source| Error::Json { context: "stdout".into(), source })?
            );
            Ok(())
        }
    }
}

fn emit_text(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_measure(
    c: &RunConfig,
    input: Option<&Path>,
    output: &Path,
    signal_out: Option<&Path>,
    csv: Option<&Path>,
) -> Result<i32> {
    let f = match input {
        Some(p) => load_signal(p)?,
        None => random_nonseparable(c.grid()?, c.horizon / 2, 2.0 * c.half_support - c.a.min(c.half_support), c.seed)?,
    };
    let pair = WindowPair::rectangular(f.grid, c.b)?;
    let nodes = TimeNodes::lattice(&f.grid, c.a)?;
    let nodes = match c.anchor.resolve(&f.grid, c.a) {
        Some(t) => nodes.with_anchor(t)?,
        None => nodes,
    };
    let ms = measure(&f, &pair, &nodes, &FrequencyGrid::critical(&f.grid))?;
    save_measurements(output, &ms)?;
    if let Some(p) = signal_out {
        save_signal(p, &f)?;
    }
    if let Some(p) = csv {
        write_text(p, &measurement_csv(&ms))?;
    }
    Ok(0)
}

fn cmd_recover(input: &Path, output: &Path, signal_out: Option<&Path>, reference: Option<&Path>) -> Result<i32> {
    let ms = load_measurements(input)?;
    let report = reconstruct(&ms, &ms.pair)?;
    let truth = reference.map(load_signal).transpose()?;
    write_json(output, &ReportFile::of(&report, truth.as_ref()))?;
    if let Some(p) = signal_out {
        save_signal(p, &report.signal)?;
    }
    Ok(if report.ambiguity.is_resolved() { 0 } else { 2 })
}

fn cmd_forge(opts: &GlobalOpts, name: &str, out_dir: &Path) -> Result<i32> {
    let claim = Claim::parse(name).ok_or_else(|| {
        let names: Vec<&str> = Claim::ALL.iter().map(|c| c.name()).collect();
        Error::Config(format!("unknown claim {name:?}; expected one of {}", names.join(", ")))
    })?;
    let c = opts.resolve(claim_defaults(claim))?;
    let fp = forge_configured(claim, &c)?;
    let dev = compare(&fp.f, &fp.g, &fp.pair, &fp.nodes, c.tolerance())?.max_deviation;
    let (fpath, gpath) = (out_dir.join("f.json"), out_dir.join("g.json"));
    save_signal(&fpath, &fp.f)?;
    save_signal(&gpath, &fp.g)?;
    let mut manifest = ForgeManifest::of(&fp, dev, "f.json".into(), "g.json".into());
    manifest.params.insert("B".into(), c.half_support);
    manifest.params.insert("L".into(), c.cells as f64);
    manifest.params.insert("b".into(), c.b);
    manifest.params.insert("horizon".into(), c.horizon as f64);
    manifest.params.insert("seed".into(), c.seed as f64);
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(0)
}

fn cmd_verify_pair(
    opts: &GlobalOpts,
    manifest: Option<&Path>,
    f: Option<&Path>,
    g: Option<&Path>,
    output: Option<&Path>,
) -> Result<i32> {
    let (f, g, pair, nodes, tol) = match manifest {
        Some(m) => {
            let man: ForgeManifest = read_json(m)?;
            let dir = m.parent().unwrap_or(Path::new("."));
            let tol = opts.tol.unwrap_or(1e-10);
            (load_signal(&dir.join(&man.f))?, load_signal(&dir.join(&man.g))?, man.window.build()?, man.nodes, tol)
        }
        None => {
            let (Some(f), Some(g)) = (f, g) else {
                return Err(Error::Config("verify needs --manifest or both --f and --g".into()));
            };
            let c = opts.resolve(RunConfig::default())?;
            let f = load_signal(f)?;
            let pair = WindowPair::rectangular(f.grid, c.b)?;
            let mut nodes = TimeNodes::lattice(&f.grid, c.a)?;
            if let Some(t) = c.anchor.resolve(&f.grid, c.a) {
                nodes = nodes.with_anchor(t)?;
            }
            (f, load_signal(g)?, pair, nodes, c.tolerance())
        }
    };
    let verdict = compare(&f, &g, &pair, &nodes, tol)?;
    emit(output, &verdict)?;
    Ok(0)
}

fn cmd_verify_oracle(opts: &GlobalOpts, family: OracleFamily, output: Option<&Path>) -> Result<i32> {
    let base = RunConfig { cells: 4, horizon: 16, ..RunConfig::default() };
    let c = opts.resolve(base)?;
    let pair = c.window()?;
    let grid = pair.grid;
    let alphabet = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0)];
    let half = c.cells as i64 / 2;
    let gap = 2.0 * c.half_support - c.a;
    let fam = match family {
        OracleFamily::Blocks => {
            AlphabetFamily::new(grid, -half, c.cells, alphabet, vec![], Some(gap.max(grid.delta())), "blocks")?
        }
        OracleFamily::Separable => {
            let gap_cells = grid.require_edge(gap)? as usize;
            let zeros = (half as usize..half as usize + gap_cells).collect();
            AlphabetFamily::new(
                grid,
                -(c.cells as i64),
                c.cells + gap_cells,
                alphabet,
                zeros,
                None,
                "separable blocks",
            )?
        }
    };
    let config = OracleConfig::lattice(&pair, c.a)?;
    let report = uniqueness_oracle(&config, &fam)?;
    let wide = c.a > c.half_support * (1.0 + 1e-12);
    let expected_violations = wide || family == OracleFamily::Separable;
    let mut matches = report.violations.is_empty() != expected_violations;
    if wide && family == OracleFamily::Blocks {
        matches &= report
            .violations
            .iter()
            .all(|v| matches_wide_step(&fam.instance(v.f), &fam.instance(v.g), &config.nodes, c.a));
    }
    #[derive(Serialize)]
    struct Out<'a> {
        expected_violations: bool,
        matches_prediction: bool,
        report: &'a crate::verify::OracleReport,
    }
    emit(output, &Out { expected_violations, matches_prediction: matches, report: &report })?;
    Ok(if matches { 0 } else { 2 })
}

fn cmd_selftest(only: Option<usize>) -> Result<i32> {
    let ids: Vec<usize> = match only {
        Some(i) if (1..=crate::selftest::CRITERIA.len()).contains(&i) => vec![i],
        Some(i) => return Err(Error::Config(format!("no criterion {i}"))),
        None => (1..=crate::selftest::CRITERIA.len()).collect(),
    };
    let mut all = true;
    for id in ids {
        let o = crate::selftest::run_criterion(id);
        all &= o.passed;
        println!("{o}");
    }
    Ok(if all { 0 } else { 2 })
}

fn cmd_plot(input: &Path, output: Option<&Path>) -> Result<i32> {
    let text =
        std::fs::read_to_string(input).map_err(|source| Error::Io { context: input.display().to_string(), source })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| Error::Json { context: input.display().to_string(), source })?;
    let csv = if value.get("mags").is_some() {
        let ms: MeasurementSet = load_measurements(input)?;
        spectrogram_csv(&ms)
    } else if value.get("claim").is_some() {
        let man: ForgeManifest = read_json(input)?;
        let dir = input.parent().unwrap_or(Path::new("."));
        let f = load_signal(&dir.join(&man.f))?;
        let g = load_signal(&dir.join(&man.g))?;
        let (lo, hi) = f.grid.cell_range();
        let (range, marks) = match &man.plot {
            Some(h) => (h.range, h.marks.clone()),
            None => ((lo as f64 * f.grid.delta(), hi as f64 * f.grid.delta()), Vec::new()),
        };
        step_profile_csv(&step_profile(&f, &g, range, &marks)?)
    } else if value.get("ambiguity").is_some() {
        let r: ReportFile = read_json(input)?;
        signal_csv(&r.signal)
    } else {
        signal_csv(&load_signal(input)?)
    };
    emit_text(output, &csv)?;
    Ok(0)
}

pub fn run(cli: Cli) -> Result<i32> {
    let opts = &cli.opts;
    match &cli.command {
        Command::Measure { input, output, signal_out, csv } => {
            let c = opts.resolve(RunConfig::default())?;
            cmd_measure(&c, input.as_deref(), output, signal_out.as_deref(), csv.as_deref())
        }
        Command::Recover { input, output, signal_out, reference } => {
            cmd_recover(input, output, signal_out.as_deref(), reference.as_deref())
        }
        Command::Forge { claim, out_dir } => cmd_forge(opts, claim, out_dir),
        Command::Verify { mode: VerifyMode::Selftest, .. } => cmd_selftest(None),
        Command::Verify { mode: VerifyMode::Oracle, family, output, .. } => {
            cmd_verify_oracle(opts, *family, output.as_deref())
        }
        Command::Verify { mode: VerifyMode::Pair, manifest, f, g, output, .. } => {
            cmd_verify_pair(opts, manifest.as_deref(), f.as_deref(), g.as_deref(), output.as_deref())
        }
        Command::Plot { input, output } => cmd_plot(input, output.as_deref()),
        Command::Selftest { only } => cmd_selftest(*only),
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
