//! Window pairs `(phi, psi)` with `psi(x) = phi(x) (e^{2 pi i b x} - 1)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{GridSpec, C64};

pub const EPS_WIN: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowProfile {
    Rectangular,
    /// `c0 + c1 cos(pi x / B)` with `c0 > c1 >= 0`.
    RaisedCosine {
        c0: f64,
        c1: f64,
    },
    /// Samples at the `L` cell midpoints of `[-B, B)`.
    Samples(Vec<C64>),
}

impl WindowProfile {
    pub fn name(&self) -> &'static str {
        match self {
            WindowProfile::Rectangular => "rectangular",
            WindowProfile::RaisedCosine { .. } => "raised-cosine",
            WindowProfile::Samples(_) => "samples",
        }
    }

    fn analytic(&self, y: f64, half: f64) -> Option<C64> {
        match self {
            WindowProfile::Rectangular => Some(C64::new(1.0, 0.0)),
            WindowProfile::RaisedCosine { c0, c1 } => Some(C64::new(c0 + c1 * (PI * y / half).cos(), 0.0)),
            WindowProfile::Samples(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowPair {
    pub grid: GridSpec,
    pub profile: WindowProfile,
    pub phi: Vec<C64>,
    pub psi: Vec<C64>,
    pub b: f64,
}

/// Offset of window sample `j` from the window center.
pub fn offset(grid: &GridSpec, j: usize) -> f64 {
    (j as f64 - grid.cells as f64 / 2.0 + 0.5) * grid.delta()
}

pub fn modulation(b: f64, y: f64) -> C64 {
    C64::from_polar(1.0, TAU * b * y) - 1.0
}

pub fn derive_second_window(phi: &[C64], grid: &GridSpec, b: f64) -> Vec<C64> {
    phi.iter().enumerate().map(|(j, p)| p * modulation(b, offset(grid, j))).collect()
}

pub fn build_window(profile: WindowProfile, grid: GridSpec, b: f64) -> Result<WindowPair> {
    grid.validate()?;
    let max_b = 1.0 / (2.0 * grid.half_support);
    if !(b > 0.0 && b <= max_b * (1.0 + 1e-12)) {
        return Err(Error::ModulationOutOfRange { b, max: max_b });
    }
    let phi: Vec<C64> = match &profile {
        WindowProfile::Samples(s) => {
            if s.len() != grid.cells {
                return Err(Error::SampleCount { expected: grid.cells, got: s.len() });
            }
            s.clone()
        }
        WindowProfile::RaisedCosine { c0, c1 } if !(c0 > c1 && *c1 >= 0.0) => {
            return Err(Error::InvalidWindow(format!("raised cosine needs c0 > c1 >= 0, got c0 = {c0}, c1 = {c1}")));
        }
        p => (0..grid.cells)
            .map(|j| p.analytic(offset(&grid, j), grid.half_support).expect("analytic profile"))
            .collect(),
    };
    for (j, p) in phi.iter().enumerate() {
        if p.norm().is_nan() || p.norm() < EPS_WIN {
            return Err(Error::WindowInvariant { invariant: "nonvanishing", index: j });
        }
    }
    let scale = phi.iter().map(|p| p.norm()).fold(0.0, f64::max);
    for j in 0..grid.cells {
        let mirror = phi[grid.cells - 1 - j];
        if (phi[j] - mirror.conj()).norm() > SYMMETRY_TOL * scale {
            return Err(Error::WindowInvariant { invariant: "conjugate symmetry", index: j });
        }
    }
    let psi = derive_second_window(&phi, &grid, b);
    Ok(WindowPair { grid, profile, phi, psi, b })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Phi,
    Psi,
}

impl WindowKind {
    pub const BOTH: [WindowKind; 2] = [WindowKind::Phi, WindowKind::Psi];

    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Phi => "phi",
            WindowKind::Psi => "psi",
        }
    }
}

impl WindowPair {
    pub fn rectangular(grid: GridSpec, b: f64) -> Result<Self> {
        build_window(WindowProfile::Rectangular, grid, b)
    }

    pub fn samples(&self, kind: WindowKind) -> &[C64] {
        match kind {
            WindowKind::Phi => &self.phi,
            WindowKind::Psi => &self.psi,
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.profile, WindowProfile::Samples(_))
    }

    /// `phi(y)`; zero outside `[-B, B)`. `None` for sampled profiles off the sample points.
    pub fn phi_at(&self, y: f64) -> Option<C64> {
        let half = self.grid.half_support;
        if y < -half || y >= half {
            return Some(C64::new(0.0, 0.0));
        }
        match &self.profile {
            WindowProfile::Samples(s) => {
                let j = crate::signal::snap(y / self.grid.delta() + self.grid.cells as f64 / 2.0 - 0.5)?;
                s.get(usize::try_from(j).ok()?).copied()
            }
            p => p.analytic(y, half),
        }
    }

    pub fn psi_at(&self, y: f64) -> Option<C64> {
        self.phi_at(y).map(|p| p * modulation(self.b, y))
    }

    pub fn at(&self, kind: WindowKind, y: f64) -> Option<C64> {
        match kind {
            WindowKind::Phi => self.phi_at(y),
            WindowKind::Psi => self.psi_at(y),
        }
    }

    /// `max |phi| / min |phi|` over the support samples.
    pub fn condition(&self) -> f64 {
        let (lo, hi) =
            self.phi.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.norm()), hi.max(p.norm())));
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(l: usize) -> GridSpec {
        GridSpec::centered(1.0, l, 4 * l).unwrap()
    }

    #[test]
    fn rectangular_pair_closed_form() {
        let w = WindowPair::rectangular(grid(8), 0.25).unwrap();
        for j in 0..8 {
            let y = offset(&w.grid, j);
            assert_eq!(w.phi[j], C64::new(1.0, 0.0));
            let expect = 2.0 * (PI * y / 4.0).sin().abs();
            assert!((w.psi[j].norm() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_sample_is_named() {
        let mut s = vec![C64::new(1.0, 0.0); 8];
        s[1] = C64::new(0.0, 0.0);
        s[6] = C64::new(0.0, 0.0);
        let err = build_window(WindowProfile::Samples(s), grid(8), 0.25).unwrap_err();
        assert_eq!(err.to_string(), "nonvanishing violated at index 1");
    }

    #[test]
    fn asymmetric_samples_rejected() {
        let mut s = vec![C64::new(1.0, 0.0); 8];
        s[2] = C64::new(1.0, 0.5);
        let err = build_window(WindowProfile::Samples(s), grid(8), 0.25).unwrap_err();
        assert!(err.to_string().starts_with("conjugate symmetry violated"));
    }

    #[test]
    fn raised_cosine_minimum_sits_at_the_ends() {
        let w = build_window(WindowProfile::RaisedCosine { c0: 1.0, c1: 0.5 }, grid(16), 0.25).unwrap();
        let min = w.phi.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
        // outermost midpoints sit half a cell inside +-B
        let expect = 1.0 - 0.5 * (PI / 16.0).cos();
        assert!((min - expect).abs() < 1e-14);
        assert!((w.phi[0].norm() - expect).abs() < 1e-14);
        assert!((w.phi_at(-1.0).unwrap().re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn second_window_values() {
        let w = WindowPair::rectangular(grid(8), 0.5).unwrap();
        let v = w.psi_at(0.5).unwrap();
        assert!((v - C64::new(-1.0, 1.0)).norm() < 1e-15);
        assert_eq!(w.psi_at(0.0).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn modulation_range() {
        let g = grid(8);
        assert!(WindowPair::rectangular(g, 0.5).is_ok());
        assert!(WindowPair::rectangular(g, 0.25).is_ok());
        assert!(matches!(WindowPair::rectangular(g, 0.0), Err(Error::ModulationOutOfRange { .. })));
        assert!(matches!(WindowPair::rectangular(g, 0.51), Err(Error::ModulationOutOfRange { .. })));
    }

    #[test]
    fn sampled_profile_lookup() {
        let w = build_window(WindowProfile::Samples(vec![C64::new(2.0, 0.0); 8]), grid(8), 0.25).unwrap();
        assert_eq!(w.phi_at(offset(&w.grid, 3)), Some(C64::new(2.0, 0.0)));
        assert_eq!(w.phi_at(0.1), None);
        assert_eq!(w.phi_at(1.0), Some(C64::new(0.0, 0.0)));
    }
}
