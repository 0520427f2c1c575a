//! Reference setups shared by the integration tests.
#![allow(dead_code)]

use nli_core::dispersion::{DispersiveMediumSpec, FiberSpec, PumpSpec};
use nli_core::grid::{JsfGrid, SpectralGrid};
use nli_core::jsf::{build_nli_jsf, build_single_fiber_jsf, detuning_at_theta, NliDesign};
use std::f64::consts::PI;

pub const LAMBDA_P: f64 = 1548.5e-9;
pub const SMF_D: f64 = 17e-6;

pub fn pump() -> PumpSpec {
    PumpSpec::new(LAMBDA_P, 1e-9, 0.0).unwrap()
}

/// 50 m DSF: λ_z = 1548.2 nm, slope 0.075 ps/(km·nm²), γP = 1 km⁻¹.
pub fn fiber() -> FiberSpec {
    FiberSpec::new(50.0, 1548.2e-9, 75.0, 1e-3).unwrap()
}

pub fn smf(length: f64) -> DispersiveMediumSpec {
    DispersiveMediumSpec::smf(length, SMF_D).unwrap()
}

pub fn grid(n: usize) -> SpectralGrid {
    SpectralGrid::from_wavelength_window(1528e-9, 1568e-9, n).unwrap()
}

/// N equal 50 m stages separated by SMF of length `l_dm`, mismatch phase
/// included in θ.
pub fn nli(stages: usize, l_dm: f64, n: usize) -> JsfGrid {
    let d = NliDesign::even(stages, 50.0, smf(l_dm)).unwrap().with_dk_in_theta(true);
    build_nli_jsf(&d, &pump(), Some(&fiber()), &grid(n)).unwrap()
}

/// Single fiber with the same total gain length as a two-stage NLI.
pub fn baseline(n: usize) -> JsfGrid {
    build_single_fiber_jsf(&pump(), &fiber().with_length(100.0), &grid(n)).unwrap()
}

/// (ω_s, ω_i) where the SMF phase alone equals 2mπ.
pub fn analytic_centers(m: u32, l_dm: f64) -> (f64, f64) {
    let p = pump();
    let d = detuning_at_theta(m as f64 * PI, &p, &smf(l_dm)).unwrap();
    (p.omega_p0() - 0.5 * d, p.omega_p0() + 0.5 * d)
}

pub fn nm(omega: f64) -> f64 {
    nli_core::units::lambda_from_omega(omega) * 1e9
}

/// Inclusive range lo, lo+step, … ≤ hi + step/2 (nm values, returned in metres).
pub fn nm_range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 0.5).floor() as usize;
    (0..=n).map(|k| (lo + k as f64 * step) * 1e-9).collect()
}
