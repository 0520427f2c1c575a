//! Shared setups for the pipeline benchmarks.

use nli_core::dispersion::{DispersiveMediumSpec, FiberSpec, PumpSpec};
use nli_core::grid::{JsfGrid, SpectralGrid};
use nli_core::jsf::{build_nli_jsf, NliDesign};

pub fn pump() -> PumpSpec {
    PumpSpec::new(1548.5e-9, 1e-9, 0.0).expect("valid pump")
}

pub fn fiber() -> FiberSpec {
    FiberSpec::new(50.0, 1548.2e-9, 75.0, 1e-3).expect("valid fiber")
}

/// Two 50 m stages around 7 m of SMF.
pub fn design() -> NliDesign {
    let dm = DispersiveMediumSpec::smf(7.0, 17e-6).expect("valid medium");
    NliDesign::even(2, 50.0, dm).expect("valid design").with_dk_in_theta(true)
}

pub fn grid(n: usize) -> SpectralGrid {
    SpectralGrid::from_wavelength_window(1528e-9, 1568e-9, n).expect("valid grid")
}

pub fn nli_jsf(n: usize) -> JsfGrid {
    build_nli_jsf(&design(), &pump(), Some(&fiber()), &grid(n)).expect("jsf builds")
}
