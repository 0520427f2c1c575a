//! Joint spectral function (JSF) engineering for photon pairs generated by
//! pulse-pumped four-wave mixing in SU(1,1) nonlinear interferometers.
//!
//! The crate is organised bottom-up:
//!
//! * [`dispersion`]: phase mismatch of the nonlinear fiber and phase shifts of
//!   the dispersive media placed between gain stages.
//! * [`jsf`]: JSF grids for a single fiber and for even/uneven N-stage
//!   interferometers, marginals and island windows.
//! * [`schmidt`]: Schmidt decomposition, Schmidt number, purity and g².
//! * [`metrics`]: filtered figures of merit (ξ, h, T/R, ḡ², heralded g̃²).
//! * [`design`]: closed-form design calculators.
//! * [`highgain`]: high-gain Green functions.
//!
//! All frequencies are angular (rad/s) and all lengths are in metres.

pub mod design;
pub mod diagnostics;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod highgain;
pub mod io;
pub mod jsf;
pub mod metrics;
pub mod numeric;
pub mod schmidt;
pub mod units;

pub use diagnostics::Diagnostic;
pub use dispersion::{DispersiveMediumSpec, DmKind, FiberSpec, PumpSpec, Sellmeier};
pub use error::{Error, Result};
pub use grid::{JsfGrid, SpectralGrid};
pub use highgain::GreenFunctions;
pub use jsf::{NliDesign, NliModel, SimpleJsfParams};
pub use metrics::{FilterSpec, MetricsReport, Passband, PassbandShape, Side};
pub use schmidt::{Rank, SchmidtDecomposition};

pub use num_complex::Complex64;
