//! Numerical-validity warnings. They never abort a computation; callers
//! decide whether to escalate them.

use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Diagnostic {
    /// Normalized probability mass in the outermost grid rows/columns.
    Truncation { boundary_mass: f64, threshold: f64 },
    /// Largest |ΔkL_n/2| seen where the uneven-stage formula was applied.
    PhaseMatching { max_half_mismatch: f64, threshold: f64 },
    /// Relative norm of the first omitted series term.
    SeriesConvergence { order: usize, next_term_ratio: f64 },
    /// A per-pulse probability above one: the two-photon picture is broken.
    Probability { name: String, value: f64 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Truncation {
                boundary_mass,
                threshold,
            } => write!(
                f,
                "grid truncation: boundary mass {boundary_mass:.3e} exceeds {threshold:.0e}"
            ),
            Diagnostic::PhaseMatching {
                max_half_mismatch,
                threshold,
            } => write!(
                f,
                "near-phase-matching assumption strained: max |dk L/2| = {max_half_mismatch:.3} > {threshold}"
            ),
            Diagnostic::SeriesConvergence {
                order,
                next_term_ratio,
            } => write!(
                f,
                "series not converged at order {order}: next term ratio {next_term_ratio:.3e}"
            ),
            Diagnostic::Probability { name, value } => {
                write!(f, "{name} = {value:.4} exceeds 1 (gain too high for pair picture)")
            }
        }
    }
}
