//! Closed-form design calculators: round-island medium length, stripe width,
//! elliptical factorability and binomial stage lengths.

use crate::dispersion::{DispersiveMediumSpec, PumpSpec};
use crate::error::{Error, Result};
use crate::grid::JsfGrid;
use crate::jsf::IslandWindow;
use serde::Serialize;
use std::f64::consts::PI;

fn positive_k2(pump: &PumpSpec, dm: &DispersiveMediumSpec) -> Result<f64> {
    let k2 = dm.k2(pump)?;
    if !(k2 > 0.0) {
        return Err(Error::Domain("medium dispersion must be positive".into()));
    }
    Ok(k2)
}

/// L_DM = 1/[m(N−1)π·k²_DM·σ_p²] for a round m-th island of an N-stage
/// binomial interferometer (N = 2 is the two-stage case). The medium length
/// stored in `dm` is ignored.
pub fn round_island_ldm(m: u32, stages: usize, pump: &PumpSpec, dm: &DispersiveMediumSpec) -> Result<f64> {
    if m == 0 || stages < 2 {
        return Err(Error::Domain("need island index m ≥ 1 and at least two stages".into()));
    }
    let k2 = positive_k2(pump, dm)?;
    Ok(1.0 / (m as f64 * (stages - 1) as f64 * PI * k2 * pump.sigma_p * pump.sigma_p))
}

/// σ_int = √(2/(mπ·L_DM·k²_DM)), the Gaussian width of cosθ around island m
/// in the variable (ΔΩ_s − ΔΩ_i).
pub fn stripe_width(m: u32, pump: &PumpSpec, dm: &DispersiveMediumSpec) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("stripe width needs m ≥ 1".into()));
    }
    let k2 = positive_k2(pump, dm)?;
    if !(dm.length > 0.0) {
        return Err(Error::Domain("stripe width needs a positive medium length".into()));
    }
    Ok((2.0 / (m as f64 * PI * dm.length * k2)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum EllipticalVerdict {
    Feasible { sigma_p_sq: f64, sigma_p: f64 },
    /// τ_sτ_i > 0: an isotropic medium cannot satisfy the condition; a
    /// birefringent medium is required.
    Infeasible { required_sigma_p_sq: f64 },
}

/// σ_p² = −2/(τ_sτ_iL²) removes the ΔΩ_sΔΩ_i cross term of the island.
pub fn elliptical_condition(tau_s: f64, tau_i: f64, l_dm: f64) -> Result<EllipticalVerdict> {
    let p = tau_s * tau_i * l_dm * l_dm;
    if p == 0.0 || !p.is_finite() {
        return Err(Error::Domain("walk-off product and medium length must be nonzero".into()));
    }
    let s2 = -2.0 / p;
    Ok(if s2 > 0.0 {
        EllipticalVerdict::Feasible { sigma_p_sq: s2, sigma_p: s2.sqrt() }
    } else {
        EllipticalVerdict::Infeasible { required_sigma_p_sq: s2 }
    })
}

/// Coefficient of ΔΩ_sΔΩ_i in the exponent of the local Gaussian island model
/// −(ΔΩ_s+ΔΩ_i)²/4σ_p² − (τ_sΔΩ_s+τ_iΔΩ_i)²L²/8.
pub fn cross_term_coefficient(tau_s: f64, tau_i: f64, l_dm: f64, sigma_p: f64) -> f64 {
    -1.0 / (2.0 * sigma_p * sigma_p) - tau_s * tau_i * l_dm * l_dm / 4.0
}

/// L_n = L_1·C(N−1, n−1).
pub fn binomial_lengths(stages: usize, l1: f64) -> Result<Vec<f64>> {
    if stages < 2 || !(l1 > 0.0) {
        return Err(Error::Domain("need N ≥ 2 stages and L_1 > 0".into()));
    }
    let mut c = 1u64;
    let mut out = Vec::with_capacity(stages);
    for k in 0..stages as u64 {
        out.push(l1 * c as f64);
        c = c * (stages as u64 - 1 - k) / (k + 1);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Roundness {
    /// Principal standard deviations of |F|² (rad/s), major first.
    pub sigma_major: f64,
    pub sigma_minor: f64,
    /// sigma_major/sigma_minor ≥ 1; "round" means ≤ 1.1.
    pub ratio: f64,
    /// Orientation of the major axis from the ω_s axis (degrees).
    pub angle_deg: f64,
}

/// Second-moment principal axes of |F|² inside an island's valley rectangle.
pub fn island_roundness(jsf: &JsfGrid, window: &IslandWindow) -> Result<Roundness> {
    let g = &jsf.grid;
    let (mut w, mut ms, mut mi) = (0.0, 0.0, 0.0);
    let mut pts = Vec::new();
    for (s, &ws) in g.omega_s().iter().enumerate() {
        if ws < window.valley_s.0 || ws > window.valley_s.1 {
            continue;
        }
        for (i, &wi) in g.omega_i().iter().enumerate() {
            if wi < window.valley_i.0 || wi > window.valley_i.1 {
                continue;
            }
            let p = jsf.values[[s, i]].norm_sqr();
            pts.push((ws, wi, p));
            w += p;
            ms += p * ws;
            mi += p * wi;
        }
    }
    if !(w > 0.0) {
        return Err(Error::Degenerate("island window carries no intensity".into()));
    }
    let (ms, mi) = (ms / w, mi / w);
    let (mut css, mut cii, mut csi) = (0.0, 0.0, 0.0);
    for &(ws, wi, p) in &pts {
        let (a, b) = (ws - ms, wi - mi);
        css += p * a * a;
        cii += p * b * b;
        csi += p * a * b;
    }
    let (css, cii, csi) = (css / w, cii / w, csi / w);
    let tr = 0.5 * (css + cii);
    let disc = (0.25 * (css - cii).powi(2) + csi * csi).sqrt();
    let (l1, l2) = (tr + disc, (tr - disc).max(0.0));
    if !(l2 > 0.0) {
        return Err(Error::Degenerate("island has a degenerate second moment".into()));
    }
    Ok(Roundness {
        sigma_major: l1.sqrt(),
        sigma_minor: l2.sqrt(),
        ratio: (l1 / l2).sqrt(),
        angle_deg: 0.5 * (2.0 * csi).atan2(css - cii).to_degrees(),
    })
}
