//! Phase mismatch in the nonlinear fiber and phase shifts of the dispersive
//! medium (DM) between interferometer stages.

use crate::error::{Error, Result};
use crate::numeric::{interp_linear, is_strictly_increasing};
use crate::units::{lambda_from_omega, omega_from_lambda, C};
use serde::Serialize;
use std::f64::consts::PI;

/// σ_p = πc·Δλ/(λ²·√ln2).
///
/// The pump amplitude spectrum is exp[−Ω²/2σ_p²], so the intensity FWHM in
/// angular frequency is 2σ_p√ln2. Island widths (not centers) depend on this
/// convention.
pub fn sigma_from_fwhm(fwhm_lambda: f64, lambda_p0: f64) -> Result<f64> {
    if !(fwhm_lambda > 0.0) || !(lambda_p0 > 0.0) {
        return Err(Error::Domain(format!(
            "pump width and wavelength must be positive (got {fwhm_lambda}, {lambda_p0})"
        )));
    }
    Ok(PI * C * fwhm_lambda / (lambda_p0 * lambda_p0 * 2f64.ln().sqrt()))
}

pub fn fwhm_from_sigma(sigma_p: f64, lambda_p0: f64) -> f64 {
    sigma_p * lambda_p0 * lambda_p0 * 2f64.ln().sqrt() / (PI * C)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpSpec {
    pub lambda_p0: f64,
    pub fwhm_lambda: f64,
    pub sigma_p: f64,
    pub chirp: f64,
}

impl PumpSpec {
    pub fn new(lambda_p0: f64, fwhm_lambda: f64, chirp: f64) -> Result<Self> {
        let sigma_p = sigma_from_fwhm(fwhm_lambda, lambda_p0)?;
        if !chirp.is_finite() {
            return Err(Error::Domain("chirp must be finite".into()));
        }
        Ok(PumpSpec { lambda_p0, fwhm_lambda, sigma_p, chirp })
    }

    /// Pump specified directly by its amplitude width, e.g. from a design rule.
    pub fn from_sigma(lambda_p0: f64, sigma_p: f64, chirp: f64) -> Result<Self> {
        if !(sigma_p > 0.0) || !(lambda_p0 > 0.0) {
            return Err(Error::Domain("pump width and wavelength must be positive".into()));
        }
        Ok(PumpSpec {
            lambda_p0,
            fwhm_lambda: fwhm_from_sigma(sigma_p, lambda_p0),
            sigma_p,
            chirp,
        })
    }

    pub fn omega_p0(&self) -> f64 {
        omega_from_lambda(self.lambda_p0)
    }

    /// exp[−(ω_s+ω_i−2ω_p0)²(1+jC_p)/4σ_p²], returned as (modulus, phase).
    #[inline]
    pub fn envelope(&self, omega_s: f64, omega_i: f64) -> (f64, f64) {
        let v = omega_s + omega_i - 2.0 * self.omega_p0();
        let q = v * v / (4.0 * self.sigma_p * self.sigma_p);
        ((-q).exp(), -q * self.chirp)
    }
}

/// Dispersion-shifted nonlinear fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberSpec {
    pub length: f64,
    pub lambda_zero: f64,
    /// GVD slope at `lambda_zero` (s/m³).
    pub d_slope: f64,
    /// γP_p (1/m).
    pub gamma_pp: f64,
}

impl FiberSpec {
    pub fn new(length: f64, lambda_zero: f64, d_slope: f64, gamma_pp: f64) -> Result<Self> {
        if !(length >= 0.0) || !(lambda_zero > 0.0) || !d_slope.is_finite() || !gamma_pp.is_finite() {
            return Err(Error::Domain("invalid fiber parameters".into()));
        }
        Ok(FiberSpec { length, lambda_zero, d_slope, gamma_pp })
    }

    pub fn with_length(&self, length: f64) -> Self {
        FiberSpec { length, ..*self }
    }

    /// k⁽²⁾ at the pump: λ²·D_slope·(λ_p−λ_z)/(2πc).
    pub fn k2(&self, pump: &PumpSpec) -> f64 {
        let l = pump.lambda_p0;
        l * l * self.d_slope * (l - self.lambda_zero) / (2.0 * PI * C)
    }

    /// k⁽³⁾ at the pump: −λ⁴·D_slope/(2πc)².
    pub fn k3(&self, pump: &PumpSpec) -> f64 {
        let l2 = pump.lambda_p0 * pump.lambda_p0;
        -l2 * l2 * self.d_slope / (4.0 * PI * PI * C * C)
    }
}

/// Δk = (k²/4)(ω_s−ω_i)² + (k³/8)(ω_s+ω_i−2ω_p0)(ω_s−ω_i)² − 2γP_p.
#[inline]
pub fn delta_k_dsf(omega_s: f64, omega_i: f64, pump: &PumpSpec, fiber: &FiberSpec) -> f64 {
    let d = omega_s - omega_i;
    let v = omega_s + omega_i - 2.0 * pump.omega_p0();
    let d2 = d * d;
    fiber.k2(pump) / 4.0 * d2 + fiber.k3(pump) / 8.0 * v * d2 - 2.0 * fiber.gamma_pp
}

/// Three-term Sellmeier model n² − 1 = Σ B_j λ²/(λ² − C_j), λ and √C_j in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sellmeier {
    pub b: [f64; 3],
    /// Resonance wavelengths squared (m²).
    pub c: [f64; 3],
}

impl Sellmeier {
    /// Fused silica (Malitson, 1965).
    pub fn fused_silica() -> Self {
        let um2 = |x: f64| x * x * 1e-12;
        Sellmeier {
            b: [0.696_166_3, 0.407_942_6, 0.897_479_4],
            c: [um2(0.068_404_3), um2(0.116_241_4), um2(9.896_161)],
        }
    }

    pub fn index(&self, lambda: f64) -> f64 {
        let l2 = lambda * lambda;
        let s: f64 = (0..3).map(|j| self.b[j] * l2 / (l2 - self.c[j])).sum();
        (1.0 + s).sqrt()
    }

    /// dn/dλ, analytic.
    pub fn dindex(&self, lambda: f64) -> f64 {
        let l2 = lambda * lambda;
        let ds: f64 = (0..3)
            .map(|j| -2.0 * self.b[j] * self.c[j] * lambda / ((l2 - self.c[j]) * (l2 - self.c[j])))
            .sum();
        ds / (2.0 * self.index(lambda))
    }

    /// k(ω) = n·ω/c.
    pub fn wavenumber(&self, omega: f64) -> f64 {
        self.index(lambda_from_omega(omega)) * omega / C
    }

    /// k⁽¹⁾ = n_g/c with n_g = n − λ·dn/dλ.
    pub fn inverse_group_velocity(&self, lambda: f64) -> f64 {
        (self.index(lambda) - lambda * self.dindex(lambda)) / C
    }

    /// Walk-off coefficients τ_s, τ_i = k⁽¹⁾(ω_p0) − k⁽¹⁾(ω_s0/i0).
    pub fn walk_off(&self, lambda_p0: f64, lambda_s0: f64, lambda_i0: f64) -> (f64, f64) {
        let kp = self.inverse_group_velocity(lambda_p0);
        (
            kp - self.inverse_group_velocity(lambda_s0),
            kp - self.inverse_group_velocity(lambda_i0),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DmKind {
    /// λ²·D·L·(ω_s−ω_i)²/(8πc); `d` in s/m².
    SmallDetuningQuadratic { d: f64 },
    /// L·(Δk₀ + τ_sΩ_s + τ_iΩ_i) with Ω measured from ω_s0, ω_i0.
    LargeDetuningLinear {
        tau_s: f64,
        tau_i: f64,
        dk0: f64,
        omega_s0: f64,
        omega_i0: f64,
    },
    /// Exact L·[2k(ω_p) − k(ω_s) − k(ω_i)] with ω_p = (ω_s+ω_i)/2.
    SellmeierGlass { sellmeier: Sellmeier },
    /// Refractive index samples n(λ), linearly interpolated; same phase rule
    /// as the Sellmeier kind.
    Tabulated { lambda: Vec<f64>, index: Vec<f64> },
    /// Device phase φ(ω) sampled on an increasing ω axis:
    /// 2φ((ω_s+ω_i)/2) − φ(ω_s) − φ(ω_i). The length is ignored.
    ArbitraryPhase { omega: Vec<f64>, phase: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersiveMediumSpec {
    pub length: f64,
    #[serde(flatten)]
    pub kind: DmKind,
}

impl DispersiveMediumSpec {
    pub fn new(length: f64, kind: DmKind) -> Result<Self> {
        if !(length >= 0.0) {
            return Err(Error::Domain(format!("DM length must be non-negative, got {length}")));
        }
        match &kind {
            DmKind::SmallDetuningQuadratic { d } if !d.is_finite() => {
                return Err(Error::Domain("DM dispersion must be finite".into()))
            }
            DmKind::Tabulated { lambda, index } => {
                if lambda.len() < 2 || lambda.len() != index.len() || !is_strictly_increasing(lambda) {
                    return Err(Error::Domain(
                        "tabulated DM needs ≥2 strictly increasing wavelength samples matching the index samples".into(),
                    ));
                }
            }
            DmKind::ArbitraryPhase { omega, phase } => {
                if omega.len() < 2 || omega.len() != phase.len() || !is_strictly_increasing(omega) {
                    return Err(Error::Domain(
                        "phase function needs ≥2 strictly increasing frequency samples matching the phase samples".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(DispersiveMediumSpec { length, kind })
    }

    pub fn smf(length: f64, d: f64) -> Result<Self> {
        Self::new(length, DmKind::SmallDetuningQuadratic { d })
    }

    /// k⁽²⁾ of the small-detuning medium at the pump: λ²D/(2πc).
    pub fn k2(&self, pump: &PumpSpec) -> Result<f64> {
        match self.kind {
            DmKind::SmallDetuningQuadratic { d } => Ok(pump.lambda_p0 * pump.lambda_p0 * d / (2.0 * PI * C)),
            _ => Err(Error::Domain("k2 of the DM is only defined for the small-detuning kind".into())),
        }
    }
}

fn tabulated_wavenumber(lambda: &[f64], index: &[f64], omega: f64) -> Result<f64> {
    let n = interp_linear(lambda, index, lambda_from_omega(omega))?;
    Ok(n * omega / C)
}

/// Phase shift Δφ_DM accumulated by pump, signal and idler in the medium.
pub fn delta_phi_dm(omega_s: f64, omega_i: f64, pump: &PumpSpec, dm: &DispersiveMediumSpec) -> Result<f64> {
    let l = dm.length;
    match &dm.kind {
        DmKind::SmallDetuningQuadratic { d } => {
            let x = omega_s - omega_i;
            Ok(pump.lambda_p0 * pump.lambda_p0 * d * l * x * x / (8.0 * PI * C))
        }
        DmKind::LargeDetuningLinear { tau_s, tau_i, dk0, omega_s0, omega_i0 } => {
            Ok(l * (dk0 + tau_s * (omega_s - omega_s0) + tau_i * (omega_i - omega_i0)))
        }
        DmKind::SellmeierGlass { sellmeier } => {
            let wp = 0.5 * (omega_s + omega_i);
            Ok(l * (2.0 * sellmeier.wavenumber(wp) - sellmeier.wavenumber(omega_s) - sellmeier.wavenumber(omega_i)))
        }
        DmKind::Tabulated { lambda, index } => {
            let wp = 0.5 * (omega_s + omega_i);
            let k = |w| tabulated_wavenumber(lambda, index, w);
            Ok(l * (2.0 * k(wp)? - k(omega_s)? - k(omega_i)?))
        }
        DmKind::ArbitraryPhase { omega, phase } => {
            let phi = |w| interp_linear(omega, phase, w);
            Ok(2.0 * phi(0.5 * (omega_s + omega_i))? - phi(omega_s)? - phi(omega_i)?)
        }
    }
}

/// Stripe orientation ρ = −atan(τ_s/τ_i) in degrees, mapped to (−90°, 90°].
pub fn stripe_orientation(tau_s: f64, tau_i: f64) -> Result<f64> {
    if tau_s == 0.0 && tau_i == 0.0 {
        return Err(Error::Domain("walk-off coefficients cannot both vanish".into()));
    }
    if tau_i == 0.0 {
        return Ok(90.0);
    }
    let rho = -(tau_s / tau_i).atan().to_degrees();
    Ok(if rho <= -90.0 { rho + 180.0 } else { rho })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pump() -> PumpSpec {
        PumpSpec::new(1548.5e-9, 1e-9, 0.0).unwrap()
    }

    fn dsf() -> FiberSpec {
        FiberSpec::new(50.0, 1548.2e-9, 75.0, 1e-3).unwrap()
    }

    #[test]
    fn sigma_value_and_linearity() {
        let s = sigma_from_fwhm(1e-9, 1548.5e-9).unwrap();
        assert!((s / 4.72e11 - 1.0).abs() < 2e-3, "{s}");
        let s2 = sigma_from_fwhm(2e-9, 1548.5e-9).unwrap();
        assert!((s2 / s - 2.0).abs() < 1e-15);
        assert!(sigma_from_fwhm(0.0, 1e-6).is_err());
        assert!(sigma_from_fwhm(1e-9, -1.0).is_err());
    }

    #[test]
    fn sigma_reproduces_measured_fwhm() {
        // Intensity spectrum exp(−Ω²/σ²): locate the half-maximum by bisection.
        let p = pump();
        let (mut lo, mut hi) = (0.0, 10.0 * p.sigma_p);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (-(mid * mid) / (p.sigma_p * p.sigma_p)).exp() > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let fwhm_omega = 2.0 * lo;
        let w0 = p.omega_p0();
        let fwhm_lambda = 2.0 * PI * C * fwhm_omega / (w0 * w0);
        assert!((fwhm_lambda / 1e-9 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dk_at_pump_is_nonlinear_term() {
        let p = pump();
        let w = p.omega_p0();
        assert!((delta_k_dsf(w, w, &p, &dsf()) + 2e-3).abs() < 1e-18);
    }

    #[test]
    fn dk_symmetric_and_small_at_first_island() {
        let p = pump();
        let f = dsf();
        let ws = omega_from_lambda(1556.7e-9);
        let wi = omega_from_lambda(1540.4e-9);
        let a = delta_k_dsf(ws, wi, &p, &f);
        let b = delta_k_dsf(wi, ws, &p, &f);
        assert_eq!(a, b);
        assert!((a * f.length / 2.0).abs() < 0.1 * PI);
    }

    #[test]
    fn smf_phase_zero_and_quadratic() {
        let p = pump();
        let dm = DispersiveMediumSpec::smf(7.0, 17e-6).unwrap();
        let w = p.omega_p0();
        assert_eq!(delta_phi_dm(w, w, &p, &dm).unwrap(), 0.0);
        let d = 3e12;
        let a = delta_phi_dm(w - d / 2.0, w + d / 2.0, &p, &dm).unwrap();
        let b = delta_phi_dm(w - d, w + d, &p, &dm).unwrap();
        assert!(a > 0.0);
        assert!((b / a - 4.0).abs() < 1e-12);
    }

    #[test]
    fn first_island_signal_wavelength() {
        // Δφ = 2π ⇒ (ω_s−ω_i)² = 16π²c/(λ²DL).
        let p = pump();
        let dm = DispersiveMediumSpec::smf(7.0, 17e-6).unwrap();
        let d = (16.0 * PI * PI * C / (p.lambda_p0 * p.lambda_p0 * 17e-6 * 7.0)).sqrt();
        let w = p.omega_p0();
        let phi = delta_phi_dm(w - d / 2.0, w + d / 2.0, &p, &dm).unwrap();
        assert!((phi - 2.0 * PI).abs() < 1e-12);
        let ls = lambda_from_omega(w - d / 2.0) * 1e9;
        let li = lambda_from_omega(w + d / 2.0) * 1e9;
        assert!((ls - 1556.7).abs() < 0.2, "{ls}");
        assert!((li - 1540.4).abs() < 0.2, "{li}");
    }

    #[test]
    fn silica_large_detuning_orientation() {
        let s = Sellmeier::fused_silica();
        assert!((s.index(1.0e-6) - 1.4504).abs() < 1e-3);
        let (ts, ti) = s.walk_off(1053e-9, 1310e-9, 881e-9);
        assert!(ts > 0.0 && ti < 0.0);
        let rho = stripe_orientation(ts, ti).unwrap();
        assert!(rho > 0.0 && rho < 90.0, "{rho}");
    }

    #[test]
    fn orientation_examples() {
        assert!((stripe_orientation(1.0, -1.0).unwrap() - 45.0).abs() < 1e-12);
        assert!((stripe_orientation(1.0, 1.0).unwrap() + 45.0).abs() < 1e-12);
        assert_eq!(stripe_orientation(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(stripe_orientation(3.0, 0.0).unwrap(), 90.0);
        assert!(stripe_orientation(0.0, 0.0).is_err());
    }

    #[test]
    fn arbitrary_phase_range_and_quadratic_equivalence() {
        let p = pump();
        let w0 = p.omega_p0();
        // φ(ω) = β(ω−ω0)² gives Δφ = −β(ω_s−ω_i)²/2.
        let beta = 1e-25;
        let omega: Vec<f64> = (0..4001).map(|k| w0 - 4e13 + 2e10 * k as f64).collect();
        let phase: Vec<f64> = omega.iter().map(|w| beta * (w - w0) * (w - w0)).collect();
        let dm = DispersiveMediumSpec::new(0.0, DmKind::ArbitraryPhase { omega, phase }).unwrap();
        let (ws, wi) = (w0 - 1e13, w0 + 1e13);
        let got = delta_phi_dm(ws, wi, &p, &dm).unwrap();
        let want = -beta * (ws - wi) * (ws - wi) / 2.0;
        assert!((got - want).abs() < 1e-3 * want.abs());
        assert!(matches!(
            delta_phi_dm(w0 - 5e13, wi, &p, &dm),
            Err(Error::InterpolationRange { .. })
        ));
    }

    #[test]
    fn dm_validation() {
        assert!(DispersiveMediumSpec::smf(-1.0, 17e-6).is_err());
        assert!(DispersiveMediumSpec::new(1.0, DmKind::Tabulated { lambda: vec![1.0, 0.5], index: vec![1.4, 1.5] }).is_err());
    }
}
