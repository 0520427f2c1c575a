//! JSF construction for a single fiber and for N-stage interferometers.

use crate::diagnostics::Diagnostic;
use crate::dispersion::{delta_k_dsf, delta_phi_dm, DispersiveMediumSpec, DmKind, FiberSpec, PumpSpec};
use crate::error::{Error, Result};
use crate::grid::{JsfGrid, SpectralGrid};
use crate::numeric::{pairwise_sum, sinc, SINGULAR_THRESHOLD};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest |ΔkL_n/2| tolerated silently by the uneven-stage formula.
pub const PHASE_MATCH_THRESHOLD: f64 = 0.3;

/// Phase-matching slopes of the linearized single-fiber model, as multiples
/// of σ_p: the phase-matching argument is Ω_s/(Aσ_p) + Ω_i/(Bσ_p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimpleJsfParams {
    pub a: f64,
    pub b: f64,
    pub chirp: f64,
}

impl SimpleJsfParams {
    pub fn new(a: f64, b: f64, chirp: f64) -> Result<Self> {
        if a == 0.0 || b == 0.0 || !a.is_finite() || !b.is_finite() || !chirp.is_finite() {
            return Err(Error::Domain(format!("A and B must be finite and nonzero (got {a}, {b})")));
        }
        Ok(SimpleJsfParams { a, b, chirp })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NliModel {
    /// Closed-form interference factors: H(θ) for equal stages, K(θ) for
    /// unequal stages.
    #[default]
    Auto,
    /// Coherent sum of per-stage sinc·phase contributions including the
    /// mismatch phase accumulated in earlier stages.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NliDesign {
    pub stage_lengths: Vec<f64>,
    pub dm: Option<DispersiveMediumSpec>,
    pub include_sinc: bool,
    pub include_dk_in_theta: bool,
    pub model: NliModel,
}

impl NliDesign {
    pub fn new(stage_lengths: Vec<f64>, dm: Option<DispersiveMediumSpec>) -> Result<Self> {
        let d = NliDesign {
            stage_lengths,
            dm,
            include_sinc: true,
            include_dk_in_theta: false,
            model: NliModel::Auto,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn even(n: usize, length: f64, dm: DispersiveMediumSpec) -> Result<Self> {
        Self::new(vec![length; n], Some(dm))
    }

    pub fn with_dk_in_theta(mut self, on: bool) -> Self {
        self.include_dk_in_theta = on;
        self
    }

    pub fn with_sinc(mut self, on: bool) -> Self {
        self.include_sinc = on;
        self
    }

    pub fn with_model(mut self, model: NliModel) -> Self {
        self.model = model;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.stage_lengths.len();
        if n == 0 {
            return Err(Error::Config("an interferometer needs at least one stage".into()));
        }
        if self.stage_lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::Config("stage lengths must be positive".into()));
        }
        match (n, &self.dm) {
            (1, Some(_)) => Err(Error::Config("a single stage cannot have a dispersive medium".into())),
            (n, None) if n > 1 => Err(Error::Config(format!("{n} stages need a dispersive medium"))),
            _ => Ok(()),
        }
    }

    pub fn stages(&self) -> usize {
        self.stage_lengths.len()
    }

    pub fn is_even(&self) -> bool {
        let l0 = self.stage_lengths[0];
        self.stage_lengths.iter().all(|&l| l == l0)
    }

    pub fn total_length(&self) -> f64 {
        self.stage_lengths.iter().sum()
    }
}

/// Multi-slit factor H(θ) = sin(Nθ)/sin(θ)·e^{j(N−1)θ} = Σ_{n<N} e^{2jnθ}.
pub fn multi_slit(theta: f64, n: usize) -> Complex64 {
    let nf = n as f64;
    let s = theta.sin();
    let ratio = if s.abs() < SINGULAR_THRESHOLD {
        // θ → mπ: sin(Nθ)/sin(θ) → N·(−1)^{m(N−1)}.
        let m = (theta / PI).round() as i64;
        if (m * (n as i64 - 1)).rem_euclid(2) == 0 {
            nf
        } else {
            -nf
        }
    } else {
        (nf * theta).sin() / s
    };
    Complex64::from_polar(1.0, (nf - 1.0) * theta) * ratio
}

/// Uneven-stage factor K(θ) = Σ_n L_n e^{2j(n−1)θ}.
pub fn uneven_factor(theta: f64, lengths: &[f64]) -> Complex64 {
    lengths
        .iter()
        .enumerate()
        .map(|(n, &l)| Complex64::from_polar(l, 2.0 * n as f64 * theta))
        .sum()
}

/// sinc(x)·e^{jx}.
#[inline]
fn phase_matching(x: f64) -> Complex64 {
    Complex64::from_polar(sinc(x), x)
}

#[inline]
fn pump_factor(pump: &PumpSpec, ws: f64, wi: f64) -> Complex64 {
    let (m, ph) = pump.envelope(ws, wi);
    Complex64::from_polar(m, ph)
}

/// Unnormalized interferometer amplitude, evaluated pointwise.
#[derive(Debug, Clone, Copy)]
pub struct NliAmplitude<'a> {
    pub design: &'a NliDesign,
    pub pump: &'a PumpSpec,
    pub fiber: Option<&'a FiberSpec>,
}

impl<'a> NliAmplitude<'a> {
    pub fn new(design: &'a NliDesign, pump: &'a PumpSpec, fiber: Option<&'a FiberSpec>) -> Result<Self> {
        design.validate()?;
        let uneven_formula = design.model == NliModel::Auto && !design.is_even();
        let needs_fiber = design.include_dk_in_theta || (design.include_sinc && !uneven_formula);
        if needs_fiber && fiber.is_none() {
            return Err(Error::Config("the phase-matching terms need a nonlinear fiber".into()));
        }
        if design.model == NliModel::Auto && !design.is_even() && design.include_dk_in_theta {
            return Err(Error::Config(
                "the uneven-stage formula has no single ΔkL/2 term; use the exact model".into(),
            ));
        }
        Ok(NliAmplitude { design, pump, fiber })
    }

    fn dk(&self, ws: f64, wi: f64) -> f64 {
        self.fiber.map_or(0.0, |f| delta_k_dsf(ws, wi, self.pump, f))
    }

    fn dphi(&self, ws: f64, wi: f64) -> Result<f64> {
        match &self.design.dm {
            Some(dm) => delta_phi_dm(ws, wi, self.pump, dm),
            None => Ok(0.0),
        }
    }

    /// Interference phase θ (0 for a single stage).
    pub fn theta(&self, ws: f64, wi: f64) -> Result<f64> {
        let mut th = 0.5 * self.dphi(ws, wi)?;
        if self.design.include_dk_in_theta && self.design.is_even() {
            th += 0.5 * self.dk(ws, wi) * self.design.stage_lengths[0];
        }
        Ok(th)
    }

    pub fn amplitude(&self, ws: f64, wi: f64) -> Result<Complex64> {
        let d = self.design;
        let pump = pump_factor(self.pump, ws, wi);
        let n = d.stages();
        if d.model == NliModel::Exact {
            let dk = self.dk(ws, wi);
            let dphi = self.dphi(ws, wi)?;
            let mut z = 0.0;
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &l) in d.stage_lengths.iter().enumerate() {
                let env = if d.include_sinc { sinc(0.5 * dk * l) } else { 1.0 };
                acc += Complex64::from_polar(l * env, dk * (z + 0.5 * l) + k as f64 * dphi);
                z += l;
            }
            return Ok(pump * acc / d.stage_lengths[0]);
        }
        if d.is_even() {
            let pm = if d.include_sinc {
                phase_matching(0.5 * self.dk(ws, wi) * d.stage_lengths[0])
            } else {
                Complex64::new(1.0, 0.0)
            };
            if n == 1 {
                return Ok(pump * pm);
            }
            Ok(pump * pm * multi_slit(self.theta(ws, wi)?, n))
        } else {
            let k = uneven_factor(self.theta(ws, wi)?, &d.stage_lengths);
            Ok(pump * k / d.stage_lengths[0])
        }
    }
}

fn evaluate<F>(grid: &SpectralGrid, f: F) -> Result<Array2<Complex64>>
where
    F: Fn(f64, f64) -> Result<Complex64> + Sync,
{
    let (ws, wi) = (grid.omega_s(), grid.omega_i());
    let rows: Vec<Vec<Complex64>> = ws
        .par_iter()
        .map(|&s| wi.iter().map(|&i| f(s, i)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((grid.n_s(), grid.n_i()), flat).map_err(|e| Error::Grid(e.to_string()))
}

fn check_pump_span(grid: &SpectralGrid, center_sum: f64, sigma_p: f64) -> Result<()> {
    let (ws, wi) = (grid.omega_s(), grid.omega_i());
    let lo = ws[0] + wi[0] - center_sum;
    let hi = ws[ws.len() - 1] + wi[wi.len() - 1] - center_sum;
    if lo > -4.0 * sigma_p || hi < 4.0 * sigma_p {
        return Err(Error::Grid("grid must span at least ±4σ_p along ω_s+ω_i".into()));
    }
    Ok(())
}

/// Linearized single-fiber JSF
/// exp[−(Ω_s+Ω_i)²(1+jC_p)/4σ_p²]·sinc(x)·e^{jx}, x = Ω_s/A + Ω_i/B,
/// with Ω measured from (ω_s0, ω_i0).
pub fn build_simple_jsf(
    params: &SimpleJsfParams,
    sigma_p: f64,
    omega_s0: f64,
    omega_i0: f64,
    grid: &SpectralGrid,
) -> Result<JsfGrid> {
    if !(sigma_p > 0.0) {
        return Err(Error::Domain("σ_p must be positive".into()));
    }
    check_pump_span(grid, omega_s0 + omega_i0, sigma_p)?;
    let (a, b) = (params.a * sigma_p, params.b * sigma_p);
    let values = evaluate(grid, |ws, wi| {
        let (os, oi) = (ws - omega_s0, wi - omega_i0);
        let v = os + oi;
        let q = v * v / (4.0 * sigma_p * sigma_p);
        let env = Complex64::from_polar((-q).exp(), -q * params.chirp);
        Ok(env * phase_matching(os / a + oi / b))
    })?;
    JsfGrid::new(grid.clone(), values)?.normalize()
}

/// Physical single fiber: pump·sinc(ΔkL/2)·e^{jΔkL/2}.
pub fn build_single_fiber_jsf(pump: &PumpSpec, fiber: &FiberSpec, grid: &SpectralGrid) -> Result<JsfGrid> {
    let design = NliDesign::new(vec![fiber.length], None)?;
    build_nli_jsf(&design, pump, Some(fiber), grid)
}

/// Normalized interferometer JSF on `grid`.
pub fn build_nli_jsf(
    design: &NliDesign,
    pump: &PumpSpec,
    fiber: Option<&FiberSpec>,
    grid: &SpectralGrid,
) -> Result<JsfGrid> {
    check_pump_span(grid, 2.0 * pump.omega_p0(), pump.sigma_p)?;
    let amp = NliAmplitude::new(design, pump, fiber)?;
    let values = evaluate(grid, |s, i| amp.amplitude(s, i))?;
    let mut diag = Vec::new();
    if design.model == NliModel::Auto && !design.is_even() {
        if let Some(f) = fiber {
            if let Some(d) = phase_matching_check(&values, grid, pump, f, &design.stage_lengths) {
                diag.push(d);
            }
        }
    }
    let mut jsf = JsfGrid::new(grid.clone(), values)?.normalize()?;
    jsf.diagnostics.extend(diag);
    Ok(jsf)
}

/// Max |ΔkL_n/2| over samples carrying at least 1e-3 of the peak intensity.
fn phase_matching_check(
    values: &Array2<Complex64>,
    grid: &SpectralGrid,
    pump: &PumpSpec,
    fiber: &FiberSpec,
    lengths: &[f64],
) -> Option<Diagnostic> {
    let lmax = lengths.iter().cloned().fold(0.0, f64::max);
    let peak = values.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for ((r, c), z) in values.indexed_iter() {
        if z.norm_sqr() >= 1e-3 * peak {
            let dk = delta_k_dsf(grid.omega_s()[r], grid.omega_i()[c], pump, fiber);
            worst = worst.max((0.5 * dk * lmax).abs());
        }
    }
    (worst > PHASE_MATCH_THRESHOLD).then_some(Diagnostic::PhaseMatching {
        max_half_mismatch: worst,
        threshold: PHASE_MATCH_THRESHOLD,
    })
}

/// Interference factor H(θ)/N of an N-stage interferometer alone (|·|² is
/// the stripe pattern of the medium), unnormalized.
pub fn build_interference_grid(
    pump: &PumpSpec,
    dm: &DispersiveMediumSpec,
    stages: usize,
    grid: &SpectralGrid,
) -> Result<JsfGrid> {
    if stages < 2 {
        return Err(Error::Config("an interference pattern needs at least two stages".into()));
    }
    let nf = stages as f64;
    let values = evaluate(grid, |s, i| Ok(multi_slit(0.5 * delta_phi_dm(s, i, pump, dm)?, stages) / nf))?;
    JsfGrid::new(grid.clone(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Signal,
    Idler,
}

/// ∫|F|² dω_other sampled on the requested axis (intensity marginal).
pub fn marginal_intensity(jsf: &JsfGrid, axis: Axis) -> Result<Vec<f64>> {
    if !jsf.normalized {
        return Err(Error::Domain("marginals require a normalized JSF".into()));
    }
    let a = jsf.abs2();
    Ok(match axis {
        Axis::Signal => {
            let d = jsf.grid.d_omega_i();
            a.outer_iter().map(|row| pairwise_sum(row.as_slice().unwrap()) * d).collect()
        }
        Axis::Idler => {
            let d = jsf.grid.d_omega_s();
            a.columns()
                .into_iter()
                .map(|col| pairwise_sum(&col.to_vec()) * d)
                .collect()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IslandWindow {
    pub m: u32,
    /// From Δφ_DM = 2mπ, split symmetrically about the pump.
    pub analytic_s: f64,
    pub analytic_i: f64,
    /// Refined by the |F|² maximum along the anti-diagonal.
    pub center_s: f64,
    pub center_i: f64,
    /// Signal and idler frequency ranges between the neighbouring zeros of cosθ.
    pub valley_s: (f64, f64),
    pub valley_i: (f64, f64),
}

/// Signal–idler detuning |ω_s−ω_i| at which θ = Δφ/2 reaches `theta`.
pub fn detuning_at_theta(theta: f64, pump: &PumpSpec, dm: &DispersiveMediumSpec) -> Result<f64> {
    let k2 = dm.k2(pump)?;
    if !(k2 * dm.length > 0.0) {
        return Err(Error::Domain("island positions need positive medium dispersion".into()));
    }
    Ok((8.0 * theta.max(0.0) / (k2 * dm.length)).sqrt())
}

/// Window of island m. The signal sits on the low-frequency (long-wavelength)
/// side of the pump.
pub fn island_window(jsf: &JsfGrid, m: u32, pump: &PumpSpec, dm: &DispersiveMediumSpec) -> Result<IslandWindow> {
    if !matches!(dm.kind, DmKind::SmallDetuningQuadratic { .. }) {
        return Err(Error::Domain("island windows need the small-detuning medium".into()));
    }
    let wp = pump.omega_p0();
    let mf = m as f64;
    let d = detuning_at_theta(mf * PI, pump, dm)?;
    let lo = if m == 0 { 0.0 } else { detuning_at_theta((mf - 0.5) * PI, pump, dm)? };
    let hi = detuning_at_theta((mf + 0.5) * PI, pump, dm)?;
    let (a_s, a_i) = (wp - 0.5 * d, wp + 0.5 * d);
    let g = &jsf.grid;
    let inside = |w: f64, ax: &[f64]| w >= ax[0] && w <= ax[ax.len() - 1];
    if !inside(a_s, g.omega_s()) || !inside(a_i, g.omega_i()) {
        return Err(Error::OutOfWindow { m });
    }
    let (is0, ii0) = (g.nearest_s(a_s), g.nearest_i(a_i));
    let reach = ((hi - lo) / (2.0 * g.d_omega_s())).ceil() as i64;
    let val = |k: i64| -> Option<f64> {
        let (r, c) = (is0 as i64 + k, ii0 as i64 - k);
        if r < 0 || c < 0 || r >= g.n_s() as i64 || c >= g.n_i() as i64 {
            None
        } else {
            Some(jsf.values[[r as usize, c as usize]].norm_sqr())
        }
    };
    let (mut kbest, mut vbest) = (0i64, val(0).unwrap_or(0.0));
    for k in -reach..=reach {
        if let Some(v) = val(k) {
            if v > vbest {
                kbest = k;
                vbest = v;
            }
        }
    }
    let mut frac = 0.0;
    if let (Some(a), Some(c)) = (val(kbest - 1), val(kbest + 1)) {
        let den = a - 2.0 * vbest + c;
        if den < 0.0 {
            frac = (0.5 * (a - c) / den).clamp(-0.5, 0.5);
        }
    }
    let k = kbest as f64 + frac;
    Ok(IslandWindow {
        m,
        analytic_s: a_s,
        analytic_i: a_i,
        center_s: g.omega_s()[is0] + k * g.d_omega_s(),
        center_i: g.omega_i()[ii0] - k * g.d_omega_i(),
        valley_s: (wp - 0.5 * hi, wp - 0.5 * lo),
        valley_i: (wp + 0.5 * lo, wp + 0.5 * hi),
    })
}
