//! High-gain Green functions of the parametric amplifier.
//!
//! Kernels are stored in continuum units. Operator products are formed in
//! the quadrature-weighted representation W = F·√(dω_s dω_i), where the
//! nested integrals become plain array products: h₂ₛ ↔ Σ G^{2n+1}/(2n+1)!·(WW†)ⁿW
//! and the smooth part of h₁ₛ ↔ Σ_{n≥1} G^{2n}/(2n)!·(WW†)ⁿ. The δ part of h₁
//! is never sampled; it is the identity in the weighted representation.

use crate::diagnostics::Diagnostic;
use crate::error::{undefined, Error, Result};
use crate::grid::{JsfGrid, SpectralGrid};
use crate::metrics::FilterSpec;
use crate::numeric::{adjoint, frobenius, singular_values};
use crate::schmidt::SchmidtDecomposition;
use ndarray::Array2;
use num_complex::Complex64;

pub const DEFAULT_ORDER: usize = 40;

/// First omitted term above this fraction of the partial sum raises a
/// convergence diagnostic.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct GreenFunctions {
    pub gain: f64,
    /// Smooth part of h₁ₛ(ω_s, ω′_s); the full kernel adds δ(ω_s − ω′_s).
    pub h1s_smooth: Array2<Complex64>,
    pub h2s: Array2<Complex64>,
    pub h1i_smooth: Array2<Complex64>,
    /// h₂ᵢ(ω_i, ω′_s).
    pub h2i: Array2<Complex64>,
    /// The identity part of h₁ is implied (always true).
    pub identity_part: bool,
    /// Highest series order included; `None` for the closed form.
    pub truncation_order: Option<usize>,
    pub grid: SpectralGrid,
    pub diagnostics: Vec<Diagnostic>,
}

/// Elementwise Kahan accumulator.
struct Compensated {
    sum: Array2<Complex64>,
    comp: Array2<Complex64>,
}

impl Compensated {
    fn new(dim: (usize, usize)) -> Self {
        Compensated { sum: Array2::zeros(dim), comp: Array2::zeros(dim) }
    }

    fn add(&mut self, term: &Array2<Complex64>) {
        ndarray::Zip::from(&mut self.sum)
            .and(&mut self.comp)
            .and(term)
            .for_each(|s, c, &t| {
                let y = t - *c;
                let u = *s + y;
                *c = (u - *s) - y;
                *s = u;
            });
    }
}

/// Σ_{n≥1} G^{2n}/(2n)!·Mⁿ and Σ_{n≥0} G^{2n+1}/(2n+1)!·Mⁿ up to `order`,
/// plus the norm ratio of the first omitted term.
fn hyperbolic_series(m: &Array2<Complex64>, gain: f64, order: usize) -> (Array2<Complex64>, Array2<Complex64>, f64) {
    let n = m.nrows();
    let g2 = gain * gain;
    let mut a = Array2::<Complex64>::eye(n); // G^{2k}/(2k)!·M^k
    let mut cosh = Compensated::new((n, n));
    let mut sinh = Compensated::new((n, n));
    sinh.add(&a.mapv(|z| z * gain));
    for k in 0..order {
        let kf = k as f64;
        a = m.dot(&a).mapv(|z| z * (g2 / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0))));
        cosh.add(&a);
        sinh.add(&a.mapv(|z| z * (gain / (2.0 * kf + 3.0))));
    }
    let next = m.dot(&a).mapv(|z| z * (g2 / ((2.0 * order as f64 + 1.0) * (2.0 * order as f64 + 2.0))));
    let denom = frobenius(&cosh.sum.view()).max(frobenius(&sinh.sum.view()));
    let ratio = if denom > 0.0 { frobenius(&next.view()) / denom } else { 0.0 };
    (cosh.sum, sinh.sum, ratio)
}

/// Truncated operator series; `order` is the highest power of (FF†) kept.
pub fn green_series(jsf: &JsfGrid, gain: f64, order: usize) -> Result<GreenFunctions> {
    if !jsf.normalized {
        return Err(Error::Domain("Green functions require a normalized JSF".into()));
    }
    if order == 0 {
        return Err(Error::Domain("series order must be at least 1".into()));
    }
    if !(gain >= 0.0) || !gain.is_finite() {
        return Err(Error::Domain("gain must be finite and non-negative".into()));
    }
    let g = &jsf.grid;
    let w = jsf.weighted();
    let wh = adjoint(&w.view());
    let (c_s, s_s, r_s) = hyperbolic_series(&w.dot(&wh), gain, order);
    let (c_i, s_i, r_i) = hyperbolic_series(&wh.dot(&w), gain, order);
    let mut diagnostics = Vec::new();
    let ratio = r_s.max(r_i);
    if ratio > CONVERGENCE_TOLERANCE {
        diagnostics.push(Diagnostic::SeriesConvergence { order, next_term_ratio: ratio });
    }
    // Idler side: (WᵀW*)ⁿ = conj((W†W)ⁿ) and h₂ᵢ = conj(S_i)·Wᵀ.
    let h2s_w = s_s.dot(&w);
    let h2i_w = s_i.mapv(|z| z.conj()).dot(&w.t());
    Ok(from_weighted(
        gain,
        c_s,
        h2s_w,
        c_i.mapv(|z| z.conj()),
        h2i_w,
        Some(order),
        g.clone(),
        diagnostics,
    ))
}

#[allow(clippy::too_many_arguments)]
fn from_weighted(
    gain: f64,
    h1s_w: Array2<Complex64>,
    h2s_w: Array2<Complex64>,
    h1i_w: Array2<Complex64>,
    h2i_w: Array2<Complex64>,
    order: Option<usize>,
    grid: SpectralGrid,
    diagnostics: Vec<Diagnostic>,
) -> GreenFunctions {
    let (ds, di) = (grid.d_omega_s(), grid.d_omega_i());
    let c = (ds * di).sqrt();
    GreenFunctions {
        gain,
        h1s_smooth: h1s_w.mapv(|z| z / ds),
        h2s: h2s_w.mapv(|z| z / c),
        h1i_smooth: h1i_w.mapv(|z| z / di),
        h2i: h2i_w.mapv(|z| z / c),
        identity_part: true,
        truncation_order: order,
        grid,
        diagnostics,
    }
}

/// Closed form through the Schmidt modes: h₂ₛ = Σ sinh(G r_k) ψ_k φ_k and
/// h₁ₛ − δ = Σ [cosh(G r_k) − 1] ψ_k ψ_k*. Exact only for a full-rank
/// decomposition.
pub fn green_closed_form(dec: &SchmidtDecomposition, gain: f64) -> Result<GreenFunctions> {
    if !(gain >= 0.0) || !gain.is_finite() {
        return Err(Error::Domain("gain must be finite and non-negative".into()));
    }
    let grid = SpectralGrid::new(dec.omega_s.clone(), dec.omega_i.clone())?;
    let rank = dec.truncation_rank;
    let r: Vec<f64> = dec.coefficients[..rank].iter().map(|x| x * dec.norm).collect();
    let psi = &dec.signal_modes;
    let phi = &dec.idler_modes;
    let scaled = |a: &Array2<Complex64>, f: &dyn Fn(f64) -> f64| {
        Array2::from_shape_fn(a.dim(), |(k, j)| a[[k, j]] * f(gain * r[k]))
    };
    let sinh_psi = scaled(psi, &|x| x.sinh());
    let cosh_psi = scaled(psi, &|x| x.cosh() - 1.0);
    let cosh_phi = scaled(phi, &|x| x.cosh() - 1.0);
    let h2s = sinh_psi.t().dot(phi);
    let h1s = cosh_psi.t().dot(&psi.mapv(|z| z.conj()));
    let h1i = cosh_phi.t().dot(&phi.mapv(|z| z.conj()));
    let h2i = h2s.t().to_owned();
    Ok(GreenFunctions {
        gain,
        h1s_smooth: h1s,
        h2s,
        h1i_smooth: h1i,
        h2i,
        identity_part: true,
        truncation_order: None,
        grid,
        diagnostics: Vec::new(),
    })
}

impl GreenFunctions {
    fn weights(&self) -> (f64, f64) {
        (self.grid.d_omega_s(), self.grid.d_omega_i())
    }

    pub fn h2s_weighted(&self) -> Array2<Complex64> {
        let (ds, di) = self.weights();
        self.h2s.mapv(|z| z * (ds * di).sqrt())
    }

    pub fn h2i_weighted(&self) -> Array2<Complex64> {
        let (ds, di) = self.weights();
        self.h2i.mapv(|z| z * (ds * di).sqrt())
    }

    /// Frobenius norm of h₁ₛ∘h₁ₛ† − h₂ₛ∘h₂ₛ† − 1 in the weighted
    /// representation, with the δ part of h₁ₛ restored as the identity.
    pub fn commutator_residual_signal(&self) -> f64 {
        let (ds, _) = self.weights();
        let s = self.h1s_smooth.mapv(|z| z * ds);
        let h2 = self.h2s_weighted();
        let sh = adjoint(&s.view());
        let res = s.dot(&sh) + &s + &sh - h2.dot(&adjoint(&h2.view()));
        frobenius(&res.view())
    }

    pub fn commutator_residual_idler(&self) -> f64 {
        let (_, di) = self.weights();
        let s = self.h1i_smooth.mapv(|z| z * di);
        let h2 = self.h2i_weighted();
        let sh = adjoint(&s.view());
        let res = s.dot(&sh) + &s + &sh - h2.dot(&adjoint(&h2.view()));
        frobenius(&res.view())
    }

    /// h₂ₛ rescaled to unit mass, as a JSF-like grid (for export or metrics).
    pub fn h2s_normalized(&self) -> Result<JsfGrid> {
        JsfGrid::new(self.grid.clone(), self.h2s.clone())?.normalize()
    }
}

/// Normalized singular values (Σ squared = 1) of the filtered h₂ₛ.
pub fn highgain_mode_indices(gf: &GreenFunctions, filt: &FilterSpec) -> Result<Vec<f64>> {
    filt.validate()?;
    let g = &gf.grid;
    let fs: Vec<f64> = g.omega_s().iter().map(|&w| filt.signal.map_or(1.0, |p| p.amplitude(w))).collect();
    let fi: Vec<f64> = g.omega_i().iter().map(|&w| filt.idler.map_or(1.0, |p| p.amplitude(w))).collect();
    let rows: Vec<usize> = (0..fs.len()).filter(|&k| fs[k] != 0.0).collect();
    let cols: Vec<usize> = (0..fi.len()).filter(|&k| fi[k] != 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(undefined("mode indices", "the filters transmit nothing"));
    }
    let block = Array2::from_shape_fn((rows.len(), cols.len()), |(r, c)| {
        gf.h2s[[rows[r], cols[c]]] * (fs[rows[r]] * fi[cols[c]])
    });
    let sv = singular_values(&block.view());
    let tot: f64 = sv.iter().map(|s| s * s).sum::<f64>().sqrt();
    if !(tot > 0.0) {
        return Err(undefined("mode indices", "zero filtered mass"));
    }
    Ok(sv.iter().map(|s| s / tot).collect())
}
