//! Filtered figures of merit: singles and coincidence probabilities,
//! collection/heralding efficiency, vacuum-admixed heralded purity,
//! one-side-filtered g² and heralded g̃².

use crate::diagnostics::Diagnostic;
use crate::error::{undefined, Error, Result};
use crate::grid::JsfGrid;
use crate::numeric::{adjoint, fourth_moment_ratio, pairwise_sum, trace_product_hermitian};
use crate::units::sigma_from_dlambda;
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PassbandShape {
    #[default]
    Rectangular,
    /// Intensity transmission exp[−(ω−ω_c)²/2w²]; only used for bound tests.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Passband {
    pub center: f64,
    /// Full width of the rectangular passband (rad/s). Zero transmits
    /// nothing; infinity transmits everything.
    pub width: f64,
    pub shape: PassbandShape,
}

impl Passband {
    pub fn rect(center: f64, width: f64) -> Self {
        Passband { center, width, shape: PassbandShape::Rectangular }
    }

    pub fn gaussian(center: f64, width: f64) -> Self {
        Passband { center, width, shape: PassbandShape::Gaussian }
    }

    /// Amplitude transmission f(ω).
    #[inline]
    pub fn amplitude(&self, omega: f64) -> f64 {
        if self.width.is_infinite() {
            return 1.0;
        }
        if self.width <= 0.0 {
            return 0.0;
        }
        let x = omega - self.center;
        match self.shape {
            PassbandShape::Rectangular => {
                if x.abs() <= 0.5 * self.width {
                    1.0
                } else {
                    0.0
                }
            }
            PassbandShape::Gaussian => (-x * x / (4.0 * self.width * self.width)).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterSpec {
    /// `None` means no filter (f ≡ 1).
    pub signal: Option<Passband>,
    pub idler: Option<Passband>,
    pub eta_s: f64,
    pub eta_i: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec { signal: None, idler: None, eta_s: 1.0, eta_i: 1.0 }
    }
}

impl FilterSpec {
    pub fn none() -> Self {
        Self::default()
    }

    /// Rectangular filters of full width σ_f on both arms.
    pub fn common(center_s: f64, center_i: f64, sigma_f: f64) -> Self {
        FilterSpec {
            signal: Some(Passband::rect(center_s, sigma_f)),
            idler: Some(Passband::rect(center_i, sigma_f)),
            ..Self::default()
        }
    }

    /// Common filter specified by its wavelength bandwidth.
    pub fn common_nm(center_s: f64, center_i: f64, dlambda: f64) -> Self {
        Self::common(center_s, center_i, sigma_from_dlambda(dlambda))
    }

    pub fn with_efficiency(mut self, eta_s: f64, eta_i: f64) -> Result<Self> {
        for eta in [eta_s, eta_i] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::Domain(format!("detection efficiency {eta} outside [0, 1]")));
            }
        }
        self.eta_s = eta_s;
        self.eta_i = eta_i;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.with_efficiency(self.eta_s, self.eta_i)?;
        for p in [self.signal, self.idler].into_iter().flatten() {
            if !(p.width >= 0.0) || !p.center.is_finite() {
                return Err(Error::Domain("filter widths must be ≥ 0 and centers finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Signal,
    Idler,
}

fn transmission(band: Option<Passband>, axis: &[f64]) -> Vec<f64> {
    match band {
        None => vec![1.0; axis.len()],
        Some(p) => axis.iter().map(|&w| p.amplitude(w)).collect(),
    }
}

fn support(f: &[f64]) -> Vec<usize> {
    (0..f.len()).filter(|&k| f[k] != 0.0).collect()
}

/// Transmission profiles and weighted masses of one JSF/filter pair.
struct Masses {
    fs: Vec<f64>,
    fi: Vec<f64>,
    /// Σ f_s²|F|²·cell, Σ f_i²|F|²·cell, Σ f_s²f_i²|F|²·cell.
    signal: f64,
    idler: f64,
    coinc: f64,
    /// Σ (1−f_s²) f_i²|F|²·cell.
    rejected: f64,
}

fn masses(jsf: &JsfGrid, filt: &FilterSpec) -> Masses {
    let g = &jsf.grid;
    let fs = transmission(filt.signal, g.omega_s());
    let fi = transmission(filt.idler, g.omega_i());
    let a = jsf.abs2();
    let cell = g.cell();
    let fi2: Vec<f64> = fi.iter().map(|x| x * x).collect();
    let mut rows_all = Vec::with_capacity(a.nrows());
    let mut rows_fi = Vec::with_capacity(a.nrows());
    for row in a.outer_iter() {
        let r = row.as_slice().unwrap();
        rows_all.push(pairwise_sum(r));
        rows_fi.push(pairwise_sum(&r.iter().zip(&fi2).map(|(x, w)| x * w).collect::<Vec<_>>()));
    }
    let fs2: Vec<f64> = fs.iter().map(|x| x * x).collect();
    let wsum = |w: &dyn Fn(usize) -> f64, v: &[f64]| pairwise_sum(&(0..v.len()).map(|k| w(k) * v[k]).collect::<Vec<_>>()) * cell;
    Masses {
        signal: wsum(&|k| fs2[k], &rows_all),
        idler: wsum(&|_| 1.0, &rows_fi),
        coinc: wsum(&|k| fs2[k], &rows_fi),
        rejected: wsum(&|k| 1.0 - fs2[k], &rows_fi),
        fs,
        fi,
    }
}

/// Rows `rows` × columns `cols` of F with the transmissions applied.
fn filtered_block(jsf: &JsfGrid, fs: &[f64], fi: &[f64], rows: &[usize], cols: &[usize]) -> Array2<Complex64> {
    Array2::from_shape_fn((rows.len(), cols.len()), |(r, c)| {
        let (s, i) = (rows[r], cols[c]);
        jsf.values[[s, i]] * (fs[s] * fi[i])
    })
}

#[derive(Debug, Clone)]
pub struct Filtered {
    /// F·f_s·f_i on the full grid, not renormalized.
    pub jsf: JsfGrid,
    /// Transmitted probability mass 𝒩²_si.
    pub mass: f64,
    /// True when no probability is transmitted.
    pub empty: bool,
}

pub fn apply_filters(jsf: &JsfGrid, filt: &FilterSpec) -> Result<Filtered> {
    filt.validate()?;
    let g = &jsf.grid;
    let fs = transmission(filt.signal, g.omega_s());
    let fi = transmission(filt.idler, g.omega_i());
    let values = Array2::from_shape_fn(jsf.values.dim(), |(s, i)| jsf.values[[s, i]] * (fs[s] * fi[i]));
    let out = JsfGrid::new(g.clone(), values)?;
    let mass = out.mass();
    Ok(Filtered { jsf: out, mass, empty: mass == 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probabilities {
    #[serde(rename = "P_s")]
    pub p_s: f64,
    #[serde(rename = "P_i")]
    pub p_i: f64,
    #[serde(rename = "P_c")]
    pub p_c: f64,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn singles_and_coincidences(jsf: &JsfGrid, filt: &FilterSpec, gain: f64) -> Result<Probabilities> {
    filt.validate()?;
    if !(gain >= 0.0) {
        return Err(Error::Domain("gain must be non-negative".into()));
    }
    let m = masses(jsf, filt);
    let g2 = gain * gain;
    let p = Probabilities {
        p_s: filt.eta_s * g2 * m.signal,
        p_i: filt.eta_i * g2 * m.idler,
        p_c: filt.eta_s * filt.eta_i * g2 * m.coinc,
        diagnostics: Vec::new(),
    };
    let diagnostics = [("P_s", p.p_s), ("P_i", p.p_i), ("P_c", p.p_c)]
        .into_iter()
        .filter(|(_, v)| *v > 1.0)
        .map(|(n, v)| Diagnostic::Probability { name: n.into(), value: v })
        .collect();
    Ok(Probabilities { diagnostics, ..p })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Efficiencies {
    pub xi_s: f64,
    pub xi_i: f64,
    pub h_s: f64,
    pub h_i: f64,
}

/// ξ_s = P_c/P_i (signal collected given an idler detection) or its mirror.
pub fn collection_efficiency(jsf: &JsfGrid, filt: &FilterSpec, side: Side) -> Result<f64> {
    let h = heralding_efficiency(jsf, filt, side)?;
    Ok(match side {
        Side::Signal => filt.eta_s * h,
        Side::Idler => filt.eta_i * h,
    })
}

/// h = ξ/η: the efficiency-free conditional transmission.
pub fn heralding_efficiency(jsf: &JsfGrid, filt: &FilterSpec, side: Side) -> Result<f64> {
    filt.validate()?;
    let m = masses(jsf, filt);
    let den = match side {
        Side::Signal => m.idler,
        Side::Idler => m.signal,
    };
    if !(den > 0.0) {
        return Err(undefined("heralding efficiency", "the heralding arm transmits nothing"));
    }
    Ok(m.coinc / den)
}

pub fn collection_and_heralding(jsf: &JsfGrid, filt: &FilterSpec) -> Result<Efficiencies> {
    let h_s = heralding_efficiency(jsf, filt, Side::Signal)?;
    let h_i = heralding_efficiency(jsf, filt, Side::Idler)?;
    Ok(Efficiencies { xi_s: filt.eta_s * h_s, xi_i: filt.eta_i * h_i, h_s, h_i })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeraldedPurity {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub purity: f64,
    /// Σr̄_k⁴ of the two-side-filtered, renormalized JSF.
    pub filtered_mode_purity: f64,
}

/// γ_P′ = T²Σr̄_k⁴ + R² for a signal photon heralded by a filtered idler.
pub fn filtered_heralded_purity(jsf: &JsfGrid, filt: &FilterSpec) -> Result<HeraldedPurity> {
    filt.validate()?;
    let m = masses(jsf, filt);
    if !(m.idler > 0.0) {
        return Err(undefined("heralded purity", "the idler filter transmits nothing"));
    }
    let t = m.coinc / m.idler;
    let r = m.rejected / m.idler;
    let sp = if m.coinc > 0.0 {
        let rows = support(&m.fs);
        let cols = support(&m.fi);
        fourth_moment_ratio(&filtered_block(jsf, &m.fs, &m.fi, &rows, &cols).view()).unwrap_or(0.0)
    } else {
        0.0
    };
    Ok(HeraldedPurity { t, r, purity: t * t * sp + r * r, filtered_mode_purity: sp })
}

/// ḡ² = 1 + ℰ̄/𝒜̄ of the beam on `side` with only that arm's filter applied.
pub fn g2_one_side_filtered(jsf: &JsfGrid, filt: &FilterSpec, side: Side) -> Result<f64> {
    filt.validate()?;
    let g = &jsf.grid;
    let all_s: Vec<usize> = (0..g.n_s()).collect();
    let all_i: Vec<usize> = (0..g.n_i()).collect();
    let block = match side {
        Side::Signal => {
            let fs = transmission(filt.signal, g.omega_s());
            filtered_block(jsf, &fs, &vec![1.0; g.n_i()], &support(&fs), &all_i)
        }
        Side::Idler => {
            let fi = transmission(filt.idler, g.omega_i());
            filtered_block(jsf, &vec![1.0; g.n_s()], &fi, &all_s, &support(&fi))
        }
    };
    if block.is_empty() {
        return Err(undefined("one-side-filtered g2", "the filter transmits nothing"));
    }
    fourth_moment_ratio(&block.view())
        .map(|x| 1.0 + x)
        .ok_or_else(|| undefined("one-side-filtered g2", "zero filtered mass"))
}

/// ḡ² of the two-side-filtered JSF.
pub fn g2_two_side_filtered(jsf: &JsfGrid, filt: &FilterSpec) -> Result<f64> {
    filt.validate()?;
    let g = &jsf.grid;
    let fs = transmission(filt.signal, g.omega_s());
    let fi = transmission(filt.idler, g.omega_i());
    let block = filtered_block(jsf, &fs, &fi, &support(&fs), &support(&fi));
    fourth_moment_ratio(&block.view())
        .map(|x| 1.0 + x)
        .ok_or_else(|| undefined("two-side-filtered g2", "zero filtered mass"))
}

/// Heralded auto-correlation of the signal,
/// g̃²_s = (2P_c/h_s h_i)(1 + ℰ̄/𝒜̄), with η = 1 inside P_c and the weights
/// f_s²(ω_s)f_s²(ω′_s)f_i²(ω_i) in ℰ̄ and 𝒜̄.
pub fn heralded_auto_g2(jsf: &JsfGrid, filt: &FilterSpec, gain: f64) -> Result<f64> {
    filt.validate()?;
    if !(gain >= 0.0) {
        return Err(Error::Domain("gain must be non-negative".into()));
    }
    let m = masses(jsf, filt);
    if !(m.coinc > 0.0) {
        return Err(undefined("heralded g2", "zero heralding efficiency"));
    }
    let (h_s, h_i) = (m.coinc / m.idler, m.coinc / m.signal);
    let p_c = gain * gain * m.coinc;

    let rows = support(&m.fs);
    let all_i: Vec<usize> = (0..jsf.grid.n_i()).collect();
    // B = f_s·F restricted to the signal passband.
    let b = filtered_block(jsf, &m.fs, &vec![1.0; all_i.len()], &rows, &all_i);
    let fi2: Vec<f64> = m.fi.iter().map(|x| x * x).collect();
    let bw = Array2::from_shape_fn(b.dim(), |(r, c)| b[[r, c]] * fi2[c]);
    let bh = adjoint(&b.view());
    let x = bw.dot(&bh);
    let y = b.dot(&bh);
    let tr = |a: &Array2<Complex64>| pairwise_sum(&a.diag().iter().map(|z| z.re).collect::<Vec<_>>());
    let e = trace_product_hermitian(&x.view(), &y.view());
    let a = tr(&x) * tr(&y);
    if !(a > 0.0) {
        return Err(undefined("heralded g2", "zero filtered mass"));
    }
    Ok(2.0 * p_c / (h_s * h_i) * (1.0 + e / a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    #[serde(rename = "P_s")]
    pub p_s: f64,
    #[serde(rename = "P_i")]
    pub p_i: f64,
    #[serde(rename = "P_c")]
    pub p_c: f64,
    pub xi_s: Option<f64>,
    pub xi_i: Option<f64>,
    pub h_s: Option<f64>,
    pub h_i: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub g2_bar_s: Option<f64>,
    pub g2_bar_i: Option<f64>,
    pub purity_filtered: Option<f64>,
    pub heralded_g2: Option<f64>,
    #[serde(rename = "gain_G")]
    pub gain_g: f64,
    pub diagnostics: Vec<Diagnostic>,
}

/// Every metric at once; undefined ones are `None`.
pub fn metrics_report(jsf: &JsfGrid, filt: &FilterSpec, gain: f64) -> Result<MetricsReport> {
    let p = singles_and_coincidences(jsf, filt, gain)?;
    let hp = filtered_heralded_purity(jsf, filt).ok();
    Ok(MetricsReport {
        p_s: p.p_s,
        p_i: p.p_i,
        p_c: p.p_c,
        xi_s: collection_efficiency(jsf, filt, Side::Signal).ok(),
        xi_i: collection_efficiency(jsf, filt, Side::Idler).ok(),
        h_s: heralding_efficiency(jsf, filt, Side::Signal).ok(),
        h_i: heralding_efficiency(jsf, filt, Side::Idler).ok(),
        t: hp.map(|h| h.t),
        r: hp.map(|h| h.r),
        g2_bar_s: g2_one_side_filtered(jsf, filt, Side::Signal).ok(),
        g2_bar_i: g2_one_side_filtered(jsf, filt, Side::Idler).ok(),
        purity_filtered: hp.map(|h| h.purity),
        heralded_g2: heralded_auto_g2(jsf, filt, gain).ok(),
        gain_g: gain,
        diagnostics: p.diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub dlambda_f_nm: f64,
    pub g2s: Option<f64>,
    pub g2i: Option<f64>,
    pub xi_s: Option<f64>,
    pub xi_i: Option<f64>,
}

/// Sweeps a common rectangular bandwidth (metres) with fixed centers.
pub fn bandwidth_scan(jsf: &JsfGrid, center_s: f64, center_i: f64, dlambdas: &[f64]) -> Vec<ScanRow> {
    dlambdas
        .par_iter()
        .map(|&dl| {
            let f = FilterSpec::common_nm(center_s, center_i, dl);
            ScanRow {
                dlambda_f_nm: dl * 1e9,
                g2s: g2_one_side_filtered(jsf, &f, Side::Signal).ok(),
                g2i: g2_one_side_filtered(jsf, &f, Side::Idler).ok(),
                xi_s: collection_efficiency(jsf, &f, Side::Signal).ok(),
                xi_i: collection_efficiency(jsf, &f, Side::Idler).ok(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;

    fn product(n: usize) -> JsfGrid {
        let g = SpectralGrid::uniform(-5.0, 5.0, n, -5.0, 5.0, n).unwrap();
        let v = Array2::from_shape_fn((n, n), |(s, i)| {
            let (x, y) = (g.omega_s()[s], g.omega_i()[i]);
            Complex64::new((-(x * x) / 2.0 - y * y / 2.0).exp(), 0.0)
        });
        JsfGrid::new(g, v).unwrap().normalize().unwrap()
    }

    fn correlated(n: usize) -> JsfGrid {
        let g = SpectralGrid::uniform(-5.0, 5.0, n, -5.0, 5.0, n).unwrap();
        let v = Array2::from_shape_fn((n, n), |(s, i)| {
            let (x, y) = (g.omega_s()[s], g.omega_i()[i]);
            Complex64::new((-(x + y) * (x + y) * 2.0 - (x - y) * (x - y) / 8.0).exp(), 0.0)
        });
        JsfGrid::new(g, v).unwrap().normalize().unwrap()
    }

    #[test]
    fn no_filter_probabilities() {
        let j = correlated(48);
        let p = singles_and_coincidences(&j, &FilterSpec::none(), 0.1).unwrap();
        for v in [p.p_s, p.p_i, p.p_c] {
            assert!((v - 0.01).abs() < 1e-12);
        }
        let e = collection_and_heralding(&j, &FilterSpec::none()).unwrap();
        assert!((e.xi_s - 1.0).abs() < 1e-12 && (e.xi_i - 1.0).abs() < 1e-12);
    }

    #[test]
    fn efficiency_scaling() {
        let j = correlated(48);
        let f = FilterSpec::common(0.0, 0.0, 3.0);
        let a = singles_and_coincidences(&j, &f, 0.2).unwrap();
        let b = singles_and_coincidences(&j, &f.with_efficiency(0.5, 1.0).unwrap(), 0.2).unwrap();
        assert!((b.p_s - 0.5 * a.p_s).abs() < 1e-15);
        assert!((b.p_c - 0.5 * a.p_c).abs() < 1e-15);
        assert_eq!(b.p_i, a.p_i);
        assert!(f.with_efficiency(1.5, 1.0).is_err());
    }

    #[test]
    fn idler_only_filter() {
        let j = correlated(48);
        let f = FilterSpec { idler: Some(Passband::rect(0.5, 2.0)), ..FilterSpec::none() };
        let p = singles_and_coincidences(&j, &f, 0.1).unwrap();
        let m = apply_filters(&j, &f).unwrap().mass;
        assert!((p.p_s - 0.01).abs() < 1e-12);
        assert!((p.p_i - 0.01 * m).abs() < 1e-14);
        assert!((p.p_c - 0.01 * m).abs() < 1e-14);
    }

    #[test]
    fn disjoint_band_is_empty_and_undefined() {
        let j = product(32);
        let f = FilterSpec::common(100.0, 100.0, 1.0);
        assert!(apply_filters(&j, &f).unwrap().empty);
        assert!(matches!(heralded_auto_g2(&j, &f, 0.1), Err(Error::Undefined { .. })));
        assert!(g2_one_side_filtered(&j, &f, Side::Signal).is_err());
        let zero = FilterSpec::common(0.0, 0.0, 0.0);
        let r = metrics_report(&j, &zero, 0.1).unwrap();
        assert!(r.xi_s.is_none() && r.heralded_g2.is_none());
        assert_eq!(r.p_c, 0.0);
    }

    #[test]
    fn infinite_width_is_identity() {
        let j = correlated(32);
        let f = FilterSpec::common(0.0, 0.0, f64::INFINITY);
        let out = apply_filters(&j, &f).unwrap();
        assert!((out.mass - 1.0).abs() < 1e-12);
        assert_eq!(out.jsf.values, j.values);
    }

    #[test]
    fn single_mode_heralded_g2() {
        let j = product(64);
        let g = heralded_auto_g2(&j, &FilterSpec::none(), 0.1).unwrap();
        assert!((g - 0.04).abs() < 1e-12);
        let gf = g2_one_side_filtered(&j, &FilterSpec::common(0.3, 0.0, 1.0), Side::Signal).unwrap();
        assert!((gf - 2.0).abs() < 1e-12);
    }

    #[test]
    fn purity_branches() {
        let j = product(48);
        let hp = filtered_heralded_purity(&j, &FilterSpec::none()).unwrap();
        assert!((hp.purity - 1.0).abs() < 1e-12 && hp.r.abs() < 1e-15);
        let c = correlated(48);
        let hp = filtered_heralded_purity(&c, &FilterSpec { idler: Some(Passband::rect(0.0, 1.0)), ..FilterSpec::none() }).unwrap();
        assert!((hp.t + hp.r - 1.0).abs() < 1e-12);
        assert!((hp.purity - (hp.t * hp.t * hp.filtered_mode_purity + hp.r * hp.r)).abs() < 1e-15);
    }
}
