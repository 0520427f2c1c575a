//! Uniform (ω_s, ω_i) grids and the complex JSF samples living on them.

use crate::diagnostics::Diagnostic;
use crate::error::{Error, Result};
use crate::numeric::{pairwise_sum, sum_abs2};
use crate::units::omega_from_lambda;
use ndarray::{s, Array2};
use num_complex::Complex64;

pub const MIN_POINTS: usize = 16;

/// Boundary mass above this raises a truncation diagnostic.
pub const TRUNCATION_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    omega_s: Vec<f64>,
    omega_i: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| lo + step * k as f64).collect()
}

fn check_axis(axis: &[f64], name: &str) -> Result<()> {
    if axis.len() < MIN_POINTS {
        return Err(Error::Grid(format!("{name} axis needs at least {MIN_POINTS} points, got {}", axis.len())));
    }
    let step = axis[1] - axis[0];
    if !(step > 0.0) {
        return Err(Error::Grid(format!("{name} axis must be strictly increasing")));
    }
    for w in axis.windows(2) {
        let d = w[1] - w[0];
        if !(d > 0.0) || (d - step).abs() > 1e-9 * step.abs().max(1e-300) + 1e-12 * w[1].abs() {
            return Err(Error::Grid(format!("{name} axis must be uniform and increasing")));
        }
    }
    Ok(())
}

impl SpectralGrid {
    pub fn new(omega_s: Vec<f64>, omega_i: Vec<f64>) -> Result<Self> {
        check_axis(&omega_s, "signal")?;
        check_axis(&omega_i, "idler")?;
        Ok(SpectralGrid { omega_s, omega_i })
    }

    /// `n` points from `lo` to `hi` inclusive on both axes.
    pub fn uniform(lo_s: f64, hi_s: f64, n_s: usize, lo_i: f64, hi_i: f64, n_i: usize) -> Result<Self> {
        if n_s < 2 || n_i < 2 || !(hi_s > lo_s) || !(hi_i > lo_i) {
            return Err(Error::Grid("grid bounds must be increasing with at least two points".into()));
        }
        Self::new(linspace(lo_s, hi_s, n_s), linspace(lo_i, hi_i, n_i))
    }

    /// Square grid, uniform in ω, covering the wavelength window
    /// [lambda_min, lambda_max] on both axes.
    pub fn from_wavelength_window(lambda_min: f64, lambda_max: f64, n: usize) -> Result<Self> {
        if !(lambda_min > 0.0) || !(lambda_max > lambda_min) {
            return Err(Error::Grid("wavelength window must satisfy 0 < min < max".into()));
        }
        let (lo, hi) = (omega_from_lambda(lambda_max), omega_from_lambda(lambda_min));
        Self::uniform(lo, hi, n, lo, hi, n)
    }

    /// Square grid of half-width `half_span` around (ω_s0, ω_i0).
    pub fn centered(omega_s0: f64, omega_i0: f64, half_span: f64, n: usize) -> Result<Self> {
        Self::uniform(omega_s0 - half_span, omega_s0 + half_span, n, omega_i0 - half_span, omega_i0 + half_span, n)
    }

    pub fn omega_s(&self) -> &[f64] {
        &self.omega_s
    }

    pub fn omega_i(&self) -> &[f64] {
        &self.omega_i
    }

    pub fn n_s(&self) -> usize {
        self.omega_s.len()
    }

    pub fn n_i(&self) -> usize {
        self.omega_i.len()
    }

    pub fn d_omega_s(&self) -> f64 {
        (self.omega_s[self.n_s() - 1] - self.omega_s[0]) / (self.n_s() - 1) as f64
    }

    pub fn d_omega_i(&self) -> f64 {
        (self.omega_i[self.n_i() - 1] - self.omega_i[0]) / (self.n_i() - 1) as f64
    }

    /// Midpoint-rule area element dω_s·dω_i.
    pub fn cell(&self) -> f64 {
        self.d_omega_s() * self.d_omega_i()
    }

    /// Same bounds, different resolution.
    pub fn resampled(&self, n_s: usize, n_i: usize) -> Result<Self> {
        let (s, i) = (&self.omega_s, &self.omega_i);
        Self::uniform(s[0], s[s.len() - 1], n_s, i[0], i[i.len() - 1], n_i)
    }

    /// Index of the sample closest to ω on the signal axis.
    pub fn nearest_s(&self, omega: f64) -> usize {
        nearest(&self.omega_s, omega)
    }

    pub fn nearest_i(&self, omega: f64) -> usize {
        nearest(&self.omega_i, omega)
    }
}

fn nearest(axis: &[f64], x: f64) -> usize {
    let k = ((x - axis[0]) / (axis[1] - axis[0])).round();
    k.clamp(0.0, (axis.len() - 1) as f64) as usize
}

/// Complex JSF samples indexed (signal, idler).
#[derive(Debug, Clone)]
pub struct JsfGrid {
    pub grid: SpectralGrid,
    pub values: Array2<Complex64>,
    pub normalized: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl JsfGrid {
    pub fn new(grid: SpectralGrid, values: Array2<Complex64>) -> Result<Self> {
        if values.dim() != (grid.n_s(), grid.n_i()) {
            return Err(Error::Grid(format!(
                "value array {:?} does not match grid {}x{}",
                values.dim(),
                grid.n_s(),
                grid.n_i()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Grid("JSF samples must be finite".into()));
        }
        Ok(JsfGrid { grid, values, normalized: false, diagnostics: Vec::new() })
    }

    /// Σ|F|²·dω_s·dω_i with a fixed pairwise summation tree.
    pub fn mass(&self) -> f64 {
        sum_abs2(&self.values.view()) * self.grid.cell()
    }

    /// Rescales so the mass is 1 and records a truncation diagnostic when the
    /// outermost rows/columns carry more than [`TRUNCATION_THRESHOLD`].
    pub fn normalize(mut self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Degenerate("JSF has zero or non-finite mass".into()));
        }
        let scale = 1.0 / m.sqrt();
        self.values.mapv_inplace(|z| z * scale);
        self.normalized = true;
        let b = self.boundary_mass();
        if b > TRUNCATION_THRESHOLD {
            self.diagnostics.push(Diagnostic::Truncation { boundary_mass: b, threshold: TRUNCATION_THRESHOLD });
        }
        Ok(self)
    }

    /// Mass (relative to the total) in the first and last row and column.
    pub fn boundary_mass(&self) -> f64 {
        let (ns, ni) = self.values.dim();
        let v = &self.values;
        let edge = pairwise_sum(&[
            sum_abs2(&v.slice(s![0..1, ..])),
            sum_abs2(&v.slice(s![ns - 1..ns, ..])),
            sum_abs2(&v.slice(s![1..ns - 1, 0..1])),
            sum_abs2(&v.slice(s![1..ns - 1, ni - 1..ni])),
        ]);
        edge / sum_abs2(&v.view()).max(f64::MIN_POSITIVE)
    }

    /// √(dω_s·dω_i)-weighted copy, whose singular values are the continuum
    /// Schmidt coefficients (for a normalized JSF).
    pub fn weighted(&self) -> Array2<Complex64> {
        let w = self.grid.cell().sqrt();
        self.values.mapv(|z| z * w)
    }

    pub fn abs2(&self) -> Array2<f64> {
        self.values.mapv(|z| z.norm_sqr())
    }
}
