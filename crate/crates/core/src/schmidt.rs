//! Schmidt decomposition of a JSF grid.

use crate::error::{Error, Result};
use crate::grid::JsfGrid;
use crate::numeric::{pairwise_sum, singular_values, to_nalgebra};
use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

/// Default truncation keeps modes until the cumulative weight reaches 1 − this.
pub const DEFAULT_TAIL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rank {
    #[default]
    Default,
    Fixed(usize),
    Full,
}

#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Every r_k, descending, Σr_k² = 1. Not truncated.
    pub coefficients: Vec<f64>,
    /// ψ_k(ω_s), one row per retained mode, orthonormal under Σ·dω_s.
    pub signal_modes: Array2<Complex64>,
    /// φ_k(ω_i), one row per retained mode.
    pub idler_modes: Array2<Complex64>,
    pub schmidt_number: f64,
    pub truncation_rank: usize,
    pub omega_s: Vec<f64>,
    pub omega_i: Vec<f64>,
    /// Norm of the input JSF, so that F = norm·Σ r_k ψ_k φ_k.
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchmidtSummary {
    pub r_k: Vec<f64>,
    #[serde(rename = "K")]
    pub k: f64,
    pub g2: f64,
    pub purity: f64,
    pub truncation_rank: usize,
}

/// K = 1/Σr_k⁴ of a coefficient set normalized to Σr_k² = 1.
pub fn schmidt_number(coefficients: &[f64]) -> f64 {
    1.0 / pairwise_sum(&coefficients.iter().map(|r| r.powi(4)).collect::<Vec<_>>())
}

fn rescale(sv: &[f64]) -> Result<(Vec<f64>, f64)> {
    let tot = pairwise_sum(&sv.iter().map(|s| s * s).collect::<Vec<_>>()).sqrt();
    if !(tot > 0.0) || !tot.is_finite() {
        return Err(Error::Degenerate("JSF grid is identically zero".into()));
    }
    Ok((sv.iter().map(|s| s / tot).collect(), tot))
}

/// Normalized Schmidt coefficients only (no mode functions).
pub fn schmidt_coefficients(jsf: &JsfGrid) -> Result<Vec<f64>> {
    Ok(rescale(&singular_values(&jsf.weighted().view()))?.0)
}

fn retained(coefficients: &[f64], rank: Rank) -> usize {
    let n = coefficients.len();
    match rank {
        Rank::Full => n,
        Rank::Fixed(k) => k.clamp(1, n),
        Rank::Default => {
            let mut acc = 0.0;
            for (k, r) in coefficients.iter().enumerate() {
                acc += r * r;
                if acc >= 1.0 - DEFAULT_TAIL {
                    return k + 1;
                }
            }
            n
        }
    }
}

pub fn schmidt_decompose(jsf: &JsfGrid, rank: Rank) -> Result<SchmidtDecomposition> {
    if !jsf.normalized {
        return Err(Error::Domain("Schmidt decomposition requires a normalized JSF".into()));
    }
    let (ns, ni) = jsf.values.dim();
    let svd = to_nalgebra(&jsf.weighted().view()).svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Degenerate("SVD did not converge".into())),
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let sv: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let (coefficients, norm) = rescale(&sv)?;
    let keep = retained(&coefficients, rank);

    let (rs, ri) = (jsf.grid.d_omega_s().sqrt(), jsf.grid.d_omega_i().sqrt());
    let mut psi = Array2::<Complex64>::zeros((keep, ns));
    let mut phi = Array2::<Complex64>::zeros((keep, ni));
    for (row, &k) in order.iter().take(keep).enumerate() {
        // Gauge: largest-magnitude signal sample real and positive.
        let jmax = (0..ns)
            .max_by(|&a, &b| u[(a, k)].norm_sqr().partial_cmp(&u[(b, k)].norm_sqr()).unwrap())
            .unwrap_or(0);
        let g = Complex64::from_polar(1.0, -u[(jmax, k)].arg());
        for s in 0..ns {
            psi[[row, s]] = u[(s, k)] * g / rs;
        }
        for i in 0..ni {
            phi[[row, i]] = vt[(k, i)] * g.conj() / ri;
        }
    }
    Ok(SchmidtDecomposition {
        schmidt_number: schmidt_number(&coefficients),
        coefficients,
        signal_modes: psi,
        idler_modes: phi,
        truncation_rank: keep,
        omega_s: jsf.grid.omega_s().to_vec(),
        omega_i: jsf.grid.omega_i().to_vec(),
        norm,
    })
}

/// 1 + Σr_k⁴.
pub fn g2_from_modes(dec: &SchmidtDecomposition) -> f64 {
    1.0 + heralded_purity_unfiltered(dec)
}

/// Σr_k⁴ = 1/K.
pub fn heralded_purity_unfiltered(dec: &SchmidtDecomposition) -> f64 {
    pairwise_sum(&dec.coefficients.iter().map(|r| r.powi(4)).collect::<Vec<_>>())
}

impl SchmidtDecomposition {
    pub fn summary(&self) -> SchmidtSummary {
        SchmidtSummary {
            r_k: self.coefficients[..self.truncation_rank].to_vec(),
            k: self.schmidt_number,
            g2: g2_from_modes(self),
            purity: heralded_purity_unfiltered(self),
            truncation_rank: self.truncation_rank,
        }
    }

    pub fn d_omega_s(&self) -> f64 {
        self.omega_s[1] - self.omega_s[0]
    }

    pub fn d_omega_i(&self) -> f64 {
        self.omega_i[1] - self.omega_i[0]
    }

    /// norm·Σ_k r_k ψ_k(ω_s) φ_k(ω_i) over the retained modes.
    pub fn reconstruct(&self) -> Array2<Complex64> {
        let (ns, ni) = (self.omega_s.len(), self.omega_i.len());
        let mut out = Array2::<Complex64>::zeros((ns, ni));
        for k in 0..self.truncation_rank {
            let c = self.coefficients[k] * self.norm;
            let psi = self.signal_modes.row(k);
            let phi = self.idler_modes.row(k);
            for s in 0..ns {
                let a = psi[s] * c;
                for i in 0..ni {
                    out[[s, i]] += a * phi[i];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;

    fn gaussian_product(n: usize) -> JsfGrid {
        let g = SpectralGrid::uniform(-6.0, 6.0, n, -6.0, 6.0, n).unwrap();
        let v = Array2::from_shape_fn((n, n), |(s, i)| {
            let (x, y) = (g.omega_s()[s], g.omega_i()[i]);
            Complex64::from_polar((-(x * x) / 2.0 - y * y / 4.5).exp(), 0.3 * x)
        });
        JsfGrid::new(g, v).unwrap().normalize().unwrap()
    }

    #[test]
    fn separable_is_single_mode() {
        let j = gaussian_product(64);
        let d = schmidt_decompose(&j, Rank::Default).unwrap();
        assert!((d.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((d.schmidt_number - 1.0).abs() < 1e-10);
        assert_eq!(d.truncation_rank, 1);
        assert!((g2_from_modes(&d) - 2.0).abs() < 1e-10);
        assert!((heralded_purity_unfiltered(&d) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn equal_weight_modes() {
        let n = 64;
        let g = SpectralGrid::uniform(0.0, 1.0, n, 0.0, 1.0, n).unwrap();
        // Three orthogonal indicator blocks of equal weight.
        let v = Array2::from_shape_fn((n, n), |(s, i)| {
            if s / 16 == i / 16 && s < 48 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let j = JsfGrid::new(g, v).unwrap().normalize().unwrap();
        let d = schmidt_decompose(&j, Rank::Default).unwrap();
        assert!((d.schmidt_number - 3.0).abs() < 1e-10);
        assert!((heralded_purity_unfiltered(&d) - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn gauge_and_orthonormality() {
        let j = gaussian_product(48);
        let d = schmidt_decompose(&j, Rank::Fixed(4)).unwrap();
        for k in 0..d.truncation_rank {
            let row = d.signal_modes.row(k);
            let big = row.iter().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap();
            assert!(big.im.abs() < 1e-12 && big.re > 0.0);
        }
        for a in 0..d.truncation_rank {
            for b in 0..d.truncation_rank {
                let ip: Complex64 = d.signal_modes.row(a).iter().zip(d.signal_modes.row(b)).map(|(x, y)| x.conj() * y).sum::<Complex64>() * d.d_omega_s();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_grid_is_degenerate() {
        let g = SpectralGrid::uniform(0.0, 1.0, 16, 0.0, 1.0, 16).unwrap();
        let mut j = JsfGrid::new(g, Array2::zeros((16, 16))).unwrap();
        j.normalized = true;
        assert!(schmidt_decompose(&j, Rank::Full).is_err());
        assert!(JsfGrid::new(j.grid.clone(), Array2::zeros((16, 16))).unwrap().normalize().is_err());
    }
}
