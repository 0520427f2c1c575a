//! Physical constants, wavelength/frequency conversion and engineering-unit
//! parsing.
//!
//! Every quantity inside the crate is SI. Engineering units only appear at the
//! edges (configuration text, CSV axes in nm).

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Speed of light in vacuum (m/s), exact.
pub const C: f64 = 299_792_458.0;

/// Reference wavelength of the filter-bandwidth conversion used by scans.
pub const SCAN_REFERENCE_WAVELENGTH: f64 = 1550e-9;

#[inline]
pub fn omega_from_lambda(lambda: f64) -> f64 {
    2.0 * PI * C / lambda
}

#[inline]
pub fn lambda_from_omega(omega: f64) -> f64 {
    2.0 * PI * C / omega
}

/// Filter width in rad/s for a wavelength bandwidth, using the fixed
/// 1550 nm reference: σ_f = 2πc·Δλ/(1550 nm)².
pub fn sigma_from_dlambda(dlambda: f64) -> f64 {
    2.0 * PI * C * dlambda / (SCAN_REFERENCE_WAVELENGTH * SCAN_REFERENCE_WAVELENGTH)
}

pub fn dlambda_from_sigma(sigma: f64) -> f64 {
    sigma * SCAN_REFERENCE_WAVELENGTH * SCAN_REFERENCE_WAVELENGTH / (2.0 * PI * C)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    /// GVD parameter D (s/m²).
    Dispersion,
    /// GVD slope (s/m³).
    DispersionSlope,
    InverseLength,
    /// Walk-off coefficient τ (s/m).
    InverseVelocity,
    AngularFrequency,
    Dimensionless,
}

#[derive(Debug)]
pub struct Unit {
    pub symbol: &'static str,
    pub dim: Dimension,
    /// SI value = value · 10^exp10.
    exp10: i32,
    aliases: &'static [&'static str],
}

static UNITS: &[Unit] = &[
    Unit { symbol: "nm", dim: Dimension::Length, exp10: -9, aliases: &[] },
    Unit { symbol: "µm", dim: Dimension::Length, exp10: -6, aliases: &["um", "μm"] },
    Unit { symbol: "mm", dim: Dimension::Length, exp10: -3, aliases: &[] },
    Unit { symbol: "m", dim: Dimension::Length, exp10: 0, aliases: &[] },
    Unit { symbol: "km", dim: Dimension::Length, exp10: 3, aliases: &[] },
    Unit {
        symbol: "ps/(km·nm)",
        dim: Dimension::Dispersion,
        exp10: -6,
        aliases: &["ps/(km*nm)", "ps/km/nm", "ps/(nm·km)", "ps/(nm*km)", "ps/nm/km"],
    },
    Unit { symbol: "s/m²", dim: Dimension::Dispersion, exp10: 0, aliases: &["s/m^2", "s/m2"] },
    Unit {
        symbol: "ps/(km·nm²)",
        dim: Dimension::DispersionSlope,
        exp10: 3,
        aliases: &["ps/(km*nm^2)", "ps/km/nm^2", "ps/(km·nm^2)", "ps/(nm²·km)", "ps/(nm^2*km)"],
    },
    Unit { symbol: "s/m³", dim: Dimension::DispersionSlope, exp10: 0, aliases: &["s/m^3", "s/m3"] },
    Unit { symbol: "km⁻¹", dim: Dimension::InverseLength, exp10: -3, aliases: &["1/km", "/km", "km^-1"] },
    Unit { symbol: "m⁻¹", dim: Dimension::InverseLength, exp10: 0, aliases: &["1/m", "/m", "m^-1"] },
    Unit { symbol: "ps/m", dim: Dimension::InverseVelocity, exp10: -12, aliases: &[] },
    Unit { symbol: "fs/mm", dim: Dimension::InverseVelocity, exp10: -12, aliases: &[] },
    Unit { symbol: "s/m", dim: Dimension::InverseVelocity, exp10: 0, aliases: &[] },
    Unit { symbol: "rad/s", dim: Dimension::AngularFrequency, exp10: 0, aliases: &[] },
    Unit { symbol: "rad/ps", dim: Dimension::AngularFrequency, exp10: 12, aliases: &[] },
];

pub fn lookup_unit(symbol: &str) -> Result<&'static Unit> {
    let s = symbol.trim();
    UNITS
        .iter()
        .find(|u| u.symbol == s || u.aliases.contains(&s))
        .ok_or_else(|| Error::Unit(format!("unknown unit `{s}`")))
}

fn scale_to_si(v: f64, exp10: i32) -> f64 {
    // Dividing by an exactly representable power of ten rounds once.
    if exp10 < 0 {
        v / 10f64.powi(-exp10)
    } else {
        v * 10f64.powi(exp10)
    }
}

fn scale_from_si(v: f64, exp10: i32) -> f64 {
    scale_to_si(v, -exp10)
}

#[derive(Debug, Clone, Copy)]
pub struct Quantity {
    pub si: f64,
    pub unit: &'static Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: &'static Unit) -> Self {
        Quantity { si: scale_to_si(value, unit.exp10), unit }
    }

    pub fn value_in_unit(&self) -> f64 {
        scale_from_si(self.si, self.unit.exp10)
    }

    /// `"<value> <unit>"` with the value rounded to 15 significant digits,
    /// which absorbs the last-bit noise of the SI round trip.
    pub fn format(&self) -> String {
        format!("{} {}", format_significant(self.value_in_unit()), self.unit.symbol)
    }
}

pub fn format_significant(v: f64) -> String {
    let rounded: f64 = format!("{v:.14e}").parse().unwrap_or(v);
    format!("{rounded}")
}

/// Parses `"17 ps/(km·nm)"`, `"1548.5nm"` and similar.
pub fn parse_quantity(text: &str) -> Result<Quantity> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|&(i, ch)| {
            !(ch.is_ascii_digit() || ch == '.' || ch == '+' || ch == '-' || ch == 'e' || ch == 'E')
                || (matches!(ch, 'e' | 'E') && !t[i + 1..].starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+'))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::Unit(format!("cannot parse number in `{t}`")))?;
    if !value.is_finite() {
        return Err(Error::Unit(format!("non-finite value in `{t}`")));
    }
    Ok(Quantity::new(value, lookup_unit(unit)?))
}

/// Parses a quantity and checks its dimension; returns the SI value.
pub fn parse_si(text: &str, dim: Dimension) -> Result<f64> {
    let q = parse_quantity(text)?;
    if q.unit.dim != dim {
        return Err(Error::Unit(format!(
            "`{text}` has dimension {:?}, expected {dim:?}",
            q.unit.dim
        )));
    }
    Ok(q.si)
}

/// SI value of `value` expressed in the unit `symbol`.
pub fn to_si(value: f64, symbol: &str) -> Result<f64> {
    Ok(Quantity::new(value, lookup_unit(symbol)?).si)
}

/// Value of an SI quantity expressed in the unit `symbol`.
pub fn from_si(si: f64, symbol: &str) -> Result<f64> {
    Ok(scale_from_si(si, lookup_unit(symbol)?.exp10))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_round_trip() {
        let q = parse_quantity("17 ps/(km·nm)").unwrap();
        assert_eq!(q.unit.dim, Dimension::Dispersion);
        assert!((q.si - 17e-6).abs() < 1e-20);
        assert_eq!(q.format(), "17 ps/(km·nm)");
    }

    #[test]
    fn aliases_and_slope() {
        let q = parse_quantity("0.075 ps/(km*nm^2)").unwrap();
        assert!((q.si - 75.0).abs() < 1e-12);
        assert_eq!(q.format(), "0.075 ps/(km·nm²)");
        assert!((parse_si("1 1/km", Dimension::InverseLength).unwrap() - 1e-3).abs() < 1e-18);
        assert!((parse_si("1548.5nm", Dimension::Length).unwrap() - 1548.5e-9).abs() < 1e-21);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(parse_si("3 nm", Dimension::Dispersion).is_err());
        assert!(parse_quantity("3 furlongs").is_err());
        assert!(parse_quantity("abc nm").is_err());
    }

    #[test]
    fn exponent_numbers() {
        let q = parse_quantity("1.5e-3 m").unwrap();
        assert!((q.si - 1.5e-3).abs() < 1e-18);
        let q = parse_quantity("2e3 nm").unwrap();
        assert!((q.si - 2e-6).abs() < 1e-18);
    }

    #[test]
    fn bandwidth_conversion_inverts() {
        let s = sigma_from_dlambda(3.6e-9);
        assert!((dlambda_from_sigma(s) - 3.6e-9).abs() < 1e-22);
    }
}
