//! Plot-ready exports: grid CSV and binary, mode dumps, scan and mode-index tables.
//!
//! Binary grid layout (little-endian): a 32-byte header
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `JSF1`                            |
//! | 4      | 4    | n_s (u32)                               |
//! | 8      | 4    | n_i (u32)                               |
//! | 12     | 4    | reserved, zero                          |
//! | 16     | 16   | λ_s first, λ_s last, λ_i first, λ_i last (f32, nm) |
//!
//! followed by n_s·n_i cells of (re, im) as f64, row-major with the signal
//! index slowest. The header bounds are informational; the grid is uniform in
//! ω, so axes are recovered from the endpoints' angular frequencies.

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::metrics::ScanRow;
use crate::units::{lambda_from_omega, omega_from_lambda};
use ndarray::Array2;
use num_complex::Complex64;
use std::io::{Read, Write};

pub const MAGIC: &[u8; 4] = b"JSF1";
pub const HEADER_LEN: usize = 32;

fn nm(omega: f64) -> f64 {
    lambda_from_omega(omega) * 1e9
}

/// `lambda_s_nm,lambda_i_nm,re,im,abs2`, one row per cell, row-major.
/// Works for any kernel sampled on two angular-frequency axes.
pub fn write_grid_csv<W: Write>(mut w: W, rows: &[f64], cols: &[f64], values: &Array2<Complex64>) -> Result<()> {
    check_shape(rows, cols, values)?;
    writeln!(w, "lambda_s_nm,lambda_i_nm,re,im,abs2")?;
    let col_nm: Vec<f64> = cols.iter().map(|&x| nm(x)).collect();
    for (r, &ws) in rows.iter().enumerate() {
        let ls = nm(ws);
        for (c, &li) in col_nm.iter().enumerate() {
            let z = values[[r, c]];
            writeln!(w, "{ls},{li},{:e},{:e},{:e}", z.re, z.im, z.norm_sqr())?;
        }
    }
    Ok(())
}

pub fn write_grid_bin<W: Write>(mut w: W, rows: &[f64], cols: &[f64], values: &Array2<Complex64>) -> Result<()> {
    check_shape(rows, cols, values)?;
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    header.extend_from_slice(&(cols.len() as u32).to_le_bytes());
    header.extend_from_slice(&0u32.to_le_bytes());
    for x in [rows[0], rows[rows.len() - 1], cols[0], cols[cols.len() - 1]] {
        header.extend_from_slice(&(nm(x) as f32).to_le_bytes());
    }
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(values.len() * 16);
    for z in values.iter() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a binary grid. Returns (n_s, n_i, wavelength bounds in nm, values).
pub fn read_grid_bin<R: Read>(mut r: R) -> Result<([f32; 4], Array2<Complex64>)> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..4] != MAGIC {
        return Err(Error::Io("bad magic in binary grid".into()));
    }
    let u32_at = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().unwrap()) as usize;
    let f32_at = |k: usize| f32::from_le_bytes(header[k..k + 4].try_into().unwrap());
    let (ns, ni) = (u32_at(4), u32_at(8));
    let bounds = [f32_at(16), f32_at(20), f32_at(24), f32_at(28)];
    let mut data = vec![0u8; ns * ni * 16];
    r.read_exact(&mut data)?;
    let cells: Vec<Complex64> = data
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let values = Array2::from_shape_vec((ns, ni), cells).map_err(|e| Error::Io(e.to_string()))?;
    Ok((bounds, values))
}

/// Parses the grid CSV back into a spectral grid and values.
pub fn read_grid_csv<R: Read>(mut r: R) -> Result<(SpectralGrid, Array2<Complex64>)> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    if lines.next() != Some("lambda_s_nm,lambda_i_nm,re,im,abs2") {
        return Err(Error::Io("unexpected grid CSV header".into()));
    }
    let mut ls = Vec::new();
    let mut li = Vec::new();
    let mut cells = Vec::new();
    for (k, line) in lines.enumerate() {
        let f: Vec<f64> = line
            .split(',')
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Io(format!("line {}: {e}", k + 2)))?;
        if f.len() != 5 {
            return Err(Error::Io(format!("line {}: expected 5 fields", k + 2)));
        }
        if ls.last() != Some(&f[0]) {
            ls.push(f[0]);
        }
        if ls.len() == 1 {
            li.push(f[1]);
        }
        cells.push(Complex64::new(f[2], f[3]));
    }
    let (ns, ni) = (ls.len(), li.len());
    let values = Array2::from_shape_vec((ns, ni), cells).map_err(|e| Error::Io(e.to_string()))?;
    let ws: Vec<f64> = ls.iter().map(|x| omega_from_lambda(x * 1e-9)).collect();
    let wi: Vec<f64> = li.iter().map(|x| omega_from_lambda(x * 1e-9)).collect();
    let grid = SpectralGrid::uniform(ws[0], ws[ns - 1], ns, wi[0], wi[ni - 1], ni)?;
    Ok((grid, values))
}

fn check_shape(rows: &[f64], cols: &[f64], values: &Array2<Complex64>) -> Result<()> {
    if values.dim() != (rows.len(), cols.len()) || rows.is_empty() || cols.is_empty() {
        return Err(Error::Grid(format!(
            "values {:?} do not match axes ({}, {})",
            values.dim(),
            rows.len(),
            cols.len()
        )));
    }
    Ok(())
}

/// `omega_rad_s,re,im` for one mode function.
pub fn write_mode_csv<W: Write>(mut w: W, omega: &[f64], mode: ndarray::ArrayView1<Complex64>) -> Result<()> {
    writeln!(w, "omega_rad_s,re,im")?;
    for (x, z) in omega.iter().zip(mode.iter()) {
        writeln!(w, "{x:e},{:e},{:e}", z.re, z.im)?;
    }
    Ok(())
}

/// `lambda_nm,omega_rad_s,intensity`.
pub fn write_marginal_csv<W: Write>(mut w: W, omega: &[f64], values: &[f64]) -> Result<()> {
    writeln!(w, "lambda_nm,omega_rad_s,intensity")?;
    for (x, v) in omega.iter().zip(values) {
        writeln!(w, "{},{x:e},{v:e}", nm(*x))?;
    }
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

/// `dlambda_f_nm,g2s,g2i,xi_s,xi_i`; undefined metrics are empty fields.
pub fn write_scan_csv<W: Write>(mut w: W, rows: &[ScanRow]) -> Result<()> {
    writeln!(w, "dlambda_f_nm,g2s,g2i,xi_s,xi_i")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.dlambda_f_nm, opt(r.g2s), opt(r.g2i), opt(r.xi_s), opt(r.xi_i))?;
    }
    Ok(())
}

/// `k,coefficient,G` with k starting at 1, gains in the given order.
pub fn write_mode_index_csv<W: Write>(mut w: W, ladder: &[(f64, Vec<f64>)]) -> Result<()> {
    writeln!(w, "k,coefficient,G")?;
    for (g, coeffs) in ladder {
        for (k, c) in coeffs.iter().enumerate() {
            writeln!(w, "{},{c},{g}", k + 1)?;
        }
    }
    Ok(())
}
