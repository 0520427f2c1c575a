//! Small numerical kernels shared by the modules.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

/// Below this magnitude sinc and the multi-slit factor use their limit branches.
pub const SINGULAR_THRESHOLD: f64 = 1e-8;

/// sin(x)/x with the removable singularity at 0.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SINGULAR_THRESHOLD {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Pairwise summation with a fixed split tree, so the result does not depend
/// on how the caller produced the slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Σ|z|² over a contiguous or strided array, pairwise.
pub fn sum_abs2(a: &ArrayView2<Complex64>) -> f64 {
    let v: Vec<f64> = a.iter().map(|z| z.norm_sqr()).collect();
    pairwise_sum(&v)
}

/// Linear interpolation on a strictly increasing abscissa.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::Domain("interpolation needs at least two matching samples".into()));
    }
    let (lo, hi) = (xs[0], xs[n - 1]);
    if !(x >= lo && x <= hi) {
        return Err(Error::InterpolationRange { value: x, lo, hi });
    }
    let j = match xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
        Ok(j) => return Ok(ys[j]),
        Err(j) => j.clamp(1, n - 1),
    };
    let t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    Ok(ys[j - 1] + t * (ys[j] - ys[j - 1]))
}

pub fn is_strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

pub fn to_nalgebra(a: &ArrayView2<Complex64>) -> DMatrix<Complex64> {
    let (r, c) = a.dim();
    DMatrix::from_fn(r, c, |i, j| a[[i, j]])
}

pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Array2<Complex64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Singular values (descending) of a complex array.
pub fn singular_values(a: &ArrayView2<Complex64>) -> Vec<f64> {
    let m = to_nalgebra(a);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Conjugate transpose.
pub fn adjoint(a: &ArrayView2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}

/// Gram array of the smaller dimension: A·A† if rows ≤ cols, else A†·A.
pub fn small_gram(a: &ArrayView2<Complex64>) -> Array2<Complex64> {
    let (r, c) = a.dim();
    if r <= c {
        a.dot(&adjoint(a))
    } else {
        adjoint(a).dot(a)
    }
}

/// Tr(X·Y) for Hermitian Y, as Σ X_ab·conj(Y_ab); real part.
pub fn trace_product_hermitian(x: &ArrayView2<Complex64>, y: &ArrayView2<Complex64>) -> f64 {
    let v: Vec<f64> = x
        .iter()
        .zip(y.iter())
        .map(|(a, b)| (a * b.conj()).re)
        .collect();
    pairwise_sum(&v)
}

/// (Σs⁴)/(Σs²)² of the singular values of `a`, via the trace of its squared
/// Gram array.
pub fn fourth_moment_ratio(a: &ArrayView2<Complex64>) -> Option<f64> {
    let g = small_gram(a);
    let tr: f64 = pairwise_sum(&g.diag().iter().map(|z| z.re).collect::<Vec<_>>());
    if !(tr > 0.0) {
        return None;
    }
    let tr2 = sum_abs2(&g.view());
    Some(tr2 / (tr * tr))
}

pub fn frobenius(a: &ArrayView2<Complex64>) -> f64 {
    sum_abs2(a).sqrt()
}

pub fn relative_frobenius(a: &ArrayView2<Complex64>, b: &ArrayView2<Complex64>) -> f64 {
    let d = a.to_owned() - b;
    frobenius(&d.view()) / frobenius(b).max(f64::MIN_POSITIVE)
}
