//! Independent reference computations for derived quantities.

mod common;

use common::*;
use ndarray::Array2;
use nli_core::design::{
    binomial_lengths, cross_term_coefficient, elliptical_condition, island_roundness, round_island_ldm, stripe_width,
    EllipticalVerdict,
};
use nli_core::dispersion::{delta_k_dsf, sigma_from_fwhm};
use nli_core::grid::{JsfGrid, SpectralGrid};
use nli_core::jsf::{
    build_interference_grid, build_nli_jsf, build_simple_jsf, island_window, multi_slit, uneven_factor, NliDesign,
    NliModel, SimpleJsfParams,
};
use nli_core::metrics::{heralded_auto_g2, FilterSpec, Passband};
use nli_core::numeric::relative_frobenius;
use nli_core::schmidt::{schmidt_coefficients, schmidt_decompose, Rank};
use nli_core::Complex64;
use std::f64::consts::PI;

const C: f64 = 299_792_458.0;

#[test]
fn pump_width_from_constants() {
    // Intensity FWHM 1 nm → amplitude σ = π c Δλ / (λ² √ln2).
    let want = PI * C * 1e-9 / (1548.5e-9f64.powi(2) * 2f64.ln().sqrt());
    let got = sigma_from_fwhm(1e-9, 1548.5e-9).unwrap();
    assert!((got - want).abs() / want < 1e-14);
    assert!((got - 4.717e11).abs() < 0.001e11);
}

#[test]
fn mismatch_against_propagation_constant_expansion() {
    // Taylor expansion of β(ω) about the pump with β₂ = −λ²D/(2πc), D linear in λ.
    let p = pump();
    let f = fiber();
    let lp = LAMBDA_P;
    let d_lp = 75.0 * (lp - 1548.2e-9);
    let b2 = -lp * lp * d_lp / (2.0 * PI * C);
    let b3 = (lp / (2.0 * PI * C)).powi(2) * (lp * lp * 75.0 + 2.0 * lp * d_lp);
    let wp = p.omega_p0();
    for (os, oi) in [(-3e12, 2.9e12), (-1e13, 1e13), (-2e13, 1.95e13)] {
        let (ws, wi) = (wp + os, wp + oi);
        let beta = |o: f64| b2 * o * o / 2.0 + b3 * o * o * o / 6.0;
        // Δk = 2β(ω_p) − β(ω_s) − β(ω_i) − 2γP, with the pump at the mean frequency.
        let om = 0.5 * (os + oi);
        let want = 2.0 * beta(om) - beta(os) - beta(oi) - 2e-3;
        let got = delta_k_dsf(ws, wi, &p, &f);
        let scale = beta(os).abs().max(1e-3);
        assert!((got - want).abs() / scale < 2e-2, "{got} vs {want}");
    }
}

#[test]
fn round_island_length_from_constants() {
    let p = pump();
    let k2 = LAMBDA_P * LAMBDA_P * SMF_D / (2.0 * PI * C);
    let want = 1.0 / (PI * k2 * p.sigma_p * p.sigma_p);
    let got = round_island_ldm(1, 2, &p, &smf(7.0)).unwrap();
    assert!((got - want).abs() / want < 1e-12);
    assert!((got - 66.1).abs() < 0.1, "{got}");
}

#[test]
fn round_island_is_round() {
    let p = pump();
    let l = round_island_ldm(1, 2, &p, &smf(7.0)).unwrap();
    // Pump envelope and medium phase only, as in the derivation.
    let ideal = NliDesign::even(2, 50.0, smf(l)).unwrap().with_sinc(false);
    let j = build_nli_jsf(&ideal, &pump(), None, &grid(512)).unwrap();
    let w = island_window(&j, 1, &p, &smf(l)).unwrap();
    let r = island_roundness(&j, &w).unwrap();
    assert!(r.ratio <= 1.1, "principal width ratio {}", r.ratio);
    // Same for the full fiber model.
    let j = nli(2, l, 512);
    let r = island_roundness(&j, &island_window(&j, 1, &p, &smf(l)).unwrap()).unwrap();
    assert!(r.ratio <= 1.1, "principal width ratio {}", r.ratio);
    // A much shorter medium gives an elongated island.
    let j7 = nli(2, 7.0, 512);
    let w7 = island_window(&j7, 1, &p, &smf(7.0)).unwrap();
    assert!(island_roundness(&j7, &w7).unwrap().ratio > 1.5);
}

#[test]
fn stripe_gaussian_approximation() {
    let p = pump();
    let dm = smf(7.0);
    let sig = stripe_width(1, &p, &dm).unwrap();
    let k2 = dm.k2(&p).unwrap();
    let d1 = (8.0 * PI / (k2 * 7.0)).sqrt();
    let mut worst: f64 = 0.0;
    for k in -200..=200 {
        let x = 0.5 * sig * k as f64 / 200.0;
        let d = d1 + x;
        let cos = (k2 * 7.0 * d * d / 8.0).cos().abs();
        worst = worst.max((cos - (-x * x / (2.0 * sig * sig)).exp()).abs());
    }
    assert!(worst < 0.02, "{worst}");
}

#[test]
fn stripe_width_matches_grid_measurement() {
    let p = pump();
    let dm = smf(7.0);
    let g = grid(512);
    let h = build_interference_grid(&p, &dm, 2, &g).unwrap();
    let n = g.n_s();
    // Pairs (s, n−1−s) sample the detuning d = ω_s − ω_i along an anti-diagonal.
    let d: Vec<f64> = (0..n).map(|s| g.omega_i()[n - 1 - s] - g.omega_s()[s]).collect();
    let v: Vec<f64> = (0..n).map(|s| h.values[[s, n - 1 - s]].norm_sqr()).collect();
    let k2 = dm.k2(&p).unwrap();
    for m in 1..=3u32 {
        let dm_ = (8.0 * m as f64 * PI / (k2 * 7.0)).sqrt();
        let k0 = (0..n / 2).min_by(|&a, &b| (d[a] - dm_).abs().partial_cmp(&(d[b] - dm_).abs()).unwrap()).unwrap();
        let cross = |dir: i64| {
            let mut k = k0 as i64;
            while v[(k + dir) as usize] > (-1f64).exp() {
                k += dir;
            }
            let (a, b) = (k as usize, (k + dir) as usize);
            let t = (v[a] - (-1f64).exp()) / (v[a] - v[b]);
            d[a] + t * (d[b] - d[a])
        };
        let half = 0.5 * (cross(1) - cross(-1)).abs();
        let sig = stripe_width(m, &p, &dm).unwrap();
        assert!((half - sig).abs() / sig < 0.1, "m={m}: measured {half:e}, predicted {sig:e}");
    }
}

#[test]
fn elliptical_condition_removes_cross_term() {
    for (ts, ti, l) in [(2e-9, -3e-9, 0.5), (-1e-9, 4e-9, 1.2), (5e-10, -5e-10, 2.0)] {
        let sp = match elliptical_condition(ts, ti, l).unwrap() {
            EllipticalVerdict::Feasible { sigma_p, .. } => sigma_p,
            v => panic!("{v:?}"),
        };
        // Mixed second difference of the local exponent.
        let e = |x: f64, y: f64| -(x + y).powi(2) / (4.0 * sp * sp) - (ts * x + ti * y).powi(2) * l * l / 8.0;
        let hh = 0.1 * sp;
        let fd = (e(hh, hh) - e(hh, -hh) - e(-hh, hh) + e(-hh, -hh)) / (4.0 * hh * hh);
        let scale = 1.0 / (sp * sp);
        assert!(fd.abs() / scale < 1e-10, "{fd}");
        let other = 2.0 * sp;
        let fd2 = {
            let e = |x: f64, y: f64| -(x + y).powi(2) / (4.0 * other * other) - (ts * x + ti * y).powi(2) * l * l / 8.0;
            (e(hh, hh) - e(hh, -hh) - e(-hh, hh) + e(-hh, -hh)) / (4.0 * hh * hh)
        };
        let coef = cross_term_coefficient(ts, ti, l, other);
        assert!((coef - fd2).abs() / coef.abs() < 1e-6);
    }
}

#[test]
fn multi_slit_and_binomial_factor_against_sums() {
    for n in 2..=6usize {
        let ls = binomial_lengths(n, 1.0).unwrap();
        for k in 0..97 {
            let th = -3.0 + 6.0 * k as f64 / 96.0;
            let direct: Complex64 = (0..n).map(|q| Complex64::from_polar(1.0, 2.0 * q as f64 * th)).sum();
            assert!((multi_slit(th, n) - direct).norm() < 1e-12 * n as f64);
            let k2 = uneven_factor(th, &ls).norm_sqr();
            let want = (2.0 * th.cos()).powi(2 * (n as i32 - 1));
            assert!((k2 - want).abs() <= 1e-10 * 4f64.powi(n as i32 - 1));
        }
    }
    // At θ = mπ the limit branch gives N·(−1)^{m(N−1)}·e^{j(N−1)mπ} = N.
    for n in 2..=5 {
        for m in -3..=3 {
            let h = multi_slit(m as f64 * PI, n);
            assert!((h - Complex64::new(n as f64, 0.0)).norm() < 1e-9);
        }
    }
}

#[test]
fn even_stages_match_coherent_stage_sum() {
    let g = grid(128);
    for n in [2usize, 3, 5] {
        let auto = NliDesign::even(n, 50.0, smf(7.0)).unwrap().with_dk_in_theta(true);
        let exact = auto.clone().with_model(NliModel::Exact);
        let a = build_nli_jsf(&auto, &pump(), Some(&fiber()), &g).unwrap();
        let b = build_nli_jsf(&exact, &pump(), Some(&fiber()), &g).unwrap();
        assert!(relative_frobenius(&a.values.view(), &b.values.view()) < 1e-12);
    }
}

/// Largest non-island local maximum of max_i |F(s,i)|², relative to the peak.
fn largest_secondary(j: &JsfGrid) -> f64 {
    let a = j.abs2();
    let prof: Vec<f64> = a.outer_iter().map(|row| row.iter().cloned().fold(0.0, f64::max)).collect();
    let peak = prof.iter().cloned().fold(0.0, f64::max);
    (1..prof.len() - 1)
        .filter(|&k| prof[k] > prof[k - 1] && prof[k] >= prof[k + 1] && prof[k] < 0.5 * peak)
        .map(|k| prof[k] / peak)
        .fold(0.0, f64::max)
}

#[test]
fn binomial_designs_suppress_secondary_maxima() {
    let g = grid(512);
    let even = NliDesign::even(3, 50.0, smf(11.0)).unwrap().with_sinc(false);
    let j_even = build_nli_jsf(&even, &pump(), None, &g).unwrap();
    let s_even = largest_secondary(&j_even);
    // sin(3θ)/sin θ has side lobes of 1/9 in intensity.
    assert!((s_even - 1.0 / 9.0).abs() < 0.01, "{s_even}");
    for n in [3, 4] {
        let d = NliDesign::new(binomial_lengths(n, 50.0).unwrap(), Some(smf(11.0))).unwrap();
        let j = build_nli_jsf(&d, &pump(), Some(&fiber()), &g).unwrap();
        assert!(largest_secondary(&j) < 0.01);
    }
}

fn four_fold_purity(j: &JsfGrid) -> f64 {
    let f = &j.values;
    let (ns, ni) = f.dim();
    let mut e = 0.0;
    for s in 0..ns {
        for sp in 0..ns {
            let mut a = Complex64::new(0.0, 0.0);
            for i in 0..ni {
                a += f[[s, i]] * f[[sp, i]].conj();
            }
            e += a.norm_sqr();
        }
    }
    let m: f64 = f.iter().map(|z| z.norm_sqr()).sum();
    e / (m * m)
}

#[test]
fn mode_purity_matches_four_fold_quadrature() {
    let p = pump();
    let wp = p.omega_p0();
    let g = SpectralGrid::centered(wp, wp, 12.0 * p.sigma_p, 256).unwrap();
    let fig1 = build_simple_jsf(&SimpleJsfParams::new(1.2, 1.8, 0.5).unwrap(), p.sigma_p, wp, wp, &g).unwrap();
    for j in [fig1, nli(2, 7.0, 256), nli(3, 7.0, 256)] {
        let r = schmidt_coefficients(&j).unwrap();
        let sum4: f64 = r.iter().map(|x| x.powi(4)).sum();
        let oracle = four_fold_purity(&j);
        assert!((sum4 - oracle).abs() < 1e-6, "{sum4} vs {oracle}");
    }
}

#[test]
fn full_rank_reconstruction() {
    let j = nli(2, 7.0, 128);
    let d = schmidt_decompose(&j, Rank::Full).unwrap();
    assert!(relative_frobenius(&d.reconstruct().view(), &j.values.view()) < 1e-8);
}

#[test]
fn heralded_g2_against_literal_quadrature() {
    let n = 20;
    let g = SpectralGrid::uniform(-3.0, 3.0, n, -3.0, 3.0, n).unwrap();
    let v = Array2::from_shape_fn((n, n), |(s, i)| {
        let (x, y) = (g.omega_s()[s], g.omega_i()[i]);
        Complex64::from_polar((-(x + y).powi(2) / 2.0 - (x - y).powi(2) / 5.0).exp(), 0.3 * x * y)
    });
    let j = JsfGrid::new(g.clone(), v).unwrap().normalize().unwrap();
    let filt = FilterSpec { signal: Some(Passband::gaussian(0.3, 1.0)), idler: Some(Passband::rect(-0.2, 2.5)), ..FilterSpec::none() };
    let gain = 0.2;
    let fs: Vec<f64> = g.omega_s().iter().map(|&w| filt.signal.unwrap().amplitude(w)).collect();
    let fi: Vec<f64> = g.omega_i().iter().map(|&w| filt.idler.unwrap().amplitude(w)).collect();
    let f = &j.values;
    let cell = g.cell();
    let (mut coinc, mut sig, mut idl, mut e, mut tx, mut ty) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for s in 0..n {
        for i in 0..n {
            let p = f[[s, i]].norm_sqr() * cell;
            coinc += fs[s].powi(2) * fi[i].powi(2) * p;
            sig += fs[s].powi(2) * p;
            idl += fi[i].powi(2) * p;
            tx += fs[s].powi(2) * fi[i].powi(2) * p;
            ty += fs[s].powi(2) * p;
        }
    }
    for s in 0..n {
        for sp in 0..n {
            for i in 0..n {
                for ip in 0..n {
                    let t = f[[s, i]] * f[[sp, i]].conj() * f[[sp, ip]] * f[[s, ip]].conj();
                    e += t.re * fs[s].powi(2) * fs[sp].powi(2) * fi[i].powi(2) * cell * cell;
                }
            }
        }
    }
    let (hs, hi) = (coinc / idl, coinc / sig);
    let want = 2.0 * gain * gain * coinc / (hs * hi) * (1.0 + e / (tx * ty));
    let got = heralded_auto_g2(&j, &filt, gain).unwrap();
    assert!((got - want).abs() / want < 1e-10, "{got} vs {want}");
}
