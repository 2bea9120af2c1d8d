#![allow(dead_code)]

use gpmil::data::{generate_synthetic, SyntheticSpec};
use gpmil::MilDataset;

/// Standard normal pdf and upper tail, written independently of the crate.
pub fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    // split first so narrow peaks are not missed by the initial estimate
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = lo + h;
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = h / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 18)
        })
        .sum()
}

/// `E[t | t < 0]` for `t ~ N(mu, sigma²)` by quadrature over `w = −t/sigma`,
/// with the Gaussian factor rescaled so nothing underflows.
pub fn quadrature_neg_trunc_mean(mu: f64, sigma: f64) -> f64 {
    let z = mu / sigma;
    let shift = if z > 0.0 { 0.5 * z * z } else { 0.0 };
    let f = |w: f64| (-0.5 * (w + z) * (w + z) + shift).exp();
    let upper = (-z).max(0.0) + 40.0;
    let mass = adaptive_simpson(f, 0.0, upper, 1e-13);
    let first = adaptive_simpson(|w| w * f(w), 0.0, upper, 1e-13);
    -sigma * first / mass
}

pub fn synth(bags: usize, side: usize, dim: usize, seed: u64) -> MilDataset {
    generate_synthetic(&SyntheticSpec {
        bags,
        height: side,
        width: side,
        blob_radius: 1.0,
        dim,
        seed,
        ..Default::default()
    })
    .unwrap()
}
