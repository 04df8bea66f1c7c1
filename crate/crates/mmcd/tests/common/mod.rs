#![allow(dead_code)] // each integration target uses a different subset

//! Shared helpers and independent oracles for the integration suites.
//!
//! The chi-square oracle here deliberately avoids the library's incomplete
//! gamma path: it integrates the density by adaptive Simpson quadrature with
//! exact gamma values at integer and half-integer arguments.

use mmcd::params::ParamSet;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_spd(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let t = DMatrix::from_fn(dim, dim + 2, |_, _| rng.sample::<f64, _>(StandardNormal));
    &t * t.transpose() / (dim + 2) as f64 + DMatrix::identity(dim, dim) * 0.5
}

pub fn random_params(p: usize, q: usize, rng: &mut ChaCha8Rng) -> ParamSet {
    let mean = DMatrix::from_fn(p, q, |_, _| rng.sample::<f64, _>(StandardNormal));
    ParamSet::new(mean, random_spd(p, rng), random_spd(q, rng)).unwrap()
}

pub fn random_matrix(p: usize, q: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(p, q, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn identity_params(p: usize, q: usize) -> ParamSet {
    ParamSet::new(
        DMatrix::zeros(p, q),
        DMatrix::identity(p, p),
        DMatrix::identity(q, q),
    )
    .unwrap()
}

/// ln Γ(k/2) from exact products: Γ(n) = (n-1)!, Γ(m + 1/2) telescopes down
/// to Γ(1/2) = sqrt(pi).
fn ln_gamma_half(k: usize) -> f64 {
    if k % 2 == 0 {
        let a = k / 2;
        (1..a).map(|i| (i as f64).ln()).sum()
    } else {
        let m = (k - 1) / 2;
        0.5 * std::f64::consts::PI.ln()
            + (1..=m).map(|j| (j as f64 - 0.5).ln()).sum::<f64>()
    }
}

fn simpson_recursive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let refined = left + right;
    if depth == 0 || (refined - whole).abs() <= 15.0 * tol {
        refined + (refined - whole) / 15.0
    } else {
        simpson_recursive(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)
            + simpson_recursive(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_recursive(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Chi-square CDF by quadrature of the density. For one degree of freedom
/// the integrable endpoint singularity is removed by the substitution
/// `x = u^2`, which turns the integrand into a Gaussian.
pub fn chi2_cdf_quadrature(x: f64, k: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if k == 1 {
        let c = (2.0 / std::f64::consts::PI).sqrt();
        return adaptive_simpson(|u| c * (-0.5 * u * u).exp(), 0.0, x.sqrt(), 1e-13).min(1.0);
    }
    let a = k as f64 / 2.0;
    let ln_norm = a * std::f64::consts::LN_2 + ln_gamma_half(k);
    let density = move |t: f64| {
        if t <= 0.0 {
            if k == 2 {
                0.5
            } else {
                0.0
            }
        } else {
            ((a - 1.0) * t.ln() - 0.5 * t - ln_norm).exp()
        }
    };
    adaptive_simpson(density, 0.0, x, 1e-13).min(1.0)
}

/// Chi-square quantile by bisection against the quadrature CDF.
pub fn chi2_quantile_quadrature(p: f64, k: usize) -> f64 {
    assert!((0.0..1.0).contains(&p));
    let mut hi = k as f64 + 10.0;
    while chi2_cdf_quadrature(hi, k) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf_quadrature(mid, k) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Consistency factor from the quadrature oracle alone.
pub fn consistency_factor_quadrature(alpha: f64, pq: usize) -> f64 {
    let cutoff = chi2_quantile_quadrature(alpha, pq);
    alpha / chi2_cdf_quadrature(cutoff, pq + 2)
}
