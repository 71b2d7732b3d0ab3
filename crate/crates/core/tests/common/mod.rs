//! Independent oracles shared by the integration tests: finite differences,
//! composite Simpson quadrature, brute-force grid posteriors.

#![allow(dead_code)]

use dpd_smc::data::Dataset;
use dpd_smc::dpd;
use dpd_smc::hscore::{self, WeightedSample};
use dpd_smc::models::ParamPoint;
use dpd_smc::stats;
use dpd_smc::ModelSpec;

/// Central difference `(f(x + h) - f(x - h)) / 2h`.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central second difference.
pub fn central_diff2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn normal_pdf(y: f64, mu: f64, sigma: f64) -> f64 {
    let z = (y - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Frozen-particle H-score at `gamma`, with the particles re-weighted by the
/// exact potential ratio from `gamma0` (where they carry `base` weights).
pub fn reweighted_h(
    model: &ModelSpec,
    particles: &[ParamPoint],
    base: &[f64],
    gamma0: f64,
    gamma: f64,
    data: &Dataset,
) -> f64 {
    let lw: Vec<f64> = particles
        .iter()
        .zip(base)
        .map(|(t, w)| {
            w.ln() + dpd::total_log_potential(model, t, gamma, data).unwrap()
                - dpd::total_log_potential(model, t, gamma0, data).unwrap()
        })
        .collect();
    let s = WeightedSample::from_log_weights(particles.to_vec(), &lw).unwrap();
    hscore::h_score(model, &s, gamma, data).unwrap()
}

/// Frozen-particle finite-difference gradient of the H-score.
pub fn reweighted_fd_gradient(
    model: &ModelSpec,
    sample: &WeightedSample,
    gamma: f64,
    data: &Dataset,
    h: f64,
) -> f64 {
    central_diff(
        |g| reweighted_h(model, &sample.thetas, &sample.weights, gamma, g, data),
        gamma,
        h,
    )
}

/// Brute-force posterior on a `mu` grid for the Gaussian model with known
/// sigma and a flat prior. Returns grid points and normalised masses.
pub fn grid_posterior_mu(
    data: &Dataset,
    gamma: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let model = ModelSpec::gaussian();
    let grid: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let lp: Vec<f64> = grid
        .iter()
        .map(|&mu| dpd::total_log_potential_rescaled(&model, &[mu, sigma], gamma, data).unwrap())
        .collect();
    (grid, stats::normalize_log_weights(&lp).unwrap())
}

/// Brute-force posterior on a `(mu, sigma)` grid, flat prior on both.
pub fn grid_posterior_2d(
    data: &Dataset,
    gamma: f64,
    mu: (f64, f64, usize),
    sigma: (f64, f64, usize),
) -> WeightedSample {
    let model = ModelSpec::gaussian();
    let mut thetas = Vec::with_capacity(mu.2 * sigma.2);
    for i in 0..mu.2 {
        for j in 0..sigma.2 {
            let m = mu.0 + (mu.1 - mu.0) * i as f64 / (mu.2 - 1) as f64;
            let s = sigma.0 + (sigma.1 - sigma.0) * j as f64 / (sigma.2 - 1) as f64;
            thetas.push(ParamPoint::new(vec![m, s]));
        }
    }
    let lp: Vec<f64> = thetas
        .iter()
        .map(|t| dpd::total_log_potential_rescaled(&model, t, gamma, data).unwrap())
        .collect();
    WeightedSample::from_log_weights(thetas, &lp).unwrap()
}

/// Standard normal CDF via the complementary error function.
pub fn std_normal_cdf(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).unwrap().cdf(z)
}
