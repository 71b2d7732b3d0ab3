//! Batch Hyvärinen score of the robustified posterior and its gamma gradient.
//!
//! With `C1 = d2 log L/dy^2 + (d log L/dy)^2` and `C2 = d log L/dy`, the
//! score is `H_n(gamma) = sum_i 2 E[C1(y_i)] - E[C2(y_i)]^2`, expectations
//! taken under the weighted particle approximation of the posterior at
//! `gamma`. Differentiating the posterior expectations in `gamma` brings in the
//! full-data potential derivative `D' = d log L(y_1:n)/dgamma` through
//! `dE[C]/dgamma = E[dC/dgamma] + Cov(C, D')`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dpd::d_gamma_rescaled;
use crate::error::{Error, Result};
use crate::models::{normal_log_pdf, ModelSpec, ParamPoint};

/// Particles per parallel work unit. Partial sums are combined in chunk order,
/// so results do not depend on the thread count.
const CHUNK: usize = 64;

/// A weighted approximation `sum_j W_j delta(theta_j)` of a posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub thetas: Vec<ParamPoint>,
    pub weights: Vec<f64>,
}

impl WeightedSample {
    /// Checks lengths, non-negativity and normalisation (within `1e-10`).
    pub fn new(thetas: Vec<ParamPoint>, weights: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() || thetas.len() != weights.len() {
            return Err(Error::DegenerateSample(format!(
                "{} particles with {} weights",
                thetas.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::DegenerateWeights);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::DegenerateSample(format!("weights sum to {total}")));
        }
        Ok(WeightedSample { thetas, weights })
    }

    pub fn uniform(thetas: Vec<ParamPoint>) -> Result<Self> {
        let n = thetas.len();
        Self::new(thetas, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(theta: ParamPoint) -> Self {
        WeightedSample {
            thetas: vec![theta],
            weights: vec![1.0],
        }
    }

    /// Normalises `log_weights` with log-sum-exp.
    pub fn from_log_weights(thetas: Vec<ParamPoint>, log_weights: &[f64]) -> Result<Self> {
        let weights = crate::stats::normalize_log_weights(log_weights)?;
        Self::new(thetas, weights)
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Errors unless at least two particles carry weight.
    pub fn require_spread(&self) -> Result<()> {
        if self.weights.iter().filter(|&&w| w > 0.0).count() < 2 {
            return Err(Error::DegenerateSample(
                "all weight sits on one particle".into(),
            ));
        }
        Ok(())
    }
}

/// Posterior moments of the score terms for one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsMoments {
    pub e_c1: f64,
    pub e_c2: f64,
    /// `E[C2]^2`, subtracted from `2 E[C1]`.
    pub var_correction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HScoreReport {
    pub h_total: f64,
    pub dh_dgamma: f64,
    pub per_obs: Vec<ObsMoments>,
}

impl HScoreReport {
    /// Re-assembles `sum_i 2 E[C1] - E[C2]^2` from the per-observation entries.
    pub fn assembled_total(&self) -> f64 {
        self.per_obs
            .iter()
            .map(|m| 2.0 * m.e_c1 - m.var_correction)
            .sum()
    }
}

#[inline]
fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveGamma(gamma));
    }
    Ok(())
}

/// `(C1, C2)` for one observation.
pub fn c_terms(
    model: &ModelSpec,
    theta: &[f64],
    gamma: f64,
    y: f64,
    x: Option<&[f64]>,
) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    let (loc, sigma) = model.location_scale(theta, x)?;
    let k = Kernel::new(y, loc, sigma, gamma);
    Ok((k.c1(), k.c2()))
}

/// Gamma derivatives `(dC1/dgamma, dC2/dgamma)`.
pub fn dc_terms_dgamma(
    model: &ModelSpec,
    theta: &[f64],
    gamma: f64,
    y: f64,
    x: Option<&[f64]>,
) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    let (loc, sigma) = model.location_scale(theta, x)?;
    let k = Kernel::new(y, loc, sigma, gamma);
    Ok((k.dc1(), k.dc2()))
}

/// Shared per-observation quantities of the normal model.
struct Kernel {
    r: f64,
    s2: f64,
    lf: f64,
    w: f64,
    gamma: f64,
}

impl Kernel {
    #[inline]
    fn new(y: f64, loc: f64, sigma: f64, gamma: f64) -> Self {
        let lf = normal_log_pdf(y, loc, sigma);
        Kernel {
            r: y - loc,
            s2: sigma * sigma,
            lf,
            w: (gamma * lf).exp(),
            gamma,
        }
    }

    #[inline]
    fn c1(&self) -> f64 {
        let r2 = self.r * self.r;
        (self.w * (self.gamma * r2 - self.s2) + self.w * self.w * r2) / (self.s2 * self.s2)
    }

    #[inline]
    fn c2(&self) -> f64 {
        -self.w * self.r / self.s2
    }

    #[inline]
    fn dc1(&self) -> f64 {
        let r2 = self.r * self.r;
        let w = self.w;
        (w * (self.gamma * r2 - self.s2) * self.lf + w * r2 + 2.0 * w * w * r2 * self.lf)
            / (self.s2 * self.s2)
    }

    #[inline]
    fn dc2(&self) -> f64 {
        self.c2() * self.lf
    }
}

/// `H_n(gamma)`.
pub fn h_score(
    model: &ModelSpec,
    sample: &WeightedSample,
    gamma: f64,
    data: &Dataset,
) -> Result<f64> {
    Ok(evaluate_inner(model, sample, gamma, data, false)?.h_total)
}

/// `dH_n/dgamma`.
pub fn h_score_gradient(
    model: &ModelSpec,
    sample: &WeightedSample,
    gamma: f64,
    data: &Dataset,
) -> Result<f64> {
    Ok(evaluate_inner(model, sample, gamma, data, true)?.dh_dgamma)
}

/// Score, gradient and per-observation moments in one pass.
pub fn evaluate(
    model: &ModelSpec,
    sample: &WeightedSample,
    gamma: f64,
    data: &Dataset,
) -> Result<HScoreReport> {
    evaluate_inner(model, sample, gamma, data, true)
}

/// Location and scale for every observation at one particle.
fn locations(model: &ModelSpec, theta: &[f64], data: &Dataset) -> Result<(Vec<f64>, f64)> {
    let mut locs = Vec::with_capacity(data.len());
    let mut sigma = 0.0;
    for (_, x) in data.iter() {
        let (loc, s) = model.location_scale(theta, x)?;
        locs.push(loc);
        sigma = s;
    }
    Ok((locs, sigma))
}

fn evaluate_inner(
    model: &ModelSpec,
    sample: &WeightedSample,
    gamma: f64,
    data: &Dataset,
    with_gradient: bool,
) -> Result<HScoreReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_gamma(gamma)?;
    let n = data.len();

    // First pass: full-data potential derivative per particle and its mean.
    // The rescaled derivative differs from the plain one by the constant
    // n / gamma^2, which cancels in every covariance below.
    let d_pot: Vec<f64> = if with_gradient {
        let per_chunk: Vec<Result<Vec<f64>>> = sample
            .thetas
            .par_chunks(CHUNK)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|theta| {
                        let (locs, sigma) = locations(model, theta, data)?;
                        Ok(data
                            .y
                            .iter()
                            .zip(&locs)
                            .map(|(&y, &loc)| {
                                d_gamma_rescaled(normal_log_pdf(y, loc, sigma), sigma, gamma)
                            })
                            .sum())
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(sample.len());
        for chunk in per_chunk {
            out.extend(chunk?);
        }
        out
    } else {
        vec![0.0; sample.len()]
    };
    let mean_d_pot: f64 = d_pot
        .iter()
        .zip(&sample.weights)
        .map(|(d, w)| d * w)
        .sum();

    // Second pass: weighted sums of C1, C2 and of dC/dgamma + C (D' - E D'),
    // laid out as four consecutive blocks of length n.
    let idx: Vec<usize> = (0..sample.len()).collect();
    let partials: Vec<Result<Vec<f64>>> = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; 4 * n];
            for &j in chunk {
                let wj = sample.weights[j];
                if wj == 0.0 {
                    continue;
                }
                let (locs, sigma) = locations(model, &sample.thetas[j], data)?;
                let centred = d_pot[j] - mean_d_pot;
                for (i, (&y, &loc)) in data.y.iter().zip(&locs).enumerate() {
                    let k = Kernel::new(y, loc, sigma, gamma);
                    let (c1, c2) = (k.c1(), k.c2());
                    acc[i] += wj * c1;
                    acc[n + i] += wj * c2;
                    if with_gradient {
                        acc[2 * n + i] += wj * (k.dc1() + c1 * centred);
                        acc[3 * n + i] += wj * (k.dc2() + c2 * centred);
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut acc = vec![0.0; 4 * n];
    for part in partials {
        for (a, p) in acc.iter_mut().zip(part?) {
            *a += p;
        }
    }

    let mut per_obs = Vec::with_capacity(n);
    let mut h_total = 0.0;
    let mut dh = 0.0;
    for i in 0..n {
        let (e1, e2) = (acc[i], acc[n + i]);
        let m = ObsMoments {
            e_c1: e1,
            e_c2: e2,
            var_correction: e2 * e2,
        };
        h_total += 2.0 * e1 - m.var_correction;
        dh += 2.0 * acc[2 * n + i] - 2.0 * e2 * acc[3 * n + i];
        per_obs.push(m);
    }
    Ok(HScoreReport {
        h_total,
        dh_dgamma: if with_gradient { dh } else { f64::NAN },
        per_obs,
    })
}
