//! Sequential Monte Carlo over the family of robustified posteriors
//! `Pi_gamma(theta | y) ∝ exp(log L_gamma(y; theta)) pi(theta)`.
//!
//! One step moves a weighted particle system from `gamma_{t-1}` to `gamma_t`:
//! incremental weighting with the potential ratio evaluated at the current
//! particles, multinomial resampling, then random-walk Metropolis-Hastings
//! rejuvenation targeting `Pi_{gamma_t}`. The random-walk covariance is
//! `2.38 d^{-1/2}` times the weighted particle covariance.
//!
//! # Randomness
//!
//! Every random draw comes from a ChaCha8 stream keyed by the master seed of
//! the system. The stream id packs `(purpose, step, lane)` as
//! `purpose << 60 | step << 28 | lane`, where the lane is the particle index
//! for moves and initialisation and zero for resampling. Particles never share
//! a stream, so parallel and sequential execution give identical results.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dpd::{check_gamma_range, total_rescaled_unchecked};
use crate::error::{Error, Result};
use crate::hscore::WeightedSample;
use crate::models::{ModelKind, ModelSpec, ParamPoint};
use crate::stats;

/// Optimal-scaling constant of the random-walk proposal.
pub const RW_SCALE: f64 = 2.38;
/// Ridge added to the particle covariance before factorisation.
pub const COV_JITTER: f64 = 1e-10;

/// Purpose tags for [`stream_rng`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Init = 1,
    Resample = 2,
    Move = 3,
    Data = 4,
    Chain = 5,
}

/// Deterministic random stream for `(purpose, step, lane)` under `master`.
pub fn stream_rng(master: u64, purpose: StreamPurpose, step: u64, lane: u64) -> ChaCha8Rng {
    debug_assert!(lane < (1 << 28));
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((purpose as u64) << 60) | ((step & 0xFFFF_FFFF) << 28) | lane);
    rng
}

/// Prior on `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Prior {
    /// Improper flat prior on the location or coefficients and on `sigma > 0`.
    Flat,
    /// Flat on the location or coefficients with `sigma` held at a known value.
    FlatKnownScale { sigma: f64 },
    /// `mu ~ N(mean, sd^2)` with known `sigma`; Gaussian model only.
    NormalLocationKnownScale { mean: f64, sd: f64, sigma: f64 },
}

impl Prior {
    pub fn is_proper(&self) -> bool {
        matches!(self, Prior::NormalLocationKnownScale { .. })
    }

    pub fn known_scale(&self) -> Option<f64> {
        match *self {
            Prior::Flat => None,
            Prior::FlatKnownScale { sigma } | Prior::NormalLocationKnownScale { sigma, .. } => {
                Some(sigma)
            }
        }
    }

    /// Coordinates that the samplers move.
    pub fn free_dims(&self, model: &ModelSpec) -> Vec<usize> {
        let d = model.param_dim();
        match self.known_scale() {
            None => (0..d).collect(),
            Some(_) => (0..d - 1).collect(),
        }
    }

    /// Log prior density up to a constant; `-inf` outside the support.
    pub fn log_density(&self, model: &ModelSpec, theta: &[f64]) -> f64 {
        let sigma = theta[model.scale_index()];
        if !(sigma > 0.0) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Prior::Flat | Prior::FlatKnownScale { .. } => 0.0,
            Prior::NormalLocationKnownScale { mean, sd, .. } => {
                let z = (theta[0] - mean) / sd;
                -0.5 * z * z
            }
        }
    }

    /// Draw from a proper prior.
    pub fn sample<R: Rng + ?Sized>(&self, model: &ModelSpec, rng: &mut R) -> Result<ParamPoint> {
        match *self {
            Prior::NormalLocationKnownScale { mean, sd, sigma } => {
                if model.kind != ModelKind::Gaussian {
                    return Err(Error::Config(
                        "normal location prior needs the Gaussian model".into(),
                    ));
                }
                let mu = Normal::new(mean, sd)
                    .map_err(|e| Error::Config(e.to_string()))?
                    .sample(rng);
                Ok(ParamPoint::new(vec![mu, sigma]))
            }
            _ => Err(Error::ImproperPriorForEvidence),
        }
    }
}

/// Axis-aligned box used to initialise particles under an improper prior.
///
/// Gaussian model: `mu ~ U(min y - 2 sd, max y + 2 sd)`. Regression:
/// `beta_k ~ U(b_k ± 4 sd / rms(x_k))` around the least-squares fit `b`.
/// In both cases `sigma ~ U(0.1 sd, 3 sd)`, where `sd` is the sample standard
/// deviation of the responses (one if it vanishes). A known scale is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl InitBox {
    pub fn from_data(model: &ModelSpec, prior: &Prior, data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let sd = match data.sd() {
            s if s > 0.0 && s.is_finite() => s,
            _ => 1.0,
        };
        let mut lower = Vec::with_capacity(model.param_dim());
        let mut upper = Vec::with_capacity(model.param_dim());
        match model.kind {
            ModelKind::Gaussian => {
                lower.push(data.min() - 2.0 * sd);
                upper.push(data.max() + 2.0 * sd);
            }
            ModelKind::LinearRegression => {
                let x = data.x.as_ref().ok_or(Error::MissingCovariates)?;
                let rows: Vec<&[f64]> = x.rows().collect();
                let (beta, _) = stats::ols_no_intercept(&data.y, &rows)?;
                for (k, b) in beta.iter().enumerate() {
                    let rms =
                        (rows.iter().map(|r| r[k] * r[k]).sum::<f64>() / rows.len() as f64).sqrt();
                    let half = 4.0 * sd / rms.max(f64::MIN_POSITIVE);
                    lower.push(b - half);
                    upper.push(b + half);
                }
            }
        }
        match prior.known_scale() {
            Some(s) => {
                lower.push(s);
                upper.push(s);
            }
            None => {
                lower.push(0.1 * sd);
                upper.push(3.0 * sd);
            }
        }
        Ok(InitBox { lower, upper })
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamPoint {
        ParamPoint::new(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(&lo, &hi)| {
                    if hi > lo {
                        Uniform::new(lo, hi).expect("bounds").sample(rng)
                    } else {
                        lo
                    }
                })
                .collect(),
        )
    }
}

/// When to resample after weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum ResamplePolicy {
    /// Multinomial resampling at every step.
    EveryStep,
    /// Resample only when the ESS drops below `fraction * N`.
    EssBelow { fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MhConfig {
    /// Metropolis-Hastings sweeps per SMC step.
    pub n_moves: usize,
    /// Isotropic proposal standard deviation used when the particle
    /// covariance is degenerate.
    pub fallback_scale: f64,
    pub resampling: ResamplePolicy,
}

impl Default for MhConfig {
    fn default() -> Self {
        MhConfig {
            n_moves: 50,
            fallback_scale: 0.1,
            resampling: ResamplePolicy::EveryStep,
        }
    }
}

impl MhConfig {
    pub fn with_moves(n_moves: usize) -> Self {
        MhConfig {
            n_moves,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_moves == 0 {
            return Err(Error::Config("n_moves must be at least 1".into()));
        }
        if !(self.fallback_scale > 0.0) {
            return Err(Error::Config("fallback_scale must be positive".into()));
        }
        if let ResamplePolicy::EssBelow { fraction } = self.resampling {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(Error::Config("ESS fraction must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// Diagnostics of the most recent step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// ESS of the normalised weights after weighting, before resampling.
    pub ess: f64,
    pub acceptance_rate: f64,
    pub resampled: bool,
    /// Whether the isotropic fallback proposal was used.
    pub fallback_proposal: bool,
}

/// The SMC state at step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSystem {
    pub step: u64,
    /// Tuning parameter the particles currently target; zero for a system
    /// freshly drawn from the prior or its initialisation box.
    pub gamma: f64,
    pub particles: Vec<ParamPoint>,
    pub weights: Vec<f64>,
    /// Zero-based ancestor index of each particle at the last resampling.
    pub ancestors: Vec<usize>,
    pub rng_seed: u64,
    pub diagnostics: StepDiagnostics,
}

impl ParticleSystem {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn ess(&self) -> f64 {
        stats::ess(&self.weights)
    }

    pub fn weighted_sample(&self) -> Result<WeightedSample> {
        WeightedSample::new(self.particles.clone(), self.weights.clone())
    }

    /// Values of coordinate `k` across particles.
    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        self.particles.iter().map(|p| p[k]).collect()
    }

    pub fn posterior_mean(&self) -> Vec<f64> {
        let d = self.particles[0].len();
        (0..d)
            .map(|k| stats::weighted_mean(&self.coordinate(k), &self.weights))
            .collect()
    }

    pub fn posterior_sd(&self) -> Vec<f64> {
        let d = self.particles[0].len();
        (0..d)
            .map(|k| stats::weighted_sd(&self.coordinate(k), &self.weights))
            .collect()
    }

    /// Equal-tailed weighted credible interval for coordinate `k`.
    pub fn credible_interval(&self, k: usize, level: f64) -> (f64, f64) {
        let v = self.coordinate(k);
        let tail = 0.5 * (1.0 - level);
        (
            stats::weighted_quantile(&v, &self.weights, tail),
            stats::weighted_quantile(&v, &self.weights, 1.0 - tail),
        )
    }

    fn check_weights(&self) -> Result<()> {
        if self.weights.len() != self.particles.len()
            || self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::DegenerateWeights);
        }
        Ok(())
    }
}

/// Draws `n` particles: from the prior when it is proper, otherwise uniformly
/// from the data-driven [`InitBox`]. Weights are uniform and `step` is zero.
pub fn init_particles(
    model: &ModelSpec,
    prior: &Prior,
    data: &Dataset,
    n: usize,
    seed: u64,
) -> Result<ParticleSystem> {
    if n < 2 {
        return Err(Error::InvalidParticleCount(n));
    }
    let init_box = if prior.is_proper() {
        None
    } else {
        Some(InitBox::from_data(model, prior, data)?)
    };
    let particles = (0..n)
        .map(|j| {
            let mut rng = stream_rng(seed, StreamPurpose::Init, 0, j as u64);
            match &init_box {
                Some(b) => Ok(b.sample(&mut rng)),
                None => prior.sample(model, &mut rng),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParticleSystem {
        step: 0,
        gamma: 0.0,
        particles,
        weights: vec![1.0 / n as f64; n],
        ancestors: (0..n).collect(),
        rng_seed: seed,
        diagnostics: StepDiagnostics {
            ess: n as f64,
            acceptance_rate: f64::NAN,
            resampled: false,
            fallback_proposal: false,
        },
    })
}

/// Rescaled robust log-target `log L^R_gamma + log pi`, `-inf` off support.
pub(crate) fn dpd_log_target(
    model: &ModelSpec,
    prior: &Prior,
    gamma: f64,
    data: &Dataset,
    theta: &[f64],
) -> Result<f64> {
    let lp = prior.log_density(model, theta);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(total_rescaled_unchecked(model, theta, gamma, data)? + lp)
}

/// `log w_j = log L_{gamma_new}(y; theta_j) - log L_{gamma}(y; theta_j)` at
/// the current particles. For a system still at the prior (`gamma == 0`) the
/// previous potential is taken as zero and the rescaled potential at
/// `gamma_new` is returned.
pub fn incremental_log_weights(
    model: &ModelSpec,
    system: &ParticleSystem,
    gamma_new: f64,
    data: &Dataset,
) -> Result<Vec<f64>> {
    check_gamma_range(gamma_new)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let gamma_old = system.gamma;
    let n = data.len() as f64;
    let shift = if gamma_old > 0.0 {
        n * (1.0 / gamma_new - 1.0 / gamma_old)
    } else {
        0.0
    };
    system
        .particles
        .par_iter()
        .map(|theta| {
            if gamma_old > 0.0 && gamma_old == gamma_new {
                return Ok(0.0);
            }
            let new = total_rescaled_unchecked(model, theta, gamma_new, data)?;
            let old = if gamma_old > 0.0 {
                total_rescaled_unchecked(model, theta, gamma_old, data)?
            } else {
                0.0
            };
            Ok(new - old + shift)
        })
        .collect()
}

/// Draws ancestors from the categorical distribution of the weights and
/// returns the resampled, uniformly weighted system.
pub fn resample_multinomial<R: Rng + ?Sized>(
    system: &ParticleSystem,
    rng: &mut R,
) -> Result<ParticleSystem> {
    system.check_weights()?;
    let total: f64 = system.weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let mut cumulative = Vec::with_capacity(system.len());
    let mut acc = 0.0;
    for w in &system.weights {
        acc += w / total;
        cumulative.push(acc);
    }
    let n = system.len();
    let last_positive = system
        .weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("positive total weight");
    let ancestors: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cumulative
                .partition_point(|&c| c <= u)
                .min(last_positive)
        })
        .collect();
    Ok(ParticleSystem {
        particles: ancestors.iter().map(|&a| system.particles[a].clone()).collect(),
        weights: vec![1.0 / n as f64; n],
        ancestors,
        ..system.clone()
    })
}

/// Gaussian random-walk proposal on the free coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub free: Vec<usize>,
    /// Weighted particle mean on the free coordinates.
    pub mean: DVector<f64>,
    /// Weighted particle covariance on the free coordinates.
    pub sample_cov: DMatrix<f64>,
    /// Covariance of the random-walk increment.
    pub proposal_cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    pub is_fallback: bool,
}

impl Proposal {
    /// `N(0, scale^2 I)` increments.
    pub fn isotropic(free: Vec<usize>, scale: f64) -> Self {
        let d = free.len();
        let cov = DMatrix::identity(d, d) * (scale * scale);
        Proposal {
            mean: DVector::zeros(d),
            sample_cov: DMatrix::zeros(d, d),
            chol: DMatrix::identity(d, d) * scale,
            proposal_cov: cov,
            free,
            is_fallback: true,
        }
    }

    /// `N(0, cov)` increments on the free coordinates.
    pub fn from_covariance(free: Vec<usize>, cov: DMatrix<f64>) -> Result<Self> {
        let d = free.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: cov.nrows(),
            });
        }
        let chol = cov.clone().cholesky().ok_or(Error::SingularCovariance)?.l();
        Ok(Proposal {
            free,
            mean: DVector::zeros(d),
            sample_cov: DMatrix::zeros(d, d),
            proposal_cov: cov,
            chol,
            is_fallback: false,
        })
    }

    /// Draws `theta + xi` with `xi` from the proposal.
    pub fn propose<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(theta);
        let d = self.free.len();
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        for (a, &k) in self.free.iter().enumerate() {
            let step: f64 = (0..=a).map(|b| self.chol[(a, b)] * z[b]).sum();
            out[k] += step;
        }
    }
}

/// Weighted mean and covariance of the free coordinates together with the
/// random-walk covariance `2.38 d^{-1/2} (Sigma + 1e-10 I)`.
///
/// Fails with [`Error::SingularCovariance`] when the particles have no spread
/// or the jittered covariance cannot be factorised.
pub fn adaptive_proposal_cov(system: &ParticleSystem, free: &[usize]) -> Result<Proposal> {
    system.check_weights()?;
    if system.len() < 2 {
        return Err(Error::InvalidParticleCount(system.len()));
    }
    let d = free.len();
    let mut mean: DVector<f64> = DVector::zeros(d);
    for (p, &w) in system.particles.iter().zip(&system.weights) {
        for (a, &k) in free.iter().enumerate() {
            mean[a] += w * p[k];
        }
    }
    let mut cov: DMatrix<f64> = DMatrix::zeros(d, d);
    for (p, &w) in system.particles.iter().zip(&system.weights) {
        for a in 0..d {
            let da = p[free[a]] - mean[a];
            for b in 0..=a {
                cov[(a, b)] += w * da * (p[free[b]] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            cov[(b, a)] = cov[(a, b)];
        }
    }
    if !(cov.trace() > 0.0) || cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularCovariance);
    }
    let proposal_cov =
        (&cov + DMatrix::identity(d, d) * COV_JITTER) * (RW_SCALE / (d as f64).sqrt());
    let mut proposal = Proposal::from_covariance(free.to_vec(), proposal_cov)?;
    proposal.mean = mean;
    proposal.sample_cov = cov;
    Ok(proposal)
}

fn proposal_or_fallback(system: &ParticleSystem, free: &[usize], cfg: &MhConfig) -> Result<Proposal> {
    match adaptive_proposal_cov(system, free) {
        Ok(p) => Ok(p),
        Err(Error::SingularCovariance) => Ok(Proposal::isotropic(free.to_vec(), cfg.fallback_scale)),
        Err(e) => Err(e),
    }
}

/// Runs `n_moves` Metropolis-Hastings steps on every particle. Returns the
/// moved particles and the overall acceptance rate.
pub(crate) fn move_particles<F>(
    particles: &[ParamPoint],
    proposal: &Proposal,
    log_target: &F,
    n_moves: usize,
    seed: u64,
    step: u64,
) -> Result<(Vec<ParamPoint>, f64)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let moved: Vec<Result<(ParamPoint, usize)>> = particles
        .par_iter()
        .enumerate()
        .map(|(j, start)| {
            let mut rng = stream_rng(seed, StreamPurpose::Move, step, j as u64);
            let mut current = start.0.clone();
            let mut current_lt = log_target(&current)?;
            let mut candidate = Vec::with_capacity(current.len());
            let mut accepted = 0;
            for _ in 0..n_moves {
                proposal.propose(&current, &mut rng, &mut candidate);
                let u: f64 = rng.random();
                let cand_lt = log_target(&candidate)?;
                if cand_lt > f64::NEG_INFINITY && u.ln() < cand_lt - current_lt {
                    std::mem::swap(&mut current, &mut candidate);
                    current_lt = cand_lt;
                    accepted += 1;
                }
            }
            Ok((ParamPoint::new(current), accepted))
        })
        .collect();
    let mut out = Vec::with_capacity(particles.len());
    let mut accepted = 0;
    for m in moved {
        let (p, a) = m?;
        out.push(p);
        accepted += a;
    }
    let rate = accepted as f64 / (particles.len() * n_moves.max(1)) as f64;
    Ok((out, rate))
}

/// Advances every particle by `cfg.n_moves` random-walk MH steps targeting
/// `Pi_gamma`, using the adaptive covariance of the given system.
pub fn mh_move(
    model: &ModelSpec,
    system: &ParticleSystem,
    gamma: f64,
    data: &Dataset,
    prior: &Prior,
    cfg: &MhConfig,
) -> Result<ParticleSystem> {
    cfg.validate()?;
    let free = prior.free_dims(model);
    let proposal = proposal_or_fallback(system, &free, cfg)?;
    mh_move_with(model, system, gamma, data, prior, cfg, &proposal)
}

/// [`mh_move`] with an explicit proposal.
pub fn mh_move_with(
    model: &ModelSpec,
    system: &ParticleSystem,
    gamma: f64,
    data: &Dataset,
    prior: &Prior,
    cfg: &MhConfig,
    proposal: &Proposal,
) -> Result<ParticleSystem> {
    check_gamma_range(gamma)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let target = |theta: &[f64]| dpd_log_target(model, prior, gamma, data, theta);
    let (particles, rate) = move_particles(
        &system.particles,
        proposal,
        &target,
        cfg.n_moves,
        system.rng_seed,
        system.step,
    )?;
    Ok(ParticleSystem {
        particles,
        gamma,
        diagnostics: StepDiagnostics {
            acceptance_rate: rate,
            fallback_proposal: proposal.is_fallback,
            ..system.diagnostics
        },
        ..system.clone()
    })
}

/// Weight, resample and move with arbitrary incremental log-weights and
/// log-target. Shared by the robust sampler and the likelihood-tempered one.
pub(crate) fn reweight_resample_move<F>(
    system: &ParticleSystem,
    log_incr: &[f64],
    log_target: &F,
    free: &[usize],
    cfg: &MhConfig,
) -> Result<ParticleSystem>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let step = system.step + 1;
    let log_w: Vec<f64> = system
        .weights
        .iter()
        .zip(log_incr)
        .map(|(w, l)| w.ln() + l)
        .collect();
    let weights = stats::normalize_log_weights(&log_w)?;
    let ess = stats::ess(&weights);
    let weighted = ParticleSystem {
        weights,
        ..system.clone()
    };
    let proposal = proposal_or_fallback(&weighted, free, cfg)?;
    let resample = match cfg.resampling {
        ResamplePolicy::EveryStep => true,
        ResamplePolicy::EssBelow { fraction } => ess < fraction * system.len() as f64,
    };
    let mut next = if resample {
        let mut rng = stream_rng(system.rng_seed, StreamPurpose::Resample, step, 0);
        resample_multinomial(&weighted, &mut rng)?
    } else {
        ParticleSystem {
            ancestors: (0..weighted.len()).collect(),
            ..weighted
        }
    };
    next.step = step;
    let (particles, rate) =
        move_particles(&next.particles, &proposal, log_target, cfg.n_moves, next.rng_seed, step)?;
    next.particles = particles;
    next.diagnostics = StepDiagnostics {
        ess,
        acceptance_rate: rate,
        resampled: resample,
        fallback_proposal: proposal.is_fallback,
    };
    Ok(next)
}

/// One SMC step to `gamma_new`: weight, resample, move. The returned system
/// targets `Pi_{gamma_new}` and has `step = t + 1`.
pub fn smc_step(
    model: &ModelSpec,
    system: &ParticleSystem,
    gamma_new: f64,
    data: &Dataset,
    prior: &Prior,
    cfg: &MhConfig,
) -> Result<ParticleSystem> {
    let log_incr = incremental_log_weights(model, system, gamma_new, data)?;
    let target = |theta: &[f64]| dpd_log_target(model, prior, gamma_new, data, theta);
    let mut next =
        reweight_resample_move(system, &log_incr, &target, &prior.free_dims(model), cfg)?;
    next.gamma = gamma_new;
    Ok(next)
}

/// Picks the largest `next` in `(current, 1]` whose incremental weights
/// `(next - current) * potential` keep the ESS at or above `target_ess`.
pub(crate) fn next_temperature(potential: &[f64], current: f64, target_ess: f64) -> f64 {
    let ess_at = |phi: f64| {
        let lw: Vec<f64> = potential.iter().map(|p| (phi - current) * p).collect();
        stats::normalize_log_weights(&lw)
            .map(|w| stats::ess(&w))
            .unwrap_or(0.0)
    };
    if ess_at(1.0) >= target_ess {
        return 1.0;
    }
    let (mut lo, mut hi) = (current, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ess_at(mid) >= target_ess {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Always make progress even if a single particle dominates.
    lo.max(current + 1e-12 * (1.0 - current)).min(1.0)
}

/// Moves a freshly initialised system to `Pi_{gamma0}`.
///
/// Under an improper prior the initial particles come from the
/// initialisation box, so the bridge tempers `exp(phi log L^R_{gamma0})`
/// restricted to that box from `phi = 0` to `phi = 1`, choosing each
/// increment so the ESS stays at half the particle count. A proper prior is
/// bridged the same way without the box.
pub fn bridge_to_gamma(
    model: &ModelSpec,
    system: &ParticleSystem,
    gamma0: f64,
    data: &Dataset,
    prior: &Prior,
    cfg: &MhConfig,
) -> Result<ParticleSystem> {
    check_gamma_range(gamma0)?;
    let init_box = if prior.is_proper() {
        None
    } else {
        Some(InitBox::from_data(model, prior, data)?)
    };
    let free = prior.free_dims(model);
    let mut sys = system.clone();
    let mut phi = 0.0;
    let bridge_cfg = MhConfig {
        resampling: ResamplePolicy::EveryStep,
        ..*cfg
    };
    while phi < 1.0 {
        let potential: Vec<f64> = sys
            .particles
            .par_iter()
            .map(|t| total_rescaled_unchecked(model, t, gamma0, data))
            .collect::<Result<_>>()?;
        let next = next_temperature(&potential, phi, 0.5 * sys.len() as f64);
        let incr: Vec<f64> = potential.iter().map(|p| (next - phi) * p).collect();
        let target = |theta: &[f64]| {
            if let Some(b) = &init_box {
                if !b.contains(theta) && next < 1.0 {
                    return Ok(f64::NEG_INFINITY);
                }
            }
            let lp = prior.log_density(model, theta);
            if lp == f64::NEG_INFINITY {
                return Ok(lp);
            }
            Ok(next * total_rescaled_unchecked(model, theta, gamma0, data)? + lp)
        };
        sys = reweight_resample_move(&sys, &incr, &target, &free, &bridge_cfg)?;
        phi = next;
    }
    sys.gamma = gamma0;
    Ok(sys)
}

/// One row of the optional per-step trajectory dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub gamma: f64,
    pub ess: f64,
    pub acceptance_rate: f64,
    pub posterior_mean: Vec<f64>,
    pub posterior_sd: Vec<f64>,
}

impl StepRecord {
    pub fn of(system: &ParticleSystem) -> Self {
        StepRecord {
            t: system.step,
            gamma: system.gamma,
            ess: system.diagnostics.ess,
            acceptance_rate: system.diagnostics.acceptance_rate,
            posterior_mean: system.posterior_mean(),
            posterior_sd: system.posterior_sd(),
        }
    }
}

/// CSV with columns `t,gamma,ess,acceptance_rate,mean_<p>..,sd_<p>..`.
pub fn trajectory_csv(records: &[StepRecord], param_names: &[String]) -> String {
    let mut out = String::from("t,gamma,ess,acceptance_rate");
    for p in param_names {
        out.push_str(&format!(",mean_{p}"));
    }
    for p in param_names {
        out.push_str(&format!(",sd_{p}"));
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{},{},{}", r.t, r.gamma, r.ess, r.acceptance_rate));
        for v in r.posterior_mean.iter().chain(&r.posterior_sd) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(particles: Vec<Vec<f64>>, weights: Vec<f64>) -> ParticleSystem {
        let n = particles.len();
        ParticleSystem {
            step: 0,
            gamma: 0.5,
            particles: particles.into_iter().map(ParamPoint::new).collect(),
            weights,
            ancestors: (0..n).collect(),
            rng_seed: 1,
            diagnostics: StepDiagnostics {
                ess: n as f64,
                acceptance_rate: 0.0,
                resampled: false,
                fallback_proposal: false,
            },
        }
    }

    #[test]
    fn identical_particles_have_singular_covariance() {
        let s = sys(vec![vec![1.0, 2.0]; 3], vec![1.0 / 3.0; 3]);
        assert_eq!(
            adaptive_proposal_cov(&s, &[0, 1]).unwrap_err(),
            Error::SingularCovariance
        );
        let p = proposal_or_fallback(&s, &[0, 1], &MhConfig::default()).unwrap();
        assert!(p.is_fallback);
        assert!((p.proposal_cov[(0, 0)] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn two_particle_covariance_by_hand() {
        let s = sys(vec![vec![0.0, 1.0], vec![2.0, 1.0]], vec![0.5, 0.5]);
        let p = adaptive_proposal_cov(&s, &[0, 1]).unwrap();
        assert_eq!(p.mean.as_slice(), &[1.0, 1.0]);
        assert_eq!(p.sample_cov[(0, 0)], 1.0);
        assert_eq!(p.sample_cov[(1, 1)], 0.0);
        assert_eq!(p.sample_cov[(0, 1)], 0.0);
        let scale = RW_SCALE / 2f64.sqrt();
        assert!((p.proposal_cov[(1, 1)] - scale * COV_JITTER).abs() < 1e-20);
        assert!((p.proposal_cov[(0, 0)] - scale * (1.0 + COV_JITTER)).abs() < 1e-12);
    }

    #[test]
    fn point_mass_resampling() {
        let s = sys(
            vec![vec![1.0, 1.0], vec![2.0, 1.0], vec![3.0, 1.0], vec![4.0, 1.0]],
            vec![1.0, 0.0, 0.0, 0.0],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = resample_multinomial(&s, &mut rng).unwrap();
        assert_eq!(r.ancestors, vec![0; 4]);
        assert!(r.weights.iter().all(|&w| w == 0.25));
    }

    #[test]
    fn nan_weights_rejected() {
        let s = sys(vec![vec![1.0, 1.0], vec![2.0, 1.0]], vec![f64::NAN, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            resample_multinomial(&s, &mut rng).unwrap_err(),
            Error::DegenerateWeights
        );
    }

    #[test]
    fn streams_differ_by_lane_and_purpose() {
        let a: u64 = stream_rng(7, StreamPurpose::Move, 3, 0).random();
        let b: u64 = stream_rng(7, StreamPurpose::Move, 3, 1).random();
        let c: u64 = stream_rng(7, StreamPurpose::Init, 3, 0).random();
        let a2: u64 = stream_rng(7, StreamPurpose::Move, 3, 0).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, a2);
    }

    #[test]
    fn temperature_search_respects_target() {
        let pot: Vec<f64> = (0..100).map(|i| -(i as f64)).collect();
        let next = next_temperature(&pot, 0.0, 50.0);
        assert!(next > 0.0 && next < 1.0);
        let lw: Vec<f64> = pot.iter().map(|p| next * p).collect();
        let w = stats::normalize_log_weights(&lw).unwrap();
        assert!((stats::ess(&w) - 50.0).abs() < 1e-6);
        assert_eq!(next_temperature(&[1.0, 1.0], 0.3, 1.5), 1.0);
    }

    #[test]
    fn known_scale_frees_only_location() {
        let g = ModelSpec::gaussian();
        assert_eq!(Prior::Flat.free_dims(&g), vec![0, 1]);
        assert_eq!(Prior::FlatKnownScale { sigma: 1.0 }.free_dims(&g), vec![0]);
        assert_eq!(Prior::Flat.log_density(&g, &[0.0, -1.0]), f64::NEG_INFINITY);
    }

    #[test]
    fn move_config_validation() {
        assert!(MhConfig::with_moves(0).validate().is_err());
        assert!(MhConfig::default().validate().is_ok());
    }
}
