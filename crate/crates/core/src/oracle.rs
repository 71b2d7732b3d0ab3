//! Baselines: fixed-gamma Metropolis-Hastings, grid search of the H-score,
//! prior Monte Carlo evidence, likelihood-tempered SMC and bootstrap studies.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset};
use crate::dpd::{self, check_gamma_range};
use crate::error::{Error, Result};
use crate::hscore::{self, WeightedSample};
use crate::models::{ModelKind, ModelSpec, ParamPoint};
use crate::optimizer::{self, AdaptiveConfig};
use crate::smc::{
    self, dpd_log_target, stream_rng, InitBox, MhConfig, ParticleSystem, Prior, Proposal,
    StreamPurpose,
};
use crate::stats;

/// Random-walk scale of a fixed-gamma chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ChainProposal {
    /// `N(0, variance I)` increments on the free coordinates.
    Isotropic { variance: f64 },
    /// Two pilot rounds of `iters` steps, then `2.38^2/d` times the pilot
    /// covariance.
    Pilot { iters: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub n_iters: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
    pub proposal: ChainProposal,
}

impl McmcConfig {
    /// `10^5` iterations, `2 x 10^4` burn-in, `N(0, 0.4)` increments.
    pub fn long_run() -> Self {
        McmcConfig {
            n_iters: 100_000,
            burn_in: 20_000,
            thin: 1,
            proposal: ChainProposal::Isotropic { variance: 0.4 },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_iters <= self.burn_in {
            return Err(Error::Config(format!(
                "n_iters ({}) must exceed burn_in ({})",
                self.n_iters, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        match self.proposal {
            ChainProposal::Isotropic { variance } if !(variance > 0.0) => {
                Err(Error::Config("proposal variance must be positive".into()))
            }
            ChainProposal::Pilot { iters } if iters < 10 => {
                Err(Error::Config("pilot needs at least 10 iterations".into()))
            }
            _ => Ok(()),
        }
    }
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_iters: 12_000,
            burn_in: 2_000,
            thin: 5,
            proposal: ChainProposal::Pilot { iters: 1_000 },
        }
    }
}

/// Starting point of a chain: median and scaled MAD for the Gaussian model,
/// least squares for regression, a known scale overriding sigma.
pub fn data_start(model: &ModelSpec, prior: &Prior, data: &Dataset) -> Result<ParamPoint> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut theta = match model.kind {
        ModelKind::Gaussian => {
            let w = vec![1.0 / data.len() as f64; data.len()];
            let med = stats::weighted_quantile(&data.y, &w, 0.5);
            let dev: Vec<f64> = data.y.iter().map(|v| (v - med).abs()).collect();
            let mad = 1.4826 * stats::weighted_quantile(&dev, &w, 0.5);
            let scale = if mad > 0.0 { mad } else { data.sd().max(1.0) };
            vec![med, scale]
        }
        ModelKind::LinearRegression => {
            let x = data.x.as_ref().ok_or(Error::MissingCovariates)?;
            let rows: Vec<&[f64]> = x.rows().collect();
            let (mut beta, s) = stats::ols_no_intercept(&data.y, &rows)?;
            beta.push(if s > 0.0 { s } else { 1.0 });
            beta
        }
    };
    if let Some(s) = prior.known_scale() {
        let k = model.scale_index();
        theta[k] = s;
    }
    Ok(ParamPoint::new(theta))
}

/// Sequential random-walk chain. Returns the kept states and acceptance rate.
fn rw_chain<F, R>(
    target: &F,
    start: &[f64],
    proposal: &Proposal,
    n_iters: usize,
    burn_in: usize,
    thin: usize,
    rng: &mut R,
) -> Result<(Vec<ParamPoint>, f64)>
where
    F: Fn(&[f64]) -> Result<f64>,
    R: Rng,
{
    let mut current = start.to_vec();
    let mut current_lt = target(&current)?;
    if current_lt == f64::NEG_INFINITY {
        return Err(Error::Config("chain starts outside the support".into()));
    }
    let mut cand = Vec::with_capacity(current.len());
    let mut kept = Vec::with_capacity((n_iters - burn_in) / thin + 1);
    let mut accepted = 0usize;
    for it in 0..n_iters {
        proposal.propose(&current, rng, &mut cand);
        let u: f64 = rng.random();
        let lt = target(&cand)?;
        if lt > f64::NEG_INFINITY && u.ln() < lt - current_lt {
            std::mem::swap(&mut current, &mut cand);
            current_lt = lt;
            accepted += 1;
        }
        if it >= burn_in && (it - burn_in).is_multiple_of(thin) {
            kept.push(ParamPoint::new(current.clone()));
        }
    }
    Ok((kept, accepted as f64 / n_iters as f64))
}

fn sample_covariance(points: &[ParamPoint], free: &[usize]) -> DMatrix<f64> {
    let d = free.len();
    let n = points.len() as f64;
    let mean: Vec<f64> = free
        .iter()
        .map(|&k| points.iter().map(|p| p[k]).sum::<f64>() / n)
        .collect();
    DMatrix::from_fn(d, d, |a, b| {
        points
            .iter()
            .map(|p| (p[free[a]] - mean[a]) * (p[free[b]] - mean[b]))
            .sum::<f64>()
            / (n - 1.0)
    })
}

/// Initial isotropic variance for the pilot: squared posterior-scale guess.
fn pilot_variance(model: &ModelSpec, data: &Dataset) -> f64 {
    let sd = if data.sd() > 0.0 { data.sd() } else { 1.0 };
    let n = data.len() as f64;
    let x_rms = match &data.x {
        Some(x) if model.kind == ModelKind::LinearRegression => {
            let s: f64 = x.rows().map(|r| r.iter().map(|v| v * v).sum::<f64>()).sum();
            (s / (n * x.dim() as f64)).sqrt().max(1e-12)
        }
        _ => 1.0,
    };
    (sd / x_rms).powi(2) / n
}

/// Post-burn-in random-walk Metropolis-Hastings draws from `Pi_gamma`, with
/// uniform weights.
#[allow(clippy::too_many_arguments)]
pub fn fixed_gamma_mcmc(
    model: &ModelSpec,
    data: &Dataset,
    gamma: f64,
    prior: &Prior,
    cfg: &McmcConfig,
    seed: u64,
) -> Result<WeightedSample> {
    Ok(fixed_gamma_chain(model, data, gamma, prior, cfg, seed)?.0)
}

/// [`fixed_gamma_mcmc`] that also reports the acceptance rate.
pub fn fixed_gamma_chain(
    model: &ModelSpec,
    data: &Dataset,
    gamma: f64,
    prior: &Prior,
    cfg: &McmcConfig,
    seed: u64,
) -> Result<(WeightedSample, f64)> {
    check_gamma_range(gamma)?;
    cfg.validate()?;
    let free = prior.free_dims(model);
    let target = |theta: &[f64]| dpd_log_target(model, prior, gamma, data, theta);
    let mut rng = stream_rng(seed, StreamPurpose::Chain, 0, 0);
    let mut start = data_start(model, prior, data)?;
    let proposal = match cfg.proposal {
        ChainProposal::Isotropic { variance } => Proposal::isotropic(free.clone(), variance.sqrt()),
        ChainProposal::Pilot { iters } => {
            let mut proposal = Proposal::isotropic(free.clone(), pilot_variance(model, data).sqrt());
            for _ in 0..2 {
                let (pilot, _) = rw_chain(&target, &start, &proposal, iters, iters / 2, 1, &mut rng)?;
                start = pilot.last().expect("pilot draws").clone();
                let cov = sample_covariance(&pilot, &free);
                let d = free.len() as f64;
                let scaled = (cov + DMatrix::identity(free.len(), free.len()) * smc::COV_JITTER)
                    * (smc::RW_SCALE * smc::RW_SCALE / d);
                if let Ok(p) = Proposal::from_covariance(free.clone(), scaled) {
                    if p.proposal_cov.trace() > 1e-18 {
                        proposal = p;
                    }
                }
            }
            proposal
        }
    };
    let (kept, rate) = rw_chain(
        &target,
        &start,
        &proposal,
        cfg.n_iters,
        cfg.burn_in,
        cfg.thin,
        &mut rng,
    )?;
    Ok((WeightedSample::uniform(kept)?, rate))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub grid: Vec<f64>,
    pub h_values: Vec<f64>,
    pub argmin_gamma: f64,
}

impl GridSearchResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,h_score\n");
        for (g, h) in self.grid.iter().zip(&self.h_values) {
            out.push_str(&format!("{g},{h}\n"));
        }
        out
    }
}

/// Equally spaced grid of `n` points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// H-score on a grid of gamma values, each estimated from a fixed-gamma chain.
/// Every grid point reuses the same chain seed.
pub fn grid_search_gamma(
    model: &ModelSpec,
    data: &Dataset,
    prior: &Prior,
    grid: &[f64],
    cfg: &McmcConfig,
    seed: u64,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::Config("empty gamma grid".into()));
    }
    for &g in grid {
        check_gamma_range(g)?;
    }
    let h_values = grid
        .par_iter()
        .map(|&g| {
            let sample = fixed_gamma_mcmc(model, data, g, prior, cfg, seed)?;
            hscore::h_score(model, &sample, g, data)
        })
        .collect::<Result<Vec<f64>>>()?;
    let best = h_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty grid");
    Ok(GridSearchResult {
        grid: grid.to_vec(),
        argmin_gamma: grid[best],
        h_values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceCurve {
    pub grid: Vec<f64>,
    pub log_evidence: Vec<f64>,
    pub mc_draws: usize,
}

impl EvidenceCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,log_evidence\n");
        for (g, e) in self.grid.iter().zip(&self.log_evidence) {
            out.push_str(&format!("{g},{e}\n"));
        }
        out
    }
}

/// `log p_gamma(y) ≈ log mean_k exp(log L^R_gamma(y; theta_k))` with
/// `theta_k` drawn from a proper prior. The rescaled potential is used and the
/// same prior draws serve every grid point.
pub fn evidence_curve(
    model: &ModelSpec,
    data: &Dataset,
    grid: &[f64],
    prior: &Prior,
    mc_draws: usize,
    seed: u64,
) -> Result<EvidenceCurve> {
    if !prior.is_proper() {
        return Err(Error::ImproperPriorForEvidence);
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("evidence grid must be strictly increasing".into()));
    }
    if mc_draws == 0 {
        return Err(Error::Config("mc_draws must be positive".into()));
    }
    for &g in grid {
        check_gamma_range(g)?;
    }
    let draws = (0..mc_draws)
        .map(|k| prior.sample(model, &mut stream_rng(seed, StreamPurpose::Init, 0, k as u64)))
        .collect::<Result<Vec<_>>>()?;
    let log_evidence = grid
        .par_iter()
        .map(|&g| {
            let pots = draws
                .iter()
                .map(|t| dpd::total_log_potential_rescaled(model, t, g, data))
                .collect::<Result<Vec<f64>>>()?;
            Ok(stats::log_mean_exp(&pots))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EvidenceCurve {
        grid: grid.to_vec(),
        log_evidence,
        mc_draws,
    })
}

/// Likelihood-tempered SMC through `Pi_phi ∝ L^phi pi` along `schedule`.
///
/// Under an improper prior the particles start in the initialisation box and
/// the intermediate targets are restricted to it. The returned system carries
/// `gamma = 0`.
pub fn tempered_smc(
    model: &ModelSpec,
    data: &Dataset,
    prior: &Prior,
    schedule: &[f64],
    n: usize,
    cfg: &MhConfig,
    seed: u64,
) -> Result<ParticleSystem> {
    if schedule.first() != Some(&0.0)
        || schedule.last() != Some(&1.0)
        || schedule.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::Config(
            "tempering schedule must be nondecreasing from 0 to 1".into(),
        ));
    }
    let init_box = if prior.is_proper() {
        None
    } else {
        Some(InitBox::from_data(model, prior, data)?)
    };
    let free = prior.free_dims(model);
    let mut sys = smc::init_particles(model, prior, data, n, seed)?;
    for w in schedule.windows(2) {
        let (prev, phi) = (w[0], w[1]);
        let loglik = sys
            .particles
            .par_iter()
            .map(|t| dpd::log_likelihood(model, t, data))
            .collect::<Result<Vec<f64>>>()?;
        let incr: Vec<f64> = loglik.iter().map(|l| (phi - prev) * l).collect();
        let target = |theta: &[f64]| {
            if let Some(b) = &init_box {
                if phi < 1.0 && !b.contains(theta) {
                    return Ok(f64::NEG_INFINITY);
                }
            }
            let lp = prior.log_density(model, theta);
            if lp == f64::NEG_INFINITY {
                return Ok(lp);
            }
            Ok(phi * dpd::log_likelihood(model, theta, data)? + lp)
        };
        sys = smc::reweight_resample_move(&sys, &incr, &target, &free, cfg)?;
    }
    Ok(sys)
}

/// Posterior summary method used inside a bootstrap study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum BootstrapMethod {
    Adaptive(AdaptiveConfig),
    FixedGamma { gamma: f64, mcmc: McmcConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub param_names: Vec<String>,
    /// Posterior mean of every parameter, one row per resample.
    pub estimates: Vec<Vec<f64>>,
    /// Gamma used for each resample (estimated or fixed).
    pub gammas: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl BootstrapSummary {
    /// Rows `method,parameter,mean,var`.
    pub fn to_csv(&self, method: &str) -> String {
        let mut out = String::from("method,parameter,mean,var\n");
        out.push_str(&self.csv_rows(method));
        out
    }

    pub fn csv_rows(&self, method: &str) -> String {
        self.param_names
            .iter()
            .zip(self.mean.iter().zip(&self.variance))
            .map(|(p, (m, v))| format!("{method},{p},{m},{v}\n"))
            .collect()
    }
}

/// Seed of the `b`-th job derived from a master seed.
pub fn job_seed(master: u64, b: u64) -> u64 {
    stream_rng(master, StreamPurpose::Data, b, 0).random()
}

/// `b` bootstrap resamples; for each, the posterior mean under `method`.
pub fn bootstrap_study(
    model: &ModelSpec,
    data: &Dataset,
    prior: &Prior,
    b: usize,
    method: &BootstrapMethod,
    seed: u64,
) -> Result<BootstrapSummary> {
    if b < 2 {
        return Err(Error::Config("bootstrap needs at least two resamples".into()));
    }
    let mut estimates = Vec::with_capacity(b);
    let mut gammas = Vec::with_capacity(b);
    for rep in 0..b {
        let resampled = data::bootstrap_resample(data, job_seed(seed, rep as u64))?;
        let fit_seed = job_seed(seed ^ 0x5bd1_e995, rep as u64);
        let (means, gamma) = match method {
            BootstrapMethod::Adaptive(cfg) => {
                let run = optimizer::run_adaptive(model, &resampled, prior, cfg, fit_seed)?;
                (run.system.posterior_mean(), run.trace.gamma_hat())
            }
            BootstrapMethod::FixedGamma { gamma, mcmc } => {
                let s = fixed_gamma_mcmc(model, &resampled, *gamma, prior, mcmc, fit_seed)?;
                (sample_mean(&s), *gamma)
            }
        };
        estimates.push(means);
        gammas.push(gamma);
    }
    let d = model.param_dim();
    let column = |k: usize| estimates.iter().map(|e| e[k]).collect::<Vec<f64>>();
    Ok(BootstrapSummary {
        param_names: model.param_names(),
        mean: (0..d).map(|k| stats::mean(&column(k))).collect(),
        variance: (0..d).map(|k| stats::variance(&column(k))).collect(),
        estimates,
        gammas,
    })
}

/// Weighted mean of every coordinate.
pub fn sample_mean(sample: &WeightedSample) -> Vec<f64> {
    let d = sample.thetas[0].len();
    (0..d)
        .map(|k| {
            sample
                .thetas
                .iter()
                .zip(&sample.weights)
                .map(|(t, w)| t[k] * w)
                .sum()
        })
        .collect()
}

/// Equal-tailed weighted interval of coordinate `k`.
pub fn sample_interval(sample: &WeightedSample, k: usize, level: f64) -> (f64, f64) {
    let v: Vec<f64> = sample.thetas.iter().map(|t| t[k]).collect();
    let tail = 0.5 * (1.0 - level);
    (
        stats::weighted_quantile(&v, &sample.weights, tail),
        stats::weighted_quantile(&v, &sample.weights, 1.0 - tail),
    )
}

/// Settings of the fixed-versus-adaptive comparison on contaminated
/// Gaussian data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub taus: Vec<f64>,
    pub fixed_gammas: Vec<f64>,
    pub replications: usize,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub shift: f64,
    pub prior: Prior,
    pub adaptive: AdaptiveConfig,
    pub mcmc: McmcConfig,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig {
            taus: vec![0.0, 10.0, 20.0, 30.0],
            fixed_gammas: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            replications: 100,
            n: 100,
            mean: 1.0,
            sd: 1.0,
            shift: 5.0,
            prior: Prior::FlatKnownScale { sigma: 1.0 },
            adaptive: AdaptiveConfig::default(),
            mcmc: McmcConfig::long_run(),
        }
    }
}

/// One cell of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// `"adaptive"` or `"fixed"`.
    pub method: String,
    /// Fixed gamma, or the mean estimated gamma for the adaptive rows.
    pub gamma: f64,
    pub tau: f64,
    /// `100 x` mean squared error of the posterior mean of `mu`.
    pub mse_x100: f64,
    pub aci_lower: f64,
    pub aci_upper: f64,
}

/// Runs every method on `replications` fresh datasets per contamination level.
pub fn compare_fixed(cfg: &ComparisonConfig, seed: u64) -> Result<Vec<ComparisonRow>> {
    if cfg.replications == 0 {
        return Err(Error::Config("replications must be positive".into()));
    }
    let model = ModelSpec::gaussian();
    let mut rows = Vec::new();
    for (ti, &tau) in cfg.taus.iter().enumerate() {
        let n_methods = cfg.fixed_gammas.len() + 1;
        // Per method: sum of squared errors, interval endpoints, gammas.
        let mut sq = vec![0.0; n_methods];
        let mut lo = vec![0.0; n_methods];
        let mut hi = vec![0.0; n_methods];
        let mut gam = vec![0.0; n_methods];
        for rep in 0..cfg.replications {
            let job = job_seed(seed, (ti * 1_000_000 + rep) as u64);
            let y = data::simulate_contaminated_gaussian(
                cfg.n, cfg.mean, cfg.sd, tau, cfg.shift, job,
            )?;
            for (m, &g) in cfg.fixed_gammas.iter().enumerate() {
                let s = fixed_gamma_mcmc(&model, &y, g, &cfg.prior, &cfg.mcmc, job)?;
                let mu = sample_mean(&s)[0];
                let (a, b) = sample_interval(&s, 0, 0.95);
                sq[m] += (mu - cfg.mean).powi(2);
                lo[m] += a;
                hi[m] += b;
                gam[m] += g;
            }
            let run = optimizer::run_adaptive(&model, &y, &cfg.prior, &cfg.adaptive, job)?;
            let a = n_methods - 1;
            let mu = run.system.posterior_mean()[0];
            let (l, u) = run.system.credible_interval(0, 0.95);
            sq[a] += (mu - cfg.mean).powi(2);
            lo[a] += l;
            hi[a] += u;
            gam[a] += run.trace.gamma_hat();
        }
        let r = cfg.replications as f64;
        for m in 0..n_methods {
            rows.push(ComparisonRow {
                method: if m + 1 == n_methods { "adaptive" } else { "fixed" }.into(),
                gamma: gam[m] / r,
                tau,
                mse_x100: 100.0 * sq[m] / r,
                aci_lower: lo[m] / r,
                aci_upper: hi[m] / r,
            });
        }
    }
    Ok(rows)
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("method,gamma,tau,mse_x100,aci_lower,aci_upper\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.method, r.gamma, r.tau, r.mse_x100, r.aci_lower, r.aci_upper
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.01, 1.0, 100);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.01);
        assert!((g[99] - 1.0).abs() < 1e-15);
        assert_eq!(linspace(0.3, 1.0, 1), vec![0.3]);
    }

    #[test]
    fn single_draw_chain() {
        let y = Dataset::from_responses(vec![0.1, -0.2, 0.3]);
        let cfg = McmcConfig {
            n_iters: 11,
            burn_in: 10,
            thin: 1,
            proposal: ChainProposal::Isotropic { variance: 0.1 },
        };
        let s = fixed_gamma_mcmc(&ModelSpec::gaussian(), &y, 0.3, &Prior::Flat, &cfg, 1).unwrap();
        assert_eq!(s.len(), 1);
        let bad = McmcConfig { n_iters: 10, ..cfg };
        assert!(fixed_gamma_mcmc(&ModelSpec::gaussian(), &y, 0.3, &Prior::Flat, &bad, 1).is_err());
    }

    #[test]
    fn evidence_needs_proper_prior() {
        let y = Dataset::from_responses(vec![0.0]);
        assert_eq!(
            evidence_curve(&ModelSpec::gaussian(), &y, &[0.5], &Prior::Flat, 10, 0).unwrap_err(),
            Error::ImproperPriorForEvidence
        );
    }

    #[test]
    fn bootstrap_needs_two_resamples() {
        let y = Dataset::from_responses(vec![0.0, 1.0]);
        let m = BootstrapMethod::FixedGamma {
            gamma: 0.2,
            mcmc: McmcConfig::default(),
        };
        assert!(bootstrap_study(&ModelSpec::gaussian(), &y, &Prior::Flat, 1, &m, 0).is_err());
    }

    #[test]
    fn single_point_grid() {
        let y = Dataset::from_responses(vec![0.0, 1.0, 0.5, 0.2]);
        let cfg = McmcConfig {
            n_iters: 300,
            burn_in: 100,
            thin: 1,
            proposal: ChainProposal::Isotropic { variance: 0.1 },
        };
        let r =
            grid_search_gamma(&ModelSpec::gaussian(), &y, &Prior::Flat, &[0.42], &cfg, 3).unwrap();
        assert_eq!(r.argmin_gamma, 0.42);
    }
}
