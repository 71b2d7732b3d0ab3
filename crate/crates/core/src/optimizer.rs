//! Stochastic-gradient tuning of gamma with ADAM, interleaved with the SMC
//! sampler so that sampling and tuning happen in a single pass.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dpd::{check_gamma_range, clamp_gamma, GAMMA_MAX, GAMMA_MIN};
use crate::error::{Error, Result};
use crate::hscore;
use crate::models::ModelSpec;
use crate::smc::{self, MhConfig, ParticleSystem, Prior};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub alpha: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            beta1: 0.9,
            beta2: 0.999,
            alpha: 0.003,
            eps: 1e-8,
        }
    }
}

/// Current gamma with the ADAM moment accumulators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaState {
    pub gamma: f64,
    pub m: f64,
    pub v: f64,
    pub t: u64,
}

impl GammaState {
    pub fn new(gamma: f64) -> Result<Self> {
        check_gamma_range(gamma)?;
        Ok(GammaState {
            gamma,
            m: 0.0,
            v: 0.0,
            t: 0,
        })
    }
}

/// One bias-corrected ADAM descent step on `H_n`, projected onto
/// `[GAMMA_MIN, GAMMA_MAX]`.
pub fn adam_step(state: GammaState, grad: f64, hyper: &AdamHyper) -> Result<GammaState> {
    if !grad.is_finite() {
        return Err(Error::NonFiniteGradient(grad));
    }
    let m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grad;
    let v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grad * grad;
    let k = (state.t + 1) as i32;
    let m_hat = m / (1.0 - hyper.beta1.powi(k));
    let v_hat = v / (1.0 - hyper.beta2.powi(k));
    let gamma = clamp_gamma(state.gamma - hyper.alpha * m_hat / (v_hat.sqrt() + hyper.eps));
    Ok(GammaState {
        gamma,
        m,
        v,
        t: state.t + 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub n_particles: usize,
    /// Number of ADAM/SMC iterations `T`.
    pub n_steps: usize,
    pub gamma0: f64,
    pub mh: MhConfig,
    pub adam: AdamHyper,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            n_particles: 2000,
            n_steps: 300,
            gamma0: 0.1,
            mh: MhConfig::default(),
            adam: AdamHyper::default(),
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        if self.n_particles < 2 {
            return Err(Error::InvalidParticleCount(self.n_particles));
        }
        check_gamma_range(self.gamma0)?;
        self.mh.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub gamma: f64,
    /// Gradient evaluated on the particle system that targets `gamma`.
    pub dh_dgamma: f64,
    pub ess: f64,
    pub accept_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaTrace {
    pub rows: Vec<TraceRow>,
}

/// Steps `|delta gamma| < CONVERGENCE_TOL` must persist for the run to count
/// as converged.
pub const CONVERGENCE_WINDOW: usize = 50;
pub const CONVERGENCE_TOL: f64 = 1e-5;

impl GammaTrace {
    pub fn gammas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.gamma).collect()
    }

    pub fn final_gamma(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.gamma)
    }

    /// Mean of the last tenth of the trajectory (at least one value).
    pub fn gamma_hat(&self) -> f64 {
        let k = self.rows.len().div_ceil(10).max(1);
        let tail = &self.rows[self.rows.len() - k..];
        tail.iter().map(|r| r.gamma).sum::<f64>() / k as f64
    }

    /// True when the last `CONVERGENCE_WINDOW` increments are all below
    /// `CONVERGENCE_TOL` in magnitude.
    pub fn converged(&self) -> bool {
        if self.rows.len() <= CONVERGENCE_WINDOW {
            return false;
        }
        self.rows[self.rows.len() - CONVERGENCE_WINDOW - 1..]
            .windows(2)
            .all(|w| (w[1].gamma - w[0].gamma).abs() < CONVERGENCE_TOL)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,gamma,dH_dgamma,ess,accept_rate\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.t, r.gamma, r.dh_dgamma, r.ess, r.accept_rate
            ));
        }
        out
    }
}

/// Output of [`run_adaptive`].
#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub trace: GammaTrace,
    pub system: ParticleSystem,
    pub adam: GammaState,
}

fn gradient_at(model: &ModelSpec, system: &ParticleSystem, data: &Dataset) -> Result<f64> {
    let sample = system.weighted_sample()?;
    let g = hscore::h_score_gradient(model, &sample, system.gamma, data)?;
    if !g.is_finite() {
        return Err(Error::NonFiniteGradient(g));
    }
    Ok(g)
}

/// Runs the adaptive sampler for `cfg.n_steps` iterations.
///
/// Particles are initialised and bridged to `Pi_{gamma0}`; then each
/// iteration evaluates `dH/dgamma` on the current system, takes one ADAM step
/// and moves the particles to the new gamma with one SMC step. The trace
/// holds `T + 1` rows, one per visited gamma.
pub fn run_adaptive(
    model: &ModelSpec,
    data: &Dataset,
    prior: &Prior,
    cfg: &AdaptiveConfig,
    seed: u64,
) -> Result<AdaptiveRun> {
    cfg.validate()?;
    let init = smc::init_particles(model, prior, data, cfg.n_particles, seed)?;
    let mut system = smc::bridge_to_gamma(model, &init, cfg.gamma0, data, prior, &cfg.mh)?;
    let mut state = GammaState::new(cfg.gamma0)?;
    let mut rows = Vec::with_capacity(cfg.n_steps + 1);
    for t in 0..=cfg.n_steps {
        let grad = gradient_at(model, &system, data)?;
        rows.push(TraceRow {
            t,
            gamma: system.gamma,
            dh_dgamma: grad,
            ess: system.diagnostics.ess,
            accept_rate: system.diagnostics.acceptance_rate,
        });
        if t == cfg.n_steps {
            break;
        }
        state = adam_step(state, grad, &cfg.adam)?;
        debug_assert!((GAMMA_MIN..=GAMMA_MAX).contains(&state.gamma));
        system = smc::smc_step(model, &system, state.gamma, data, prior, &cfg.mh)?;
    }
    Ok(AdaptiveRun {
        trace: GammaTrace { rows },
        system,
        adam: state,
    })
}
