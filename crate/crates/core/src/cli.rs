//! Command-line experiment runner. The `dpd-smc` binary forwards to [`run`].

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::{self, CsvSchema, Dataset};
use crate::error::Error;
use crate::models::ModelSpec;
use crate::optimizer::{self, AdamHyper, AdaptiveConfig};
use crate::oracle::{self, BootstrapMethod, ChainProposal, ComparisonConfig, McmcConfig};
use crate::smc::{MhConfig, ParticleSystem, Prior};
use crate::stats;

/// Version of the `summary.json` layout.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    #[default]
    Gaussian,
    Regression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum DataSource {
    File { path: PathBuf },
    Simulate { n: usize, mean: f64, sd: f64, tau: f64, shift: f64 },
}

/// Shared settings of every subcommand. A JSON config file deserialises into
/// this struct; command-line flags override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelChoice,
    #[serde(alias = "N")]
    pub n_particles: usize,
    #[serde(alias = "T")]
    pub n_steps: usize,
    pub gamma0: f64,
    pub mh_moves: usize,
    pub adam: AdamHyper,
    pub data: Option<DataSource>,
    pub response: String,
    pub covariates: Vec<String>,
    /// Holds sigma fixed at this value under a flat prior on the location.
    pub known_sigma: Option<f64>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelChoice::Gaussian,
            n_particles: 2000,
            n_steps: 300,
            gamma0: 0.1,
            mh_moves: 50,
            adam: AdamHyper::default(),
            data: None,
            response: "y".into(),
            covariates: vec!["x".into()],
            known_sigma: None,
            seed: 1,
            threads: None,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn adaptive(&self) -> AdaptiveConfig {
        AdaptiveConfig {
            n_particles: self.n_particles,
            n_steps: self.n_steps,
            gamma0: self.gamma0,
            mh: MhConfig::with_moves(self.mh_moves),
            adam: self.adam,
        }
    }

    pub fn prior(&self) -> Prior {
        match self.known_sigma {
            Some(sigma) => Prior::FlatKnownScale { sigma },
            None => Prior::Flat,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        self.adaptive().validate()?;
        if let Some(s) = self.known_sigma {
            if !(s > 0.0) {
                return Err(Error::NonPositiveScale(s));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        Ok(())
    }

    fn schema(&self) -> CsvSchema {
        match self.model {
            ModelChoice::Gaussian => CsvSchema::response(self.response.clone()),
            ModelChoice::Regression => {
                let cols: Vec<&str> = self.covariates.iter().map(String::as_str).collect();
                CsvSchema::regression(self.response.clone(), &cols)
            }
        }
    }

    /// Loads or simulates the dataset and builds the matching model.
    pub fn load(&self) -> crate::Result<(ModelSpec, Dataset)> {
        let data = match &self.data {
            None => return Err(Error::Config("no data: pass --data or --simulate".into())),
            Some(DataSource::File { path }) => data::load_csv(path, &self.schema())?,
            Some(DataSource::Simulate {
                n,
                mean,
                sd,
                tau,
                shift,
            }) => {
                if self.model == ModelChoice::Regression {
                    return Err(Error::Config(
                        "--simulate produces Gaussian data only".into(),
                    ));
                }
                data::simulate_contaminated_gaussian(*n, *mean, *sd, *tau, *shift, self.seed)?
            }
        };
        let model = match self.model {
            ModelChoice::Gaussian => ModelSpec::gaussian(),
            ModelChoice::Regression => ModelSpec::linear_regression(data.covariate_dim()),
        };
        Ok((model, data))
    }
}

#[derive(Debug, Parser)]
#[command(name = "dpd-smc", version, about = "Robust Bayesian inference with adaptive DPD tuning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Adaptive SMC fit: gamma trace, posterior samples and a summary.
    Fit(SharedArgs),
    /// H-score on a gamma grid from fixed-gamma chains.
    Grid {
        #[command(flatten)]
        shared: SharedArgs,
        /// lo,hi,points
        #[arg(long, default_value = "0.02,1.2,60")]
        grid: String,
        /// Kept draws per grid point.
        #[arg(long, default_value_t = 2000)]
        draws: usize,
    },
    /// Prior Monte Carlo evidence across gamma under mu ~ N(0, prior_sd^2).
    Evidence {
        #[command(flatten)]
        shared: SharedArgs,
        #[arg(long, default_value = "0.01,1,100")]
        grid: String,
        #[arg(long, default_value_t = 2000)]
        draws: usize,
        #[arg(long, default_value_t = 10.0)]
        prior_sd: f64,
    },
    /// Fixed-gamma chains against the adaptive sampler on replicated data.
    CompareFixed {
        #[command(flatten)]
        shared: SharedArgs,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value = "0,10,20,30")]
        taus: String,
        #[arg(long, default_value = "0.1,0.3,0.5,0.7,0.9")]
        gammas: String,
        #[arg(long, default_value_t = 100_000)]
        mcmc_iters: usize,
        #[arg(long, default_value_t = 20_000)]
        burn_in: usize,
    },
    /// Likelihood-tempered SMC with an equally spaced schedule.
    Tempered {
        #[command(flatten)]
        shared: SharedArgs,
        #[arg(long, default_value_t = 500)]
        steps: usize,
    },
    /// Bootstrap the posterior mean under the adaptive or a fixed-gamma fit.
    Bootstrap {
        #[command(flatten)]
        shared: SharedArgs,
        #[arg(long = "B", default_value_t = 100)]
        b: usize,
        /// Use a fixed-gamma chain instead of the adaptive sampler.
        #[arg(long)]
        fixed_gamma: Option<f64>,
        #[arg(long, default_value_t = 20_000)]
        mcmc_iters: usize,
    },
    /// Write a contaminated Gaussian sample to `<out>/data.csv`.
    Simulate(SharedArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct SharedArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelChoice>,
    #[arg(long, conflicts_with = "simulate")]
    pub data: Option<PathBuf>,
    /// n,mean,sd,tau,shift
    #[arg(long)]
    pub simulate: Option<String>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "T")]
    pub t: Option<usize>,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub mh_moves: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub response: Option<String>,
    /// Comma-separated covariate columns.
    #[arg(long)]
    pub covariates: Option<String>,
    #[arg(long)]
    pub known_sigma: Option<f64>,
}

fn parse_list(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("not a number: {v:?}"))
        })
        .collect()
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    let v = parse_list(s)?;
    anyhow::ensure!(v.len() == 3 && v[2] >= 1.0, "grid must be lo,hi,points");
    Ok(oracle::linspace(v[0], v[1], v[2] as usize))
}

impl SharedArgs {
    /// Config file (if any) overridden by flags.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(m) = self.model {
            cfg.model = m;
        }
        if let Some(p) = &self.data {
            cfg.data = Some(DataSource::File { path: p.clone() });
        }
        if let Some(s) = &self.simulate {
            let v = parse_list(s)?;
            anyhow::ensure!(v.len() == 5, "--simulate expects n,mean,sd,tau,shift");
            cfg.data = Some(DataSource::Simulate {
                n: v[0] as usize,
                mean: v[1],
                sd: v[2],
                tau: v[3],
                shift: v[4],
            });
        }
        macro_rules! set {
            ($field:ident, $flag:expr) => {
                if let Some(v) = $flag.clone() {
                    cfg.$field = v;
                }
            };
        }
        set!(n_particles, self.n);
        set!(n_steps, self.t);
        set!(gamma0, self.gamma0);
        set!(mh_moves, self.mh_moves);
        set!(seed, self.seed);
        set!(out, self.out);
        set!(response, self.response);
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if self.known_sigma.is_some() {
            cfg.known_sigma = self.known_sigma;
        }
        if let Some(c) = &self.covariates {
            cfg.covariates = c.split(',').map(|s| s.trim().to_string()).collect();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub ci95: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsReference {
    pub coefficients: Vec<f64>,
    pub sigma: f64,
}

/// Contents of `summary.json` written by `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub schema_version: u32,
    pub model: ModelChoice,
    pub n_obs: usize,
    pub n_particles: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub gamma_hat: f64,
    pub gamma_final: f64,
    pub converged: bool,
    pub parameters: Vec<ParamSummary>,
    pub ols_reference: Option<OlsReference>,
}

pub fn summarize(system: &ParticleSystem, names: &[String]) -> Vec<ParamSummary> {
    let mean = system.posterior_mean();
    let sd = system.posterior_sd();
    names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let (lo, hi) = system.credible_interval(k, 0.95);
            ParamSummary {
                name: name.clone(),
                mean: mean[k],
                sd: sd[k],
                ci95: [lo, hi],
            }
        })
        .collect()
}

/// Least-squares fit without intercept, when the data carry covariates.
pub fn ols_reference(data: &Dataset) -> crate::Result<Option<OlsReference>> {
    match &data.x {
        None => Ok(None),
        Some(x) => {
            let rows: Vec<&[f64]> = x.rows().collect();
            let (coefficients, sigma) = stats::ols_no_intercept(&data.y, &rows)?;
            Ok(Some(OlsReference {
                coefficients,
                sigma,
            }))
        }
    }
}

pub fn particles_csv(system: &ParticleSystem, names: &[String]) -> String {
    let mut out = names.join(",");
    out.push_str(",weight\n");
    for (p, w) in system.particles.iter().zip(&system.weights) {
        for v in p.iter() {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{w}\n"));
    }
    out
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> anyhow::Result<T> + Send,
) -> anyhow::Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building thread pool")?
            .install(f),
    }
}

pub fn cmd_fit(cfg: &RunConfig) -> anyhow::Result<FitSummary> {
    let (model, data) = cfg.load()?;
    let run = optimizer::run_adaptive(&model, &data, &cfg.prior(), &cfg.adaptive(), cfg.seed)?;
    let names = model.param_names();
    let summary = FitSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        model: cfg.model,
        n_obs: data.len(),
        n_particles: cfg.n_particles,
        n_steps: cfg.n_steps,
        seed: cfg.seed,
        gamma_hat: run.trace.gamma_hat(),
        gamma_final: run.trace.final_gamma(),
        converged: run.trace.converged(),
        parameters: summarize(&run.system, &names),
        ols_reference: ols_reference(&data)?,
    };
    write(&cfg.out, "gamma_trace.csv", &run.trace.to_csv())?;
    write(&cfg.out, "posterior_samples.csv", &particles_csv(&run.system, &names))?;
    write(
        &cfg.out,
        "summary.json",
        &serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

pub fn cmd_grid(cfg: &RunConfig, grid: &[f64], draws: usize) -> anyhow::Result<oracle::GridSearchResult> {
    let (model, data) = cfg.load()?;
    let mcmc = McmcConfig {
        n_iters: 2_000 + 5 * draws,
        burn_in: 2_000,
        thin: 5,
        proposal: ChainProposal::Pilot { iters: 1_000 },
    };
    let res = oracle::grid_search_gamma(&model, &data, &cfg.prior(), grid, &mcmc, cfg.seed)?;
    write(&cfg.out, "grid_hscore.csv", &res.to_csv())?;
    Ok(res)
}

pub fn cmd_evidence(
    cfg: &RunConfig,
    grid: &[f64],
    draws: usize,
    prior_sd: f64,
) -> anyhow::Result<oracle::EvidenceCurve> {
    let (model, data) = cfg.load()?;
    anyhow::ensure!(
        cfg.model == ModelChoice::Gaussian,
        "evidence is defined for the Gaussian model"
    );
    let prior = Prior::NormalLocationKnownScale {
        mean: 0.0,
        sd: prior_sd,
        sigma: cfg.known_sigma.unwrap_or(1.0),
    };
    let curve = oracle::evidence_curve(&model, &data, grid, &prior, draws, cfg.seed)?;
    write(&cfg.out, "evidence.csv", &curve.to_csv())?;
    Ok(curve)
}

pub fn cmd_compare_fixed(cfg: &RunConfig, cmp: &ComparisonConfig) -> anyhow::Result<Vec<oracle::ComparisonRow>> {
    let rows = oracle::compare_fixed(cmp, cfg.seed)?;
    write(&cfg.out, "fixed_vs_adaptive.csv", &oracle::comparison_csv(&rows))?;
    Ok(rows)
}

pub fn cmd_tempered(cfg: &RunConfig, steps: usize) -> anyhow::Result<ParticleSystem> {
    anyhow::ensure!(steps >= 1, "--steps must be at least 1");
    let (model, data) = cfg.load()?;
    let schedule = oracle::linspace(0.0, 1.0, steps + 1);
    let sys = oracle::tempered_smc(
        &model,
        &data,
        &cfg.prior(),
        &schedule,
        cfg.n_particles,
        &MhConfig::with_moves(cfg.mh_moves),
        cfg.seed,
    )?;
    let names = model.param_names();
    write(&cfg.out, "tempered_samples.csv", &particles_csv(&sys, &names))?;
    write(
        &cfg.out,
        "tempered_summary.json",
        &serde_json::to_string_pretty(&summarize(&sys, &names))?,
    )?;
    Ok(sys)
}

pub fn cmd_bootstrap(
    cfg: &RunConfig,
    b: usize,
    fixed_gamma: Option<f64>,
    mcmc_iters: usize,
) -> anyhow::Result<oracle::BootstrapSummary> {
    let (model, data) = cfg.load()?;
    let (method, label) = match fixed_gamma {
        None => (BootstrapMethod::Adaptive(cfg.adaptive()), "adaptive".to_string()),
        Some(gamma) => (
            BootstrapMethod::FixedGamma {
                gamma,
                mcmc: McmcConfig {
                    n_iters: mcmc_iters,
                    burn_in: mcmc_iters / 5,
                    thin: 1,
                    proposal: ChainProposal::Pilot { iters: 1_000 },
                },
            },
            format!("fixed_{gamma}"),
        ),
    };
    let summary = oracle::bootstrap_study(&model, &data, &cfg.prior(), b, &method, cfg.seed)?;
    write(&cfg.out, "bootstrap.csv", &summary.to_csv(&label))?;
    Ok(summary)
}

pub fn cmd_simulate(cfg: &RunConfig) -> anyhow::Result<Dataset> {
    let (_, data) = cfg.load()?;
    fs::create_dir_all(&cfg.out)?;
    data.write_csv(&cfg.out.join("data.csv"), &CsvSchema::response("y"))?;
    Ok(data)
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Fit(a) => {
            let cfg = a.resolve()?;
            let s = with_threads(cfg.threads, || cmd_fit(&cfg))?;
            println!("gamma_hat = {:.4}", s.gamma_hat);
            for p in &s.parameters {
                println!(
                    "{:>6}: mean {:.4}  sd {:.4}  95% [{:.4}, {:.4}]",
                    p.name, p.mean, p.sd, p.ci95[0], p.ci95[1]
                );
            }
            if let Some(o) = &s.ols_reference {
                println!("OLS: coefficients {:?}, sigma {:.4}", o.coefficients, o.sigma);
            }
        }
        Command::Grid {
            shared,
            grid,
            draws,
        } => {
            let cfg = shared.resolve()?;
            let grid = parse_grid(&grid)?;
            let r = with_threads(cfg.threads, || cmd_grid(&cfg, &grid, draws))?;
            println!("argmin gamma = {:.4}", r.argmin_gamma);
        }
        Command::Evidence {
            shared,
            grid,
            draws,
            prior_sd,
        } => {
            let cfg = shared.resolve()?;
            let grid = parse_grid(&grid)?;
            let c = with_threads(cfg.threads, || cmd_evidence(&cfg, &grid, draws, prior_sd))?;
            println!(
                "Spearman(gamma, log evidence) = {:.4}",
                stats::spearman(&c.grid, &c.log_evidence)
            );
        }
        Command::CompareFixed {
            shared,
            reps,
            taus,
            gammas,
            mcmc_iters,
            burn_in,
        } => {
            let cfg = shared.resolve()?;
            let cmp = ComparisonConfig {
                taus: parse_list(&taus)?,
                fixed_gammas: parse_list(&gammas)?,
                replications: reps,
                prior: Prior::FlatKnownScale {
                    sigma: cfg.known_sigma.unwrap_or(1.0),
                },
                adaptive: cfg.adaptive(),
                mcmc: McmcConfig {
                    n_iters: mcmc_iters,
                    burn_in,
                    ..McmcConfig::long_run()
                },
                ..Default::default()
            };
            let rows = with_threads(cfg.threads, || cmd_compare_fixed(&cfg, &cmp))?;
            print!("{}", oracle::comparison_csv(&rows));
        }
        Command::Tempered { shared, steps } => {
            let cfg = shared.resolve()?;
            let sys = with_threads(cfg.threads, || cmd_tempered(&cfg, steps))?;
            println!("posterior mean = {:?}", sys.posterior_mean());
        }
        Command::Bootstrap {
            shared,
            b,
            fixed_gamma,
            mcmc_iters,
        } => {
            let cfg = shared.resolve()?;
            let s = with_threads(cfg.threads, || cmd_bootstrap(&cfg, b, fixed_gamma, mcmc_iters))?;
            print!("{}", s.to_csv(if fixed_gamma.is_some() { "fixed" } else { "adaptive" }));
        }
        Command::Simulate(a) => {
            let cfg = a.resolve()?;
            let d = cmd_simulate(&cfg)?;
            println!("wrote {} rows to {}", d.len(), cfg.out.join("data.csv").display());
        }
    }
    Ok(())
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 on success, 2 for usage or configuration errors, 1 otherwise.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Config(_)) | Some(Error::InvalidParticleCount(_)) => 2,
                _ => 1,
            }
        }
    }
}
