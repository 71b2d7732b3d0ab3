//! Posterior of mu with and without 20% outliers, under the
//! likelihood-tempered posterior and under the adaptive DPD posterior.
//!
//! cargo run --release --example tempered_vs_adaptive -- [N] [moves] [seed]

use dpd_smc::data::simulate_contaminated_gaussian;
use dpd_smc::optimizer::{run_adaptive, AdaptiveConfig};
use dpd_smc::oracle;
use dpd_smc::smc::{MhConfig, Prior};
use dpd_smc::ModelSpec;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> anyhow::Result<()> {
    let n: usize = arg(1, 1000);
    let mh = MhConfig::with_moves(arg(2, 20));
    let seed: u64 = arg(3, 3);
    let model = ModelSpec::gaussian();
    let prior = Prior::FlatKnownScale { sigma: 1.0 };
    let schedule = oracle::linspace(0.0, 1.0, 501);
    let cfg = AdaptiveConfig {
        n_particles: n,
        n_steps: 500,
        mh,
        ..Default::default()
    };
    for tau in [0.0, 20.0] {
        let data = simulate_contaminated_gaussian(100, 1.0, 1.0, tau, 5.0, seed)?;
        let t = oracle::tempered_smc(&model, &data, &prior, &schedule, n, &mh, seed)?;
        let a = run_adaptive(&model, &data, &prior, &cfg, seed)?;
        println!(
            "tau={tau:>4}: tempered mu {:.3} (sd {:.3})   adaptive mu {:.3} (sd {:.3}, gamma {:.3})",
            t.posterior_mean()[0],
            t.posterior_sd()[0],
            a.system.posterior_mean()[0],
            a.system.posterior_sd()[0],
            a.trace.gamma_hat()
        );
    }
    Ok(())
}
