//! Gamma trajectory of the adaptive sampler on contaminated Gaussian data.
//!
//! cargo run --release --example adaptive_convergence -- [tau] [N] [T] [moves] [seed]

use std::time::Instant;

use dpd_smc::data::simulate_contaminated_gaussian;
use dpd_smc::optimizer::{run_adaptive, AdaptiveConfig};
use dpd_smc::smc::{MhConfig, Prior};
use dpd_smc::ModelSpec;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> anyhow::Result<()> {
    let tau: f64 = arg(1, 10.0);
    let cfg = AdaptiveConfig {
        n_particles: arg(2, 1000),
        n_steps: arg(3, 300),
        mh: MhConfig::with_moves(arg(4, 20)),
        ..Default::default()
    };
    let seed: u64 = arg(5, 1);
    let y = simulate_contaminated_gaussian(100, 1.0, 1.0, tau, 5.0, seed)?;
    let start = Instant::now();
    let run = run_adaptive(&ModelSpec::gaussian(), &y, &Prior::Flat, &cfg, seed)?;
    for row in run.trace.rows.iter().step_by(25) {
        println!(
            "t={:4}  gamma={:.4}  dH={:+.3e}  ess={:7.1}  acc={:.3}",
            row.t, row.gamma, row.dh_dgamma, row.ess, row.accept_rate
        );
    }
    let mean = run.system.posterior_mean();
    println!(
        "gamma_hat={:.4} final={:.4} mu={:.4} sigma={:.4} ({:.1?})",
        run.trace.gamma_hat(),
        run.trace.final_gamma(),
        mean[0],
        mean[1],
        start.elapsed()
    );
    Ok(())
}
