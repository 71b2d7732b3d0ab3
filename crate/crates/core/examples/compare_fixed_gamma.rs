//! Adaptive gamma against fixed-gamma chains on replicated contaminated
//! data: MSE of the posterior mean of mu and average 95% intervals.
//!
//! cargo run --release --example compare_fixed_gamma -- [reps] [N] [moves]

use dpd_smc::optimizer::AdaptiveConfig;
use dpd_smc::oracle::{self, ComparisonConfig};
use dpd_smc::smc::MhConfig;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> anyhow::Result<()> {
    let cfg = ComparisonConfig {
        replications: arg(1, 20),
        adaptive: AdaptiveConfig {
            n_particles: arg(2, 400),
            n_steps: 300,
            mh: MhConfig::with_moves(arg(3, 10)),
            ..Default::default()
        },
        ..Default::default()
    };
    let rows = oracle::compare_fixed(&cfg, 1)?;
    println!("{:>9} {:>6} {:>5} {:>8}  ACI", "method", "gamma", "tau", "MSEx100");
    for r in &rows {
        println!(
            "{:>9} {:>6.3} {:>5} {:>8.3}  ({:.3}, {:.3})",
            r.method, r.gamma, r.tau, r.mse_x100, r.aci_lower, r.aci_upper
        );
    }
    Ok(())
}
