//! Adaptive fit of a normal model to Newcomb's speed-of-light measurements.
//!
//! cargo run --release --example fit_newcomb -- [N] [T] [moves] [seed]

use std::path::Path;

use dpd_smc::data::{load_csv, CsvSchema};
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
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/newcomb.csv");
    let data = load_csv(&path, &CsvSchema::response("y"))?;
    let cfg = AdaptiveConfig {
        n_particles: arg(1, 2000),
        n_steps: arg(2, 300),
        mh: MhConfig::with_moves(arg(3, 50)),
        ..Default::default()
    };
    let model = ModelSpec::gaussian();
    let run = run_adaptive(&model, &data, &Prior::Flat, &cfg, arg(4, 1))?;
    let mean = run.system.posterior_mean();
    let sd = run.system.posterior_sd();
    println!("n = {}, sample mean {:.3}", data.len(), data.mean());
    println!("gamma_hat = {:.4}", run.trace.gamma_hat());
    for (k, name) in model.param_names().iter().enumerate() {
        let (lo, hi) = run.system.credible_interval(k, 0.95);
        println!("{name:>6}: {:.4} (sd {:.4}) 95% [{lo:.3}, {hi:.3}]", mean[k], sd[k]);
    }
    Ok(())
}
