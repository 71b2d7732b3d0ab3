//! Robust no-intercept regression of log light on log temperature for the
//! CYG OB1 star cluster, with the least-squares fit for reference.
//!
//! cargo run --release --example star_regression -- [N] [T] [moves] [seed]

use std::path::Path;

use dpd_smc::data::{load_csv, CsvSchema};
use dpd_smc::optimizer::{run_adaptive, AdaptiveConfig};
use dpd_smc::smc::{MhConfig, Prior};
use dpd_smc::{stats, ModelSpec};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> anyhow::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/stars_cyg.csv");
    let data = load_csv(&path, &CsvSchema::regression("log_light", &["log_te"]))?;
    let rows: Vec<&[f64]> = data.x.as_ref().expect("covariates").rows().collect();
    let (beta, sigma) = stats::ols_no_intercept(&data.y, &rows)?;
    println!("OLS: beta {:.4}, sigma {:.4}", beta[0], sigma);

    let cfg = AdaptiveConfig {
        n_particles: arg(1, 2000),
        n_steps: arg(2, 300),
        mh: MhConfig::with_moves(arg(3, 50)),
        ..Default::default()
    };
    let model = ModelSpec::linear_regression(1);
    let run = run_adaptive(&model, &data, &Prior::Flat, &cfg, arg(4, 1))?;
    let mean = run.system.posterior_mean();
    println!(
        "adaptive: gamma_hat {:.4}, beta {:.4}, sigma {:.4}",
        run.trace.gamma_hat(),
        mean[0],
        mean[1]
    );
    Ok(())
}
