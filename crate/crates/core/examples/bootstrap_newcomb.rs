//! Bootstrap spread of the posterior mean for the Newcomb data, adaptive
//! gamma against a fixed gamma.
//!
//! cargo run --release --example bootstrap_newcomb -- [B] [fixed_gamma]

use std::path::Path;

use dpd_smc::data::{load_csv, CsvSchema};
use dpd_smc::optimizer::AdaptiveConfig;
use dpd_smc::oracle::{self, BootstrapMethod, McmcConfig};
use dpd_smc::smc::{MhConfig, Prior};
use dpd_smc::ModelSpec;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> anyhow::Result<()> {
    let b: usize = arg(1, 25);
    let fixed: f64 = arg(2, 0.23);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/newcomb.csv");
    let data = load_csv(&path, &CsvSchema::response("y"))?;
    let model = ModelSpec::gaussian();
    let adaptive = BootstrapMethod::Adaptive(AdaptiveConfig {
        n_particles: 1000,
        mh: MhConfig::with_moves(20),
        ..Default::default()
    });
    let fixed_m = BootstrapMethod::FixedGamma {
        gamma: fixed,
        mcmc: McmcConfig::default(),
    };
    let a = oracle::bootstrap_study(&model, &data, &Prior::Flat, b, &adaptive, 1)?;
    let f = oracle::bootstrap_study(&model, &data, &Prior::Flat, b, &fixed_m, 1)?;
    print!("{}", a.to_csv("adaptive"));
    print!("{}", f.csv_rows("fixed"));
    Ok(())
}
