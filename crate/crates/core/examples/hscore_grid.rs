//! H-score of fixed-gamma posteriors over a grid of gamma values, with the
//! posterior mean of mu at each point.
//!
//! cargo run --release --example hscore_grid -- [tau] [seed]

use dpd_smc::data::simulate_contaminated_gaussian;
use dpd_smc::hscore;
use dpd_smc::oracle::{self, McmcConfig};
use dpd_smc::smc::Prior;
use dpd_smc::ModelSpec;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> anyhow::Result<()> {
    let tau: f64 = arg(1, 10.0);
    let seed: u64 = arg(2, 1);
    let data = simulate_contaminated_gaussian(100, 1.0, 1.0, tau, 5.0, seed)?;
    let model = ModelSpec::gaussian();
    let prior = Prior::FlatKnownScale { sigma: 1.0 };
    let mcmc = McmcConfig::default();
    let mut best = (f64::INFINITY, 0.0);
    println!("gamma,h_score,mu_mean,mu_lo,mu_hi");
    for g in oracle::linspace(0.02, 1.2, 60) {
        let s = oracle::fixed_gamma_mcmc(&model, &data, g, &prior, &mcmc, seed)?;
        let h = hscore::h_score(&model, &s, g, &data)?;
        let mu = oracle::sample_mean(&s)[0];
        let (lo, hi) = oracle::sample_interval(&s, 0, 0.95);
        println!("{g:.4},{h:.4},{mu:.4},{lo:.4},{hi:.4}");
        if h < best.0 {
            best = (h, g);
        }
    }
    eprintln!("argmin gamma = {:.4}", best.1);
    Ok(())
}
