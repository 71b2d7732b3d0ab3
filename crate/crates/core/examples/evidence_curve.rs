//! Monte Carlo estimate of the log evidence as a function of gamma. The
//! curve rises monotonically, so it cannot be used to choose gamma.
//!
//! cargo run --release --example evidence_curve -- [draws] [seed]

use dpd_smc::data::simulate_contaminated_gaussian;
use dpd_smc::oracle;
use dpd_smc::smc::Prior;
use dpd_smc::{stats, ModelSpec};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> anyhow::Result<()> {
    let draws: usize = arg(1, 2000);
    let seed: u64 = arg(2, 1);
    let data = simulate_contaminated_gaussian(100, 1.0, 1.0, 10.0, 5.0, seed)?;
    let prior = Prior::NormalLocationKnownScale {
        mean: 0.0,
        sd: 10.0,
        sigma: 1.0,
    };
    let grid = oracle::linspace(0.01, 1.0, 100);
    let curve = oracle::evidence_curve(&ModelSpec::gaussian(), &data, &grid, &prior, draws, seed)?;
    for (g, e) in curve.grid.iter().zip(&curve.log_evidence).step_by(11) {
        println!("gamma {g:.3}  log evidence {e:.3}");
    }
    println!(
        "Spearman(gamma, log evidence) = {:.4}",
        stats::spearman(&curve.grid, &curve.log_evidence)
    );
    Ok(())
}
