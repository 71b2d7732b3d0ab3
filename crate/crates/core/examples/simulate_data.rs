//! Contaminated normal sample written to CSV.
//!
//! cargo run --example simulate_data -- [n] [tau] [seed] [out.csv]

use std::path::PathBuf;

use dpd_smc::data::{simulate_contaminated_gaussian, CsvSchema};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> anyhow::Result<()> {
    let n: usize = arg(1, 100);
    let tau: f64 = arg(2, 10.0);
    let seed: u64 = arg(3, 1);
    let out: PathBuf = arg(4, PathBuf::from("data.csv"));
    let data = simulate_contaminated_gaussian(n, 1.0, 1.0, tau, 5.0, seed)?;
    data.write_csv(&out, &CsvSchema::response("y"))?;
    let shifted = data.contamination.as_ref().map_or(0, |c| c.indices.len());
    println!("wrote {} rows ({shifted} shifted) to {}", data.len(), out.display());
    Ok(())
}
