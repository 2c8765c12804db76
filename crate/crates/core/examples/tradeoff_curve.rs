//! Latency against attack success probability as N grows, for 5 and 25 links.

use bran::ctmc::{SolverOptions, Truncation};
use bran::tradeoff;
use bran::SystemConfig;

fn main() -> bran::Result<()> {
    for s in [5, 25] {
        let cfg = SystemConfig::from_intensity(0.7, 25.0, 1.0, s)?;
        println!("s = {s}, rho = 0.7, beta = 0.2");
        for p in tradeoff::tradeoff_curve(&cfg, 0.2, 10, Truncation::default_for(&cfg), &SolverOptions::default())? {
            println!("  N={:2}  latency {:.4}  attack {:.3e}", p.n, p.latency, p.attack_prob);
        }
    }
    Ok(())
}
