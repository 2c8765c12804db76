//! Mean access latency against the number of confirmations, s = 4, T_b = 0.04.

use bran::ctmc::{self, SolverOptions, Truncation};
use bran::{ConfirmationPolicy, SystemConfig};

fn main() -> bran::Result<()> {
    println!("rho   N  latency");
    for rho in [0.1, 0.4, 0.7] {
        let cfg = SystemConfig::from_intensity(rho, 25.0, 1.0, 4)?;
        let q = ctmc::build_generator(&cfg, Truncation::default_for(&cfg))?;
        let w = ctmc::solve_steady_state(&q, &SolverOptions::default())?;
        for n in 1..=6 {
            let b = ctmc::latency_breakdown(&w, &cfg, ConfirmationPolicy::new(n)?);
            println!("{rho:.1}  {n}  {:.5}", b.latency);
        }
    }
    Ok(())
}
