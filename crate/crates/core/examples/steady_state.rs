//! Stationary distribution of the one-confirmation queue for s = 4, T_b = 0.04.

use bran::ctmc::{self, SolverOptions, Truncation};
use bran::SystemConfig;

fn main() -> bran::Result<()> {
    let cfg = SystemConfig::from_intensity(0.4, 25.0, 1.0, 4)?;
    let q = ctmc::build_generator(&cfg, Truncation::default_for(&cfg))?;
    let w = ctmc::solve_steady_state(&q, &SolverOptions::default())?;

    println!(
        "{} states, {} sweeps, residual {:.1e}, boundary mass {:.1e}",
        q.dimension(),
        w.sweeps(),
        w.residual(),
        w.boundary_mass()
    );
    println!("E[i + j] = {:.5}", w.mean_outstanding());

    println!("w(i, j) for i, j < 6:");
    for i in 0..6 {
        let row: Vec<String> = (0..6)
            .map(|j| format!("{:.4}", w.get(ctmc::QueueState::new(i, j))))
            .collect();
        println!("  i={i}: {}", row.join(" "));
    }
    let pending = w.marginal_pending();
    println!("Pr{{no pending request}} = {:.5}", pending[0]);
    Ok(())
}
