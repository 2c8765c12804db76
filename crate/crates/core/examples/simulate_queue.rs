//! One discrete-event run with three confirmations, checked against Little's law.

use bran::dessim::{self, SimOptions};
use bran::{ConfirmationPolicy, SystemConfig};

fn main() -> bran::Result<()> {
    let cfg = SystemConfig::from_intensity(0.7, 25.0, 1.0, 4)?;
    let run = dessim::run_simulation(&cfg, ConfirmationPolicy::new(3)?, &SimOptions::new(100_000, 1))?;
    let est = dessim::latency_stats(&run)?;
    println!("served {} over t = {:.1}", run.served_count, run.horizon);
    println!("mean latency {:.5} +- {:.5}", est.mean, est.ci95_halfwidth);
    println!("busiest moment: {} of {} links", run.max_busy, cfg.s());
    // L = lambda_a * W
    println!(
        "time-average in system {:.4}, lambda_a * mean sojourn {:.4}",
        run.mean_in_system,
        cfg.lambda_a() * run.mean_sojourn()
    );
    Ok(())
}
