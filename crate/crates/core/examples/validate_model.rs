//! Analytic latency against the simulator's 95% confidence interval.

use bran::ctmc::{SolverOptions, Truncation};
use bran::dessim::SimOptions;
use bran::stats;
use bran::validation;
use bran::SystemConfig;

fn main() -> bran::Result<()> {
    let cfg = SystemConfig::from_intensity(0.4, 25.0, 1.0, 4)?;
    let rows = validation::validate_latency(
        &cfg,
        1..=6,
        &SimOptions::new(50_000, 1),
        Truncation::default_for(&cfg),
        &SolverOptions::default(),
    )?;
    println!("N  analytic  simulated           inside");
    for r in &rows {
        println!(
            "{}  {:.5}   {:.5} +- {:.5}   {}",
            r.n, r.analytic, r.sim_mean, r.sim_ci95, r.inside_ci
        );
    }
    let ns: Vec<f64> = rows.iter().map(|r| f64::from(r.n)).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.sim_mean).collect();
    println!(
        "simulated slope per confirmation {:.5} (T_b = {})",
        stats::regression_slope(&ns, &means),
        cfg.t_b()
    );
    Ok(())
}
