//! Latency and its closed-form bounds for 25 links and fast blocks.

use bran::bounds;
use bran::ctmc::{self, SolverOptions, Truncation};
use bran::{ConfirmationPolicy, SystemConfig};

fn main() -> bran::Result<()> {
    let n = ConfirmationPolicy::new(1)?;
    println!("rho   lower_block  lower_mms    latency      upper");
    for k in 1..=18 {
        let rho = 0.05 * f64::from(k);
        let cfg = SystemConfig::from_intensity(rho, 100.0, 1.0, 25)?;
        let latency = ctmc::expected_latency(n, &cfg, Truncation::default_for(&cfg), &SolverOptions::default())?;
        let b = bounds::latency_bounds(n, &cfg)?;
        let upper = b.upper.finite().map_or("inf".to_string(), |u| format!("{u:.6}"));
        println!(
            "{rho:.2}  {:.6}     {:.6}     {latency:.6}     {upper}",
            b.lower_block, b.lower_mms
        );
    }
    Ok(())
}
