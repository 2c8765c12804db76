//! Block times at rate 0.1: sample mean, histogram, and the memoryless tail.

use bran::mining::{self, MiningProcess};

fn main() -> bran::Result<()> {
    let process = MiningProcess::new(0.1)?;
    let sample = mining::sample_block_times(&process, 10_000, 1)?;
    println!(
        "mean block time {:.3} (expected {})",
        sample.mean(),
        process.mean_block_time()
    );

    for bin in sample.histogram(12)? {
        let bar = "#".repeat(bin.count / 40);
        println!("{:7.2} .. {:7.2} {:5} {bar}", bin.left, bin.right, bin.count);
    }

    // Pr{U > t + h | U > t} should match Pr{U > h}.
    let (t, h) = (10.0, 5.0);
    let d = sample.durations();
    let past_t = d.iter().filter(|&&u| u > t).count() as f64;
    let past_both = d.iter().filter(|&&u| u > t + h).count() as f64;
    let past_h = d.iter().filter(|&&u| u > h).count() as f64 / d.len() as f64;
    println!(
        "Pr{{U > t+h | U > t}} = {:.3}, Pr{{U > h}} = {:.3}, exact {:.3}",
        past_both / past_t,
        past_h,
        mining::block_time_tail(0.1, h)
    );
    Ok(())
}
