//! Double-spend success probability, closed form against a simulated race.

use bran::security::{self, RaceSummary};
use bran::{ConfirmationPolicy, GiveUp};

fn main() -> bran::Result<()> {
    let give_ups = [GiveUp::Finite(6), GiveUp::Finite(25), GiveUp::Unbounded];
    for beta in [0.1, 0.2, 0.4, 0.8] {
        println!("beta = {beta}");
        for k in [1, 2, 4, 6] {
            let n = ConfirmationPolicy::new(k)?;
            let cols: Vec<String> = give_ups
                .iter()
                .map(|&g| format!("N_g={g}: {:.6}", security::attack_success_prob(n, beta, g)))
                .collect();
            println!("  N={k}  {}", cols.join("  "));
        }
    }

    let n = ConfirmationPolicy::new(2)?;
    let trials = 200_000;
    let exact = security::attack_success_prob(n, 0.4, GiveUp::Finite(25));
    let race = security::simulate_attack_race(n, 0.4, GiveUp::Finite(25), trials, 7)?;
    println!(
        "\nbeta=0.4 N=2 N_g=25: closed form {exact:.5}, simulated {:.5} +- {:.5}",
        race.probability(),
        RaceSummary::three_sigma(exact, trials)
    );
    Ok(())
}
