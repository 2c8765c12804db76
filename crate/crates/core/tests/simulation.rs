//! Simulators against the closed forms, and the closed forms against the simulators.

mod common;

use bran::bounds;
use bran::ctmc::{self, SolverOptions, Truncation};
use bran::dessim::{self, SimOptions};
use bran::mining::{self, MiningProcess};
use bran::rng;
use bran::security::{self, RaceSummary};
use bran::stats;
use bran::{ConfirmationPolicy, GiveUp, SystemConfig};

fn n(k: u32) -> ConfirmationPolicy {
    ConfirmationPolicy::new(k).unwrap()
}

#[test]
fn low_load_latency_inside_ci() {
    let cfg = SystemConfig::from_intensity(0.1, 25.0, 1.0, 4).unwrap();
    let analytic =
        ctmc::expected_latency(n(1), &cfg, Truncation::default_for(&cfg), &SolverOptions::default()).unwrap();
    let run = dessim::run_simulation(&cfg, n(1), &SimOptions::new(100_000, 1)).unwrap();
    let est = dessim::latency_stats(&run).unwrap();
    assert!(
        est.contains(analytic),
        "{analytic} not in {} +- {}",
        est.mean,
        est.ci95_halfwidth
    );
}

#[test]
fn mean_outstanding_matches_simulation() {
    // Little's law turns the latency interval into one for E[i + j].
    let cfg = SystemConfig::new(0.4, 25.0, 1.0, 4).unwrap();
    let q = ctmc::build_generator(&cfg, Truncation::default_for(&cfg)).unwrap();
    let w = ctmc::solve_steady_state(&q, &SolverOptions::default()).unwrap();
    let run = dessim::run_simulation(&cfg, n(1), &SimOptions::new(100_000, 2)).unwrap();
    let est = dessim::latency_stats(&run).unwrap();
    let lo = cfg.lambda_a() * (est.mean - est.ci95_halfwidth + cfg.t_c());
    let hi = cfg.lambda_a() * (est.mean + est.ci95_halfwidth + cfg.t_c());
    let analytic = w.mean_outstanding();
    assert!(lo <= analytic && analytic <= hi, "{analytic} not in [{lo}, {hi}]");

    // Time average of i + j over independent replications.
    let reps: Vec<f64> = (0..20)
        .map(|seed| {
            dessim::run_simulation(&cfg, n(1), &SimOptions::new(20_000, 100 + seed))
                .unwrap()
                .mean_in_system
        })
        .collect();
    let mean = reps.iter().sum::<f64>() / 20.0;
    let var = reps.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 19.0;
    let half = stats::t_quantile_975(19) * (var / 20.0).sqrt();
    assert!((mean - analytic).abs() <= half, "{analytic} not in {mean} +- {half}");
}

#[test]
fn high_load_occupancy_close_to_chain() {
    let cfg = SystemConfig::from_intensity(0.7, 5.0, 1.0, 4).unwrap();
    let q = ctmc::build_generator(&cfg, Truncation::default_for(&cfg)).unwrap();
    let w = ctmc::solve_steady_state(&q, &SolverOptions::default()).unwrap();
    let run = dessim::run_simulation(&cfg, n(1), &SimOptions::new(100_000, 3)).unwrap();
    let occ = run.occupancy_distribution().unwrap();
    let tv = dessim::total_variation(occ, w.iter());
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn simulated_latency_respects_lower_bounds() {
    let cfg = SystemConfig::from_intensity(0.1, 25.0, 1.0, 25).unwrap();
    let run = dessim::run_simulation(&cfg, n(3), &SimOptions::new(100_000, 4)).unwrap();
    assert!(bounds::latency_lower_mms(n(3), &cfg).unwrap() <= run.mean_latency);
    assert!(
        bounds::latency_lower_block(n(3), &cfg)
            <= run.mean_latency + dessim::latency_stats(&run).unwrap().ci95_halfwidth
    );
}

#[test]
fn block_bound_tight_at_low_load() {
    for rho in [0.01, 0.05] {
        let cfg = SystemConfig::from_intensity(rho, 25.0, 1.0, 25).unwrap();
        let run = dessim::run_simulation(&cfg, n(3), &SimOptions::new(100_000, 5)).unwrap();
        assert!(
            (run.mean_latency - 0.12).abs() <= 0.15 * 0.12,
            "rho={rho}: {}",
            run.mean_latency
        );
    }
}

#[test]
fn halfwidth_shrinks_like_root_n() {
    let cfg = SystemConfig::from_intensity(0.4, 25.0, 1.0, 4).unwrap();
    let width = |served: u64, seed: u64| {
        let run = dessim::run_simulation(&cfg, n(2), &SimOptions::new(served, seed)).unwrap();
        dessim::latency_stats(&run).unwrap().ci95_halfwidth
    };
    let (mut small, mut large) = (0.0, 0.0);
    for seed in 0..10 {
        small += width(20_000, seed);
        large += width(40_000, 100 + seed);
    }
    let ratio = large / small;
    let target = 1.0 / 2f64.sqrt();
    assert!((ratio - target).abs() <= 0.3 * target, "ratio {ratio}");
}

#[test]
fn block_times_are_exponential() {
    let process = MiningProcess::new(0.1).unwrap();
    let sample = mining::sample_block_times(&process, 10_000, 8).unwrap();
    assert!((sample.mean() - 10.0).abs() <= 0.3);
    assert!(common::ks_exponential(sample.durations(), 0.1) < 0.0163);
}

#[test]
fn residual_block_time_is_memoryless() {
    let process = MiningProcess::new(0.5).unwrap();
    let sample = mining::sample_block_times(&process, 200_000, 9).unwrap();
    let residual: Vec<f64> = sample
        .durations()
        .iter()
        .filter(|&&u| u > 1.5)
        .map(|u| u - 1.5)
        .collect();
    assert!(residual.len() > 10_000);
    let crit = 1.63 / (residual.len() as f64).sqrt();
    assert!(common::ks_exponential(&residual, 0.5) < crit);
}

#[test]
fn merged_block_streams_are_poisson() {
    // Two independent miners at rates 0.3 and 0.7 look like one at rate 1.
    let a = MiningProcess::new(0.3).unwrap();
    let b = MiningProcess::new(0.7).unwrap();
    let mut epochs = a.sample(6_000, &mut rng::seeded(10, 0)).unwrap().epochs();
    let horizon = epochs[epochs.len() - 1];
    let mut other = b.sample(20_000, &mut rng::seeded(10, 1)).unwrap().epochs();
    assert!(other[other.len() - 1] > horizon);
    epochs.append(&mut other);
    epochs.retain(|&t| t <= horizon);
    epochs.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = std::iter::once(epochs[0])
        .chain(epochs.windows(2).map(|w| w[1] - w[0]))
        .collect();
    let crit = 1.63 / (gaps.len() as f64).sqrt();
    assert!(common::ks_exponential(&gaps, 1.0) < crit);
}

#[test]
fn race_reproduces_one_confirmation_value() {
    let race = security::simulate_attack_race(n(1), 0.2, GiveUp::Unbounded, 1_000_000, 12).unwrap();
    assert!((race.probability() - 0.08889).abs() <= 0.001);
    let exact = security::attack_success_prob(n(1), 0.2, GiveUp::Unbounded);
    assert!((race.probability() - exact).abs() <= RaceSummary::three_sigma(exact, 1_000_000));
}

#[test]
fn race_with_finite_give_up() {
    let g = GiveUp::Finite(20);
    let race = security::simulate_attack_race(n(6), 0.1, g, 1_000_000, 13).unwrap();
    let exact = security::attack_success_prob(n(6), 0.1, g);
    assert!((race.probability() - exact).abs() <= RaceSummary::three_sigma(exact, 1_000_000));
}

#[test]
fn simulated_success_grows_with_give_up() {
    let mut last = 0.0;
    for g in [6, 12, 25, 50] {
        let race = security::simulate_attack_race(n(2), 0.8, GiveUp::Finite(g), 1_000_000, 14).unwrap();
        let p = race.probability();
        assert!(p >= last, "N_g={g}: {p} < {last}");
        last = p;
    }
}
