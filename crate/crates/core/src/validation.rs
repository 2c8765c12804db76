//! Analytic latency against the simulator, one row per confirmation count.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfirmationPolicy, SystemConfig};
use crate::ctmc::{self, SolverOptions, Truncation};
use crate::dessim::{self, SimOptions};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationRow {
    pub n: u32,
    pub analytic: f64,
    pub sim_mean: f64,
    pub sim_ci95: f64,
    pub inside_ci: bool,
}

/// Runs one simulation per `N` in `n_range`, all with the same seed, and
/// compares each mean latency with the analytic value.
pub fn validate_latency(
    cfg: &SystemConfig,
    n_range: RangeInclusive<u32>,
    sim: &SimOptions,
    trunc: Truncation,
    solver: &SolverOptions,
) -> Result<Vec<ValidationRow>> {
    let q = ctmc::build_generator(cfg, trunc)?;
    let w = ctmc::solve_steady_state(&q, solver)?;
    let ns: Vec<u32> = n_range.collect();
    ns.par_iter()
        .map(|&k| {
            let n = ConfirmationPolicy::new(k)?;
            let analytic = ctmc::latency_breakdown(&w, cfg, n).latency;
            let run = dessim::run_simulation(cfg, n, sim)?;
            let est = dessim::latency_stats(&run)?;
            Ok(ValidationRow {
                n: k,
                analytic,
                sim_mean: est.mean,
                sim_ci95: est.ci95_halfwidth,
                inside_ci: est.contains(analytic),
            })
        })
        .collect()
}
