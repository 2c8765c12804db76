//! Latency against attack success probability, one point per confirmation count.

use serde::Serialize;

use crate::config::{ConfirmationPolicy, GiveUp, SystemConfig};
use crate::ctmc::{self, SolverOptions, Truncation};
use crate::error::{invalid, Result};
use crate::security;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub n: u32,
    /// Mean wait before service, in units of `T_c`.
    pub latency: f64,
    /// Success probability of an attacker that never gives up.
    pub attack_prob: f64,
}

/// Points for `N = 1..=n_max`. Consumers that need the curve itself connect
/// consecutive points with straight segments.
pub fn tradeoff_curve(
    cfg: &SystemConfig,
    beta: f64,
    n_max: u32,
    trunc: Truncation,
    opts: &SolverOptions,
) -> Result<Vec<TradeoffPoint>> {
    if n_max == 0 {
        return Err(invalid("n_max must be at least 1"));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be nonnegative, got {beta}")));
    }
    // One steady-state solve serves every N.
    let q = ctmc::build_generator(cfg, trunc)?;
    let w = ctmc::solve_steady_state(&q, opts)?;
    (1..=n_max)
        .map(|k| {
            let n = ConfirmationPolicy::new(k)?;
            Ok(TradeoffPoint {
                n: k,
                latency: ctmc::latency_breakdown(&w, cfg, n).latency,
                attack_prob: security::attack_success_prob(n, beta, GiveUp::Unbounded),
            })
        })
        .collect()
}
