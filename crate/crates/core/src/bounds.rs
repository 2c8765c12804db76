//! Closed-form latency bounds.
//!
//! * upper: one request per block, so packing is an M/M/1 queue served at
//!   `lambda_b`, followed by an M/M/s queue for the links;
//! * `lower_mms`: packing is instantaneous and only the M/M/s wait remains;
//! * `lower_block`: the service wait is dropped and only block waits remain.
//!
//! All three add `(N - 1) / lambda_b` for the extra confirmations.

use serde::{Serialize, Serializer};

use crate::config::{ConfirmationPolicy, SystemConfig};
use crate::error::{invalid, Result};

/// Probability that an arrival to an M/M/s queue with offered load `a` has to wait.
///
/// Uses the Erlang-B recursion `B(k) = a B(k-1) / (k + a B(k-1))`, `B(0) = 1`,
/// then `C = s B / (s - a (1 - B))`; no factorials, so large `s` is fine.
pub fn erlang_c(s: u32, a: f64) -> Result<f64> {
    if s == 0 {
        return Err(invalid("erlang_c needs s >= 1"));
    }
    if !(a.is_finite() && a >= 0.0) {
        return Err(invalid(format!("offered load must be nonnegative, got {a}")));
    }
    let servers = f64::from(s);
    if a >= servers {
        return Err(invalid(format!("offered load {a} >= {s} servers: queue is unstable")));
    }
    let mut b = 1.0;
    for k in 1..=s {
        b = a * b / (f64::from(k) + a * b);
    }
    let c = servers * b / (servers - a * (1.0 - b));
    Ok(c.clamp(0.0, 1.0))
}

/// Mean queueing delay (service excluded) of an M/M/s queue.
pub fn mms_mean_wait(s: u32, lambda: f64, mu: f64) -> Result<f64> {
    let c = erlang_c(s, lambda / mu)?;
    Ok(c / (f64::from(s) * mu - lambda))
}

/// A latency bound that may be infinite. Serializes to `null` when unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            Bound::Finite(v) => Some(v),
            Bound::Unbounded => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Bound::Finite(_))
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.finite().serialize(serializer)
    }
}

fn extra_confirmations(n: ConfirmationPolicy, cfg: &SystemConfig) -> f64 {
    f64::from(n.get() - 1) / cfg.lambda_b()
}

/// `1/(lambda_b - lambda_a) + C(s, lambda_a/lambda_c)/(s lambda_c - lambda_a) + (N-1)/lambda_b`,
/// or [`Bound::Unbounded`] when blocks are not faster than arrivals.
pub fn latency_upper(n: ConfirmationPolicy, cfg: &SystemConfig) -> Result<Bound> {
    let lower = latency_lower_mms(n, cfg)?;
    if cfg.lambda_b() <= cfg.lambda_a() {
        return Ok(Bound::Unbounded);
    }
    Ok(Bound::Finite(1.0 / (cfg.lambda_b() - cfg.lambda_a()) + lower))
}

/// `C(s, lambda_a/lambda_c)/(s lambda_c - lambda_a) + (N-1)/lambda_b`.
pub fn latency_lower_mms(n: ConfirmationPolicy, cfg: &SystemConfig) -> Result<f64> {
    cfg.require_stable()?;
    Ok(mms_mean_wait(cfg.s(), cfg.lambda_a(), cfg.lambda_c())? + extra_confirmations(n, cfg))
}

/// `N / lambda_b`, independent of the arrival rate.
pub fn latency_lower_block(n: ConfirmationPolicy, cfg: &SystemConfig) -> f64 {
    f64::from(n.get()) / cfg.lambda_b()
}

/// Stationary probability of `i` pending requests:
/// `lambda_b/(lambda_a+lambda_b) * (lambda_a/(lambda_a+lambda_b))^i`.
pub fn pending_count_pmf(cfg: &SystemConfig, i: u32) -> f64 {
    let total = cfg.lambda_a() + cfg.lambda_b();
    let ratio = cfg.lambda_a() / total;
    cfg.lambda_b() / total * ratio.powi(i as i32)
}

/// The three bounds side by side, in output order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyBounds {
    pub lower_block: f64,
    pub lower_mms: f64,
    pub upper: Bound,
}

pub fn latency_bounds(n: ConfirmationPolicy, cfg: &SystemConfig) -> Result<LatencyBounds> {
    Ok(LatencyBounds {
        lower_block: latency_lower_block(n, cfg),
        lower_mms: latency_lower_mms(n, cfg)?,
        upper: latency_upper(n, cfg)?,
    })
}
