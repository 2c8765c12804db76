//! System configuration and the shared domain types.
//!
//! Times are measured in units of the mean service time `1/lambda_c`; with the
//! default `lambda_c = 1` every latency reported by this crate is relative to
//! one service time.

use std::fmt;
use std::num::NonZeroU32;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// The four rates and link count that fully determine the queueing model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemConfig {
    lambda_a: f64,
    lambda_b: f64,
    lambda_c: f64,
    s: u32,
}

fn positive_rate(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(format!("{name} must be a positive finite rate, got {value}")))
    }
}

impl SystemConfig {
    /// `lambda_a`: request arrival rate, `lambda_b`: block generation rate,
    /// `lambda_c`: per-link service rate, `s`: number of access links.
    pub fn new(lambda_a: f64, lambda_b: f64, lambda_c: f64, s: u32) -> Result<Self> {
        if s == 0 {
            return Err(invalid("s must be at least 1"));
        }
        Ok(Self {
            lambda_a: positive_rate("lambda_a", lambda_a)?,
            lambda_b: positive_rate("lambda_b", lambda_b)?,
            lambda_c: positive_rate("lambda_c", lambda_c)?,
            s,
        })
    }

    /// Builds a configuration from a target traffic intensity, with
    /// `lambda_a = rho * s * lambda_c`.
    pub fn from_intensity(rho: f64, lambda_b: f64, lambda_c: f64, s: u32) -> Result<Self> {
        Self::new(rho * f64::from(s) * lambda_c, lambda_b, lambda_c, s)
    }

    pub fn lambda_a(&self) -> f64 {
        self.lambda_a
    }

    pub fn lambda_b(&self) -> f64 {
        self.lambda_b
    }

    pub fn lambda_c(&self) -> f64 {
        self.lambda_c
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    /// Mean request inter-arrival time.
    pub fn t_a(&self) -> f64 {
        1.0 / self.lambda_a
    }

    /// Mean block time.
    pub fn t_b(&self) -> f64 {
        1.0 / self.lambda_b
    }

    /// Mean service time.
    pub fn t_c(&self) -> f64 {
        1.0 / self.lambda_c
    }

    /// `rho = lambda_a / (s * lambda_c)`.
    pub fn traffic_intensity(&self) -> f64 {
        self.lambda_a / (f64::from(self.s) * self.lambda_c)
    }

    pub fn is_stable(&self) -> bool {
        self.traffic_intensity() < 1.0
    }

    pub(crate) fn require_stable(&self) -> Result<()> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::UnstableConfig {
                rho: self.traffic_intensity(),
            })
        }
    }

    /// Total completion rate with `j` confirmed requests present: `min(j, s) * lambda_c`.
    pub fn service_completion_rate(&self, j: usize) -> f64 {
        let busy = j.min(self.s as usize);
        busy as f64 * self.lambda_c
    }

    pub fn with_lambda_a(self, lambda_a: f64) -> Result<Self> {
        Self::new(lambda_a, self.lambda_b, self.lambda_c, self.s)
    }
}

/// Number of block confirmations a request needs before it may be served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ConfirmationPolicy(NonZeroU32);

impl ConfirmationPolicy {
    pub fn new(n: u32) -> Result<Self> {
        NonZeroU32::new(n)
            .map(Self)
            .ok_or_else(|| invalid("n_confirmations must be at least 1"))
    }

    pub fn get(&self) -> u32 {
        self.0.get()
    }
}

impl Default for ConfirmationPolicy {
    fn default() -> Self {
        Self(NonZeroU32::MIN)
    }
}

/// How far behind the attacker's fork may fall before the attack is abandoned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GiveUp {
    /// Abandon once the fork is exactly this many blocks behind (at least 1).
    Finite(u64),
    /// Never abandon.
    Unbounded,
}

impl GiveUp {
    pub fn finite(n_g: u64) -> Result<Self> {
        if n_g == 0 {
            Err(invalid(
                "give_up must be at least 1 (use Unbounded for an attacker that never quits)",
            ))
        } else {
            Ok(GiveUp::Finite(n_g))
        }
    }

    /// `None` maps to `Unbounded`, which is how the JSON config spells it.
    pub fn from_option(n_g: Option<u64>) -> Result<Self> {
        match n_g {
            Some(n) => Self::finite(n),
            None => Ok(GiveUp::Unbounded),
        }
    }

    pub fn as_option(&self) -> Option<u64> {
        match *self {
            GiveUp::Finite(n) => Some(n),
            GiveUp::Unbounded => None,
        }
    }
}

impl fmt::Display for GiveUp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GiveUp::Finite(n) => write!(f, "{n}"),
            GiveUp::Unbounded => f.write_str("inf"),
        }
    }
}

/// Attacker hash power relative to the honest network, plus its give-up rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackerProfile {
    beta: f64,
    give_up: GiveUp,
}

impl AttackerProfile {
    pub fn new(beta: f64, give_up: GiveUp) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(invalid(format!("beta must be a nonnegative finite number, got {beta}")));
        }
        if give_up == GiveUp::Finite(0) {
            return Err(invalid("give_up must be at least 1"));
        }
        Ok(Self { beta, give_up })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn give_up(&self) -> GiveUp {
        self.give_up
    }
}
