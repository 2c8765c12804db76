//! Double-spend (alternative history) attack.
//!
//! The attacker mines a private fork at rate `beta * lambda_b` while the honest
//! network mines at `lambda_b`, so each new block is the attacker's with
//! probability `beta / (1 + beta)`. While the honest chain collects `N`
//! confirmations the attacker finds a negative-binomial number of blocks;
//! afterwards the deficit performs a gambler's-ruin walk that ends in success
//! once the fork is strictly longer, or in failure once it is `N_g` blocks
//! behind.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfirmationPolicy, GiveUp};
use crate::error::{invalid, Error, Result};
use crate::rng::{self, SimRng};

/// Below this distance from 1, `beta` takes the `beta = 1` branch.
const UNIT_BETA_EPS: f64 = 1e-9;

/// Deficit at which an unbounded attacker with `beta < 1` is counted as failed
/// in simulation. The bias this introduces is below `beta^10000`.
pub const UNBOUNDED_DEFICIT_CUTOFF: u64 = 10_000;

/// Step budget for one simulated race when the walk has no upper barrier.
pub const UNBOUNDED_STEP_HORIZON: u64 = 100_000_000;

fn is_unit(beta: f64) -> bool {
    (beta - 1.0).abs() < UNIT_BETA_EPS
}

/// `Pr{Y = n}` for `Y ~ NB(N, 1/(1+beta))`: attacker blocks found while the
/// honest chain grows by `N`.
pub fn neg_binom_pmf(n: u64, confirmations: u32, beta: f64) -> f64 {
    debug_assert!(confirmations >= 1 && beta >= 0.0);
    if beta == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let big_n = f64::from(confirmations);
    // ln C(n + N - 1, n), accumulated term by term.
    let mut ln_binom = 0.0;
    for k in 1..=n {
        ln_binom += ((big_n - 1.0 + k as f64) / k as f64).ln();
    }
    let ln_honest = -beta.ln_1p();
    let ln_attacker = beta.ln() - beta.ln_1p();
    (ln_binom + big_n * ln_honest + n as f64 * ln_attacker).exp()
}

/// `expm1(a) / expm1(b)` for `a <= b` of the same sign, without overflow.
fn expm1_ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        (a - b).exp() * (-a).exp_m1() / (-b).exp_m1()
    } else {
        a.exp_m1() / b.exp_m1()
    }
}

/// `P_n`: probability that an attacker `n` blocks behind eventually pulls ahead.
pub fn catchup_prob(n: i64, beta: f64, give_up: GiveUp) -> f64 {
    if n < 0 {
        return 1.0;
    }
    match give_up {
        GiveUp::Unbounded => {
            if beta < 1.0 {
                beta.powf(n as f64 + 1.0)
            } else {
                1.0
            }
        }
        GiveUp::Finite(n_g) => {
            let n_g = n_g as i64;
            if n >= n_g {
                return 0.0;
            }
            if beta == 0.0 {
                return 0.0;
            }
            if is_unit(beta) {
                return (n_g - n) as f64 / (n_g + 1) as f64;
            }
            // (beta^{n+1} - beta^{Ng+1}) / (1 - beta^{Ng+1})
            let l = beta.ln();
            let (a, b) = (((n_g - n) as f64) * l, ((n_g + 1) as f64) * l);
            if beta < 1.0 {
                ((n + 1) as f64 * l).exp() * expm1_ratio(a, b)
            } else {
                (-a).exp_m1() / (-b).exp_m1()
            }
        }
    }
}

/// `1 - P_m` for `0 <= m`, i.e. the bracketed factor of the closed form.
fn failure_factor(m: u64, beta: f64, give_up: GiveUp) -> f64 {
    match give_up {
        GiveUp::Unbounded => {
            if beta < 1.0 {
                -((m as f64 + 1.0) * beta.ln()).exp_m1()
            } else {
                0.0
            }
        }
        GiveUp::Finite(n_g) => {
            if m >= n_g {
                return 1.0;
            }
            if is_unit(beta) {
                return (m + 1) as f64 / (n_g + 1) as f64;
            }
            // (1 - beta^{m+1}) / (1 - beta^{Ng+1})
            let l = beta.ln();
            expm1_ratio((m as f64 + 1.0) * l, (n_g as f64 + 1.0) * l)
        }
    }
}

/// Probability that the attack succeeds:
/// `1 - sum_{n=0}^{N} Pr{Y = n} (1 - P_{N-n})`, which for `N <= N_g` is the
/// familiar closed form with the factor `(1 - beta^{N-n+1}) / (1 - beta^{N_g+1})`
/// (or `(N-n+1)/(N_g+1)` at `beta = 1`), and its `N_g -> infinity` limit when
/// the attacker never gives up.
pub fn attack_success_prob(n: ConfirmationPolicy, beta: f64, give_up: GiveUp) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    if give_up == GiveUp::Unbounded && beta >= 1.0 {
        return 1.0;
    }
    let big_n = n.get();
    let safe: f64 = (0..=u64::from(big_n))
        .map(|k| neg_binom_pmf(k, big_n, beta) * failure_factor(u64::from(big_n) - k, beta, give_up))
        .sum();
    (1.0 - safe).clamp(0.0, 1.0)
}

/// The same probability from the raw series `sum_n Pr{Y = n} P_{N-n}`, summed
/// until the remaining negative-binomial mass is below `1e-12`.
pub fn attack_success_prob_series(n: ConfirmationPolicy, beta: f64, give_up: GiveUp) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let big_n = n.get();
    let q = beta / (1.0 + beta);
    let mut pmf = neg_binom_pmf(0, big_n, beta);
    let mut mass = 0.0;
    let mut total = 0.0;
    let mut k: u64 = 0;
    while 1.0 - mass >= 1e-12 && k < 100_000_000 {
        total += pmf * catchup_prob(i64::from(big_n) - k as i64, beta, give_up);
        mass += pmf;
        pmf *= (k as f64 + f64::from(big_n)) / (k as f64 + 1.0) * q;
        k += 1;
        if pmf == 0.0 {
            break;
        }
    }
    total
}

/// One simulated attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RaceOutcome {
    pub success: bool,
    /// Attacker blocks mined during the trial.
    pub blocks_spent: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaceSummary {
    pub trials: u64,
    pub successes: u64,
    pub outcomes: Vec<RaceOutcome>,
}

impl RaceSummary {
    pub fn probability(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// `3 sqrt(p (1 - p) / trials)` at probability `p`.
    pub fn three_sigma(p: f64, trials: u64) -> f64 {
        3.0 * (p * (1.0 - p) / trials as f64).sqrt()
    }
}

/// Trials per independently seeded lane. Fixed so that results do not depend
/// on the thread count.
const LANE_TRIALS: u64 = 1 << 14;

/// Monte-Carlo estimate of the attack success probability.
///
/// Phase one draws the attacker's head start block by block until the honest
/// chain has `N` blocks. Phase two walks the deficit; stretches that cannot
/// reach either barrier are advanced with a single binomial draw, which is an
/// exact simulation of the step-by-step walk.
pub fn simulate_attack_race(
    n: ConfirmationPolicy,
    beta: f64,
    give_up: GiveUp,
    trials: u64,
    seed: u64,
) -> Result<RaceSummary> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid("simulation needs beta > 0"));
    }
    if give_up == GiveUp::Finite(0) {
        return Err(invalid("give_up must be at least 1"));
    }
    let lanes = trials.div_ceil(LANE_TRIALS);
    let per_lane: Vec<Result<Vec<RaceOutcome>>> = (0..lanes)
        .into_par_iter()
        .map(|lane| {
            let count = LANE_TRIALS.min(trials - lane * LANE_TRIALS);
            let mut rng = rng::seeded(seed, lane);
            (0..count)
                .map(|_| race_once(n.get(), beta, give_up, &mut rng))
                .collect()
        })
        .collect();
    let mut outcomes = Vec::with_capacity(trials as usize);
    for lane in per_lane {
        outcomes.extend(lane?);
    }
    let successes = outcomes.iter().filter(|o| o.success).count() as u64;
    Ok(RaceSummary {
        trials,
        successes,
        outcomes,
    })
}

fn race_once(confirmations: u32, beta: f64, give_up: GiveUp, rng: &mut SimRng) -> Result<RaceOutcome> {
    let q = beta / (1.0 + beta);
    let mut attacker: u64 = 0;
    let mut honest: u32 = 0;
    while honest < confirmations {
        if rng.random::<f64>() < q {
            attacker += 1;
        } else {
            honest += 1;
        }
    }

    // Upper barrier where the attack counts as failed, if any.
    let ceiling: Option<i64> = match give_up {
        GiveUp::Finite(n_g) => Some(n_g as i64),
        GiveUp::Unbounded if beta < 1.0 => Some(UNBOUNDED_DEFICIT_CUTOFF as i64),
        GiveUp::Unbounded => None,
    };
    let mut deficit = i64::from(confirmations) - attacker as i64;
    let mut steps: u64 = 0;
    loop {
        if deficit < 0 {
            return Ok(RaceOutcome {
                success: true,
                blocks_spent: attacker,
            });
        }
        if ceiling.is_some_and(|c| deficit >= c) {
            return Ok(RaceOutcome {
                success: false,
                blocks_spent: attacker,
            });
        }
        if ceiling.is_none() && steps >= UNBOUNDED_STEP_HORIZON {
            return Err(Error::HorizonExceeded(UNBOUNDED_STEP_HORIZON));
        }
        // Steps that can neither reach -1 nor the ceiling.
        let room = match ceiling {
            Some(c) => deficit.min(c - 1 - deficit),
            None => deficit.min((UNBOUNDED_STEP_HORIZON - steps) as i64),
        };
        if room >= 2 {
            let k = room as u64;
            let down = Binomial::new(k, q).expect("q is a probability").sample(rng);
            attacker += down;
            deficit += k as i64 - 2 * down as i64;
            steps += k;
        } else {
            if rng.random::<f64>() < q {
                attacker += 1;
                deficit -= 1;
            } else {
                deficit += 1;
            }
            steps += 1;
        }
    }
}
