//! Hash-based block generation.
//!
//! Each hash trial succeeds independently with a tiny probability, so the
//! number of failed trials before a block is geometric. Letting the trial rate
//! grow while the success rate `lambda_b` stays fixed turns block times into
//! exponential variates and block epochs into a Poisson process; the
//! simulator only ever uses that limit.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::rng::{self, SimRng};

/// `Pr{W >= m} = (1 - p)^m` for the number of failed trials `W` before the first success.
pub fn geometric_tail(p: f64, m: u64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("success probability must be in (0, 1], got {p}")));
    }
    if m == 0 {
        return Ok(1.0);
    }
    // ln_1p keeps precision for the tiny p of realistic puzzles.
    Ok(((m as f64) * (-p).ln_1p()).exp())
}

/// `Pr{U > tau} = exp(-rate * tau)` for an exponential block time.
pub fn block_time_tail(rate: f64, tau: f64) -> f64 {
    (-rate * tau).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockCount {
    Zero,
    ExactlyOne,
    TwoOrMore,
}

/// Probability of seeing the given number of blocks in an interval of length `h`.
pub fn interval_block_count_prob(rate: f64, h: f64, kind: BlockCount) -> f64 {
    let x = rate * h;
    let none = (-x).exp();
    match kind {
        BlockCount::Zero => none,
        BlockCount::ExactlyOne => x * none,
        // 1 - (1 + x) e^{-x}, written to avoid cancellation for small x.
        BlockCount::TwoOrMore => {
            let v = -(-x).exp_m1() - x * none;
            v.max(0.0)
        }
    }
}

/// Poisson block generation with rate `lambda_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiningProcess {
    rate: f64,
}

impl MiningProcess {
    pub fn new(rate: f64) -> Result<Self> {
        if rate.is_finite() && rate > 0.0 {
            Ok(Self { rate })
        } else {
            Err(invalid(format!("block rate must be positive, got {rate}")))
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Average block time `1 / rate`.
    pub fn mean_block_time(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn next_block_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng::exponential(rng, self.rate)
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<BlockTimeSample> {
        if count == 0 {
            return Err(invalid("block count must be at least 1"));
        }
        let durations = (0..count).map(|_| self.next_block_time(rng)).collect();
        Ok(BlockTimeSample { durations })
    }
}

/// Draws `count` block times from a fresh generator for `seed`.
pub fn sample_block_times(process: &MiningProcess, count: usize, seed: u64) -> Result<BlockTimeSample> {
    let mut rng: SimRng = rng::seeded(seed, 0);
    process.sample(count, &mut rng)
}

/// Ordered inter-block times; all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTimeSample {
    durations: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

impl BlockTimeSample {
    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.durations.iter().sum::<f64>() / self.durations.len() as f64
    }

    /// Block epochs, i.e. running sums of the durations.
    pub fn epochs(&self) -> Vec<f64> {
        self.durations
            .iter()
            .scan(0.0, |t, d| {
                *t += d;
                Some(*t)
            })
            .collect()
    }

    /// Equal-width histogram over `[0, max]`.
    pub fn histogram(&self, bins: usize) -> Result<Vec<HistogramBin>> {
        if bins == 0 {
            return Err(invalid("histogram needs at least one bin"));
        }
        let max = self.durations.iter().cloned().fold(0.0, f64::max);
        let width = max / bins as f64;
        let mut counts = vec![0usize; bins];
        for &d in &self.durations {
            let k = ((d / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Ok(counts
            .into_iter()
            .enumerate()
            .map(|(k, count)| HistogramBin {
                left: k as f64 * width,
                right: if k + 1 == bins { max } else { (k + 1) as f64 * width },
                count,
            })
            .collect())
    }
}
