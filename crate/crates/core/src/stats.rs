//! Output analysis for simulation runs.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};

/// Number of batches used for batch-means confidence intervals.
pub const BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Half-width of the two-sided 95% interval.
    pub ci95_halfwidth: f64,
}

impl MeanEstimate {
    pub fn contains(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.ci95_halfwidth
    }
}

/// Two-sided 95% Student-t quantile with `df` degrees of freedom.
pub fn t_quantile_975(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(0.975)
}

/// Batch-means estimate over `values` in observation order.
///
/// The mean is taken over every value; the interval comes from `batches`
/// consecutive equal batches (any remainder after the last full batch only
/// enters the mean) and the t distribution on `batches - 1` degrees of freedom.
pub fn batch_means(values: &[f64], batches: usize) -> Result<MeanEstimate> {
    if batches < 2 {
        return Err(invalid("batch means needs at least two batches"));
    }
    let needed = 2 * batches;
    if values.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: values.len(),
        });
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let size = values.len() / batches;
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    let ci95_halfwidth = t_quantile_975(batches - 1) * (var / batches as f64).sqrt();
    Ok(MeanEstimate { mean, ci95_halfwidth })
}

/// Least-squares slope of `y` against `x`.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
