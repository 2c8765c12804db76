//! Oracles shared by the integration tests, written independently of the library.
#![allow(dead_code)]

use bran::SystemConfig;

/// Pr{wait} in M/M/s from the birth-death balance equations, summed until the tail is negligible.
pub fn erlang_c_birth_death(s: u32, a: f64) -> f64 {
    let mut term = 1.0;
    let mut below = 0.0;
    let mut at_or_above = 0.0;
    let mut k = 0u32;
    loop {
        if k < s {
            below += term;
        } else {
            at_or_above += term;
            if term < 1e-20 * (below + at_or_above) {
                break;
            }
        }
        k += 1;
        term *= a / f64::from(k.min(s));
    }
    at_or_above / (below + at_or_above)
}

/// Dense generator of the truncated chain, built from the transition rules directly.
pub fn dense_toy_generator(cfg: &SystemConfig, i_max: usize, j_max: usize) -> (Vec<(usize, usize)>, Vec<Vec<f64>>) {
    let states: Vec<(usize, usize)> = (0..=i_max).flat_map(|i| (0..=j_max).map(move |j| (i, j))).collect();
    let idx = |i: usize, j: usize| states.iter().position(|&x| x == (i, j));
    let m = states.len();
    let mut q = vec![vec![0.0; m]; m];
    for (from, &(i, j)) in states.iter().enumerate() {
        let mut add = |to: Option<usize>, rate: f64| {
            if let Some(to) = to {
                if rate > 0.0 {
                    q[to][from] += rate;
                    q[from][from] -= rate;
                }
            }
        };
        add(idx(i + 1, j), cfg.lambda_a());
        if i >= 1 {
            add(idx(0, i + j), cfg.lambda_b());
        }
        if j >= 1 {
            add(idx(i, j - 1), j.min(cfg.s() as usize) as f64 * cfg.lambda_c());
        }
    }
    (states, q)
}

/// Solves `Q w = 0, sum w = 1` by Gaussian elimination with partial pivoting.
pub fn dense_steady_state(mut q: Vec<Vec<f64>>) -> Vec<f64> {
    let m = q.len();
    let mut rhs = vec![0.0; m];
    q[m - 1] = vec![1.0; m];
    rhs[m - 1] = 1.0;
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&a, &b| q[a][col].abs().total_cmp(&q[b][col].abs()))
            .unwrap();
        q.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..m {
            let f = q[r][col] / q[col][col];
            let pivot_row = q[col].clone();
            for (x, p) in q[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|c| q[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / q[r][r];
    }
    x
}

/// One-sample Kolmogorov-Smirnov statistic against the exponential CDF.
pub fn ks_exponential(sample: &[f64], rate: f64) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let m = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(k, &v)| {
            let cdf = 1.0 - (-rate * v).exp();
            (((k + 1) as f64 / m) - cdf).max(cdf - k as f64 / m)
        })
        .fold(0.0, f64::max)
}
