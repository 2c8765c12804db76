//! One-confirmation queueing chain.
//!
//! State `E(i, j)`: `i` requests waiting to be packed into a block, `j`
//! confirmed requests either queued for a link or in service. From `E(i, j)`:
//!
//! * an arrival (rate `lambda_a`) moves to `E(i + 1, j)`,
//! * a block (rate `lambda_b`) moves to `E(0, i + j)`,
//! * a service completion (rate `min(j, s) * lambda_c`) moves to `E(i, j - 1)`.
//!
//! The infinite lattice is cut to the box `0..=i_max x 0..=j_max`; transitions
//! that would leave the box are deleted and the diagonal rebalanced, which
//! keeps the truncated matrix a proper generator. States are enumerated along
//! anti-diagonals `d = i + j`, highest `i` first:
//! `E(0,0) | E(1,0) E(0,1) | E(2,0) E(1,1) E(0,2) | ...`.
//!
//! Matrices use the column convention `Q w = 0`: entry `(row, col)` is the rate
//! from state `col` to state `row`, so every column sums to zero.

use std::collections::HashMap;

use log::warn;
use serde::Serialize;

use crate::config::{ConfirmationPolicy, SystemConfig};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QueueState {
    /// Pending requests awaiting block inclusion.
    pub i: usize,
    /// Confirmed requests, waiting or in service.
    pub j: usize,
}

impl QueueState {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }

    pub fn outstanding(&self) -> usize {
        self.i + self.j
    }
}

/// Size of the retained state box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Truncation {
    i_max: usize,
    j_max: usize,
}

impl Truncation {
    /// Requires `1 <= i_max <= j_max`. A block can move every pending request
    /// into the confirmed queue, so `j_max` must be able to hold `i_max`;
    /// otherwise the corner `E(i_max, 0)` has no retained exit.
    pub fn new(i_max: usize, j_max: usize) -> Result<Self> {
        if i_max == 0 {
            return Err(invalid("i_max must be at least 1"));
        }
        if j_max < i_max {
            return Err(invalid(format!("j_max ({j_max}) must be at least i_max ({i_max})")));
        }
        Ok(Self { i_max, j_max })
    }

    /// `i_max = j_max = max(200, 8 s)`.
    pub fn default_for(cfg: &SystemConfig) -> Self {
        let n = 200.max(8 * cfg.s() as usize);
        Self { i_max: n, j_max: n }
    }

    pub fn i_max(&self) -> usize {
        self.i_max
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn doubled(&self) -> Self {
        Self {
            i_max: 2 * self.i_max,
            j_max: 2 * self.j_max,
        }
    }

    pub fn contains(&self, state: QueueState) -> bool {
        state.i <= self.i_max && state.j <= self.j_max
    }

    pub fn on_boundary(&self, state: QueueState) -> bool {
        state.i == self.i_max || state.j == self.j_max
    }

    /// Retained states in anti-diagonal order.
    pub fn states(&self) -> Vec<QueueState> {
        let mut out = Vec::with_capacity((self.i_max + 1) * (self.j_max + 1));
        for d in 0..=(self.i_max + self.j_max) {
            let hi = d.min(self.i_max);
            let lo = d.saturating_sub(self.j_max);
            for i in (lo..=hi).rev() {
                out.push(QueueState::new(i, d - i));
            }
        }
        out
    }
}

/// Sparse generator of the truncated chain.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    cfg: SystemConfig,
    trunc: Truncation,
    states: Vec<QueueState>,
    // (i * (j_max + 1) + j) -> position in `states`
    position: Vec<u32>,
    diag: Vec<f64>,
    // Off-diagonal entries grouped by row (destination state).
    row_start: Vec<usize>,
    cols: Vec<u32>,
    rates: Vec<f64>,
}

/// Outgoing transitions of one state, restricted to the box. Block arrivals at
/// `i = 0` are self-loops and are left out.
fn retained_transitions(cfg: &SystemConfig, trunc: &Truncation, x: QueueState) -> Vec<(QueueState, f64)> {
    let mut out = Vec::with_capacity(3);
    if x.i < trunc.i_max {
        out.push((QueueState::new(x.i + 1, x.j), cfg.lambda_a()));
    }
    if x.i >= 1 && x.i + x.j <= trunc.j_max {
        out.push((QueueState::new(0, x.i + x.j), cfg.lambda_b()));
    }
    if x.j >= 1 {
        out.push((QueueState::new(x.i, x.j - 1), cfg.service_completion_rate(x.j)));
    }
    out
}

/// Assembles the generator for `cfg` on the box `trunc`.
pub fn build_generator(cfg: &SystemConfig, trunc: Truncation) -> Result<GeneratorMatrix> {
    if trunc.j_max < cfg.s() as usize {
        return Err(invalid(format!(
            "j_max ({}) must be at least s ({})",
            trunc.j_max,
            cfg.s()
        )));
    }
    let states = trunc.states();
    let n = states.len();
    if n > u32::MAX as usize {
        return Err(invalid("truncation too large"));
    }
    let width = trunc.j_max + 1;
    let mut position = vec![0u32; (trunc.i_max + 1) * width];
    for (k, x) in states.iter().enumerate() {
        position[x.i * width + x.j] = k as u32;
    }

    let mut diag = vec![0.0; n];
    let mut triplets: Vec<(u32, u32, f64)> = Vec::with_capacity(3 * n);
    for (from, &x) in states.iter().enumerate() {
        for (y, rate) in retained_transitions(cfg, &trunc, x) {
            let to = position[y.i * width + y.j];
            triplets.push((to, from as u32, rate));
            diag[from] -= rate;
        }
    }
    triplets.sort_unstable_by_key(|&(to, from, _)| (to, from));

    let mut row_start = vec![0usize; n + 1];
    for &(to, _, _) in &triplets {
        row_start[to as usize + 1] += 1;
    }
    for k in 0..n {
        row_start[k + 1] += row_start[k];
    }
    let cols = triplets.iter().map(|t| t.1).collect();
    let rates = triplets.iter().map(|t| t.2).collect();

    Ok(GeneratorMatrix {
        cfg: *cfg,
        trunc,
        states,
        position,
        diag,
        row_start,
        cols,
        rates,
    })
}

impl GeneratorMatrix {
    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    /// Retained states, in matrix order.
    pub fn states(&self) -> &[QueueState] {
        &self.states
    }

    pub fn index_of(&self, x: QueueState) -> Option<usize> {
        self.trunc
            .contains(x)
            .then(|| self.position[x.i * (self.trunc.j_max + 1) + x.j] as usize)
    }

    pub fn diagonal(&self, k: usize) -> f64 {
        self.diag[k]
    }

    /// Number of stored entries, diagonal included.
    pub fn nnz(&self) -> usize {
        self.rates.len() + self.diag.len()
    }

    /// All stored entries as `(row, col, value)`, diagonal included.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let off = (0..self.dimension()).flat_map(move |row| {
            (self.row_start[row]..self.row_start[row + 1]).map(move |k| (row, self.cols[k] as usize, self.rates[k]))
        });
        off.chain(self.diag.iter().enumerate().map(|(k, &d)| (k, k, d)))
    }

    /// Outgoing transitions of `x` with their rates.
    pub fn transitions_from(&self, x: QueueState) -> HashMap<QueueState, f64> {
        retained_transitions(&self.cfg, &self.trunc, x).into_iter().collect()
    }

    /// `Q w`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        (0..self.dimension())
            .map(|row| self.row_dot(row, w) + self.diag[row] * w[row])
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = self.diag.clone();
        for (k, &c) in self.cols.iter().enumerate() {
            sums[c as usize] += self.rates[k];
        }
        sums
    }

    /// Dense copy, `out[row][col]`. Meant for small truncations.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dimension();
        let mut out = vec![vec![0.0; n]; n];
        for (r, c, v) in self.entries() {
            out[r][c] += v;
        }
        out
    }

    #[inline]
    fn row_dot(&self, row: usize, w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in self.row_start[row]..self.row_start[row + 1] {
            acc += self.rates[k] * w[self.cols[k] as usize];
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Required `||Q w||_inf`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Refuse to report when more mass than this sits on the box edge; `None` disables the check.
    pub max_boundary_mass: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 1_000_000,
            max_boundary_mass: Some(1e-8),
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Steady-state probabilities over the retained states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateDistribution {
    states: Vec<QueueState>,
    probabilities: Vec<f64>,
    truncation: Truncation,
    residual: f64,
    boundary_mass: f64,
    sweeps: usize,
}

/// Solves `Q w = 0`, `sum(w) = 1` by Gauss-Seidel sweeps in anti-diagonal order.
///
/// Arrivals and service completions only link neighbouring anti-diagonals and
/// block events stay on the same one, so sweeping in this order propagates
/// mass along the dominant flow of the chain.
pub fn solve_steady_state(q: &GeneratorMatrix, opts: &SolverOptions) -> Result<StateDistribution> {
    q.cfg.require_stable()?;
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(invalid("solver tolerance must be positive"));
    }
    let n = q.dimension();
    let mut w: Vec<f64> = q
        .states
        .iter()
        .map(|x| 0.5f64.powi(x.outstanding().min(1000) as i32))
        .collect();
    normalize(&mut w);

    let check_every = 8;
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        for row in 0..n {
            w[row] = q.row_dot(row, &w) / -q.diag[row];
        }
        normalize(&mut w);
        sweeps += 1;
        if sweeps % check_every == 0 || sweeps == opts.max_sweeps {
            residual = residual_inf(q, &w);
            if residual <= opts.tol {
                break;
            }
        }
    }
    if residual > opts.tol {
        return Err(Error::NonConvergence {
            iterations: sweeps,
            residual,
        });
    }

    let trunc = q.trunc;
    let boundary_mass = q
        .states
        .iter()
        .zip(&w)
        .filter(|(x, _)| trunc.on_boundary(**x))
        .map(|(_, p)| p)
        .sum();
    if let Some(limit) = opts.max_boundary_mass {
        if boundary_mass > limit {
            return Err(Error::UnderTruncated { boundary_mass, limit });
        }
    }
    Ok(StateDistribution {
        states: q.states.clone(),
        probabilities: w,
        truncation: trunc,
        residual,
        boundary_mass,
        sweeps,
    })
}

fn normalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|p| *p /= total);
}

fn residual_inf(q: &GeneratorMatrix, w: &[f64]) -> f64 {
    q.apply(w).into_iter().fold(0.0, |m, r| m.max(r.abs()))
}

impl StateDistribution {
    /// All mass on one state; mostly useful for checking the moment functions.
    pub fn point_mass(state: QueueState, truncation: Truncation) -> Result<Self> {
        if !truncation.contains(state) {
            return Err(invalid("state outside the truncation"));
        }
        let states = truncation.states();
        let probabilities = states.iter().map(|&x| if x == state { 1.0 } else { 0.0 }).collect();
        Ok(Self {
            states,
            probabilities,
            truncation,
            residual: 0.0,
            boundary_mass: if truncation.on_boundary(state) { 1.0 } else { 0.0 },
            sweeps: 0,
        })
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Mass on states with `i = i_max` or `j = j_max`.
    pub fn boundary_mass(&self) -> f64 {
        self.boundary_mass
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn get(&self, x: QueueState) -> f64 {
        if !self.truncation.contains(x) {
            return 0.0;
        }
        // Position in anti-diagonal order.
        let d = x.i + x.j;
        let tr = &self.truncation;
        let mut k = 0;
        for e in 0..d {
            k += e.min(tr.i_max) - e.saturating_sub(tr.j_max) + 1;
        }
        k += d.min(tr.i_max) - x.i;
        self.probabilities[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = (QueueState, f64)> + '_ {
        self.states.iter().copied().zip(self.probabilities.iter().copied())
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// `E[i + j]`.
    pub fn mean_outstanding(&self) -> f64 {
        self.iter().map(|(x, p)| x.outstanding() as f64 * p).sum()
    }

    /// Distribution of the number of pending requests.
    pub fn marginal_pending(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.truncation.i_max + 1];
        for (x, p) in self.iter() {
            out[x.i] += p;
        }
        out
    }

    /// Distribution of the number of confirmed requests.
    pub fn marginal_confirmed(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.truncation.j_max + 1];
        for (x, p) in self.iter() {
            out[x.j] += p;
        }
        out
    }
}

/// `E[i + j]` under `w`.
pub fn mean_outstanding(w: &StateDistribution) -> f64 {
    w.mean_outstanding()
}

/// Latency figures derived from one steady-state solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyBreakdown {
    pub mean_outstanding: f64,
    /// Mean time in system with one confirmation, service included.
    pub sojourn: f64,
    /// Mean wait before service starts with `n` confirmations.
    pub latency: f64,
}

/// Little's law on the one-confirmation chain, then `T_b` per extra confirmation:
/// `L(N) = T_a * E[i + j] + T_b (N - 1) - T_c`.
pub fn latency_breakdown(w: &StateDistribution, cfg: &SystemConfig, n: ConfirmationPolicy) -> LatencyBreakdown {
    let mean = w.mean_outstanding();
    let sojourn = cfg.t_a() * mean;
    let raw = sojourn + cfg.t_b() * f64::from(n.get() - 1) - cfg.t_c();
    let latency = if raw < 0.0 {
        if raw < -1e-9 {
            warn!("latency {raw} is unexpectedly negative; clamping to 0");
        } else {
            warn!("clamping latency {raw} to 0");
        }
        0.0
    } else {
        raw
    };
    LatencyBreakdown {
        mean_outstanding: mean,
        sojourn,
        latency,
    }
}

/// The alternative one-confirmation expression `T_a * E[i + (j - 1)^+]`.
///
/// It agrees with [`latency_breakdown`] only when a single link is in use
/// (`s = 1`); with more links it subtracts one request instead of the mean
/// number in service.
pub fn alternative_latency(w: &StateDistribution, cfg: &SystemConfig) -> f64 {
    let mass: f64 = w.iter().map(|(x, p)| (x.i + x.j.saturating_sub(1)) as f64 * p).sum();
    cfg.t_a() * mass
}

/// Mean latency with `n` confirmations.
pub fn expected_latency(
    n: ConfirmationPolicy,
    cfg: &SystemConfig,
    trunc: Truncation,
    opts: &SolverOptions,
) -> Result<f64> {
    let q = build_generator(cfg, trunc)?;
    let w = solve_steady_state(&q, opts)?;
    Ok(latency_breakdown(&w, cfg, n).latency)
}
