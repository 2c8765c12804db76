//! Discrete-event simulation of the access workflow for any number of
//! confirmations.
//!
//! A request passes through four stages: it waits for the next block, collects
//! confirmations, waits in a FIFO queue for a free link and is served. Three
//! exponential clocks drive the run: arrivals, block epochs and one service
//! clock per busy link. Blocks have no size limit, so every pending request
//! goes into the next block, and propagation delay is zero.
//!
//! Arrivals, block times and service times come from separate streams of the
//! same seed, so runs that differ only in the number of confirmations see
//! identical input sequences.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};

use log::warn;
use serde::Serialize;

use crate::config::{ConfirmationPolicy, SystemConfig};
use crate::ctmc::QueueState;
use crate::error::{invalid, Result};
use crate::rng::{self, SimRng};
use crate::stats::{self, MeanEstimate};

const ARRIVAL_STREAM: u64 = 1;
const BLOCK_STREAM: u64 = 2;
const SERVICE_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Request {
    pub id: u64,
    pub arrival_time: f64,
    /// Blocks on top of (and including) the one holding the request; stops at N.
    pub confirmations: u32,
    /// When the N-th confirmation arrived.
    pub confirmed_at: Option<f64>,
    pub service_start: Option<f64>,
    pub service_end: Option<f64>,
}

impl Request {
    /// Wait before service (stages one to three).
    pub fn latency(&self) -> Option<f64> {
        self.service_start.map(|t| t - self.arrival_time)
    }

    /// Time in system, service included.
    pub fn sojourn(&self) -> Option<f64> {
        self.service_end.map(|t| t - self.arrival_time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Completed requests to record after the warm-up.
    pub served_target: u64,
    /// Completions discarded before recording starts, as a fraction of `served_target`.
    pub warmup_fraction: f64,
    pub seed: u64,
    /// Keep full per-request records of the recorded requests.
    pub keep_requests: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            served_target: 100_000,
            warmup_fraction: 0.1,
            seed: 0,
            keep_requests: false,
        }
    }
}

impl SimOptions {
    pub fn new(served_target: u64, seed: u64) -> Self {
        Self {
            served_target,
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Waiting times (service start minus arrival), in completion order.
    pub latencies: Vec<f64>,
    /// Times in system, in completion order.
    pub sojourns: Vec<f64>,
    /// Recorded requests, present when `keep_requests` was set.
    pub requests: Vec<Request>,
    /// Time spent in each `(pending, confirmed)` state after warm-up; one-confirmation runs only.
    pub occupancy: Option<BTreeMap<QueueState, f64>>,
    pub served_count: u64,
    /// Simulated time after warm-up.
    pub horizon: f64,
    pub mean_latency: f64,
    /// `None` when too few requests were served for batch means.
    pub ci95_halfwidth: Option<f64>,
    /// Time-average number of requests in the system after warm-up.
    pub mean_in_system: f64,
    pub arrivals: u64,
    pub completed_total: u64,
    pub in_system_at_end: u64,
    /// Largest number of simultaneously busy links seen.
    pub max_busy: usize,
    pub unstable: bool,
}

impl SimResult {
    pub fn mean_sojourn(&self) -> f64 {
        self.sojourns.iter().sum::<f64>() / self.sojourns.len() as f64
    }

    /// Occupancy normalised to a probability distribution.
    pub fn occupancy_distribution(&self) -> Option<BTreeMap<QueueState, f64>> {
        self.occupancy.as_ref().map(|occ| {
            let total: f64 = occ.values().sum();
            occ.iter().map(|(&x, &t)| (x, t / total)).collect()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    // Declaration order is the tie-break order at equal timestamps.
    Block,
    Completion,
    Arrival,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
    seq: u64,
    request: u64,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.kind.cmp(&self.kind))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Calendar {
    heap: BinaryHeap<Event>,
    seq: u64,
}

impl Calendar {
    fn schedule(&mut self, time: f64, kind: EventKind, request: u64) {
        self.seq += 1;
        self.heap.push(Event {
            time,
            kind,
            seq: self.seq,
            request,
        });
    }
}

struct Batch {
    members: Vec<u64>,
    confirmations: u32,
}

struct Streams {
    arrivals: SimRng,
    blocks: SimRng,
    services: SimRng,
}

/// Runs the simulation until `served_target` requests complete after warm-up.
pub fn run_simulation(cfg: &SystemConfig, n: ConfirmationPolicy, opts: &SimOptions) -> Result<SimResult> {
    if opts.served_target == 0 {
        return Err(invalid("served_target must be at least 1"));
    }
    if !(0.0..1.0).contains(&opts.warmup_fraction) {
        return Err(invalid("warmup_fraction must lie in [0, 1)"));
    }
    let unstable = !cfg.is_stable();
    if unstable {
        warn!(
            "simulating an unstable configuration (rho = {}); queues will grow without bound",
            cfg.traffic_intensity()
        );
    }
    let needed = n.get();
    let links = cfg.s() as usize;
    let warmup = (opts.warmup_fraction * opts.served_target as f64).round() as u64;

    let mut streams = Streams {
        arrivals: rng::seeded(opts.seed, ARRIVAL_STREAM),
        blocks: rng::seeded(opts.seed, BLOCK_STREAM),
        services: rng::seeded(opts.seed, SERVICE_STREAM),
    };
    let mut cal = Calendar {
        heap: BinaryHeap::new(),
        seq: 0,
    };
    cal.schedule(
        rng::exponential(&mut streams.arrivals, cfg.lambda_a()),
        EventKind::Arrival,
        0,
    );
    cal.schedule(
        rng::exponential(&mut streams.blocks, cfg.lambda_b()),
        EventKind::Block,
        0,
    );

    let mut live: HashMap<u64, Request> = HashMap::new();
    let mut pending: Vec<u64> = Vec::new();
    let mut confirming: VecDeque<Batch> = VecDeque::new();
    let mut in_confirmation: usize = 0;
    let mut fifo: VecDeque<u64> = VecDeque::new();
    let mut busy: usize = 0;
    let mut max_busy: usize = 0;
    let mut next_id: u64 = 0;
    let mut completed_total: u64 = 0;

    let mut warm = warmup == 0;
    let mut warm_start = 0.0;
    let mut last_time = 0.0;
    let mut area_in_system = 0.0;
    let track_occupancy = needed == 1;
    let mut occupancy: BTreeMap<QueueState, f64> = BTreeMap::new();
    // Occupancy is accumulated per run of identical states before touching the map.
    let mut run_state = QueueState::new(0, 0);
    let mut run_time = 0.0;

    let mut latencies = Vec::with_capacity(opts.served_target as usize);
    let mut sojourns = Vec::with_capacity(opts.served_target as usize);
    let mut requests = Vec::new();
    let mut now = 0.0;

    while (latencies.len() as u64) < opts.served_target {
        let ev = cal.heap.pop().expect("arrival and block clocks are always scheduled");
        now = ev.time;
        if warm {
            let dt = now - last_time;
            let in_system = pending.len() + in_confirmation + fifo.len() + busy;
            area_in_system += dt * in_system as f64;
            if track_occupancy {
                let state = QueueState::new(pending.len(), fifo.len() + busy);
                if state != run_state {
                    if run_time > 0.0 {
                        *occupancy.entry(run_state).or_insert(0.0) += run_time;
                    }
                    run_state = state;
                    run_time = 0.0;
                }
                run_time += dt;
            }
        }
        last_time = now;

        match ev.kind {
            EventKind::Arrival => {
                let id = next_id;
                next_id += 1;
                live.insert(
                    id,
                    Request {
                        id,
                        arrival_time: now,
                        confirmations: 0,
                        confirmed_at: None,
                        service_start: None,
                        service_end: None,
                    },
                );
                pending.push(id);
                cal.schedule(
                    now + rng::exponential(&mut streams.arrivals, cfg.lambda_a()),
                    EventKind::Arrival,
                    0,
                );
            }
            EventKind::Block => {
                for batch in confirming.iter_mut() {
                    batch.confirmations += 1;
                    for id in &batch.members {
                        live.get_mut(id).expect("live request").confirmations = batch.confirmations;
                    }
                }
                if !pending.is_empty() {
                    let members = std::mem::take(&mut pending);
                    for id in &members {
                        live.get_mut(id).expect("live request").confirmations = 1;
                    }
                    in_confirmation += members.len();
                    confirming.push_back(Batch {
                        members,
                        confirmations: 1,
                    });
                }
                // Older batches always hold more confirmations.
                while confirming.front().is_some_and(|b| b.confirmations >= needed) {
                    let batch = confirming.pop_front().expect("checked");
                    in_confirmation -= batch.members.len();
                    for id in batch.members {
                        live.get_mut(&id).expect("live request").confirmed_at = Some(now);
                        fifo.push_back(id);
                    }
                }
                cal.schedule(
                    now + rng::exponential(&mut streams.blocks, cfg.lambda_b()),
                    EventKind::Block,
                    0,
                );
            }
            EventKind::Completion => {
                busy -= 1;
                completed_total += 1;
                let mut req = live.remove(&ev.request).expect("request in service");
                req.service_end = Some(now);
                if warm {
                    latencies.push(req.latency().expect("served"));
                    sojourns.push(now - req.arrival_time);
                    if opts.keep_requests {
                        requests.push(req);
                    }
                } else if completed_total >= warmup {
                    warm = true;
                    warm_start = now;
                }
            }
        }

        while busy < links {
            let Some(id) = fifo.pop_front() else { break };
            let req = live.get_mut(&id).expect("queued request");
            debug_assert_eq!(req.confirmations, needed);
            req.service_start = Some(now);
            busy += 1;
            let dur = rng::exponential(&mut streams.services, cfg.lambda_c());
            cal.schedule(now + dur, EventKind::Completion, id);
        }
        max_busy = max_busy.max(busy);
    }
    if track_occupancy && run_time > 0.0 {
        *occupancy.entry(run_state).or_insert(0.0) += run_time;
    }

    let horizon = now - warm_start;
    let served_count = latencies.len() as u64;
    let mean_latency = latencies.iter().sum::<f64>() / served_count as f64;
    let ci95_halfwidth = stats::batch_means(&latencies, stats::BATCHES)
        .ok()
        .map(|e| e.ci95_halfwidth);
    Ok(SimResult {
        latencies,
        sojourns,
        requests,
        occupancy: track_occupancy.then_some(occupancy),
        served_count,
        horizon,
        mean_latency,
        ci95_halfwidth,
        mean_in_system: area_in_system / horizon,
        arrivals: next_id,
        completed_total,
        in_system_at_end: live.len() as u64,
        max_busy,
        unstable,
    })
}

/// Batch-means mean and 95% interval of the recorded latencies.
pub fn latency_stats(result: &SimResult) -> Result<MeanEstimate> {
    stats::batch_means(&result.latencies, stats::BATCHES)
}

/// Total-variation distance between two distributions over queue states.
pub fn total_variation<'a>(
    a: impl IntoIterator<Item = (QueueState, f64)>,
    b: impl IntoIterator<Item = (QueueState, f64)> + 'a,
) -> f64 {
    let mut diff: HashMap<QueueState, f64> = HashMap::new();
    for (x, p) in a {
        *diff.entry(x).or_insert(0.0) += p;
    }
    for (x, p) in b {
        *diff.entry(x).or_insert(0.0) -= p;
    }
    0.5 * diff.values().map(|d| d.abs()).sum::<f64>()
}
