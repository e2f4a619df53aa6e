//! Centralized placement: greedy over the partition matroid, and the
//! popularity baselines.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::delay::{DelayModel, Placement};
use crate::model::PopularityAggregates;
use crate::{Error, Result};

/// Relative slack allowed when checking that trace gains do not increase.
const GAIN_TOLERANCE: f64 = 1e-9;

/// Chosen set, remaining candidates and per-request caching masks.
#[derive(Debug, Clone)]
pub struct MatroidState {
    placement: Placement,
    candidates: Vec<bool>,
    /// `masks[k][n]`: serving BSs of user `k` currently caching file `n`.
    masks: Vec<Vec<u32>>,
}

impl MatroidState {
    pub fn new(model: &DelayModel, capacities: Vec<usize>) -> Self {
        let n_files = model.num_files();
        let placement = Placement::empty(n_files, capacities);
        let candidates = (0..n_files * placement.num_bs())
            .map(|i| placement.capacity(i / n_files) > 0)
            .collect();
        MatroidState {
            placement,
            candidates,
            masks: vec![vec![0; n_files]; model.num_users()],
        }
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    pub fn into_placement(self) -> Placement {
        self.placement
    }

    pub fn is_candidate(&self, i: usize) -> bool {
        self.candidates[i]
    }

    pub fn candidates(&self) -> impl Iterator<Item = usize> + '_ {
        self.candidates
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| c.then_some(i))
    }

    pub fn remaining(&self, m: usize) -> usize {
        self.placement.capacity(m) - self.placement.count(m)
    }

    /// Adds element `i`; drops it from the candidates, and drops the whole
    /// BS once it is full.
    pub fn add(&mut self, i: usize, coverage: &[Vec<(usize, u32)>]) {
        let (n, m) = self.placement.element(i);
        self.placement.insert(n, m);
        self.candidates[i] = false;
        for &(k, bit) in &coverage[m] {
            self.masks[k][n] |= bit;
        }
        if self.remaining(m) == 0 {
            let n_files = self.placement.num_files();
            self.candidates[m * n_files..(m + 1) * n_files].fill(false);
        }
    }
}

/// Decrease of the average delay from adding element `i` to the state.
pub fn marginal_gain(
    state: &MatroidState,
    i: usize,
    model: &DelayModel,
    coverage: &[Vec<(usize, u32)>],
) -> f64 {
    let (n, m) = state.placement.element(i);
    let mut gain = 0.0;
    for &(k, bit) in &coverage[m] {
        let p = model.demand.preference(k, n);
        if p == 0.0 {
            continue;
        }
        let mask = state.masks[k][n];
        if mask & bit != 0 {
            continue;
        }
        gain += p * (model.delay_for_mask(k, n, mask) - model.delay_for_mask(k, n, mask | bit));
    }
    gain / model.num_users() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub bs: usize,
    pub file: usize,
    pub gain: f64,
    /// Average delay after this step.
    pub objective: f64,
    /// Marginal-gain evaluations so far.
    pub calculations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    /// Average delay of the empty placement.
    pub initial_objective: f64,
    pub steps: Vec<TraceStep>,
    pub calculations: u64,
}

impl SolveTrace {
    pub const CSV_HEADER: &'static str = "step,bs,file,gain,objective,calculations";

    /// Trace as CSV, one row per step (0-based BS and file indices).
    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (t, st) in self.steps.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{:.9e},{:.9e},{}",
                t + 1,
                st.bs,
                st.file,
                st.gain,
                st.objective,
                st.calculations
            );
        }
        s
    }

    pub fn final_objective(&self) -> f64 {
        self.steps
            .last()
            .map_or(self.initial_objective, |s| s.objective)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GreedyMode {
    Eager,
    #[default]
    Lazy,
}

pub fn greedy_solve(
    model: &DelayModel,
    capacities: &[usize],
    mode: GreedyMode,
) -> Result<(Placement, SolveTrace)> {
    match mode {
        GreedyMode::Eager => greedy_place(model, capacities),
        GreedyMode::Lazy => greedy_place_lazy(model, capacities),
    }
}

struct Recorder {
    trace: SolveTrace,
    previous_gain: f64,
}

impl Recorder {
    fn new(model: &DelayModel, capacities: &[usize]) -> Self {
        let empty = Placement::empty(model.num_files(), capacities.to_vec());
        Recorder {
            trace: SolveTrace {
                initial_objective: model.average_delay(&empty),
                steps: Vec::new(),
                calculations: 0,
            },
            previous_gain: f64::INFINITY,
        }
    }

    fn record(&mut self, state: &MatroidState, i: usize, gain: f64) -> Result<()> {
        let step = self.trace.steps.len() + 1;
        if gain > self.previous_gain + GAIN_TOLERANCE * self.previous_gain.abs().max(1e-12) {
            return Err(Error::GainIncrease {
                step,
                previous: self.previous_gain,
                current: gain,
            });
        }
        self.previous_gain = gain;
        let (file, bs) = state.placement.element(i);
        let objective = self.trace.final_objective() - gain;
        self.trace.steps.push(TraceStep {
            bs,
            file,
            gain,
            objective,
            calculations: self.trace.calculations,
        });
        Ok(())
    }
}

/// Greedy placement: each round evaluates every candidate and adds the one
/// with the largest gain (lowest ground index on ties). Stops when no
/// candidates remain or the best gain is not positive.
pub fn greedy_place(model: &DelayModel, capacities: &[usize]) -> Result<(Placement, SolveTrace)> {
    let coverage = model.coverage(capacities.len());
    let mut state = MatroidState::new(model, capacities.to_vec());
    let mut rec = Recorder::new(model, capacities);
    loop {
        let cands: Vec<usize> = state.candidates().collect();
        if cands.is_empty() {
            break;
        }
        let gains: Vec<f64> = cands
            .par_iter()
            .map(|&i| marginal_gain(&state, i, model, &coverage))
            .collect();
        rec.trace.calculations += cands.len() as u64;
        let mut best = 0;
        for j in 1..cands.len() {
            if gains[j] > gains[best] {
                best = j;
            }
        }
        if !(gains[best] > 0.0) {
            break;
        }
        let i = cands[best];
        state.add(i, &coverage);
        rec.record(&state, i, gains[best])?;
    }
    Ok((state.into_placement(), rec.trace))
}

#[derive(Debug, PartialEq)]
struct Entry {
    gain: f64,
    index: usize,
    /// Number of additions when `gain` was computed.
    stamp: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lazy greedy: stale gains are upper bounds by submodularity, so only the
/// top of the queue is re-evaluated. Same selections as `greedy_place`.
pub fn greedy_place_lazy(model: &DelayModel, capacities: &[usize]) -> Result<(Placement, SolveTrace)> {
    let coverage = model.coverage(capacities.len());
    let mut state = MatroidState::new(model, capacities.to_vec());
    let mut rec = Recorder::new(model, capacities);

    let cands: Vec<usize> = state.candidates().collect();
    let gains: Vec<f64> = cands
        .par_iter()
        .map(|&i| marginal_gain(&state, i, model, &coverage))
        .collect();
    rec.trace.calculations += cands.len() as u64;
    let mut heap: BinaryHeap<Entry> = cands
        .into_iter()
        .zip(gains)
        .map(|(index, gain)| Entry { gain, index, stamp: 0 })
        .collect();

    let mut added = 0;
    while let Some(top) = heap.pop() {
        if !state.is_candidate(top.index) {
            continue;
        }
        if top.stamp == added {
            if !(top.gain > 0.0) {
                break;
            }
            state.add(top.index, &coverage);
            added += 1;
            rec.record(&state, top.index, top.gain)?;
        } else {
            let gain = marginal_gain(&state, top.index, model, &coverage);
            rec.trace.calculations += 1;
            heap.push(Entry {
                gain,
                index: top.index,
                stamp: added,
            });
        }
    }
    Ok((state.into_placement(), rec.trace))
}

/// Indices of the `q` largest entries, ties to the lower index.
fn top_q(scores: &[f64], q: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(q);
    order
}

/// Global popular caching: every BS stores the network-wide top files.
pub fn gpc_place(capacities: &[usize], aggregates: &PopularityAggregates) -> Placement {
    let n_files = aggregates.global.len();
    let sets: Vec<Vec<usize>> = capacities
        .iter()
        .map(|&q| top_q(&aggregates.global, q))
        .collect();
    Placement::from_sets(n_files, capacities.to_vec(), &sets)
}

/// Local popular caching: every BS stores the top files of its own cell.
pub fn lpc_place(capacities: &[usize], aggregates: &PopularityAggregates) -> Placement {
    let n_files = aggregates.global.len();
    let sets: Vec<Vec<usize>> = capacities
        .iter()
        .zip(&aggregates.local)
        .map(|(&q, local)| top_q(local, q))
        .collect();
    Placement::from_sets(n_files, capacities.to_vec(), &sets)
}
