//! Distributed placement by max-product message passing on the
//! placement factor graph.
//!
//! Variables are the placement entries `x_nm` (index `m * N + n`). Each
//! request `(n, k)` with positive probability gets a delay factor attached to
//! `x_nm` for every serving BS `m` of user `k`; each BS gets a capacity
//! factor attached to all of its entries. Messages are log-ratios
//! `log(m(1) / m(0))`: `alpha` from variables to factors, `beta` from
//! factors to variables.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::delay::{DelayModel, Placement};
use crate::model::{DemandModel, NetworkInstance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    /// Delay of file `file` for user `user`.
    Request { file: usize, user: usize },
    /// Cache capacity of BS `bs`.
    Capacity { bs: usize },
}

/// Bipartite graph between placement entries and factors, with each
/// factor's owner BS.
///
/// Request factors come first, user-major and in ascending file order within
/// a user; capacity factors follow in BS order. Edges are stored factor-major,
/// and the neighbors of a request factor are ordered like the user's serving
/// set, so an edge's position doubles as its bit in the rate-table mask.
#[derive(Debug, Clone)]
pub struct FactorGraph {
    num_files: usize,
    num_bs: usize,
    kinds: Vec<FactorKind>,
    owners: Vec<usize>,
    factor_start: Vec<usize>,
    edge_var: Vec<usize>,
    edge_factor: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
    num_request_factors: usize,
}

pub fn build_factor_graph(instance: &NetworkInstance, demand: &DemandModel) -> FactorGraph {
    let n_files = demand.num_files();
    let num_bs = instance.num_bs();
    let mut kinds = Vec::new();
    let mut owners = Vec::new();
    let mut factor_start = vec![0];
    let mut edge_var = Vec::new();
    let mut edge_factor = Vec::new();
    for k in 0..demand.num_users() {
        let serving = instance.serving(k);
        for &n in demand.support(k) {
            let j = kinds.len();
            kinds.push(FactorKind::Request { file: n, user: k });
            owners.push(serving[0]);
            for &m in serving {
                edge_var.push(m * n_files + n);
                edge_factor.push(j);
            }
            factor_start.push(edge_var.len());
        }
    }
    let num_request_factors = kinds.len();
    for m in 0..num_bs {
        let j = kinds.len();
        kinds.push(FactorKind::Capacity { bs: m });
        owners.push(m);
        for n in 0..n_files {
            edge_var.push(m * n_files + n);
            edge_factor.push(j);
        }
        factor_start.push(edge_var.len());
    }
    let mut var_edges = vec![Vec::new(); n_files * num_bs];
    for (e, &i) in edge_var.iter().enumerate() {
        var_edges[i].push(e);
    }
    FactorGraph {
        num_files: n_files,
        num_bs,
        kinds,
        owners,
        factor_start,
        edge_var,
        edge_factor,
        var_edges,
        num_request_factors,
    }
}

impl FactorGraph {
    pub fn num_variables(&self) -> usize {
        self.var_edges.len()
    }

    pub fn num_factors(&self) -> usize {
        self.kinds.len()
    }

    pub fn num_request_factors(&self) -> usize {
        self.num_request_factors
    }

    pub fn num_edges(&self) -> usize {
        self.edge_var.len()
    }

    pub fn num_files(&self) -> usize {
        self.num_files
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn kind(&self, j: usize) -> FactorKind {
        self.kinds[j]
    }

    /// BS that computes the factor's outgoing messages.
    pub fn owner(&self, j: usize) -> usize {
        self.owners[j]
    }

    /// BS holding variable `i`.
    pub fn variable_owner(&self, i: usize) -> usize {
        i / self.num_files
    }

    pub fn capacity_factor(&self, m: usize) -> usize {
        self.num_request_factors + m
    }

    /// Edge ids of factor `j`, in neighbor order.
    pub fn factor_edges(&self, j: usize) -> std::ops::Range<usize> {
        self.factor_start[j]..self.factor_start[j + 1]
    }

    /// Variables adjacent to factor `j`.
    pub fn factor_neighbors(&self, j: usize) -> &[usize] {
        &self.edge_var[self.factor_edges(j)]
    }

    /// Edge ids of variable `i`, by ascending factor index.
    pub fn variable_edges(&self, i: usize) -> &[usize] {
        &self.var_edges[i]
    }

    /// Factors adjacent to variable `i`.
    pub fn variable_neighbors(&self, i: usize) -> Vec<usize> {
        self.var_edges[i].iter().map(|&e| self.edge_factor[e]).collect()
    }

    pub fn edge_variable(&self, e: usize) -> usize {
        self.edge_var[e]
    }

    pub fn edge_factor(&self, e: usize) -> usize {
        self.edge_factor[e]
    }

    /// Edge between `i` and `j`, if adjacent.
    pub fn edge(&self, i: usize, j: usize) -> Option<usize> {
        self.var_edges[i].iter().copied().find(|&e| self.edge_factor[e] == j)
    }

    /// Whether messages on edge `e` cross between two BSs.
    pub fn crosses(&self, e: usize) -> bool {
        self.variable_owner(self.edge_var[e]) != self.owners[self.edge_factor[e]]
    }

    /// Users whose request factors BS `m` processes.
    pub fn processed_users(&self, m: usize) -> Vec<usize> {
        let mut users: Vec<usize> = (0..self.num_request_factors)
            .filter(|&j| self.owners[j] == m)
            .filter_map(|j| match self.kinds[j] {
                FactorKind::Request { user, .. } => Some(user),
                FactorKind::Capacity { .. } => None,
            })
            .collect();
        users.dedup();
        users
    }
}

/// How a request factor turns incoming `alpha` into outgoing `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EtaRule {
    /// Delay gap between the placements "on where incoming alpha > 0" with
    /// and without the target entry.
    #[default]
    DelayGap,
    /// Exact max over all on/off assignments of the other neighbors.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpOptions {
    pub max_rounds: usize,
    /// Weight of the previous `alpha` in each update.
    pub damping: f64,
    /// Largest message change still counted as settled.
    pub tolerance: f64,
    /// Consecutive rounds without estimate changes required to stop.
    pub stable_rounds: usize,
    pub eta_rule: EtaRule,
}

impl Default for BpOptions {
    fn default() -> Self {
        BpOptions {
            max_rounds: 200,
            damping: 0.75,
            tolerance: 1e-6,
            stable_rounds: 3,
            eta_rule: EtaRule::DelayGap,
        }
    }
}

impl BpOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidParameter(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidParameter("need at least one round".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidParameter("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// `alpha` toward one factor: the sum of the other incoming `beta`, blended
/// with the previous value by `damping`.
pub fn alpha_message(incoming_beta: &[f64], exclude: usize, previous: f64, damping: f64) -> f64 {
    let sum: f64 = incoming_beta
        .iter()
        .enumerate()
        .filter(|(l, _)| *l != exclude)
        .map(|(_, b)| b)
        .sum();
    damping * previous + (1.0 - damping) * sum
}

/// `beta` from a capacity factor given the `alpha` of the other entries of
/// the same BS. Zero when capacity cannot bind.
pub fn capacity_message(others: &[f64], capacity: usize) -> f64 {
    assert!(capacity > 0, "entries of a zero-capacity BS are clamped, not messaged");
    if others.len() < capacity {
        return 0.0;
    }
    let mut sorted = others.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if capacity >= 2 && sorted[capacity - 2] < 0.0 {
        return 0.0;
    }
    (-sorted[capacity - 1]).min(0.0)
}

/// `beta` from request factor `(n, k)` to its neighbor at serving position
/// `target`, given the `alpha` of all neighbors (the target's own entry is
/// ignored).
pub fn request_message(
    model: &DelayModel,
    k: usize,
    n: usize,
    alpha: &[f64],
    target: usize,
    rule: EtaRule,
) -> f64 {
    let p = model.demand.preference(k, n);
    let bit = 1u32 << target;
    match rule {
        EtaRule::DelayGap => {
            let on = alpha
                .iter()
                .enumerate()
                .filter(|&(b, &a)| b != target && a > 0.0)
                .fold(0u32, |acc, (b, _)| acc | 1 << b);
            p * (model.delay_for_mask(k, n, on) - model.delay_for_mask(k, n, on | bit))
        }
        EtaRule::Exhaustive => {
            let full = (1u32 << alpha.len()) - 1;
            let others = full & !bit;
            let (mut with, mut without) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            // Walk all subsets of `others`.
            let mut sub = others;
            loop {
                let weight: f64 = (0..alpha.len())
                    .filter(|b| sub & (1 << b) != 0)
                    .map(|b| alpha[b])
                    .sum();
                with = with.max(weight - p * model.delay_for_mask(k, n, sub | bit));
                without = without.max(weight - p * model.delay_for_mask(k, n, sub));
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & others;
            }
            with - without
        }
    }
}

/// Belief log-ratio and the resulting estimate (ties decide 0).
pub fn belief_and_decide(incoming_beta: &[f64]) -> (f64, bool) {
    let b: f64 = incoming_beta.iter().sum();
    (b, b > 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpRound {
    pub round: usize,
    /// Average delay of this round's estimates, capacity not enforced.
    pub objective: f64,
    pub cached: usize,
    pub changed: usize,
    pub max_delta: f64,
    pub computed: Vec<u64>,
    pub exchanged: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpTrace {
    pub rounds: Vec<BpRound>,
    pub converged: bool,
    /// Whether capacity repair changed the final estimates.
    pub repaired: bool,
}

impl BpTrace {
    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn total_computed(&self) -> u64 {
        self.rounds.iter().flat_map(|r| &r.computed).sum()
    }

    pub fn total_exchanged(&self) -> u64 {
        self.rounds.iter().flat_map(|r| &r.exchanged).sum()
    }

    /// CSV with one row per round; per-BS counter columns follow the totals.
    pub fn to_csv(&self) -> String {
        let num_bs = self.rounds.first().map_or(0, |r| r.computed.len());
        let mut s = String::from("round,objective,cached,changed,max_delta,computed,exchanged");
        for m in 0..num_bs {
            let _ = write!(s, ",computed_bs{m}");
        }
        for m in 0..num_bs {
            let _ = write!(s, ",exchanged_bs{m}");
        }
        s.push('\n');
        for r in &self.rounds {
            let _ = write!(
                s,
                "{},{:.9e},{},{},{:.9e},{},{}",
                r.round,
                r.objective,
                r.cached,
                r.changed,
                r.max_delta,
                r.computed.iter().sum::<u64>(),
                r.exchanged.iter().sum::<u64>()
            );
            for c in r.computed.iter().chain(&r.exchanged) {
                let _ = write!(s, ",{c}");
            }
            s.push('\n');
        }
        s
    }
}

/// Per-BS message counts summed over all rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangeSummary {
    pub computed: Vec<u64>,
    pub exchanged: Vec<u64>,
}

/// Messages each BS computes and sends to another BS in one round. `alpha`
/// is computed at the variable's BS and `beta` at the factor's owner; a
/// message counts as exchanged when those BSs differ.
pub fn round_counts(graph: &FactorGraph) -> (Vec<u64>, Vec<u64>) {
    let mut computed = vec![0u64; graph.num_bs()];
    let mut exchanged = vec![0u64; graph.num_bs()];
    for e in 0..graph.num_edges() {
        let var_bs = graph.variable_owner(graph.edge_variable(e));
        let fac_bs = graph.owner(graph.edge_factor(e));
        computed[var_bs] += 1;
        computed[fac_bs] += 1;
        if var_bs != fac_bs {
            exchanged[var_bs] += 1;
            exchanged[fac_bs] += 1;
        }
    }
    (computed, exchanged)
}

pub fn exchange_accounting(graph: &FactorGraph, trace: &BpTrace) -> ExchangeSummary {
    let mut computed = vec![0u64; graph.num_bs()];
    let mut exchanged = vec![0u64; graph.num_bs()];
    for r in &trace.rounds {
        for m in 0..graph.num_bs() {
            computed[m] += r.computed[m];
            exchanged[m] += r.exchanged[m];
        }
    }
    ExchangeSummary { computed, exchanged }
}

/// Message state of one run. Rounds are synchronous: all factors update
/// `beta` from the current `alpha`, then all variables update `alpha` from
/// the new `beta`.
#[derive(Debug, Clone)]
pub struct BpEngine<'g, 'm> {
    graph: &'g FactorGraph,
    model: DelayModel<'m>,
    capacities: Vec<usize>,
    options: BpOptions,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    beliefs: Vec<f64>,
    estimates: Vec<bool>,
    round: usize,
}

impl<'g, 'm> BpEngine<'g, 'm> {
    pub fn new(
        graph: &'g FactorGraph,
        model: DelayModel<'m>,
        capacities: &[usize],
        options: BpOptions,
    ) -> Result<Self> {
        options.validate()?;
        if capacities.len() != graph.num_bs() {
            return Err(Error::InvalidParameter(format!(
                "{} capacities for {} BSs",
                capacities.len(),
                graph.num_bs()
            )));
        }
        if model.num_files() != graph.num_files() {
            return Err(Error::InvalidParameter("graph and demand disagree on the file count".into()));
        }
        let edges = graph.num_edges();
        let vars = graph.num_variables();
        Ok(BpEngine {
            graph,
            model,
            capacities: capacities.to_vec(),
            options,
            alpha: vec![0.0; edges],
            beta: vec![0.0; edges],
            beliefs: vec![0.0; vars],
            estimates: vec![false; vars],
            round: 0,
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn alpha(&self, e: usize) -> f64 {
        self.alpha[e]
    }

    pub fn beta(&self, e: usize) -> f64 {
        self.beta[e]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn beliefs(&self) -> &[f64] {
        &self.beliefs
    }

    pub fn estimates(&self) -> &[bool] {
        &self.estimates
    }

    fn clamped(&self, i: usize) -> bool {
        self.capacities[self.graph.variable_owner(i)] == 0
    }

    /// Current estimates as a placement (capacity not enforced).
    pub fn estimate_placement(&self) -> Placement {
        let mut p = Placement::empty(self.graph.num_files(), self.capacities.clone());
        for (i, &on) in self.estimates.iter().enumerate() {
            if on {
                let (n, m) = p.element(i);
                p.insert(n, m);
            }
        }
        p
    }

    fn request_betas(&self) -> Vec<f64> {
        let g = self.graph;
        (0..g.num_request_factors())
            .into_par_iter()
            .flat_map_iter(|j| {
                let FactorKind::Request { file, user } = g.kind(j) else {
                    unreachable!("request factors come first")
                };
                let alpha = &self.alpha[g.factor_edges(j)];
                (0..alpha.len())
                    .map(move |b| request_message(&self.model, user, file, alpha, b, self.options.eta_rule))
            })
            .collect()
    }

    fn capacity_betas(&self, m: usize) -> Vec<f64> {
        let q = self.capacities[m];
        let edges = self.graph.factor_edges(self.graph.capacity_factor(m));
        let vals = &self.alpha[edges];
        let n = vals.len();
        if q == 0 || n <= q {
            return vec![0.0; n];
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
        let mut rank = vec![0; n];
        for (r, &pos) in order.iter().enumerate() {
            rank[pos] = r;
        }
        // r-th largest among the others, 1-based.
        let others_nth = |own: usize, r: usize| {
            if own < r {
                vals[order[r]]
            } else {
                vals[order[r - 1]]
            }
        };
        (0..n)
            .map(|pos| {
                let own = rank[pos];
                if q >= 2 && others_nth(own, q - 1) < 0.0 {
                    0.0
                } else {
                    (-others_nth(own, q)).min(0.0)
                }
            })
            .collect()
    }

    fn check_finite(&self, values: &[f64]) -> Result<()> {
        match values.iter().position(|v| !v.is_finite()) {
            Some(e) => Err(Error::NonFiniteMessage {
                round: self.round,
                variable: self.graph.edge_variable(e),
                function: self.graph.edge_factor(e),
            }),
            None => Ok(()),
        }
    }

    /// One synchronous round; returns `(changed estimates, max message delta)`.
    pub fn step(&mut self) -> Result<(usize, f64)> {
        self.round += 1;
        let g = self.graph;
        let mut beta = self.request_betas();
        beta.reserve(g.num_edges() - beta.len());
        for m in 0..g.num_bs() {
            beta.extend(self.capacity_betas(m));
        }
        self.check_finite(&beta)?;

        let beliefs: Vec<f64> = (0..g.num_variables())
            .into_par_iter()
            .map(|i| {
                if self.capacities[g.variable_owner(i)] == 0 {
                    0.0
                } else {
                    g.variable_edges(i).iter().map(|&e| beta[e]).sum()
                }
            })
            .collect();
        let damping = self.options.damping;
        let alpha: Vec<f64> = (0..g.num_edges())
            .into_par_iter()
            .map(|e| {
                let i = g.edge_variable(e);
                if self.clamped(i) {
                    return 0.0;
                }
                let others = beliefs[i] - beta[e];
                damping * self.alpha[e] + (1.0 - damping) * others
            })
            .collect();
        self.check_finite(&alpha)?;

        let delta = self
            .alpha
            .iter()
            .zip(&alpha)
            .chain(self.beta.iter().zip(&beta))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let estimates: Vec<bool> = beliefs.iter().map(|&b| b > 0.0).collect();
        let changed = estimates
            .iter()
            .zip(&self.estimates)
            .filter(|(a, b)| a != b)
            .count();
        self.alpha = alpha;
        self.beta = beta;
        self.beliefs = beliefs;
        self.estimates = estimates;
        Ok((changed, delta))
    }
}

/// Keeps, at every BS over capacity, its entries with the largest beliefs
/// (lower file index on ties).
pub fn repair(placement: &Placement, beliefs: &[f64]) -> Placement {
    let mut out = Placement::empty(placement.num_files(), placement.capacities().to_vec());
    for m in 0..placement.num_bs() {
        let mut files = placement.files_at(m);
        if files.len() > placement.capacity(m) {
            let i = |n: usize| placement.ground_index(n, m);
            files.sort_by(|&a, &b| beliefs[i(b)].total_cmp(&beliefs[i(a)]).then(a.cmp(&b)));
            files.truncate(placement.capacity(m));
        }
        for n in files {
            out.insert(n, m);
        }
    }
    out
}

/// Runs message passing until the estimates have been stable for
/// `stable_rounds` rounds with all message changes below `tolerance`, or
/// `max_rounds` is reached, then repairs capacity violations.
pub fn bp_solve(
    graph: &FactorGraph,
    model: DelayModel,
    capacities: &[usize],
    options: &BpOptions,
) -> Result<(Placement, BpTrace)> {
    let mut engine = BpEngine::new(graph, model, capacities, options.clone())?;
    let (computed, exchanged) = round_counts(graph);
    let mut rounds = Vec::new();
    let mut stable = 0;
    let mut converged = false;
    while engine.round() < options.max_rounds {
        let (changed, max_delta) = engine.step()?;
        let estimate = engine.estimate_placement();
        rounds.push(BpRound {
            round: engine.round(),
            objective: model.average_delay(&estimate),
            cached: estimate.total_cached(),
            changed,
            max_delta,
            computed: computed.clone(),
            exchanged: exchanged.clone(),
        });
        stable = if changed == 0 { stable + 1 } else { 0 };
        if stable >= options.stable_rounds && max_delta < options.tolerance {
            converged = true;
            break;
        }
    }
    let estimate = engine.estimate_placement();
    let placement = repair(&estimate, engine.beliefs());
    let repaired = placement != estimate;
    Ok((
        placement,
        BpTrace {
            rounds,
            converged,
            repaired,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid_topology, BackhaulDelay, Layout, Point, TopologyParams};
    use crate::rates::{build_rate_table, ChannelParams, ExpectedRateTable, Scheme};

    fn channel() -> ChannelParams {
        ChannelParams {
            mc_samples: 2_000,
            ..ChannelParams::default()
        }
    }

    fn two_cell() -> (NetworkInstance, DemandModel) {
        let inst = NetworkInstance::from_positions(
            vec![Point::new(0.0, 0.0), Point::new(200.0, 0.0)],
            vec![Point::new(-60.0, 0.0), Point::new(110.0, 0.0), Point::new(260.0, 30.0)],
            150.0,
            200.0,
            Layout::Line,
            0,
        )
        .unwrap();
        let demand = DemandModel::new(
            vec![vec![0.7, 0.3], vec![0.4, 0.6], vec![0.2, 0.8]],
            2,
            1e8,
            BackhaulDelay::Uniform(40.0),
        )
        .unwrap();
        (inst, demand)
    }

    #[test]
    fn two_cell_graph_shape() {
        let (inst, demand) = two_cell();
        let g = build_factor_graph(&inst, &demand);
        assert_eq!(g.num_variables(), 4);
        assert_eq!(g.num_factors(), 2 + 6);
        // User 1 (both BSs), file 0 is factor 2; its neighbors are x_00 and x_01.
        assert_eq!(g.kind(2), FactorKind::Request { file: 0, user: 1 });
        assert_eq!(g.factor_neighbors(2), &[0, 2]);
        assert_eq!(g.factor_neighbors(g.capacity_factor(1)), &[2, 3]);
        // x_00 meets the file-0 factors of users 0 and 1 and the BS-0 capacity.
        assert_eq!(g.variable_neighbors(0), vec![0, 2, 6]);
        assert_eq!(g.variable_neighbors(3), vec![3, 5, 7]);
        assert_eq!(g.owner(2), 0);
        assert_eq!(g.owner(4), 1);
        assert_eq!(g.processed_users(0), vec![0, 1]);
        assert_eq!(g.processed_users(1), vec![2]);
        let crossing: Vec<usize> = (0..g.num_edges()).filter(|&e| g.crosses(e)).collect();
        // The BS-1 entries of user 1's two factors.
        assert_eq!(crossing.len(), 2);
        for e in crossing {
            assert!(matches!(g.kind(g.edge_factor(e)), FactorKind::Request { user: 1, .. }));
            assert_eq!(g.variable_owner(g.edge_variable(e)), 1);
        }
    }

    #[test]
    fn message_arithmetic() {
        assert_eq!(alpha_message(&[0.0, 0.0, 0.0], 1, 0.0, 0.0), 0.0);
        assert_eq!(alpha_message(&[2.0, 9.0, -0.5], 1, 0.0, 0.0), 1.5);
        assert_eq!(alpha_message(&[4.0], 0, 0.0, 0.0), 0.0);
        assert_eq!(alpha_message(&[2.0, 1.0], 1, 1.0, 0.5), 1.5);
        assert_eq!(capacity_message(&[3.0, 1.0, -0.5], 2), -1.0);
        assert_eq!(capacity_message(&[-0.1, -0.2, -0.3], 2), 0.0);
        assert_eq!(capacity_message(&[5.0, 4.0], 3), 0.0);
        assert_eq!(capacity_message(&[0.5, -2.0], 1), -0.5);
        assert_eq!(belief_and_decide(&[0.0, 0.0]), (0.0, false));
        assert_eq!(belief_and_decide(&[1.0, -0.25]), (0.75, true));
    }

    #[test]
    fn guarded_capacity_rule_equals_plain_rule() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        for _ in 0..2000 {
            let len = rand::Rng::random_range(&mut rng, 1..8);
            let vals: Vec<f64> = (0..len).map(|_| rand::Rng::random_range(&mut rng, -3.0..3.0)).collect();
            let q = rand::Rng::random_range(&mut rng, 1..=len);
            let mut sorted = vals.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let plain = (-sorted[q - 1]).min(0.0);
            assert_eq!(capacity_message(&vals, q), plain);
        }
    }

    fn model_for(inst: &NetworkInstance, demand: &DemandModel, scheme: Scheme) -> ExpectedRateTable {
        let t = build_rate_table(inst, &channel(), scheme).unwrap();
        DelayModel::new(&t, demand).unwrap();
        t
    }

    #[test]
    fn request_message_cases() {
        let (inst, demand) = two_cell();
        let table = model_for(&inst, &demand, Scheme::CooperativeBeamforming);
        let model = DelayModel::new(&table, &demand).unwrap();
        let f = 1e8;
        // Single-BS user 0, file 0.
        let b = request_message(&model, 0, 0, &[-1.0], 0, EtaRule::DelayGap);
        let expect = 0.7 * ((40.0 + f / table.fetch_rate(0)) - f / table.rate(0, 1));
        assert!((b - expect).abs() < 1e-12);
        // User 1, file 1, other entry on: gain of adding BS 0 to {BS 1}.
        let b = request_message(&model, 1, 1, &[0.0, 2.0], 0, EtaRule::DelayGap);
        let expect = 0.6 * (f / table.rate(1, 0b10) - f / table.rate(1, 0b11));
        assert!((b - expect).abs() < 1e-12);
        assert!(b >= 0.0);
        // With one neighbor the exhaustive max reduces to the delay gap.
        let e = request_message(&model, 0, 0, &[-1.0], 0, EtaRule::Exhaustive);
        assert!((e - request_message(&model, 0, 0, &[-1.0], 0, EtaRule::DelayGap)).abs() < 1e-12);
    }

    #[test]
    fn zero_capacity_gives_empty_placement() {
        let (inst, demand) = two_cell();
        let table = model_for(&inst, &demand, Scheme::NonCooperative);
        let model = DelayModel::new(&table, &demand).unwrap();
        let g = build_factor_graph(&inst, &demand);
        let (p, trace) = bp_solve(&g, model, &[0, 0], &BpOptions::default()).unwrap();
        assert_eq!(p.total_cached(), 0);
        assert!(trace.converged);
        assert_eq!(trace.rounds[0].cached, 0);
    }

    #[test]
    fn tiny_instance_matches_obvious_optimum() {
        let inst = NetworkInstance::from_positions(
            vec![Point::new(0.0, 0.0)],
            vec![Point::new(30.0, 40.0)],
            150.0,
            200.0,
            Layout::Line,
            0,
        )
        .unwrap();
        let demand = DemandModel::new(vec![vec![0.9, 0.1]], 2, 1e8, BackhaulDelay::Uniform(40.0)).unwrap();
        let table = model_for(&inst, &demand, Scheme::CooperativeBeamforming);
        let model = DelayModel::new(&table, &demand).unwrap();
        let g = build_factor_graph(&inst, &demand);
        let (p, trace) = bp_solve(&g, model, &[1], &BpOptions::default()).unwrap();
        assert_eq!(p.sets(), vec![vec![0]]);
        assert!(trace.converged);
        assert!(!trace.repaired);
    }

    #[test]
    fn message_signs_and_determinism() {
        let inst = build_grid_topology(&TopologyParams { num_bs: 4, num_users: 20, ..TopologyParams::default() }, 3).unwrap();
        let demand = DemandModel::zipf(15, vec![0.9; 20], 1e8, BackhaulDelay::Uniform(40.0), 3).unwrap();
        let table = model_for(&inst, &demand, Scheme::CooperativeBeamforming);
        let model = DelayModel::new(&table, &demand).unwrap();
        let g = build_factor_graph(&inst, &demand);
        let mut engine = BpEngine::new(&g, model, &[4; 4], BpOptions::default()).unwrap();
        for _ in 0..10 {
            engine.step().unwrap();
            for e in 0..g.num_edges() {
                match g.kind(g.edge_factor(e)) {
                    FactorKind::Request { .. } => assert!(engine.beta(e) >= 0.0),
                    FactorKind::Capacity { .. } => assert!(engine.beta(e) <= 0.0),
                }
            }
            for i in 0..g.num_variables() {
                let b: f64 = g.variable_edges(i).iter().map(|&e| engine.beta(e)).sum();
                assert_eq!(b, engine.beliefs()[i]);
            }
        }
        let run = || bp_solve(&g, model, &[4; 4], &BpOptions::default()).unwrap();
        let (p1, t1) = run();
        let (p2, t2) = run();
        assert_eq!(p1, p2);
        assert_eq!(t1, t2);
        assert!(p1.is_feasible());
        assert_eq!(t1.to_csv(), t2.to_csv());
    }

    #[test]
    fn capacity_betas_match_reference_rule() {
        let inst = build_grid_topology(&TopologyParams { num_bs: 3, num_users: 15, ..TopologyParams::default() }, 9).unwrap();
        let demand = DemandModel::zipf(7, vec![1.2; 15], 1e8, BackhaulDelay::Uniform(40.0), 9).unwrap();
        let table = model_for(&inst, &demand, Scheme::NonCooperative);
        let model = DelayModel::new(&table, &demand).unwrap();
        let g = build_factor_graph(&inst, &demand);
        let caps = [1, 2, 3];
        let mut engine = BpEngine::new(&g, model, &caps, BpOptions::default()).unwrap();
        for _ in 0..4 {
            engine.step().unwrap();
            for (m, &q) in caps.iter().enumerate() {
                let edges: Vec<usize> = g.factor_edges(g.capacity_factor(m)).collect();
                let fresh = engine.capacity_betas(m);
                for (pos, _) in edges.iter().enumerate() {
                    let others: Vec<f64> = edges
                        .iter()
                        .enumerate()
                        .filter(|(p, _)| *p != pos)
                        .map(|(_, &e)| engine.alpha(e))
                        .collect();
                    assert_eq!(fresh[pos], capacity_message(&others, q));
                }
            }
        }
    }

    #[test]
    fn exchange_counts() {
        let (inst, demand) = two_cell();
        let table = model_for(&inst, &demand, Scheme::CooperativeBeamforming);
        let model = DelayModel::new(&table, &demand).unwrap();
        let g = build_factor_graph(&inst, &demand);
        let (_, trace) = bp_solve(&g, model, &[1, 1], &BpOptions::default()).unwrap();
        let summary = exchange_accounting(&g, &trace);
        let rounds = trace.num_rounds() as u64;
        // Two crossing edges, one alpha and one beta each per round.
        assert_eq!(summary.exchanged.iter().sum::<u64>(), 4 * rounds);
        assert_eq!(summary.computed.iter().sum::<u64>(), 2 * g.num_edges() as u64 * rounds);
        assert!(summary.exchanged.iter().zip(&summary.computed).all(|(x, c)| x <= c));

        // Far apart BSs: every user is covered once.
        let lone = NetworkInstance::from_positions(
            vec![Point::new(0.0, 0.0), Point::new(1000.0, 0.0)],
            vec![Point::new(10.0, 0.0), Point::new(990.0, 0.0)],
            150.0,
            1000.0,
            Layout::Line,
            0,
        )
        .unwrap();
        let d2 = DemandModel::new(vec![vec![0.5, 0.5]; 2], 2, 1e8, BackhaulDelay::Uniform(40.0)).unwrap();
        let g2 = build_factor_graph(&lone, &d2);
        assert_eq!(round_counts(&g2).1, vec![0, 0]);
    }

    #[test]
    fn repair_keeps_strongest_beliefs() {
        let p = Placement::from_sets(3, vec![1, 3], &[vec![0, 1, 2], vec![1]]);
        let beliefs = [0.5, 2.0, 2.0, 0.0, 1.0, 0.0];
        let r = repair(&p, &beliefs);
        assert_eq!(r.sets(), vec![vec![1], vec![1]]);
    }

    #[test]
    fn trace_csv_columns() {
        let (inst, demand) = two_cell();
        let table = model_for(&inst, &demand, Scheme::CooperativeBeamforming);
        let model = DelayModel::new(&table, &demand).unwrap();
        let g = build_factor_graph(&inst, &demand);
        let (_, trace) = bp_solve(&g, model, &[1, 1], &BpOptions::default()).unwrap();
        let csv = trace.to_csv();
        let header = csv.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 7 + 4);
        assert_eq!(csv.lines().count(), 1 + trace.num_rounds());
    }
}
