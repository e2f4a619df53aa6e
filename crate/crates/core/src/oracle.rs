//! Independent reference computations for small instances: exhaustive
//! optimum, slot-level download simulation, literal max-product messages
//! and diminishing-returns checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::bp::{FactorGraph, FactorKind};
use crate::delay::{DelayModel, Placement};
use crate::rates::Scheme;
use crate::{Error, Result};

/// Enumeration limit for `brute_force_optimal`.
pub const MAX_ENUMERATION: f64 = 1e7;

/// Variable limit for literal max-product.
pub const MAX_RAW_VARIABLES: usize = 6;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All subsets of `0..n` with at most `q` elements, as sorted vectors.
fn small_subsets(n: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..q.min(n) {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |&l: &usize| l + 1);
            for x in start..n {
                let mut t = s.clone();
                t.push(x);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Minimum-delay feasible placement by enumerating every per-BS subset of
/// at most `Q_m` files. The first minimum in enumeration order wins.
pub fn brute_force_optimal(model: &DelayModel, capacities: &[usize]) -> Result<(Placement, f64)> {
    let n_files = model.num_files();
    let count: f64 = capacities
        .iter()
        .map(|&q| (0..=q.min(n_files)).map(|s| binomial(n_files, s)).sum::<f64>())
        .product();
    if count > MAX_ENUMERATION {
        return Err(Error::TooLarge(count));
    }
    let choices: Vec<Vec<Vec<usize>>> = capacities.iter().map(|&q| small_subsets(n_files, q)).collect();
    let mut idx = vec![0usize; capacities.len()];
    let mut best: Option<(Placement, f64)> = None;
    loop {
        let sets: Vec<Vec<usize>> = idx.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect();
        let p = Placement::from_sets(n_files, capacities.to_vec(), &sets);
        let d = model.average_delay(&p);
        if best.as_ref().is_none_or(|(_, b)| d < *b) {
            best = Some((p, d));
        }
        // Odometer over BSs.
        let mut m = 0;
        loop {
            if m == idx.len() {
                return Ok(best.expect("at least the empty placement"));
            }
            idx[m] += 1;
            if idx[m] < choices[m].len() {
                break;
            }
            idx[m] = 0;
            m += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotSimConfig {
    pub max_slots: u64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SlotSimConfig {
    fn default() -> Self {
        SlotSimConfig {
            max_slots: 1_000_000,
            trials: 2_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub mean_delay_s: f64,
    pub std_error_s: f64,
    pub mean_slots: f64,
    /// Trials that hit `max_slots` before completing.
    pub truncated: usize,
    /// Whether the file came over the backhaul first.
    pub uncached: bool,
}

/// Simulates the download of file `n` by user `k` slot by slot: each slot
/// draws fresh Exp(1) power gains, the transmitting BSs deliver
/// `B log2(1 + Σ c g) Δt` bits, and the download ends in the first slot where
/// the delivered total reaches the file size. Uncached files add the
/// backhaul delay and use the uncached transmit set.
pub fn simulate_download(
    model: &DelayModel,
    k: usize,
    n: usize,
    placement: &Placement,
    config: &SlotSimConfig,
) -> Result<SimReport> {
    if config.trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let table = model.table;
    let user = table.user(k);
    let mask = model.caching_mask(k, n, placement);
    let uncached = mask == 0;
    let candidates = if uncached { table.full_mask(k) } else { mask };
    let transmit: Vec<f64> = match model.scheme() {
        Scheme::CooperativeBeamforming => (0..user.serving.len())
            .filter(|b| candidates & (1 << b) != 0)
            .map(|b| user.gains[b])
            .collect(),
        Scheme::NonCooperative => {
            let best = (0..user.serving.len())
                .filter(|b| candidates & (1 << b) != 0)
                .max_by(|&a, &b| user.gains[a].total_cmp(&user.gains[b]).then(b.cmp(&a)))
                .expect("non-empty transmit set");
            vec![user.gains[best]]
        }
    };
    let ch = &table.channel;
    let bits_per_slot = ch.bandwidth_hz * ch.slot_seconds / std::f64::consts::LN_2;
    let target = model.demand.file_bits;
    let outcomes: Vec<Option<u64>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial as u64);
            let mut delivered = 0.0;
            for slot in 1..=config.max_slots {
                let snr: f64 = transmit.iter().map(|c| c * rng.sample::<f64, _>(Exp1)).sum();
                delivered += bits_per_slot * snr.ln_1p();
                if delivered >= target {
                    return Some(slot);
                }
            }
            None
        })
        .collect();
    let truncated = outcomes.iter().filter(|o| o.is_none()).count();
    let slots: Vec<f64> = outcomes.iter().flatten().map(|&s| s as f64).collect();
    let count = slots.len().max(1) as f64;
    let mean_slots = slots.iter().sum::<f64>() / count;
    let var = slots.iter().map(|s| (s - mean_slots).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
    let extra = if uncached { model.demand.backhaul_delay(k, n) } else { 0.0 };
    Ok(SimReport {
        mean_delay_s: mean_slots * ch.slot_seconds + extra,
        std_error_s: (var / count).sqrt() * ch.slot_seconds,
        mean_slots,
        truncated,
        uncached,
    })
}

/// Two-valued messages `[m(0), m(1)]` on every edge, normalized to sum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMessages {
    pub to_factor: Vec<[f64; 2]>,
    pub to_variable: Vec<[f64; 2]>,
}

impl RawMessages {
    pub fn uniform(graph: &FactorGraph) -> Self {
        RawMessages {
            to_factor: vec![[0.5, 0.5]; graph.num_edges()],
            to_variable: vec![[0.5, 0.5]; graph.num_edges()],
        }
    }

    pub fn alpha(&self, e: usize) -> f64 {
        (self.to_factor[e][1] / self.to_factor[e][0]).ln()
    }

    pub fn beta(&self, e: usize) -> f64 {
        (self.to_variable[e][1] / self.to_variable[e][0]).ln()
    }
}

fn normalize(m: [f64; 2]) -> [f64; 2] {
    let s = m[0] + m[1];
    [m[0] / s, m[1] / s]
}

/// Value of factor `j` for the on/off assignment `bits` of its neighbors.
fn factor_value(graph: &FactorGraph, model: &DelayModel, capacities: &[usize], j: usize, bits: u32) -> f64 {
    match graph.kind(j) {
        FactorKind::Request { file, user } => {
            let p = model.demand.preference(user, file);
            (-p * model.delay_for_mask(user, file, bits)).exp()
        }
        FactorKind::Capacity { bs } => {
            if (bits.count_ones() as usize) <= capacities[bs] {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// One synchronous round of literal max-product: every factor message is
/// the max over assignments of the other neighbors of the factor value
/// times their incoming messages, then every variable message is the
/// product of the other incoming factor messages.
pub fn raw_max_product_round(
    graph: &FactorGraph,
    model: &DelayModel,
    capacities: &[usize],
    messages: &mut RawMessages,
) -> Result<()> {
    if graph.num_variables() > MAX_RAW_VARIABLES {
        return Err(Error::TooLarge(graph.num_variables() as f64));
    }
    let mut to_variable = messages.to_variable.clone();
    for j in 0..graph.num_factors() {
        let edges: Vec<usize> = graph.factor_edges(j).collect();
        let width = edges.len();
        for (pos, &e) in edges.iter().enumerate() {
            let mut out = [0.0f64; 2];
            for bits in 0u32..(1 << width) {
                let mut v = factor_value(graph, model, capacities, j, bits);
                for (b, &other) in edges.iter().enumerate() {
                    if b != pos {
                        v *= messages.to_factor[other][((bits >> b) & 1) as usize];
                    }
                }
                let x = ((bits >> pos) & 1) as usize;
                out[x] = out[x].max(v);
            }
            to_variable[e] = normalize(out);
        }
    }
    let mut to_factor = messages.to_factor.clone();
    for i in 0..graph.num_variables() {
        let edges = graph.variable_edges(i);
        for &e in edges {
            let mut out = [1.0f64; 2];
            for &other in edges {
                if other != e {
                    out[0] *= to_variable[other][0];
                    out[1] *= to_variable[other][1];
                }
            }
            to_factor[e] = normalize(out);
        }
    }
    messages.to_variable = to_variable;
    messages.to_factor = to_factor;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub trials: usize,
    /// Smallest `gain(X, s) - gain(X', s)` over trials, `X ⊆ X'`.
    pub min_slack: f64,
    /// Smallest single-element gain seen.
    pub min_gain: f64,
    pub violations: usize,
}

impl ProbeReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.min_slack >= -tolerance && self.min_gain >= -tolerance
    }
}

/// Samples feasible `X ⊆ X'` and `s ∉ X'`, and checks that adding `s`
/// lowers the average delay at least as much from `X` as from `X'`.
pub fn submodularity_probe(
    model: &DelayModel,
    capacities: &[usize],
    trials: usize,
    seed: u64,
    tolerance: f64,
) -> ProbeReport {
    let n_files = model.num_files();
    let num_bs = capacities.len();
    let total = n_files * num_bs;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    let mut min_gain = f64::INFINITY;
    let mut violations = 0;
    let mut done = 0;
    while done < trials {
        let mut outer = Placement::empty(n_files, capacities.to_vec());
        for m in 0..num_bs {
            let size = rng.random_range(0..=capacities[m].min(n_files));
            let mut files: Vec<usize> = (0..n_files).collect();
            for t in 0..size {
                let pick = rng.random_range(t..n_files);
                files.swap(t, pick);
                outer.insert(files[t], m);
            }
        }
        if outer.total_cached() == total {
            continue;
        }
        let mut inner = Placement::empty(n_files, capacities.to_vec());
        for i in outer.elements() {
            if rng.random_bool(0.5) {
                let (n, m) = inner.element(i);
                inner.insert(n, m);
            }
        }
        let s = loop {
            let s = rng.random_range(0..total);
            let (n, m) = outer.element(s);
            if !outer.is_cached(n, m) {
                break (n, m);
            }
        };
        let gain = |p: &Placement| {
            let mut q = p.clone();
            q.insert(s.0, s.1);
            model.average_delay(p) - model.average_delay(&q)
        };
        let (g_inner, g_outer) = (gain(&inner), gain(&outer));
        let slack = g_inner - g_outer;
        min_slack = min_slack.min(slack);
        min_gain = min_gain.min(g_inner).min(g_outer);
        if slack < -tolerance || g_inner < -tolerance || g_outer < -tolerance {
            violations += 1;
        }
        done += 1;
    }
    ProbeReport {
        trials,
        min_slack,
        min_gain,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::{build_factor_graph, BpEngine, BpOptions, EtaRule};
    use crate::model::{BackhaulDelay, DemandModel, Layout, NetworkInstance, Point};
    use crate::rates::{build_rate_table, expected_rate_closed, ChannelParams, ExpectedRateTable};

    fn channel() -> ChannelParams {
        ChannelParams {
            mc_samples: 4_000,
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

    fn table(inst: &NetworkInstance, scheme: Scheme) -> ExpectedRateTable {
        build_rate_table(inst, &channel(), scheme).unwrap()
    }

    #[test]
    fn subsets_and_binomials() {
        assert_eq!(small_subsets(3, 2).len(), 1 + 3 + 3);
        assert_eq!(small_subsets(2, 5).len(), 4);
        assert_eq!(binomial(5, 2), 10.0);
    }

    #[test]
    fn brute_force_small_cases() {
        let (inst, demand) = two_cell();
        let t = table(&inst, Scheme::CooperativeBeamforming);
        let model = DelayModel::new(&t, &demand).unwrap();
        let (p, d) = brute_force_optimal(&model, &[0, 0]).unwrap();
        assert_eq!(p.total_cached(), 0);
        assert_eq!(d, model.average_delay(&p));
        let (p, d) = brute_force_optimal(&model, &[1, 1]).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let sets = [
                    if a < 2 { vec![a] } else { vec![] },
                    if b < 2 { vec![b] } else { vec![] },
                ];
                let q = Placement::from_sets(2, vec![1, 1], &sets);
                assert!(model.average_delay(&q) >= d);
            }
        }
        assert!(p.is_feasible());

        // Single BS, single user: the top-Q files.
        let one = NetworkInstance::from_positions(
            vec![Point::new(0.0, 0.0)],
            vec![Point::new(20.0, 0.0)],
            150.0,
            200.0,
            Layout::Line,
            0,
        )
        .unwrap();
        let d1 = DemandModel::new(vec![vec![0.1, 0.35, 0.05, 0.5]], 4, 1e8, BackhaulDelay::Uniform(40.0)).unwrap();
        let t1 = table(&one, Scheme::NonCooperative);
        let m1 = DelayModel::new(&t1, &d1).unwrap();
        assert_eq!(brute_force_optimal(&m1, &[2]).unwrap().0.files_at(0), vec![1, 3]);
    }

    #[test]
    fn brute_force_guard() {
        let (inst, _) = two_cell();
        let demand = DemandModel::zipf(40, vec![1.0; 3], 1e8, BackhaulDelay::Uniform(40.0), 1).unwrap();
        let t = table(&inst, Scheme::NonCooperative);
        let model = DelayModel::new(&t, &demand).unwrap();
        assert!(matches!(brute_force_optimal(&model, &[10, 10]), Err(Error::TooLarge(_))));
    }

    #[test]
    fn single_slot_regime() {
        let (inst, _) = two_cell();
        let demand = DemandModel::new(vec![vec![0.5, 0.5]; 3], 2, 1.0, BackhaulDelay::Uniform(40.0)).unwrap();
        let t = table(&inst, Scheme::CooperativeBeamforming);
        let model = DelayModel::new(&t, &demand).unwrap();
        let p = Placement::from_sets(2, vec![1, 1], &[vec![0], vec![]]);
        let cfg = SlotSimConfig { trials: 200, ..SlotSimConfig::default() };
        let r = simulate_download(&model, 0, 0, &p, &cfg).unwrap();
        // One bit fits in the first slot unless the fade is absurdly deep.
        assert_eq!(r.mean_slots, 1.0);
        assert_eq!(r.mean_delay_s, 0.02);
        let miss = simulate_download(&model, 0, 1, &p, &cfg).unwrap();
        assert!(miss.uncached);
        assert_eq!(miss.mean_delay_s, 40.02);
    }

    #[test]
    fn slot_simulation_matches_expected_rate() {
        // User at the cell edge of a lone BS: c = 1.
        let inst = NetworkInstance::from_positions(
            vec![Point::new(0.0, 0.0)],
            vec![Point::new(150.0, 0.0)],
            150.0,
            200.0,
            Layout::Line,
            0,
        )
        .unwrap();
        let demand = DemandModel::new(vec![vec![1.0, 0.0]], 2, 1e8, BackhaulDelay::Uniform(40.0)).unwrap();
        let t = table(&inst, Scheme::CooperativeBeamforming);
        let model = DelayModel::new(&t, &demand).unwrap();
        let cached = Placement::from_sets(2, vec![1], &[vec![0]]);
        let cfg = SlotSimConfig { trials: 400, ..SlotSimConfig::default() };
        let r = simulate_download(&model, 0, 0, &cached, &cfg).unwrap();
        let exact = 1e8 / expected_rate_closed(1.0, 5e6);
        assert!((exact - 23.25).abs() < 0.01);
        assert_eq!(r.truncated, 0);
        assert!((r.mean_delay_s - exact).abs() / exact < 0.05);
        let empty = Placement::empty(2, vec![1]);
        let miss = simulate_download(&model, 0, 0, &empty, &cfg).unwrap();
        assert!((miss.mean_delay_s - 40.0 - r.mean_delay_s).abs() < 1e-9);
    }

    #[test]
    fn vacuous_capacity_messages_are_flat() {
        let one = NetworkInstance::from_positions(
            vec![Point::new(0.0, 0.0)],
            vec![Point::new(20.0, 0.0)],
            150.0,
            200.0,
            Layout::Line,
            0,
        )
        .unwrap();
        let demand = DemandModel::new(vec![vec![0.5, 0.3, 0.2]], 3, 1e8, BackhaulDelay::Uniform(40.0)).unwrap();
        let t = table(&one, Scheme::NonCooperative);
        let model = DelayModel::new(&t, &demand).unwrap();
        let g = build_factor_graph(&one, &demand);
        let mut raw = RawMessages::uniform(&g);
        for _ in 0..3 {
            raw_max_product_round(&g, &model, &[3], &mut raw).unwrap();
            for e in g.factor_edges(g.capacity_factor(0)) {
                assert!(raw.beta(e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn first_round_capacity_messages() {
        // With uniform inputs every capacity message starts flat; after one
        // round the variable messages carry the request gaps, and the next
        // capacity messages follow the sorted-threshold rule.
        let (inst, demand) = two_cell();
        let t = table(&inst, Scheme::CooperativeBeamforming);
        let model = DelayModel::new(&t, &demand).unwrap();
        let g = build_factor_graph(&inst, &demand);
        let mut raw = RawMessages::uniform(&g);
        raw_max_product_round(&g, &model, &[1, 1], &mut raw).unwrap();
        for m in 0..2 {
            for e in g.factor_edges(g.capacity_factor(m)) {
                assert!(raw.beta(e).abs() < 1e-12);
            }
        }
        let before: Vec<f64> = (0..g.num_edges()).map(|e| raw.alpha(e)).collect();
        raw_max_product_round(&g, &model, &[1, 1], &mut raw).unwrap();
        for m in 0..2 {
            let edges: Vec<usize> = g.factor_edges(g.capacity_factor(m)).collect();
            assert_eq!(edges.len(), 2);
            for (pos, &e) in edges.iter().enumerate() {
                let expect = (-before[edges[1 - pos]]).min(0.0);
                assert!((raw.beta(e) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exhaustive_rule_tracks_raw_max_product() {
        let (inst, demand) = two_cell();
        for scheme in Scheme::ALL {
            let t = table(&inst, scheme);
            let model = DelayModel::new(&t, &demand).unwrap();
            let g = build_factor_graph(&inst, &demand);
            let caps = [1, 1];
            let opts = BpOptions { damping: 0.0, eta_rule: EtaRule::Exhaustive, ..BpOptions::default() };
            let mut engine = BpEngine::new(&g, model, &caps, opts).unwrap();
            let mut raw = RawMessages::uniform(&g);
            for _ in 0..5 {
                engine.step().unwrap();
                raw_max_product_round(&g, &model, &caps, &mut raw).unwrap();
                for e in 0..g.num_edges() {
                    assert!((engine.beta(e) - raw.beta(e)).abs() < 1e-9);
                    assert!((engine.alpha(e) - raw.alpha(e)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn single_cover_graphs_agree_under_delay_gap_rule() {
        let inst = NetworkInstance::from_positions(
            vec![Point::new(0.0, 0.0), Point::new(1000.0, 0.0)],
            vec![Point::new(30.0, 0.0), Point::new(980.0, 10.0), Point::new(1050.0, 0.0)],
            150.0,
            1000.0,
            Layout::Line,
            0,
        )
        .unwrap();
        let demand = DemandModel::new(
            vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.2, 0.6], vec![0.1, 0.5, 0.4]],
            3,
            1e8,
            BackhaulDelay::Uniform(40.0),
        )
        .unwrap();
        let t = table(&inst, Scheme::CooperativeBeamforming);
        let model = DelayModel::new(&t, &demand).unwrap();
        let g = build_factor_graph(&inst, &demand);
        let caps = [1, 2];
        let opts = BpOptions { damping: 0.0, ..BpOptions::default() };
        let mut engine = BpEngine::new(&g, model, &caps, opts).unwrap();
        let mut raw = RawMessages::uniform(&g);
        for _ in 0..5 {
            engine.step().unwrap();
            raw_max_product_round(&g, &model, &caps, &mut raw).unwrap();
            for e in 0..g.num_edges() {
                assert!((engine.beta(e) - raw.beta(e)).abs() < 1e-9);
                assert!((engine.alpha(e) - raw.alpha(e)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn raw_ratios_ignore_normalization() {
        let (inst, demand) = two_cell();
        let t = table(&inst, Scheme::NonCooperative);
        let model = DelayModel::new(&t, &demand).unwrap();
        let g = build_factor_graph(&inst, &demand);
        let mut a = RawMessages::uniform(&g);
        let mut b = RawMessages {
            to_factor: vec![[3.0, 3.0]; g.num_edges()],
            to_variable: vec![[0.2, 0.2]; g.num_edges()],
        };
        for _ in 0..3 {
            raw_max_product_round(&g, &model, &[1, 1], &mut a).unwrap();
            raw_max_product_round(&g, &model, &[1, 1], &mut b).unwrap();
        }
        for e in 0..g.num_edges() {
            assert!((a.alpha(e) - b.alpha(e)).abs() < 1e-12);
            assert!((a.beta(e) - b.beta(e)).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_on_small_instances() {
        let (inst, demand) = two_cell();
        for scheme in Scheme::ALL {
            let t = table(&inst, scheme);
            let model = DelayModel::new(&t, &demand).unwrap();
            let report = submodularity_probe(&model, &[2, 2], 1000, 3, 1e-9);
            assert_eq!(report.violations, 0);
            assert!(report.passed(1e-9));
            assert!(report.min_slack > -1e-9);
        }
    }

    #[test]
    fn probe_strict_case_for_beamforming() {
        // User 1 is served by both BSs; file 1 at BS 1 helps more when BS 0
        // does not yet hold it.
        let (inst, demand) = two_cell();
        let t = table(&inst, Scheme::CooperativeBeamforming);
        let model = DelayModel::new(&t, &demand).unwrap();
        let inner = Placement::from_sets(2, vec![2, 2], &[vec![], vec![0]]);
        let outer = Placement::from_sets(2, vec![2, 2], &[vec![1], vec![0]]);
        let gain = |p: &Placement| {
            let mut q = p.clone();
            q.insert(1, 1);
            model.average_delay(p) - model.average_delay(&q)
        };
        assert!(gain(&inner) > gain(&outer) + 1e-6);

        // Lone BS and user: no other element touches the probed request.
        let one = NetworkInstance::from_positions(
            vec![Point::new(0.0, 0.0)],
            vec![Point::new(20.0, 0.0)],
            150.0,
            200.0,
            Layout::Line,
            0,
        )
        .unwrap();
        let d1 = DemandModel::new(vec![vec![0.6, 0.4]], 2, 1e8, BackhaulDelay::Uniform(40.0)).unwrap();
        let t1 = table(&one, Scheme::NonCooperative);
        let m1 = DelayModel::new(&t1, &d1).unwrap();
        let r = submodularity_probe(&m1, &[2], 200, 1, 1e-9);
        assert!(r.min_slack.abs() < 1e-12);
    }
}
