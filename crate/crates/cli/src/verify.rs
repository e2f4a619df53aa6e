//! Oracle checks shared by the `verify` subcommand and the acceptance
//! tests. Each check returns a one-line verdict and a CSV of its cases.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fogcache_core::bp::{build_factor_graph, BpEngine, BpOptions, EtaRule};
use fogcache_core::delay::{DelayModel, Placement};
use fogcache_core::greedy::greedy_place;
use fogcache_core::model::{
    build_grid_topology, BackhaulDelay, DemandModel, Layout, NetworkInstance, Point,
    TopologyParams,
};
use fogcache_core::oracle::{
    brute_force_optimal, raw_max_product_round, simulate_download, submodularity_probe,
    RawMessages, SlotSimConfig,
};
use fogcache_core::rates::{build_rate_table, ChannelParams, Scheme};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub csv: String,
}

impl Check {
    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn core_err(e: fogcache_core::Error) -> CliError {
    CliError::Solver(e.to_string())
}

fn scheme_for(i: usize) -> Scheme {
    Scheme::ALL[i % 2]
}

/// Slot simulation against `|f| / E{R}` for random (user, subset) pairs of
/// the standard topology. Only cases with more than 50 expected slots
/// count.
pub fn wald_check(cases: usize, trials: usize, seed: u64, tolerance: f64) -> Result<Check, CliError> {
    let inst = build_grid_topology(&TopologyParams::default(), seed).map_err(core_err)?;
    let demand = DemandModel::new(
        vec![vec![1.0]; inst.num_users()],
        1,
        1e8,
        BackhaulDelay::Uniform(40.0),
    )
    .map_err(core_err)?;
    let ch = ChannelParams::default();
    let tables: Vec<_> = Scheme::ALL
        .iter()
        .map(|&s| build_rate_table(&inst, &ch, s))
        .collect::<Result<_, _>>()
        .map_err(core_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("case,scheme,user,subset,expected_slots,theory_s,simulated_s,std_error_s,rel_error\n");
    let mut worst: f64 = 0.0;
    let mut truncated = 0;
    let mut done = 0;
    let mut attempts = 0;
    while done < cases {
        attempts += 1;
        if attempts > 100 * cases {
            return Err(CliError::Solver("not enough slow cases".into()));
        }
        let scheme = scheme_for(done);
        let table = &tables[done % 2];
        let model = DelayModel::new(table, &demand).map_err(core_err)?;
        let k = rng.random_range(0..inst.num_users());
        let serving = inst.serving(k);
        let bits = rng.random_range(1u32..(1 << serving.len()));
        let sets: Vec<Vec<usize>> = (0..inst.num_bs())
            .map(|m| match serving.iter().position(|&b| b == m) {
                Some(b) if bits & (1 << b) != 0 => vec![0],
                _ => vec![],
            })
            .collect();
        let placement = Placement::from_sets(1, vec![1; inst.num_bs()], &sets);
        let theory = model.request_delay(k, 0, &placement);
        let expected_slots = theory / ch.slot_seconds;
        if expected_slots <= 50.0 {
            continue;
        }
        let cfg = SlotSimConfig {
            max_slots: (expected_slots * 100.0) as u64,
            trials,
            seed: seed.wrapping_mul(1000).wrapping_add(done as u64),
        };
        let sim = simulate_download(&model, k, 0, &placement, &cfg).map_err(core_err)?;
        let rel = (sim.mean_delay_s - theory).abs() / theory;
        worst = worst.max(rel);
        truncated += sim.truncated;
        let _ = writeln!(
            csv,
            "{done},{},{k},{bits},{expected_slots:.3},{theory:.9e},{:.9e},{:.9e},{rel:.6e}",
            scheme.name(),
            sim.mean_delay_s,
            sim.std_error_s
        );
        done += 1;
    }
    Ok(Check {
        name: "slot simulation vs expected-rate delay".into(),
        passed: worst < tolerance && truncated == 0,
        detail: format!("{cases} cases, worst relative error {:.3}% (limit {:.1}%), {truncated} truncated trials", 100.0 * worst, 100.0 * tolerance),
        csv,
    })
}

/// Diminishing returns and monotonicity on the standard topology with 100
/// files and Q = 50.
pub fn submodularity_check(trials: usize, seed: u64) -> Result<Check, CliError> {
    let inst = build_grid_topology(&TopologyParams::default(), seed).map_err(core_err)?;
    let demand = DemandModel::zipf(100, vec![0.65; inst.num_users()], 1e8, BackhaulDelay::Uniform(40.0), seed + 1)
        .map_err(core_err)?;
    let ch = ChannelParams::default();
    let mut csv = String::from("scheme,trials,min_slack,min_gain,violations\n");
    let mut passed = true;
    let mut detail = Vec::new();
    for scheme in Scheme::ALL {
        let table = build_rate_table(&inst, &ch, scheme).map_err(core_err)?;
        let model = DelayModel::new(&table, &demand).map_err(core_err)?;
        let r = submodularity_probe(&model, &vec![50; inst.num_bs()], trials, seed, 1e-9);
        passed &= r.passed(1e-9) && r.violations == 0;
        let _ = writeln!(csv, "{},{},{:.9e},{:.9e},{}", scheme.name(), r.trials, r.min_slack, r.min_gain, r.violations);
        detail.push(format!("{}: min slack {:.3e}, min gain {:.3e}", scheme.name(), r.min_slack, r.min_gain));
    }
    Ok(Check {
        name: "diminishing returns and monotonicity".into(),
        passed,
        detail: format!("{trials} triples per scheme; {}", detail.join("; ")),
        csv,
    })
}

/// Greedy improvement over the empty placement relative to the exhaustive
/// optimum, on random micro-instances (M ≤ 3, N ≤ 4, Q ≤ 2, K ≤ 5).
pub fn greedy_ratio_check(instances: usize, seed: u64) -> Result<Check, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ch = ChannelParams { mc_samples: 2_000, ..ChannelParams::default() };
    let mut csv = String::from("case,scheme,num_bs,num_users,num_files,q,empty_s,greedy_s,optimal_s,ratio\n");
    let mut min_ratio = f64::INFINITY;
    let mut sum = 0.0;
    let mut passed = true;
    for case in 0..instances {
        let scheme = scheme_for(case);
        let m = rng.random_range(1..=3);
        let k = rng.random_range(1..=5);
        let n = rng.random_range(2..=4);
        let q = rng.random_range(1..=2);
        let gamma = rng.random_range(0.0..2.0);
        let params = TopologyParams { num_bs: m, num_users: k, ..TopologyParams::default() };
        let inst = build_grid_topology(&params, rng.random()).map_err(core_err)?;
        let demand = DemandModel::zipf(n, vec![gamma; k], 1e8, BackhaulDelay::Uniform(40.0), rng.random())
            .map_err(core_err)?;
        let table = build_rate_table(&inst, &ch, scheme).map_err(core_err)?;
        let model = DelayModel::new(&table, &demand).map_err(core_err)?;
        let caps = vec![q; m];
        let empty = model.average_delay(&Placement::empty(n, caps.clone()));
        let (gp, _) = greedy_place(&model, &caps).map_err(core_err)?;
        let greedy = model.average_delay(&gp);
        let (_, opt) = brute_force_optimal(&model, &caps).map_err(core_err)?;
        let ratio = if empty - opt > 0.0 { (empty - greedy) / (empty - opt) } else { 1.0 };
        passed &= ratio >= 0.5 && opt <= greedy + 1e-12 * greedy;
        min_ratio = min_ratio.min(ratio);
        sum += ratio;
        let _ = writeln!(
            csv,
            "{case},{},{m},{k},{n},{q},{empty:.9e},{greedy:.9e},{opt:.9e},{ratio:.9}",
            scheme.name()
        );
    }
    Ok(Check {
        name: "greedy half-approximation".into(),
        passed,
        detail: format!(
            "{instances} instances, minimum ratio {min_ratio:.4}, mean {:.4}",
            sum / instances as f64
        ),
        csv,
    })
}

/// Random two-BS, three-user, two-file instance; users may fall in the
/// overlap.
fn small_graph_instance(rng: &mut ChaCha8Rng) -> Result<(NetworkInstance, DemandModel), CliError> {
    let bs = vec![Point::new(0.0, 0.0), Point::new(200.0, 0.0)];
    let users: Vec<Point> = (0..3)
        .map(|_| loop {
            let p = Point::new(rng.random_range(-150.0..350.0), rng.random_range(-150.0..150.0));
            if bs.iter().any(|b| b.distance(&p) <= 150.0) {
                break p;
            }
        })
        .collect();
    let inst = NetworkInstance::from_positions(bs, users, 150.0, 200.0, Layout::Line, 0).map_err(core_err)?;
    let gamma = rng.random_range(0.0..2.0);
    let demand = DemandModel::zipf(2, vec![gamma; 3], 1e8, BackhaulDelay::Uniform(40.0), rng.random())
        .map_err(core_err)?;
    Ok((inst, demand))
}

fn log_ratio_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Engine log-ratio messages against literal two-valued max-product for
/// `rounds` undamped rounds on random small graphs.
pub fn message_check(graphs: usize, rounds: usize, seed: u64, rule: EtaRule) -> Result<Check, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ch = ChannelParams { mc_samples: 2_000, ..ChannelParams::default() };
    let mut csv = String::from("graph,scheme,multi_cover_users,q0,q1,first_mismatch_round,max_abs_diff\n");
    let mut matched = 0;
    for case in 0..graphs {
        let scheme = scheme_for(case);
        let (inst, demand) = small_graph_instance(&mut rng)?;
        let caps = vec![rng.random_range(1..=2), rng.random_range(1..=2)];
        let table = build_rate_table(&inst, &ch, scheme).map_err(core_err)?;
        let model = DelayModel::new(&table, &demand).map_err(core_err)?;
        let graph = build_factor_graph(&inst, &demand);
        let opts = BpOptions { damping: 0.0, eta_rule: rule, ..BpOptions::default() };
        let mut engine = BpEngine::new(&graph, model, &caps, opts).map_err(core_err)?;
        let mut raw = RawMessages::uniform(&graph);
        let mut worst: f64 = 0.0;
        let mut first_bad = 0;
        for t in 1..=rounds {
            engine.step().map_err(core_err)?;
            raw_max_product_round(&graph, &model, &caps, &mut raw).map_err(core_err)?;
            for e in 0..graph.num_edges() {
                let d = log_ratio_diff(engine.alpha(e), raw.alpha(e))
                    .max(log_ratio_diff(engine.beta(e), raw.beta(e)));
                worst = worst.max(d);
            }
            if first_bad == 0 && !(worst <= 1e-9) {
                first_bad = t;
            }
        }
        if first_bad == 0 {
            matched += 1;
        }
        let multi = (0..inst.num_users()).filter(|&k| inst.serving(k).len() > 1).count();
        let _ = writeln!(
            csv,
            "{case},{},{multi},{},{},{first_bad},{worst:.3e}",
            scheme.name(),
            caps[0],
            caps[1]
        );
    }
    let rule_name = match rule {
        EtaRule::DelayGap => "delay-gap",
        EtaRule::Exhaustive => "exhaustive",
    };
    Ok(Check {
        name: format!("{rule_name} messages vs literal max-product"),
        passed: matched == graphs,
        detail: format!("{matched}/{graphs} graphs agree to 1e-9 over {rounds} rounds"),
        csv,
    })
}

/// The `verify` suite: quick versions of every oracle comparison.
pub fn run_suite(seed: u64) -> Result<Vec<Check>, CliError> {
    Ok(vec![
        wald_check(6, 300, seed, 0.05)?,
        submodularity_check(300, seed)?,
        greedy_ratio_check(40, seed)?,
        message_check(20, 5, seed, EtaRule::Exhaustive)?,
    ])
}
