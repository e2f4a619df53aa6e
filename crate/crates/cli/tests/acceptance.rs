//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 4 and 7 are expected to be red; the decisions notes carry the
//! analysis. The test fails if any other criterion goes red.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use fogcache_cli::config::{ExperimentConfig, GammaValue, SweepAxis};
use fogcache_cli::experiment::{
    read_sweep_csv, run_sweep, SweepRow, BP_TRACE_FILE, COMPLEXITY_FILE, MANIFEST_FILE, SWEEP_FILE,
};
use fogcache_cli::verify::{
    greedy_ratio_check, message_check, submodularity_check, wald_check,
};
use fogcache_core::bp::EtaRule;

const KNOWN_RED: [u8; 2] = [4, 7];

struct Outcome {
    id: u8,
    passed: bool,
    detail: String,
    /// Every CSV the criterion produced, concatenated.
    csv: String,
    elapsed: Duration,
}

fn timed(id: u8, limit: Duration, f: impl FnOnce() -> (bool, String, String)) -> Outcome {
    let start = Instant::now();
    let (passed, detail, csv) = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    Outcome {
        id,
        passed: passed && in_time,
        detail: if in_time {
            detail
        } else {
            format!("{detail}; took {elapsed:.1?}, limit {limit:?}")
        },
        csv,
        elapsed,
    }
}

fn read_outputs(dir: &Path) -> String {
    [SWEEP_FILE, BP_TRACE_FILE, COMPLEXITY_FILE, MANIFEST_FILE]
        .iter()
        .filter_map(|f| fs::read_to_string(dir.join(f)).ok())
        .collect()
}

/// Rows by strategy label, in sweep order.
fn by_label(rows: &[SweepRow]) -> BTreeMap<String, Vec<SweepRow>> {
    let mut map: BTreeMap<String, Vec<SweepRow>> = BTreeMap::new();
    for r in rows {
        map.entry(r.strategy.clone()).or_default().push(r.clone());
    }
    map
}

fn sweep(config: &ExperimentConfig, dir: &Path) -> (Vec<SweepRow>, String) {
    run_sweep(config, dir).expect("sweep runs");
    (read_sweep_csv(&dir.join(SWEEP_FILE)).unwrap(), read_outputs(dir))
}

fn criterion1() -> (bool, String, String) {
    let c = wald_check(20, 1000, 11, 0.05).unwrap();
    (c.passed, c.detail, c.csv)
}

fn criterion2() -> (bool, String, String) {
    let c = submodularity_check(1000, 12).unwrap();
    (c.passed, c.detail, c.csv)
}

fn criterion3() -> (bool, String, String) {
    let c = greedy_ratio_check(100, 13).unwrap();
    (c.passed, c.detail, c.csv)
}

fn criterion4() -> (bool, String, String) {
    let literal = message_check(24, 5, 14, EtaRule::DelayGap).unwrap();
    let exhaustive = message_check(24, 5, 14, EtaRule::Exhaustive).unwrap();
    (
        literal.passed,
        format!(
            "delay-gap rule: {}; exhaustive rule: {}",
            literal.detail, exhaustive.detail
        ),
        literal.csv + &exhaustive.csv,
    )
}

fn q_sweep_config(num_files: usize, gamma: GammaValue) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.demand.num_files = num_files;
    c.demand.gamma = gamma;
    c.sweep.axis = SweepAxis::Q;
    c.sweep.values = (1..=10).map(|i| 20.0 * i as f64).collect();
    c
}

fn criterion5(root: &Path) -> (bool, String, String) {
    let scenarios = [
        ("zipf0.65-n1000", q_sweep_config(1000, GammaValue::Number(0.65))),
        ("ramp-n200", q_sweep_config(200, GammaValue::Text("0.2+4.8k/K".into()))),
    ];
    let mut csv = String::new();
    let mut failures = Vec::new();
    let mut worst_bp: f64 = f64::NEG_INFINITY;
    let mut worst_lpc_gpc: f64 = f64::NEG_INFINITY;
    for (name, config) in &scenarios {
        let dir = root.join(name);
        let (rows, text) = sweep(config, &dir);
        csv += &text;
        let n = config.demand.num_files as f64;
        let labels = by_label(&rows);
        // (a) monotone in Q.
        for (label, series) in &labels {
            for w in series.windows(2) {
                if w[1].avg_delay_s > w[0].avg_delay_s * (1.0 + 1e-12) {
                    failures.push(format!("{name} {label}: delay rises at Q={}", w[1].sweep_value));
                }
                if w[1].hit_prob < w[0].hit_prob - 1e-12 {
                    failures.push(format!("{name} {label}: hit falls at Q={}", w[1].sweep_value));
                }
            }
        }
        let delay = |label: &str, i: usize| labels[label][i].avg_delay_s;
        for i in 0..config.sweep.values.len() {
            let q = config.sweep.values[i];
            // (b) cooperative delivery never slower.
            for algo in ["greedy", "bp", "gpc", "lpc"] {
                let (co, non) = (delay(&format!("{algo}-cotc"), i), delay(&format!("{algo}-noncotc"), i));
                if co > non * (1.0 + 1e-12) {
                    failures.push(format!("{name} Q={q}: {algo} cotc {co:.3} > noncotc {non:.3}"));
                }
            }
            for scheme in ["cotc", "noncotc"] {
                let g = delay(&format!("greedy-{scheme}"), i);
                let b = delay(&format!("bp-{scheme}"), i);
                let l = delay(&format!("lpc-{scheme}"), i);
                let p = delay(&format!("gpc-{scheme}"), i);
                // (c) transmission-aware below LPC, LPC at or near GPC.
                if q < n {
                    if g > l || b > l {
                        failures.push(format!(
                            "{name} Q={q} {scheme}: greedy {g:.3} / bp {b:.3} above lpc {l:.3}"
                        ));
                    }
                    worst_lpc_gpc = worst_lpc_gpc.max((l - p) / p);
                    if l > p * 1.10 {
                        failures.push(format!("{name} Q={q} {scheme}: lpc {l:.3} > 1.1 x gpc {p:.3}"));
                    }
                }
                // (d) BP near greedy.
                let gap = (b - g) / g;
                worst_bp = worst_bp.max(gap);
                if gap > 0.10 {
                    failures.push(format!("{name} Q={q} {scheme}: bp {:.1}% above greedy", 100.0 * gap));
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        format!(
            "2 scenarios x 10 capacities x 8 rows; worst bp-vs-greedy gap {:+.2}%, worst lpc-vs-gpc {:+.2}%",
            100.0 * worst_bp,
            100.0 * worst_lpc_gpc
        )
    } else {
        format!("{} violations, first: {}", failures.len(), failures[0])
    };
    (failures.is_empty(), detail, csv)
}

fn criterion6(root: &Path) -> (bool, String, String) {
    let mut c = ExperimentConfig::default();
    c.demand.num_files = 100;
    c.strategies = ["greedy-cotc", "greedy-noncotc", "bp-cotc", "bp-noncotc"]
        .map(String::from)
        .to_vec();
    c.sweep.axis = SweepAxis::Gamma;
    c.sweep.values = vec![0.3, 1.0, 2.0, 3.0, 5.0];
    c.sweep.q = 50;
    let (exact, mut csv) = sweep(&c, &root.join("gamma-exact"));
    c.approx_prefs = true;
    let (approx, text) = sweep(&c, &root.join("gamma-approx"));
    csv += &text;

    let mut failures = Vec::new();
    let mut worst_tail: f64 = 0.0;
    let mut worst_approx: f64 = 0.0;
    let exact = by_label(&exact);
    let approx = by_label(&approx);
    for (label, series) in &exact {
        let d: Vec<f64> = series.iter().map(|r| r.avg_delay_s).collect();
        for i in 0..3 {
            if d[i + 1] >= d[i] {
                failures.push(format!("{label}: delay not decreasing from gamma {}", series[i].sweep_value));
            }
        }
        let tail = (d[4] - d[3]).abs() / d[3];
        worst_tail = worst_tail.max(tail);
        if tail >= 0.05 {
            failures.push(format!("{label}: gamma 3 to 5 changes delay by {:.1}%", 100.0 * tail));
        }
        let a = &approx[&format!("{label}-approx")];
        for (e, x) in series.iter().zip(a) {
            let gap = (x.avg_delay_s - e.avg_delay_s).abs() / e.avg_delay_s;
            worst_approx = worst_approx.max(gap);
            if gap >= 0.10 {
                failures.push(format!(
                    "{label} gamma {}: approximate preferences {:.1}% off",
                    e.sweep_value,
                    100.0 * gap
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!(
            "4 strategies; gamma 3 to 5 change at most {:.2}%, approximate-preference gap at most {:.2}%",
            100.0 * worst_tail,
            100.0 * worst_approx
        )
    } else {
        format!("{} violations, first: {}", failures.len(), failures[0])
    };
    (failures.is_empty(), detail, csv)
}

struct ComplexityRow {
    q: f64,
    strategy: String,
    calc: u64,
    rounds: usize,
    converged: bool,
    computed: u64,
}

fn read_complexity(dir: &Path) -> Vec<ComplexityRow> {
    let text = fs::read_to_string(dir.join(COMPLEXITY_FILE)).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            ComplexityRow {
                q: f[0].parse().unwrap(),
                strategy: f[1].to_string(),
                calc: f[3].parse().unwrap(),
                rounds: f[4].parse().unwrap(),
                converged: f[5] == "true",
                computed: f[7].parse().unwrap(),
            }
        })
        .collect()
}

fn criterion7(root: &Path) -> (bool, String, String) {
    let mut c = ExperimentConfig::default();
    c.demand.num_files = 100;
    c.strategies = vec!["greedy-cotc".into(), "bp-cotc".into()];
    c.sweep.values = (1..=9).map(|i| 10.0 * i as f64).collect();
    c.greedy_mode = "eager".into();
    let eager_dir = root.join("complexity-eager");
    let (_, mut csv) = sweep(&c, &eager_dir);
    c.greedy_mode = "lazy".into();
    c.strategies = vec!["greedy-cotc".into()];
    let lazy_dir = root.join("complexity-lazy");
    let (_, text) = sweep(&c, &lazy_dir);
    csv += &text;

    let rows = read_complexity(&eager_dir);
    let greedy: Vec<&ComplexityRow> = rows.iter().filter(|r| r.strategy == "greedy-cotc").collect();
    let bp: Vec<&ComplexityRow> = rows.iter().filter(|r| r.strategy == "bp-cotc").collect();
    let lazy: Vec<u64> = read_complexity(&lazy_dir).iter().map(|r| r.calc).collect();

    let converged = bp.iter().all(|r| r.converged && r.rounds <= 200);
    let max_rounds = bp.iter().map(|r| r.rounds).max().unwrap_or(0);
    let increasing = greedy.windows(2).all(|w| w[1].calc > w[0].calc);
    // Superlinear: calculations per unit of capacity keep growing.
    let per_q: Vec<f64> = greedy.iter().map(|r| r.calc as f64 / r.q).collect();
    let superlinear = per_q.windows(2).all(|w| w[1] > w[0]);
    let (lo, hi) = bp.iter().fold((u64::MAX, 0), |(lo, hi), r| (lo.min(r.computed), hi.max(r.computed)));
    let bp_spread = (hi - lo) as f64 / lo as f64;
    let bp_flat = bp_spread < 0.20;

    let first = greedy.first().unwrap();
    let last = greedy.last().unwrap();
    let detail = format!(
        "bp converged everywhere: {converged} (max {max_rounds} rounds); eager greedy increasing: {increasing}, \
         superlinear: {superlinear} (Q {}->{}: x{:.2} calculations for x{:.0} capacity; lazy x{:.2}); \
         bp total calculations spread {:.1}% (limit 20%)",
        first.q,
        last.q,
        last.calc as f64 / first.calc as f64,
        last.q / first.q,
        *lazy.last().unwrap() as f64 / lazy[0] as f64,
        100.0 * bp_spread
    );
    (converged && increasing && superlinear && bp_flat, detail, csv)
}

fn run_all(root: &Path) -> Vec<Outcome> {
    let min = |m: u64| Duration::from_secs(60 * m);
    vec![
        timed(1, min(1), criterion1),
        timed(2, min(1), criterion2),
        timed(3, min(2), criterion3),
        timed(4, min(1), criterion4),
        timed(5, min(30), || criterion5(&root.join("c5"))),
        timed(6, min(5), || criterion6(&root.join("c6"))),
        timed(7, min(10), || criterion7(&root.join("c7"))),
    ]
}

#[test]
fn acceptance() {
    let first_dir = tempfile::tempdir().unwrap();
    let second_dir = tempfile::tempdir().unwrap();
    let first = run_all(first_dir.path());
    let second = run_all(second_dir.path());

    let differing: Vec<u8> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a.csv != b.csv)
        .map(|(a, _)| a.id)
        .collect();
    let bytes: usize = first.iter().map(|o| o.csv.len()).sum();
    let determinism = Outcome {
        id: 8,
        passed: differing.is_empty(),
        detail: if differing.is_empty() {
            format!("two runs of criteria 1-7 gave byte-identical CSVs ({bytes} bytes)")
        } else {
            format!("criteria {differing:?} differ between runs")
        },
        csv: String::new(),
        elapsed: second.iter().map(|o| o.elapsed).sum(),
    };

    let mut red = Vec::new();
    for o in first.iter().chain(std::iter::once(&determinism)) {
        let verdict = match (o.passed, KNOWN_RED.contains(&o.id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {} {verdict} [{:.1?}] {}", o.id, o.elapsed, o.detail);
        if !o.passed {
            red.push(o.id);
        }
    }
    let unexpected: Vec<u8> = red.iter().copied().filter(|id| !KNOWN_RED.contains(id)).collect();
    assert!(unexpected.is_empty(), "criteria {unexpected:?} failed");
}
