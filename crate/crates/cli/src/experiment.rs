//! Scenario construction, solver dispatch and sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use fogcache_core::bp::{bp_solve, build_factor_graph, BpTrace};
use fogcache_core::delay::{DelayModel, EvalReport, Feasibility, Placement};
use fogcache_core::greedy::{greedy_solve, gpc_place, lpc_place, GreedyMode, SolveTrace};
use fogcache_core::model::{
    aggregate_popularity, build_grid_topology, BackhaulDelay, DemandModel, GammaSpec,
    NetworkInstance,
};
use fogcache_core::rates::{build_rate_table, ExpectedRateTable, Scheme};

use crate::config::{ExperimentConfig, Strategy, SweepAxis};
use crate::CliError;

pub const SWEEP_FILE: &str = "sweep.csv";
pub const BP_TRACE_FILE: &str = "bp_trace.csv";
pub const COMPLEXITY_FILE: &str = "complexity.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub const SWEEP_HEADER: &str =
    "sweep_value,strategy,avg_delay_s,hit_prob,calc_count,bp_rounds,messages_exchanged";
pub const COMPLEXITY_HEADER: &str =
    "sweep_value,strategy,greedy_mode,calc_count,bp_rounds,bp_converged,bp_computed_per_round,bp_computed,bp_exchanged";

fn solver_err(e: fogcache_core::Error) -> CliError {
    CliError::Solver(e.to_string())
}

pub fn build_instance(config: &ExperimentConfig) -> Result<NetworkInstance, CliError> {
    build_grid_topology(&config.topology()?, config.instance.seed)
        .map_err(|e| CliError::Config(e.to_string()))
}

pub fn build_demand(
    config: &ExperimentConfig,
    gamma: GammaSpec,
    num_users: usize,
) -> Result<DemandModel, CliError> {
    DemandModel::zipf(
        config.demand.num_files,
        gamma.gammas(num_users),
        config.demand.file_bits,
        BackhaulDelay::Uniform(config.demand.backhaul_delay),
        config.demand.seed,
    )
    .map_err(|e| CliError::Config(e.to_string()))
}

/// Demand where every user's row is the average row of its owner BS's cell.
pub fn approximate_demand(
    instance: &NetworkInstance,
    demand: &DemandModel,
) -> Result<DemandModel, CliError> {
    let agg = aggregate_popularity(demand, instance);
    let rows = (0..demand.num_users())
        .map(|k| agg.local[instance.serving(k)[0]].clone())
        .collect();
    demand.with_preferences(rows).map_err(solver_err)
}

/// Rate tables for both delivery schemes.
pub struct Tables {
    pub cotc: ExpectedRateTable,
    pub noncotc: ExpectedRateTable,
}

impl Tables {
    pub fn build(instance: &NetworkInstance, config: &ExperimentConfig) -> Result<Self, CliError> {
        let ch = config.channel_params();
        let build = |s| build_rate_table(instance, &ch, s).map_err(|e| CliError::Config(e.to_string()));
        Ok(Tables {
            cotc: build(Scheme::CooperativeBeamforming)?,
            noncotc: build(Scheme::NonCooperative)?,
        })
    }

    pub fn get(&self, scheme: Scheme) -> &ExpectedRateTable {
        match scheme {
            Scheme::CooperativeBeamforming => &self.cotc,
            Scheme::NonCooperative => &self.noncotc,
        }
    }
}

/// Everything one placement run needs.
pub struct SolveContext<'a> {
    pub instance: &'a NetworkInstance,
    /// Preferences used for evaluation.
    pub demand: &'a DemandModel,
    /// Preferences the strategies see (differs under approximate mode).
    pub solve_demand: &'a DemandModel,
    pub tables: &'a Tables,
    pub capacities: Vec<usize>,
    pub config: &'a ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub placement: Placement,
    pub greedy: Option<SolveTrace>,
    pub bp: Option<BpTrace>,
}

impl Solution {
    pub fn calc_count(&self) -> u64 {
        match (&self.greedy, &self.bp) {
            (Some(g), _) => g.calculations,
            (_, Some(b)) => b.total_computed(),
            _ => 0,
        }
    }
}

pub fn solve(strategy: Strategy, ctx: &SolveContext) -> Result<Solution, CliError> {
    let caps = &ctx.capacities;
    match strategy {
        Strategy::Greedy(scheme) => {
            let model = DelayModel::new(ctx.tables.get(scheme), ctx.solve_demand).map_err(solver_err)?;
            let (placement, trace) =
                greedy_solve(&model, caps, ctx.config.greedy_mode()?).map_err(solver_err)?;
            Ok(Solution { placement, greedy: Some(trace), bp: None })
        }
        Strategy::Bp(scheme) => {
            let model = DelayModel::new(ctx.tables.get(scheme), ctx.solve_demand).map_err(solver_err)?;
            let graph = build_factor_graph(ctx.instance, ctx.solve_demand);
            let (placement, trace) =
                bp_solve(&graph, model, caps, &ctx.config.bp_options()).map_err(solver_err)?;
            Ok(Solution { placement, greedy: None, bp: Some(trace) })
        }
        Strategy::Gpc | Strategy::Lpc => {
            let agg = aggregate_popularity(ctx.solve_demand, ctx.instance);
            let placement = if strategy == Strategy::Gpc {
                gpc_place(caps, &agg)
            } else {
                lpc_place(caps, &agg)
            };
            Ok(Solution { placement, greedy: None, bp: None })
        }
    }
}

pub fn evaluate(
    placement: &Placement,
    scheme: Scheme,
    ctx: &SolveContext,
) -> Result<EvalReport, CliError> {
    DelayModel::new(ctx.tables.get(scheme), ctx.demand)
        .and_then(|m| m.objective(placement, Feasibility::Required))
        .map_err(solver_err)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub strategy: String,
    pub avg_delay_s: f64,
    pub hit_prob: f64,
    pub calc_count: u64,
    pub bp_rounds: usize,
    pub messages_exchanged: u64,
}

impl SweepRow {
    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.sweep_value.to_string(),
            self.strategy.clone(),
            format!("{:.12e}", self.avg_delay_s),
            format!("{:.12e}", self.hit_prob),
            self.calc_count.to_string(),
            self.bp_rounds.to_string(),
            self.messages_exchanged.to_string(),
        ]
    }
}

/// Results of one (sweep value, strategy) cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub sweep_value: f64,
    pub strategy: Strategy,
    pub label: String,
    pub rows: Vec<SweepRow>,
    pub solution: Solution,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<Cell>,
    pub files: Vec<PathBuf>,
}

impl SweepResult {
    pub fn rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.cells.iter().flat_map(|c| &c.rows)
    }
}

fn base_label(strategy: Strategy, approx: bool) -> String {
    if approx && strategy.uses_preferences() {
        format!("{strategy}-approx")
    } else {
        strategy.to_string()
    }
}

fn row_label(strategy: Strategy, scheme: Scheme, approx: bool) -> String {
    let l = strategy.label(scheme);
    if approx && strategy.uses_preferences() {
        format!("{l}-approx")
    } else {
        l
    }
}

/// Runs every (sweep value, strategy) cell and writes the result files into
/// `out`. Cells run in parallel; output order follows the config.
pub fn run_sweep(config: &ExperimentConfig, out: &Path) -> Result<SweepResult, CliError> {
    config.validate()?;
    let strategies = config.strategy_list()?;
    let instance = build_instance(config)?;
    let tables = Tables::build(&instance, config)?;
    let base_gamma = config.demand.gamma.spec()?;
    let k = instance.num_users();

    // One demand per sweep value.
    let mut demands = Vec::new();
    for &v in &config.sweep.values {
        let gamma = match config.sweep.axis {
            SweepAxis::Q => base_gamma,
            SweepAxis::Gamma => GammaSpec::Constant(v),
        };
        let demand = build_demand(config, gamma, k)?;
        let solve_demand = if config.approx_prefs {
            approximate_demand(&instance, &demand)?
        } else {
            demand.clone()
        };
        demands.push((demand, solve_demand));
    }

    let jobs: Vec<(usize, Strategy)> = (0..config.sweep.values.len())
        .flat_map(|i| strategies.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<Result<Cell, CliError>> = jobs
        .par_iter()
        .map(|&(i, strategy)| {
            let value = config.sweep.values[i];
            let q = match config.sweep.axis {
                SweepAxis::Q => value as usize,
                SweepAxis::Gamma => config.sweep.q,
            };
            let ctx = SolveContext {
                instance: &instance,
                demand: &demands[i].0,
                solve_demand: &demands[i].1,
                tables: &tables,
                capacities: vec![q; instance.num_bs()],
                config,
            };
            let cell_err = |e: CliError| match e {
                CliError::Solver(msg) => CliError::Solver(format!(
                    "{} = {value}, strategy {strategy}: {msg}",
                    config.sweep.axis
                )),
                other => other,
            };
            let solution = solve(strategy, &ctx).map_err(cell_err)?;
            let mut rows = Vec::new();
            for scheme in strategy.schemes() {
                let report = evaluate(&solution.placement, scheme, &ctx).map_err(cell_err)?;
                rows.push(SweepRow {
                    sweep_value: value,
                    strategy: row_label(strategy, scheme, config.approx_prefs),
                    avg_delay_s: report.average_delay_s,
                    hit_prob: report.hit_probability,
                    calc_count: solution.calc_count(),
                    bp_rounds: solution.bp.as_ref().map_or(0, |t| t.num_rounds()),
                    messages_exchanged: solution.bp.as_ref().map_or(0, |t| t.total_exchanged()),
                });
            }
            Ok(Cell {
                sweep_value: value,
                strategy,
                label: base_label(strategy, config.approx_prefs),
                rows,
                solution,
            })
        })
        .collect();
    let cells = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut result = SweepResult { cells, files: Vec::new() };
    result.files = write_outputs(config, &result, out)?;
    Ok(result)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER.split(',')).expect("in-memory write");
    for row in result.rows() {
        w.write_record(row.csv_record()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn bp_trace_csv(result: &SweepResult) -> String {
    let mut s = String::new();
    for cell in &result.cells {
        let Some(trace) = &cell.solution.bp else { continue };
        let body = trace.to_csv();
        let mut lines = body.lines();
        let header = lines.next().unwrap_or_default();
        if s.is_empty() {
            let _ = writeln!(s, "sweep_value,strategy,{header}");
        }
        for line in lines {
            let _ = writeln!(s, "{},{},{line}", cell.sweep_value, cell.label);
        }
    }
    s
}

pub fn complexity_csv(config: &ExperimentConfig, result: &SweepResult) -> String {
    let mode = match config.greedy_mode() {
        Ok(GreedyMode::Eager) => "eager",
        _ => "lazy",
    };
    let mut s = String::from(COMPLEXITY_HEADER);
    s.push('\n');
    for cell in &result.cells {
        let sol = &cell.solution;
        let (rounds, converged, per_round, computed, exchanged) = match &sol.bp {
            Some(t) => (
                t.num_rounds(),
                t.converged.to_string(),
                t.rounds.first().map_or(0, |r| r.computed.iter().sum::<u64>()),
                t.total_computed(),
                t.total_exchanged(),
            ),
            None => (0, String::new(), 0, 0, 0),
        };
        let greedy_mode = if sol.greedy.is_some() { mode } else { "" };
        let calc = sol.greedy.as_ref().map_or(0, |g| g.calculations);
        let _ = writeln!(
            s,
            "{},{},{greedy_mode},{calc},{rounds},{converged},{per_round},{computed},{exchanged}",
            cell.sweep_value, cell.label
        );
    }
    s
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Run manifest: tool version, the resolved configuration, and a digest of
/// every output file. It holds no timestamps or output paths, so reruns are
/// byte-identical wherever they are written.
pub fn manifest(config: &ExperimentConfig, outputs: &[(&str, &str)]) -> String {
    let config = ExperimentConfig { out: PathBuf::new(), ..config.clone() };
    let mut s = String::new();
    let _ = writeln!(s, "tool = \"fogcache {}\"", env!("CARGO_PKG_VERSION"));
    for (name, contents) in outputs {
        let _ = writeln!(s, "# sha256 {name} {}", sha256_hex(contents.as_bytes()));
    }
    s.push('\n');
    s.push_str(&config.to_toml());
    s
}

fn write_outputs(
    config: &ExperimentConfig,
    result: &SweepResult,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let sweep = sweep_csv(result);
    let trace = bp_trace_csv(result);
    let complexity = complexity_csv(config, result);
    let mut outputs = vec![(SWEEP_FILE, sweep.as_str()), (COMPLEXITY_FILE, complexity.as_str())];
    if !trace.is_empty() {
        outputs.push((BP_TRACE_FILE, trace.as_str()));
    }
    let manifest = manifest(config, &outputs);
    outputs.push((MANIFEST_FILE, manifest.as_str()));
    let mut files = Vec::new();
    for (name, contents) in outputs {
        let path = out.join(name);
        write_file(&path, contents)?;
        files.push(path);
    }
    Ok(files)
}

/// Reads a sweep CSV back into rows.
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = reader.headers().map_err(|e| io_err(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != SWEEP_HEADER {
        return Err(CliError::Config(format!("{}: not a sweep file", path.display())));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_err(path, e))?;
        let bad = || CliError::Config(format!("{}: bad row {}", path.display(), line + 2));
        let num = |i: usize| record[i].parse::<f64>().map_err(|_| bad());
        let int = |i: usize| record[i].parse::<u64>().map_err(|_| bad());
        rows.push(SweepRow {
            sweep_value: num(0)?,
            strategy: record[1].to_string(),
            avg_delay_s: num(2)?,
            hit_prob: num(3)?,
            calc_count: int(4)?,
            bp_rounds: int(5)? as usize,
            messages_exchanged: int(6)?,
        });
    }
    Ok(rows)
}

/// Text form of a placement: `bs,file` per cached entry.
pub fn placement_csv(placement: &Placement) -> String {
    let mut s = String::from("bs,file\n");
    for (m, files) in placement.sets().iter().enumerate() {
        for n in files {
            let _ = writeln!(s, "{m},{n}");
        }
    }
    s
}
