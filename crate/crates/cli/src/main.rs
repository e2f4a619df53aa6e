use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fogcache_cli::config::{ExperimentConfig, GammaValue, SweepAxis};
use fogcache_cli::experiment::{
    build_demand, build_instance, evaluate, placement_csv, run_sweep, solve, write_file,
    SolveContext, SweepRow, Tables, SWEEP_HEADER,
};
use fogcache_cli::report::{compare_report, write_report};
use fogcache_cli::verify::run_suite;
use fogcache_cli::CliError;
use fogcache_core::model::{load_instance, save_instance};

#[derive(Parser)]
#[command(name = "fogcache", version, about = "Transmission-aware cache placement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a network and demand instance and save it as `instance.fgi`.
    Generate(Overrides),
    /// Solve one placement per strategy and write the traces.
    Solve {
        #[command(flatten)]
        overrides: Overrides,
        /// Instance file from `generate`; replaces the drawn instance.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Run a capacity or skew sweep.
    Sweep(Overrides),
    /// Compare sweep result files.
    Report {
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the oracle comparison suite.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for both the topology and the demand draw.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated strategy names.
    #[arg(long, value_delimiter = ',')]
    strategy: Vec<String>,
    /// Comma-separated capacities; makes Q the sweep axis.
    #[arg(long, value_delimiter = ',')]
    q: Vec<f64>,
    /// Comma-separated Zipf exponents; a single ramp such as 0.2+4.8k/K is
    /// also accepted outside sweeps.
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<String>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    bp_tmax: Option<usize>,
    #[arg(long)]
    bp_damping: Option<f64>,
    #[arg(long)]
    approx_prefs: bool,
}

impl Overrides {
    fn resolve(&self, sweeping: bool) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            c.instance.seed = seed;
            c.demand.seed = seed;
        }
        if let Some(out) = &self.out {
            c.out = out.clone();
        }
        if !self.strategy.is_empty() {
            c.strategies = self.strategy.clone();
        }
        if let Some(s) = self.mc_samples {
            c.channel.mc_samples = s;
        }
        if let Some(t) = self.bp_tmax {
            c.bp.max_rounds = t;
        }
        if let Some(d) = self.bp_damping {
            c.bp.damping = d;
        }
        c.approx_prefs |= self.approx_prefs;
        let parse = |g: &String| {
            g.parse::<f64>()
                .map_err(|_| CliError::Config(format!("gamma '{g}' is not a number")))
        };
        if sweeping {
            if self.q.len() > 1 && self.gamma.len() > 1 {
                return Err(CliError::Config("sweep either --q or --gamma, not both".into()));
            }
            if self.gamma.len() > 1 {
                c.sweep.axis = SweepAxis::Gamma;
                c.sweep.values = self.gamma.iter().map(parse).collect::<Result<_, _>>()?;
                if let [q] = self.q[..] {
                    c.sweep.q = q as usize;
                }
            } else {
                if let [g] = &self.gamma[..] {
                    c.demand.gamma = GammaValue::Text(g.clone());
                }
                if !self.q.is_empty() {
                    c.sweep.axis = SweepAxis::Q;
                    c.sweep.values = self.q.clone();
                }
            }
        } else {
            if self.q.len() > 1 || self.gamma.len() > 1 {
                return Err(CliError::Config("solve takes a single --q and --gamma".into()));
            }
            if let [g] = &self.gamma[..] {
                c.demand.gamma = GammaValue::Text(g.clone());
            }
            if let [q] = self.q[..] {
                c.sweep.axis = SweepAxis::Q;
                c.sweep.values = vec![q];
            }
        }
        c.validate()?;
        Ok(c)
    }
}

fn solve_capacity(c: &ExperimentConfig) -> usize {
    match c.sweep.axis {
        SweepAxis::Q => c.sweep.values[0] as usize,
        SweepAxis::Gamma => c.sweep.q,
    }
}

fn generate(o: &Overrides) -> Result<(), CliError> {
    let c = o.resolve(true)?;
    let inst = build_instance(&c)?;
    let demand = build_demand(&c, c.demand.gamma.spec()?, inst.num_users())?;
    std::fs::create_dir_all(&c.out).map_err(|e| CliError::Io(e.to_string()))?;
    let path = c.out.join("instance.fgi");
    save_instance(&path, &inst, &demand).map_err(|e| CliError::Io(e.to_string()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn solve_cmd(o: &Overrides, instance: Option<&Path>) -> Result<(), CliError> {
    let c = o.resolve(false)?;
    let (inst, demand) = match instance {
        Some(path) => load_instance(path).map_err(|e| CliError::Config(e.to_string()))?,
        None => {
            let inst = build_instance(&c)?;
            let demand = build_demand(&c, c.demand.gamma.spec()?, inst.num_users())?;
            (inst, demand)
        }
    };
    let q = solve_capacity(&c);
    if q > demand.num_files() {
        return Err(CliError::Config(format!("capacity {q} exceeds {} files", demand.num_files())));
    }
    let solve_demand = if c.approx_prefs {
        fogcache_cli::experiment::approximate_demand(&inst, &demand)?
    } else {
        demand.clone()
    };
    let tables = Tables::build(&inst, &c)?;
    let ctx = SolveContext {
        instance: &inst,
        demand: &demand,
        solve_demand: &solve_demand,
        tables: &tables,
        capacities: vec![q; inst.num_bs()],
        config: &c,
    };
    std::fs::create_dir_all(&c.out).map_err(|e| CliError::Io(e.to_string()))?;
    let mut csv = format!("{SWEEP_HEADER}\n");
    for strategy in c.strategy_list()? {
        let sol = solve(strategy, &ctx)?;
        let name = strategy.to_string();
        write_file(&c.out.join(format!("placement_{name}.csv")), &placement_csv(&sol.placement))?;
        if let Some(t) = &sol.greedy {
            write_file(&c.out.join(format!("greedy_trace_{name}.csv")), &t.to_csv())?;
        }
        if let Some(t) = &sol.bp {
            write_file(&c.out.join(format!("bp_trace_{name}.csv")), &t.to_csv())?;
        }
        for scheme in strategy.schemes() {
            let r = evaluate(&sol.placement, scheme, &ctx)?;
            let row = SweepRow {
                sweep_value: q as f64,
                strategy: strategy.label(scheme),
                avg_delay_s: r.average_delay_s,
                hit_prob: r.hit_probability,
                calc_count: sol.calc_count(),
                bp_rounds: sol.bp.as_ref().map_or(0, |t| t.num_rounds()),
                messages_exchanged: sol.bp.as_ref().map_or(0, |t| t.total_exchanged()),
            };
            println!(
                "{:<16} delay {:>10.4} s  hit {:.4}",
                row.strategy, row.avg_delay_s, row.hit_prob
            );
            csv.push_str(&row.csv_record().join(","));
            csv.push('\n');
        }
    }
    write_file(&c.out.join("solve.csv"), &csv)
}

fn sweep(o: &Overrides) -> Result<(), CliError> {
    let c = o.resolve(true)?;
    let result = run_sweep(&c, &c.out)?;
    for f in &result.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn report(files: &[PathBuf], out: Option<&Path>) -> Result<(), CliError> {
    let r = compare_report(files)?;
    print!("{}", r.text_table());
    if let Some(out) = out {
        write_report(&r, out)?;
    }
    Ok(())
}

fn verify(seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let checks = run_suite(seed)?;
    let mut failed = Vec::new();
    for (i, c) in checks.iter().enumerate() {
        println!("{}", c.line());
        if let Some(out) = out {
            std::fs::create_dir_all(out).map_err(|e| CliError::Io(e.to_string()))?;
            write_file(&out.join(format!("verify_{}.csv", i + 1)), &c.csv)?;
        }
        if !c.passed {
            failed.push(c.name.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(o) => generate(o),
        Command::Solve { overrides, instance } => solve_cmd(overrides, instance.as_deref()),
        Command::Sweep(o) => sweep(o),
        Command::Report { files, out } => report(files, out.as_deref()),
        Command::Verify { seed, out } => verify(*seed, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fogcache: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
