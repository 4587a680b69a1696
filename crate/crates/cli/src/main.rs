use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mvrp::bench::{self, Experiment, RunOptions};
use mvrp::exact::solve_exact;
use mvrp::instances::{generate, read_instance, write_instance, write_solution, GeneratorSpec, InstanceClass};
use mvrp::svns::{solve, SvnsParams};
use mvrp::{CostBreakdown, Instance, Weights};

#[derive(Parser)]
#[command(name = "mvrp", version, about = "Routing for MGV-UGV teams with HRI costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write seeded random instances.
    Generate {
        #[arg(long, default_value = "small")]
        class: InstanceClass,
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Instance i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Construction followed by SVNS.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Write the search trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the solution file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive optimum for small instances.
    Exact {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Batch experiments over an instance directory.
    Bench {
        #[command(subcommand)]
        experiment: BenchCommand,
    },
}

#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    kmax: usize,
    #[arg(long, default_value_t = 40)]
    unimproved_max: usize,
}

impl SearchArgs {
    fn params(&self) -> SvnsParams {
        SvnsParams { seed: self.seed, k_max: self.kmax, unimproved_max: self.unimproved_max, ..SvnsParams::default() }
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of instance files.
    #[arg(long)]
    instances: PathBuf,
    /// CSV output; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the runtime_ms column.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Improvement of SVNS over construction.
    Improvement(BenchArgs),
    /// UnImproved_max x k_max grid.
    Params(BenchArgs),
    /// SVNS with one local-search neighborhood at a time.
    Neighborhoods(BenchArgs),
    /// Weight sweep.
    Weights {
        #[command(flatten)]
        args: BenchArgs,
        /// Also write (travel_cost, hri_cost) plot data.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Ok(false) when the command finished but some of its work failed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate { class, count, seed, out_dir } => {
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            for i in 0..count {
                let instance_seed = seed + i;
                let instance: Instance = generate(&GeneratorSpec::preset(class, instance_seed))?;
                let path = out_dir.join(format!("{}-{:04}.txt", class.name(), instance_seed));
                write_instance(&instance, &path)?;
            }
            Ok(true)
        }
        Command::Solve { instance, search, alpha, beta, gamma, trace, out } => {
            let inst = load(&instance)?;
            let w = inst.weights();
            let weights = Weights::new(alpha.unwrap_or(w.alpha), beta.unwrap_or(w.beta), gamma.unwrap_or(w.gamma));
            let inst = inst.with_weights(weights)?;
            let params = search.params();
            if let Err(e) = params.validate() {
                bail!(e);
            }
            println!(
                "svns seed={} kmax={} unimproved-max={} alpha={} beta={} gamma={}",
                params.seed, params.k_max, params.unimproved_max, weights.alpha, weights.beta, weights.gamma
            );
            let result = solve(&inst, &params);
            print_cost("construct", &result.construct_cost);
            print_cost("svns", &result.cost);
            println!("improvement_pct {:.4}", result.improvement_pct());
            if let Some(path) = trace {
                fs::write(&path, result.trace.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = out {
                write_solution(&result.solution, Some(&result.cost), &path)?;
            }
            Ok(true)
        }
        Command::Exact { instance, out } => {
            let inst = load(&instance)?;
            let result = solve_exact(&inst, &inst.weights())?;
            println!(
                "exact routes_examined={} partitions_examined={}",
                result.routes_examined, result.partitions_examined
            );
            print_cost("exact", &result.cost);
            if let Some(path) = out {
                write_solution(&result.solution, Some(&result.cost), &path)?;
            }
            Ok(true)
        }
        Command::Bench { experiment } => {
            let (kind, args, plot) = match experiment {
                BenchCommand::Improvement(a) => (Experiment::Improvement, a, None),
                BenchCommand::Params(a) => (Experiment::Params, a, None),
                BenchCommand::Neighborhoods(a) => (Experiment::Neighborhoods, a, None),
                BenchCommand::Weights { args, plot_data } => (Experiment::Weights, args, plot_data),
            };
            run_bench(kind, &args, plot.as_deref())
        }
    }
}

fn load(path: &Path) -> Result<Instance> {
    read_instance(path).with_context(|| format!("reading {}", path.display()))
}

fn print_cost(label: &str, c: &CostBreakdown) {
    println!(
        "{label} R1={:.4} R2={:.4} H={:.4} team={:.4} total={:.4}",
        c.path_cost, c.replenishment_cost, c.hri_cost, c.team_cost_total, c.total
    );
}

fn run_bench(kind: Experiment, args: &BenchArgs, plot: Option<&Path>) -> Result<bool> {
    let instances = bench::load_dir(&args.instances)?;
    let configs = bench::configs(kind, &args.search.params());
    let options = RunOptions { timing: args.timing, threads: bench::threads_from_env()? };
    let rows = bench::run(&instances, &configs, options)?;
    let csv = bench::rows_to_csv(&rows);
    match &args.out {
        Some(path) => fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    if let Some(path) = plot {
        fs::write(path, bench::pareto_data(&rows)).with_context(|| format!("writing {}", path.display()))?;
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} {} rows failed", rows.len(), kind.name());
    }
    Ok(failed == 0)
}
