//! Command-line surface for reproduction runs: transform a feeder into its
//! working graphs, solve one window exactly, replay a rolling-horizon
//! scenario, or sweep an experiment grid into a metrics CSV.
//!
//! Exit codes: 0 success, 2 input error, 3 infeasible, 4 limit hit without a
//! feasible solution.

mod pipeline;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use restoration::horizon::{simulate, Scenario};
use restoration::metrics::{self, MetricRow};
use restoration::model::{write_lp, write_mps, HomeDegree, ModelOptions, ObjectiveKind};
use restoration::solve::{SearchLimits, SolveStatus};
use std::path::PathBuf;
use std::process::ExitCode;

use pipeline::{build_window, InstanceSpec, WindowSpec};

const EXIT_INPUT: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NO_INCUMBENT: u8 = 4;

#[derive(Parser)]
#[command(name = "restoration", version, about = "Multi-crew repair scheduling for radial distribution feeders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the working graphs (travel matrix, node weights, precedence) of
    /// a damaged feeder as JSON.
    Transform(TransformArgs),
    /// Solve one restoration window exactly and report the schedule.
    Solve(SolveArgs),
    /// Replay a rolling-horizon scenario file into a timeline CSV.
    Simulate(SimulateArgs),
    /// Run a (mean repair x budget) trial grid into a metrics CSV.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Relaxed,
    Dummy,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Reward,
    Profit,
}

/// Flags shared by every subcommand that builds a damaged feeder instance.
#[derive(Args)]
struct InstanceArgs {
    /// Feeder JSON file.
    #[arg(long)]
    feeder: PathBuf,
    /// Travel speed in ft/min ("inf" disables travel times).
    #[arg(long, default_value = "141.0")]
    speed: f64,
    /// Target post-floor mean repair time in minutes (Weibull scale is
    /// calibrated to hit it).
    #[arg(long, default_value = "47.725")]
    mean_repair: f64,
    /// Weibull shape parameter.
    #[arg(long, default_value = "2.0")]
    shape: f64,
    /// Lower clamp on sampled repair times, minutes.
    #[arg(long, default_value = "30.0")]
    floor: f64,
    /// Reward per damaged line.
    #[arg(long, default_value = "1.0")]
    reward: f64,
    /// Explicit comma-separated repair times (minutes), one per line in
    /// feeder order; overrides sampling.
    #[arg(long, value_delimiter = ',')]
    repair_times: Option<Vec<f64>>,
    /// Master seed for repair-time sampling.
    #[arg(long, default_value = "1")]
    seed: u64,
}

#[derive(Args)]
struct CrewArgs {
    /// Number of crews.
    #[arg(long, default_value = "1")]
    crews: usize,
    /// Comma-separated per-crew budgets in minutes; a single value is
    /// broadcast to all crews.
    #[arg(long, value_delimiter = ',', default_value = "60.0")]
    budgets: Vec<f64>,
    /// Restoration window length in minutes; defaults to the largest budget.
    #[arg(long)]
    window: Option<f64>,
}

#[derive(Args)]
struct ModelArgs {
    /// Home-node handling: strict degree, relaxed degree, or a parking node.
    #[arg(long, value_enum, default_value = "strict")]
    mode: ModeArg,
    /// Emit the triangle valid inequalities in exported models.
    #[arg(long)]
    vi: bool,
    #[arg(long, value_enum, default_value = "reward")]
    objective: ObjectiveArg,
}

#[derive(Args)]
struct LimitArgs {
    /// Wall-clock limit for the exact search, seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Node limit for the exact search.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Stop at this absolute optimality gap.
    #[arg(long)]
    gap: Option<f64>,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    crews: CrewArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    limits: LimitArgs,
    /// Write the solution JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Export the assembled model as free-format MPS.
    #[arg(long)]
    export_mps: Option<PathBuf>,
    /// Export the assembled model as CPLEX-style LP.
    #[arg(long)]
    export_lp: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    limits: LimitArgs,
    /// Timeline CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    limits: LimitArgs,
    /// Post-floor mean repair times to sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    means: Vec<f64>,
    /// Per-crew budgets to sweep (uniform across crews).
    #[arg(long, value_delimiter = ',', required = true)]
    budget_grid: Vec<f64>,
    /// Number of crews in every cell.
    #[arg(long, default_value = "4")]
    crews: usize,
    /// Trials per cell; trial seeds derive from the master seed.
    #[arg(long, default_value = "1")]
    trials: usize,
    /// Record real wall-clock times in the CSV (off keeps output
    /// byte-reproducible).
    #[arg(long)]
    timing: bool,
    /// Metrics CSV output path.
    #[arg(long, required = true)]
    out: PathBuf,
}

impl InstanceArgs {
    fn to_spec(&self) -> InstanceSpec {
        InstanceSpec {
            feeder: self.feeder.clone(),
            speed: self.speed,
            mean_repair: self.mean_repair,
            shape: self.shape,
            floor: self.floor,
            reward: self.reward,
            repair_times: self.repair_times.clone(),
            seed: self.seed,
        }
    }
}

impl ModeArg {
    fn to_home_degree(self) -> HomeDegree {
        match self {
            ModeArg::Strict => HomeDegree::Strict,
            ModeArg::Relaxed => HomeDegree::Relaxed,
            ModeArg::Dummy => HomeDegree::DummyNode,
        }
    }
}

impl ModelArgs {
    fn to_options(&self) -> ModelOptions {
        ModelOptions::default()
            .with_home_degree(self.mode.to_home_degree())
            .with_objective(match self.objective {
                ObjectiveArg::Reward => ObjectiveKind::Reward,
                ObjectiveArg::Profit => ObjectiveKind::Profit,
            })
            .with_valid_inequalities(self.vi)
    }
}

impl LimitArgs {
    fn to_limits(&self) -> SearchLimits {
        SearchLimits {
            time_limit: self.time_limit.map(std::time::Duration::from_secs_f64),
            node_limit: self.node_limit,
            absolute_gap: self.gap,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Transform(args) => cmd_transform(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn write_text(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_transform(args: TransformArgs) -> Result<ExitCode> {
    let window = build_window(&args.instance.to_spec(), &WindowSpec::trivial())?;
    let dump = window.transform_dump();
    write_text(&args.out, &format!("{}\n", serde_json::to_string_pretty(&dump)?))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let spec = WindowSpec::new(args.crews.crews, args.crews.budgets.clone(), args.crews.window)?;
    let window = build_window(&args.instance.to_spec(), &spec)?;
    let opts = args.model.to_options();
    let limits = args.limits.to_limits();

    if args.export_mps.is_some() || args.export_lp.is_some() {
        let instance = window.assemble(&opts)?;
        if let Some(path) = &args.export_mps {
            std::fs::write(path, write_mps(&instance, &window.name))
                .with_context(|| format!("writing {}", path.display()))?;
        }
        if let Some(path) = &args.export_lp {
            std::fs::write(path, write_lp(&instance, &window.name))
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }

    let summary = window.solve(&opts, &limits);
    eprintln!(
        "status {} in {:.3}s over {} nodes",
        summary.status, summary.elapsed_s, summary.nodes_explored
    );
    println!("{}", summary.human_readable());
    if let Some(path) = &args.out {
        std::fs::write(path, format!("{}\n", serde_json::to_string_pretty(&summary)?))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(match summary.status_enum {
        SolveStatus::Optimal | SolveStatus::Feasible => ExitCode::SUCCESS,
        SolveStatus::Infeasible => ExitCode::from(EXIT_INFEASIBLE),
        SolveStatus::Limit => ExitCode::from(EXIT_NO_INCUMBENT),
    })
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.scenario)
        .with_context(|| format!("reading {}", args.scenario.display()))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.scenario.display()))?;
    let timeline = simulate(&scenario, &args.model.to_options(), &args.limits.to_limits())?;

    let mut csv = String::from(
        "window,planned_reward,completed,energized,carried,reward_earned,cumulative_reward\n",
    );
    for (w, result) in timeline.windows.iter().enumerate() {
        csv.push_str(&format!(
            "{},{:.6},{},{},{},{:.6},{:.6}\n",
            result.window,
            result.planned.aggregate_reward,
            result.completed.len(),
            result.energized.len(),
            result.carried.len(),
            result.reward_earned,
            timeline.cumulative_reward[w],
        ));
    }
    write_text(&args.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let opts = args.model.to_options();
    let limits = args.limits.to_limits();

    // One task per (mean, budget, trial). Trial seeds depend only on the
    // trial index, so a trial sees identical repair-time draws across the
    // whole grid (common random numbers).
    let mut cells = Vec::new();
    for &mean in &args.means {
        for &budget in &args.budget_grid {
            for trial in 0..args.trials {
                cells.push((mean, budget, trial));
            }
        }
    }

    let base = args.instance.to_spec();
    let rows: Vec<MetricRow> = cells
        .par_iter()
        .map(|&(mean, budget, trial)| {
            let spec = WindowSpec::uniform(args.crews, budget);
            let mut instance = base.clone();
            instance.mean_repair = mean;
            instance.seed = pipeline::trial_seed(base.seed, trial);
            let id = format!("mean{mean:.3}/budget{budget:.0}/t{trial}");
            match build_window(&instance, &spec) {
                Ok(window) => {
                    let summary = window.solve(&opts, &limits);
                    window.metric_row(&format!("{}/{id}", window.name), &summary, args.timing)
                }
                // a failed cell keeps its row so the grid stays rectangular
                Err(err) => {
                    eprintln!("cell {id} failed: {err:#}");
                    pipeline::error_row(&id, args.crews, budget)
                }
            }
        })
        .collect();

    metrics::emit_csv(&rows, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}
