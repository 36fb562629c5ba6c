use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use decpomdp::formulation::Variant;
use decpomdp::model::parse_model;
use decpomdp::pipeline::{self, SolveOptions};
use decpomdp::sequences::render_tree;
use decpomdp::Error;
use milp::MilpStatus;

/// Exact finite-horizon planner for decentralized POMDPs.
#[derive(Parser)]
#[command(name = "decpomdp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    /// Every sequence weight binary.
    Ilp,
    /// Only full-length weights binary (default).
    Milp,
    /// As milp, after eliminating dominated sequences.
    MilpPr,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Ilp => Variant::Ilp,
            VariantArg::Milp => Variant::Milp,
            VariantArg::MilpPr => Variant::MilpPr,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance to optimality by branch and bound.
    Solve {
        /// Instance file.
        instance: PathBuf,
        /// Number of control steps.
        #[arg(long)]
        horizon: usize,
        #[arg(long, value_enum, default_value_t = VariantArg::Milp)]
        variant: VariantArg,
        /// Inject a lower bound from the horizon-(K-1) optimum.
        #[arg(long)]
        lower_bound: bool,
        /// Inject the pooled-observation relaxation as an upper bound.
        #[arg(long)]
        upper_bound: bool,
        /// Write the assembled program in LP format.
        #[arg(long, value_name = "PATH")]
        emit_lp: Option<PathBuf>,
        /// Write the run report as JSON.
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
        /// Write the joint payoff table as text.
        #[arg(long, value_name = "PATH")]
        dump_table: Option<PathBuf>,
        /// Abort after this many branch-and-bound nodes.
        #[arg(long, value_name = "N")]
        node_limit: Option<u64>,
        /// Abort after this many seconds of search.
        #[arg(long, value_name = "SECONDS")]
        time_limit: Option<f64>,
    },
    /// Check a policy document against an instance and evaluate it.
    Evaluate {
        instance: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// Policy JSON: a solve report or a bare policy block.
        #[arg(long, value_name = "PATH")]
        policy: PathBuf,
    },
    /// Enumerate every deterministic joint policy (small horizons only).
    Brute {
        instance: PathBuf,
        #[arg(long)]
        horizon: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// 3 for anything wrong with the user's files or request, 1 for internal
/// failures; limit statuses are handled in `run`.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Syntax { .. }
        | Error::InvalidModel(_)
        | Error::Capacity { .. }
        | Error::Policy(_)
        | Error::BadBounds { .. }
        | Error::ZeroHorizon
        | Error::Io(_) => 3,
        Error::Extraction(_) | Error::Solver(_) => 1,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Solve {
            instance,
            horizon,
            variant,
            lower_bound,
            upper_bound,
            emit_lp,
            json,
            dump_table,
            node_limit,
            time_limit,
        } => {
            let model = parse_model(&std::fs::read_to_string(&instance)?)?;
            let mut options = SolveOptions::new(variant.into(), horizon);
            options.use_lower_bound = lower_bound;
            options.use_upper_bound = upper_bound;
            options.emit_lp = emit_lp;
            options.dump_table = dump_table;
            if let Some(n) = node_limit {
                options.milp.node_limit = n;
            }
            if let Some(s) = time_limit {
                options.milp.time_limit = Duration::from_secs_f64(s);
            }
            let outcome = pipeline::solve(&model, &instance.display().to_string(), &options)?;

            let r = &outcome.report;
            println!("status      {}", r.status);
            if let Some(v) = r.value {
                println!("value       {v}");
            }
            println!("best bound  {}", r.best_bound);
            if let Some(l) = r.bounds.lower {
                println!("lower bound {l}");
            }
            if let Some(u) = r.bounds.upper {
                println!("upper bound {u}");
            }
            println!(
                "search      {} nodes, {} LP iterations, {:.3}s, {} vars, {} rows",
                r.stats.nodes,
                r.stats.lp_iterations,
                r.stats.wall_time_seconds,
                r.stats.variables,
                r.stats.rows
            );
            if let Some(d) = &r.dominance {
                println!(
                    "dominance   removed per agent {:?}, full-length fraction {:?}",
                    d.dominated_per_agent, d.terminal_fraction
                );
            }
            if let Some(policy) = &outcome.policy {
                for (i, tree) in policy.trees.iter().enumerate() {
                    println!("agent {i} policy:");
                    for line in render_tree(tree).lines() {
                        println!("  {line}");
                    }
                }
            }
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&outcome.report)
                    .expect("report serialization cannot fail");
                std::fs::write(&path, text + "\n")?;
            }
            Ok(match outcome.status {
                MilpStatus::Optimal => ExitCode::SUCCESS,
                MilpStatus::NodeLimit | MilpStatus::TimeLimit => ExitCode::from(2),
                MilpStatus::Infeasible => ExitCode::from(1),
            })
        }
        Command::Evaluate {
            instance,
            horizon,
            policy,
        } => {
            let model = parse_model(&std::fs::read_to_string(&instance)?)?;
            let document = std::fs::read_to_string(&policy)?;
            let outcome = pipeline::evaluate(&model, horizon, &document)?;
            println!("tree value           {}", outcome.policy.value);
            println!("sequence-form value  {}", outcome.sequence_form);
            Ok(ExitCode::SUCCESS)
        }
        Command::Brute {
            instance,
            horizon,
        } => {
            let model = parse_model(&std::fs::read_to_string(&instance)?)?;
            let result = pipeline::brute(&model, horizon)?;
            println!("policies    {}", result.count);
            println!("value       {}", result.value);
            for (i, tree) in result.policy.trees.iter().enumerate() {
                println!("agent {i} policy:");
                for line in render_tree(tree).lines() {
                    println!("  {line}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
