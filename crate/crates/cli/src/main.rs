use std::path::PathBuf;
use std::process::ExitCode;

use bfgs_cli::config::ExperimentConfig;
use bfgs_cli::experiment::{run_experiment, RunOptions};
use bfgs_cli::verify::{json_arg, verify_trace};
use bfgs_cli::CliError;
use bfgs_core::{LineSearchConfig, ProblemDescriptor, Verdict, VerdictStatus};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bfgs", version, about = "BFGS experiments with rate-inequality verdicts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (problem, solver) cell of a config file.
    Run {
        config: PathBuf,
        /// Also write SVG rate plots.
        #[arg(long)]
        plot: bool,
        /// Worker threads (0 = sequential); overrides the config.
        #[arg(long)]
        workers: Option<usize>,
        /// Run restart solvers with full epoch budgets.
        #[arg(long)]
        strict_restarts: bool,
    },
    /// Re-check the inequalities on a trace CSV.
    Verify {
        trace: PathBuf,
        /// Problem descriptor as JSON, or @file.
        #[arg(long)]
        problem: String,
        /// Line-search config as JSON, or @file; enables the rule-specific checks.
        #[arg(long)]
        line_search: Option<String>,
    },
}

fn print_verdicts(verdicts: &[Verdict]) {
    for v in verdicts {
        let status = match v.status {
            VerdictStatus::Holds => "holds",
            VerdictStatus::Violated => "VIOLATED",
            VerdictStatus::NotApplicable => "n/a",
        };
        println!("{:<28} {:<9} {:>6}  {}", v.name, status, v.checked, v.detail.as_deref().unwrap_or(""));
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run {
            config,
            plot,
            workers,
            strict_restarts,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = run_experiment(
                &cfg,
                &RunOptions {
                    plot,
                    workers,
                    strict_restarts,
                },
            )?;
            for r in &summary.runs {
                let state = match (&r.error, r.verdicts_hold()) {
                    (Some(e), _) => format!("error: {e}"),
                    (None, true) => "ok".to_string(),
                    (None, false) => "VIOLATED".to_string(),
                };
                println!("{:<32} {:<24} {:>6} iters  {}", r.problem, r.solver, r.iterations, state);
            }
            println!("summary: {}", cfg.output_dir.join("summary.json").display());
            Ok(summary.exit_code())
        }
        Command::Verify {
            trace,
            problem,
            line_search,
        } => {
            let problem: ProblemDescriptor = json_arg(&problem)?;
            let ls: Option<LineSearchConfig> = line_search.as_deref().map(json_arg).transpose()?;
            let verdicts = verify_trace(&trace, &problem, ls)?;
            print_verdicts(&verdicts);
            Ok(if verdicts.iter().all(Verdict::holds) { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
