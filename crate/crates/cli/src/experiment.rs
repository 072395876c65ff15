//! Runs every (problem, solver) cell of a config and writes traces and a summary.

use std::fs;
use std::path::{Path, PathBuf};

use bfgs_core::{
    bfgs_solve, bfgs_with_restarts, bounds_report, verify_records, BoundsReport, DiagnosticsRecord, ProblemSpec,
    ReferenceFrame, RestartMode, RestartSchedule, Verdict, VerdictStatus, VerifyContext,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SolverEntry};
use crate::{plot, trace, CliError};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub plot: bool,
    /// Overrides `parallel_workers` from the config.
    pub workers: Option<usize>,
    /// Forces every restart solver into strict mode.
    pub strict_restarts: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub problem: String,
    pub solver: String,
    /// Relative to the output directory.
    pub trace_file: String,
    pub status: Option<String>,
    pub iterations: usize,
    pub f_evals: usize,
    pub g_evals: usize,
    pub final_f_res: Option<f64>,
    pub bounds: Option<BoundsReport>,
    pub verdicts: Vec<Verdict>,
    pub restart: Option<RestartSchedule>,
    pub error: Option<String>,
}

impl RunOutcome {
    pub fn verdicts_hold(&self) -> bool {
        self.verdicts.iter().all(Verdict::holds)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: Vec<RunOutcome>,
    pub all_verdicts_hold: bool,
    pub runtime_errors: usize,
}

impl Summary {
    /// 0 when every verdict holds, 1 on a violated verdict, 2 on a runtime error.
    pub fn exit_code(&self) -> i32 {
        if self.runtime_errors > 0 {
            2
        } else if !self.all_verdicts_hold {
            1
        } else {
            0
        }
    }
}

/// Verdicts of several independent segments merged by name.
pub fn merge_verdicts(parts: Vec<Vec<Verdict>>) -> Vec<Verdict> {
    let mut out: Vec<Verdict> = Vec::new();
    for (t, part) in parts.into_iter().enumerate() {
        for v in part {
            let Some(acc) = out.iter_mut().find(|a| a.name == v.name) else {
                let mut v = v;
                if v.status == VerdictStatus::Violated {
                    v.detail = v.detail.map(|d| format!("epoch {t}: {d}"));
                }
                out.push(v);
                continue;
            };
            acc.checked += v.checked;
            match (acc.status, v.status) {
                (VerdictStatus::Violated, _) => {}
                (_, VerdictStatus::Violated) => {
                    acc.status = VerdictStatus::Violated;
                    acc.detail = v.detail.map(|d| format!("epoch {t}: {d}"));
                }
                (VerdictStatus::NotApplicable, VerdictStatus::Holds) => {
                    acc.status = VerdictStatus::Holds;
                    acc.detail = None;
                }
                _ => {}
            }
        }
    }
    out
}

struct CellResult {
    outcome: RunOutcome,
    records: Vec<DiagnosticsRecord>,
}

fn run_cell(problem: &ProblemSpec, x0: &bfgs_core::DVector<f64>, solver: &SolverEntry, config: &ExperimentConfig, strict: bool) -> bfgs_core::Result<CellResult> {
    let solver_config = solver.solver_config(&config.budgets);
    let frame = ReferenceFrame::new(problem, &solver_config.context(problem.dim())?)?;
    let ctx = VerifyContext::new(problem, &frame, Some(solver.line_search));
    let eps = config.budgets.eps;
    let mut outcome = RunOutcome {
        problem: problem.label.clone(),
        solver: solver.name.clone(),
        trace_file: String::new(),
        status: None,
        iterations: 0,
        f_evals: 0,
        g_evals: 0,
        final_f_res: None,
        bounds: None,
        verdicts: Vec::new(),
        restart: None,
        error: None,
    };
    let records = match &solver.restart {
        None => {
            let t = bfgs_solve(problem, x0, &solver_config)?;
            outcome.status = Some(format!("{:?}", t.status));
            outcome.iterations = t.iterations();
            outcome.f_evals = t.f_evals;
            outcome.g_evals = t.g_evals;
            outcome.final_f_res = t.records.last().map(|r| r.f_res);
            outcome.bounds = Some(bounds_report(&t.records, problem, &solver.line_search, t.init.scalar, eps));
            outcome.verdicts = verify_records(&t.records, &ctx);
            t.records
        }
        Some(restart) => {
            let mut restart = restart.clone();
            if strict {
                restart.mode = RestartMode::Strict;
            }
            let run = bfgs_with_restarts(problem, x0, &solver_config, &restart)?;
            let mut records = Vec::new();
            let mut offset = 0;
            let mut parts = Vec::new();
            for epoch in &run.epochs {
                parts.push(verify_records(&epoch.records, &ctx));
                records.extend(epoch.records.iter().map(|r| DiagnosticsRecord { k: r.k + offset, ..r.clone() }));
                offset += epoch.iterations();
                outcome.f_evals += epoch.f_evals;
                outcome.g_evals += epoch.g_evals;
            }
            if let Some(first) = run.epochs.first() {
                outcome.bounds = Some(bounds_report(&first.records, problem, &solver.line_search, first.init.scalar, eps));
            }
            outcome.status = run.epochs.last().map(|e| format!("{:?}", e.status));
            outcome.iterations = offset;
            outcome.final_f_res = records.last().map(|r| r.f_res);
            outcome.verdicts = merge_verdicts(parts);
            outcome.restart = Some(run.schedule);
            records
        }
    };
    Ok(CellResult { outcome, records })
}

fn cell_file(label: &str, solver: &str, ext: &str) -> String {
    format!("{label}__{solver}.{ext}")
}

fn write_cell(out_dir: &Path, result: &CellResult, plot_enabled: bool) -> Result<String, CliError> {
    let name = cell_file(&result.outcome.problem, &result.outcome.solver, "csv");
    let path = out_dir.join("traces").join(&name);
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    trace::write_records(std::io::BufWriter::new(file), &result.records)?;
    if plot_enabled {
        let svg = out_dir.join("plots").join(cell_file(&result.outcome.problem, &result.outcome.solver, "svg"));
        let title = format!("{} / {}", result.outcome.problem, result.outcome.solver);
        // Plot failures never change the exit code.
        if let Err(e) = plot::rate_plot(&svg, &title, &result.records) {
            eprintln!("warning: plot {} failed: {e}", svg.display());
        }
    }
    Ok(format!("traces/{name}"))
}

/// Executes all cells and writes `traces/*.csv`, optional `plots/*.svg` and
/// `summary.json` under the output directory.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<Summary, CliError> {
    config.validate()?;
    let out_dir = config.output_dir.clone();
    for sub in ["traces", "plots"] {
        if sub == "plots" && !options.plot {
            continue;
        }
        let d = out_dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| CliError::io(&d, e))?;
    }

    let built: Vec<Result<(ProblemSpec, bfgs_core::DVector<f64>), String>> = config
        .problems
        .iter()
        .map(|entry| {
            let p = entry.problem.build().map_err(|e| e.to_string())?;
            let x0 = entry.start.point(&p).map_err(|e| e.to_string())?;
            Ok((p, x0))
        })
        .collect();
    let mut labels = std::collections::HashSet::new();
    for b in built.iter().flatten() {
        if !labels.insert(b.0.label.clone()) {
            return Err(bfgs_core::Error::config("problems", format!("duplicate problem '{}'", b.0.label)).into());
        }
    }

    let cells: Vec<(usize, usize)> = (0..config.problems.len())
        .flat_map(|p| (0..config.solvers.len()).map(move |s| (p, s)))
        .collect();
    let strict = options.strict_restarts;
    let run_one = |&(pi, si): &(usize, usize)| -> RunOutcome {
        let solver = &config.solvers[si];
        let (problem, x0) = match &built[pi] {
            Ok(b) => b,
            Err(e) => return failed(format!("problem_{pi}"), &solver.name, e.clone()),
        };
        match run_cell(problem, x0, solver, config, strict) {
            Ok(result) => {
                let mut outcome = match write_cell(&out_dir, &result, options.plot) {
                    Ok(file) => RunOutcome { trace_file: file, ..result.outcome },
                    Err(e) => RunOutcome { error: Some(e.to_string()), ..result.outcome },
                };
                outcome.trace_file = outcome.trace_file.replace('\\', "/");
                outcome
            }
            Err(e) => failed(problem.label.clone(), &solver.name, e.to_string()),
        }
    };
    let workers = options.workers.unwrap_or(config.parallel_workers);
    let runs: Vec<RunOutcome> = if workers == 0 {
        cells.iter().map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?;
        pool.install(|| cells.par_iter().map(run_one).collect())
    };

    let runtime_errors = runs.iter().filter(|r| r.error.is_some()).count();
    let summary = Summary {
        all_verdicts_hold: runs.iter().all(RunOutcome::verdicts_hold),
        runtime_errors,
        runs,
    };
    let path = out_dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(summary)
}

fn failed(problem: String, solver: &str, error: String) -> RunOutcome {
    RunOutcome {
        problem,
        solver: solver.to_string(),
        trace_file: String::new(),
        status: None,
        iterations: 0,
        f_evals: 0,
        g_evals: 0,
        final_f_res: None,
        bounds: None,
        verdicts: Vec::new(),
        restart: None,
        error: Some(error),
    }
}

/// Trace file path of a cell inside `out_dir`.
pub fn trace_path(out_dir: &Path, problem_label: &str, solver: &str) -> PathBuf {
    out_dir.join("traces").join(cell_file(problem_label, solver, "csv"))
}
