use std::path::Path;
use std::process::Command;

use bfgs_cli::trace::{read_records, HEADER};

fn bfgs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bfgs"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

const ONE_STEP: &str = r#"{
    "problems": [{"problem": {"family": "quadratic", "n": 1, "kappa": 1.0, "seed": 3}}],
    "solvers": [{"name": "unit", "line_search": {"strategy": "backtracking_unit", "eta1": 0.25}}],
    "budgets": {"grad_tol": 1e-12},
    "output_dir": "out"
}"#;

#[test]
fn empty_solver_list_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"problems": [{"problem": {"family": "quadratic", "n": 2, "kappa": 10.0, "seed": 1}}], "solvers": []}"#);
    let out = bfgs().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solvers"));
}

#[test]
fn one_step_run_writes_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), ONE_STEP);
    let out = bfgs().arg("run").arg(&cfg).arg("--plot").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = dir.path().join("out/traces/quadratic_n1_k1_s3__unit.csv");
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
    let rows = read_records(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].k, rows[1].k), (0, 1));
    assert_eq!(rows[0].unit_step, Some(true));
    assert!(rows[1].step.is_none() && rows[1].xi.is_none() && rows[1].unit_step.is_none());
    assert!(dir.path().join("out/plots/quadratic_n1_k1_s3__unit.svg").exists());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 1);
    assert_eq!(summary["all_verdicts_hold"], true);
}

#[test]
fn verify_subcommand_rechecks_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
        "problems": [{"problem": {"family": "logistic", "n": 5, "m_samples": 50, "reg_mu": 0.1, "seed": 4}}],
        "solvers": [
            {"name": "unit", "line_search": {"strategy": "backtracking_unit", "eta1": 0.25}},
            {"name": "restarts", "line_search": {"strategy": "backtracking_unit", "eta1": 0.25},
             "restart": {"base_n": 1, "mode": "strict", "max_epochs": 3}}
        ],
        "output_dir": "out"
    }"#;
    let cfg = write_config(dir.path(), body);
    let out = bfgs().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let problem = r#"{"family": "logistic", "n": 5, "m_samples": 50, "reg_mu": 0.1, "seed": 4}"#;
    let ls = r#"{"strategy": "backtracking_unit", "eta1": 0.25}"#;
    for solver in ["unit", "restarts"] {
        let trace = dir.path().join(format!("out/traces/logistic_n5_m50_r0.1_s4__{solver}.csv"));
        let out = bfgs()
            .arg("verify")
            .arg(&trace)
            .args(["--problem", problem, "--line-search", ls])
            .output()
            .unwrap();
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert_eq!(out.status.code(), Some(0), "{stdout}");
        assert!(stdout.contains("sum_phi_lb") && stdout.contains("holds"));
        assert!(!stdout.contains("VIOLATED"));
    }
    let restart_rows = read_records(std::fs::File::open(dir.path().join("out/traces/logistic_n5_m50_r0.1_s4__restarts.csv")).unwrap()).unwrap();
    assert_eq!(restart_rows.len(), 1 + 2 + 4 + 3);
    assert_eq!(restart_rows.last().unwrap().k, 7);
}

#[test]
fn verify_detects_tampered_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
        "problems": [{"problem": {"family": "quadratic", "n": 10, "kappa": 100.0, "seed": 5}}],
        "solvers": [{"name": "unit", "line_search": {"strategy": "backtracking_unit", "eta1": 0.25}}],
        "output_dir": "out"
    }"#,
    );
    assert_eq!(bfgs().arg("run").arg(&cfg).output().unwrap().status.code(), Some(0));
    let trace = dir.path().join("out/traces/quadratic_n10_k100_s5__unit.csv");
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[4].split(',').map(String::from).collect();
    let f_res: f64 = cells[1].parse().unwrap();
    cells[1] = format!("{}", f_res * 10.0);
    lines[4] = cells.join(",");
    std::fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let out = bfgs()
        .arg("verify")
        .arg(&trace)
        .args(["--problem", r#"{"family": "quadratic", "n": 10, "kappa": 100.0, "seed": 5}"#])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{ not json");
    assert_eq!(bfgs().arg("run").arg(&cfg).output().unwrap().status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(bfgs().arg("run").arg(&missing).output().unwrap().status.code(), Some(2));
}

#[test]
fn parallel_and_sequential_outputs_match() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
        "problems": [
            {"problem": {"family": "quadratic", "n": 6, "kappa": 50.0, "seed": 1}},
            {"problem": {"family": "logistic", "n": 4, "m_samples": 40, "reg_mu": 0.2, "seed": 2}}
        ],
        "solvers": [
            {"name": "est", "line_search": {"strategy": "backtracking_estimate", "eta1": 0.3}},
            {"name": "wolfe", "line_search": {"strategy": "wolfe_powell", "eta1": 0.1, "eta2_prime": 0.9}}
        ],
        "output_dir": "seq"
    }"#;
    let cfg = write_config(dir.path(), body);
    assert_eq!(bfgs().arg("run").arg(&cfg).output().unwrap().status.code(), Some(0));
    let cfg_par = dir.path().join("par.json");
    std::fs::write(&cfg_par, body.replace("\"seq\"", "\"par\"")).unwrap();
    assert_eq!(bfgs().arg("run").arg(&cfg_par).args(["--workers", "3"]).output().unwrap().status.code(), Some(0));
    let list = |sub: &str| {
        let mut v: Vec<_> = std::fs::read_dir(dir.path().join(sub).join("traces"))
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_owned(), std::fs::read(&p).unwrap())
            })
            .collect();
        v.sort();
        v
    };
    let seq = list("seq");
    assert_eq!(seq.len(), 4);
    assert_eq!(seq, list("par"));
    assert_eq!(
        std::fs::read(dir.path().join("seq/summary.json")).unwrap(),
        std::fs::read(dir.path().join("par/summary.json")).unwrap()
    );
}
