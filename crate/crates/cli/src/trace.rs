//! CSV encoding of diagnostics records.

use std::io::{Read, Write};

use bfgs_core::DiagnosticsRecord;

use crate::CliError;

pub const HEADER: [&str; 15] = [
    "k", "f_res", "grad_norm", "step", "theta", "sigma", "r", "xi", "phi_LB", "phi_star", "psi_LB", "psi_star", "unit_step",
    "f_evals", "g_evals",
];

/// Shortest decimal that parses back to the same `f64`; exponent notation
/// outside `[1e-5, 1e16)`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn row(rec: &DiagnosticsRecord) -> [String; 15] {
    [
        rec.k.to_string(),
        format_float(rec.f_res),
        format_float(rec.grad_norm),
        opt_float(rec.step),
        opt_float(rec.theta),
        format_float(rec.sigma),
        opt_float(rec.r),
        opt_float(rec.xi),
        opt_float(rec.phi_lb),
        opt_float(rec.phi_star),
        opt_float(rec.psi_lb),
        opt_float(rec.psi_star),
        rec.unit_step.map(|b| if b { "1" } else { "0" }.to_string()).unwrap_or_default(),
        rec.f_evals.map(|v| v.to_string()).unwrap_or_default(),
        rec.g_evals.map(|v| v.to_string()).unwrap_or_default(),
    ]
}

pub fn write_records<W: Write>(out: W, records: &[DiagnosticsRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER).map_err(csv_err)?;
    for rec in records {
        w.write_record(row(rec)).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn parse_opt<T: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<Option<T>, CliError> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| CliError::Parse(format!("line {line}, column {name}: cannot parse '{field}'")))
}

fn parse_req<T: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<T, CliError> {
    parse_opt(field, name, line)?.ok_or_else(|| CliError::Parse(format!("line {line}, column {name}: missing value")))
}

/// Reads records written by [`write_records`]. Columns not stored in the
/// CSV come back as `None`.
pub fn read_records<R: Read>(input: R) -> Result<Vec<DiagnosticsRecord>, CliError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(CliError::Parse(format!("unexpected header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let f = |j: usize| rec.get(j).unwrap_or("");
        let unit_step = match f(12) {
            "" => None,
            "1" => Some(true),
            "0" => Some(false),
            other => return Err(CliError::Parse(format!("line {line}, column unit_step: cannot parse '{other}'"))),
        };
        out.push(DiagnosticsRecord {
            k: parse_req(f(0), "k", line)?,
            f_res: parse_req(f(1), "f_res", line)?,
            grad_norm: parse_req(f(2), "grad_norm", line)?,
            step: parse_opt(f(3), "step", line)?,
            theta: parse_opt(f(4), "theta", line)?,
            sigma: parse_req(f(5), "sigma", line)?,
            r: parse_opt(f(6), "r", line)?,
            xi: parse_opt(f(7), "xi", line)?,
            phi_lb: parse_opt(f(8), "phi_LB", line)?,
            phi_star: parse_opt(f(9), "phi_star", line)?,
            psi_lb: parse_opt(f(10), "psi_LB", line)?,
            psi_star: parse_opt(f(11), "psi_star", line)?,
            unit_step,
            f_evals: parse_opt(f(13), "f_evals", line)?,
            g_evals: parse_opt(f(14), "g_evals", line)?,
            ..Default::default()
        });
    }
    Ok(out)
}

/// Keeps only the fields the CSV stores.
pub fn csv_projection(rec: &DiagnosticsRecord) -> DiagnosticsRecord {
    DiagnosticsRecord {
        lambda: None,
        lambda_star: None,
        alpha_star: None,
        beta_star: None,
        decrease: None,
        ..rec.clone()
    }
}

/// Splits a concatenated restart trace into epochs; each epoch ends at a
/// row without a step.
pub fn split_epochs(records: &[DiagnosticsRecord]) -> Vec<&[DiagnosticsRecord]> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, rec) in records.iter().enumerate() {
        if rec.step.is_none() {
            out.push(&records[start..=i]);
            start = i + 1;
        }
    }
    if start < records.len() {
        out.push(&records[start..]);
    }
    out
}
