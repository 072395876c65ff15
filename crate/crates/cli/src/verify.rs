//! Offline re-check of a trace CSV.

use std::path::Path;

use bfgs_core::{verify_records, LineSearchConfig, OperatorContext, ProblemDescriptor, ReferenceFrame, Verdict, VerifyContext};

use crate::experiment::merge_verdicts;
use crate::{trace, CliError};

/// Parses inline JSON, or the contents of a file when prefixed with `@`.
pub fn json_arg<T: serde::de::DeserializeOwned>(arg: &str) -> Result<T, CliError> {
    let text = match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::io(Path::new(path), e))?,
        None => arg.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))
}

/// Verdicts for a trace file. Restart traces are split at their partial
/// rows and checked epoch by epoch.
pub fn verify_trace(path: &Path, problem: &ProblemDescriptor, line_search: Option<LineSearchConfig>) -> Result<Vec<Verdict>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let records = trace::read_records(std::io::BufReader::new(file))?;
    if records.is_empty() {
        return Err(CliError::Parse(format!("{}: no data rows", path.display())));
    }
    if let Some(ls) = line_search {
        ls.validate()?;
    }
    let spec = problem.build()?;
    let frame = ReferenceFrame::new(&spec, &OperatorContext::identity(spec.dim()))?;
    let ctx = VerifyContext::new(&spec, &frame, line_search);
    let parts = trace::split_epochs(&records).into_iter().map(|epoch| verify_records(epoch, &ctx)).collect();
    Ok(merge_verdicts(parts))
}
