//! Posterior summaries of stored traces.

use std::collections::BTreeMap;
use std::path::Path;

use cgp::diagnostics::{summarize, ChainSummary};
use cgp::species::SpeciesTrace;
use serde_json::Value;

use crate::error::{invalid, CliError, CliResult};
use crate::io::write_json;

/// Parameters summarized when present in a trace.
const MONITORED: [&str; 5] = ["sigma", "theta", "beta", "mbar", "k"];

pub fn summarize_species(t: &SpeciesTrace) -> CliResult<BTreeMap<String, ChainSummary>> {
    let mbar: Vec<f64> = t.mbar.iter().map(|&m| m as f64).collect();
    let mut out = BTreeMap::new();
    for (name, xs) in [("sigma", &t.sigma), ("theta", &t.theta), ("beta", &t.beta), ("mbar", &mbar)] {
        out.insert(name.to_string(), summarize(xs)?);
    }
    Ok(out)
}

pub fn summarize_value(trace: &Value) -> CliResult<BTreeMap<String, ChainSummary>> {
    let obj = trace.as_object().ok_or_else(|| invalid("corrupt trace: expected a JSON object"))?;
    let mut out = BTreeMap::new();
    for name in MONITORED {
        let Some(v) = obj.get(name) else { continue };
        let xs: Vec<f64> = v
            .as_array()
            .ok_or_else(|| invalid(format!("corrupt trace: {name} is not an array")))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| invalid(format!("corrupt trace: non-numeric entry in {name}"))))
            .collect::<CliResult<_>>()?;
        out.insert(name.to_string(), summarize(&xs)?);
    }
    if out.is_empty() {
        return Err(invalid("corrupt trace: no monitored parameter arrays"));
    }
    Ok(out)
}

pub fn diagnose(trace: &Path, out: Option<&Path>) -> CliResult<()> {
    let text = std::fs::read_to_string(trace).map_err(|e| invalid(format!("cannot read trace {}: {e}", trace.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| invalid(format!("corrupt trace {}: {e}", trace.display())))?;
    let summary = summarize_value(&value)?;
    match out {
        Some(p) => write_json(p, &summary),
        None => {
            let s = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?;
            say!("{s}");
            Ok(())
        }
    }
}
