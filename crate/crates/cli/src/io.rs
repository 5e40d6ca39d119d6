//! File ingestion and atomic output.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use cgp::numerics::DataMatrix;
use cgp::FrequencyVector;
use serde::Serialize;

use crate::error::{invalid, CliError, CliResult};

/// Writes through a temporary file in the target directory, then renames.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let runtime = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(runtime)?;
    tmp.write_all(bytes).map_err(runtime)?;
    tmp.as_file().sync_all().map_err(runtime)?;
    tmp.persist(path).map_err(|e| runtime(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Runtime(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    atomic_write(path, &bytes)
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn reader(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

/// Species counts in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesCounts {
    pub labels: Vec<String>,
    pub counts: Vec<usize>,
}

impl SpeciesCounts {
    pub fn frequency_vector(&self) -> CliResult<FrequencyVector> {
        Ok(FrequencyVector::new(self.counts.clone())?)
    }

    /// One entry per observation, holding the species index.
    pub fn expand(&self) -> Vec<usize> {
        self.counts.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c)).collect()
    }
}

/// Reads one label per row, or aggregated rows when a "count" column is present.
pub fn read_species(path: &Path) -> CliResult<SpeciesCounts> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let count_col = header.iter().position(|h| h == "count");
    let label_col = header
        .iter()
        .position(|h| h == "species" || h == "label")
        .or_else(|| (0..header.len()).find(|&i| Some(i) != count_col))
        .ok_or_else(|| invalid(format!("{}: no label column", path.display())))?;
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut out = SpeciesCounts { labels: Vec::new(), counts: Vec::new() };
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let label = rec.get(label_col).unwrap_or("");
        if label.is_empty() {
            return Err(invalid(format!("{}: empty label on line {line}", path.display())));
        }
        let count = match count_col {
            None => 1,
            Some(c) => {
                let raw = rec.get(c).unwrap_or("");
                match raw.parse::<usize>() {
                    Ok(v) if v > 0 => v,
                    _ => return Err(invalid(format!("{}: malformed count {raw:?} on line {line}", path.display()))),
                }
            }
        };
        let i = *index.entry(label.to_string()).or_insert_with(|| {
            out.labels.push(label.to_string());
            out.counts.push(0);
            out.labels.len() - 1
        });
        out.counts[i] += count;
    }
    if out.counts.is_empty() {
        return Err(invalid(format!("{}: no observations", path.display())));
    }
    Ok(out)
}

/// Numeric matrix with a header row. A column named "truth" is returned separately.
pub fn read_matrix(path: &Path) -> CliResult<(DataMatrix, Option<Vec<bool>>)> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let truth_col = header.iter().position(|h| h.eq_ignore_ascii_case("truth"));
    let d = header.len() - truth_col.is_some() as usize;
    if d == 0 {
        return Err(invalid(format!("{}: no data columns", path.display())));
    }
    let mut values = Vec::new();
    let mut truth = Vec::new();
    let mut n = 0;
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        for (j, cell) in rec.iter().enumerate() {
            if Some(j) == truth_col {
                truth.push(match cell {
                    "1" | "true" => true,
                    "0" | "false" => false,
                    _ => return Err(invalid(format!("{}: bad truth flag {cell:?} on line {line}", path.display()))),
                });
                continue;
            }
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| invalid(format!("{}: non-numeric cell {cell:?} on line {line}", path.display())))?;
            values.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(invalid(format!("{}: no rows", path.display())));
    }
    let data = DataMatrix::new(n, d, values)?;
    Ok((data, truth_col.map(|_| truth)))
}
