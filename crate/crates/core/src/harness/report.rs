//! Side-by-side summary of finite-element and network records.

use std::path::Path;

use crate::error::{Error, Result};

use super::records::{column_indices, RECORD_COLUMNS};

pub const SUMMARY_COLUMNS: [&str; 10] =
    ["arm", "run_id", "size", "sol_dev", "tst_err", "t_setup_s", "t_train_s", "t_refine_s", "flops", "status"];

const SOURCE_COLUMNS: [&str; 10] =
    ["arm", "run_id", "n_domain", "sol_dev", "tst_err", "t_setup_s", "t_train_s", "t_refine_s", "flops", "status"];

/// One row per input record, FEM file first, fields copied verbatim.
/// `size` is the node count for FEM rows and the interior point count otherwise.
pub fn compare_to_string(fem_csv: &str, pinn_csv: &str) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(SUMMARY_COLUMNS)?;
    for text in [fem_csv, pinn_csv] {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        column_indices(reader.headers()?, &RECORD_COLUMNS)?;
        let idx = column_indices(reader.headers()?, &SOURCE_COLUMNS)?;
        for row in reader.records() {
            let row = row?;
            w.write_record(idx.iter().map(|&i| row.get(i).unwrap_or("")))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<summary>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn compare_report(fem_csv: &Path, pinn_csv: &Path, out: &Path) -> Result<()> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let summary = compare_to_string(&read(fem_csv)?, &read(pinn_csv)?)?;
    std::fs::write(out, summary).map_err(|e| Error::io(out, e))
}
