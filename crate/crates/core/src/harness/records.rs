//! Run records and their CSV schema.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numfmt::compact;

pub const RECORD_COLUMNS: [&str; 18] = [
    "run_id", "arm", "n_domain", "n_boundary", "n_test", "width", "depth", "epochs", "lr", "refine", "seed",
    "sol_dev", "tst_err", "t_setup_s", "t_train_s", "t_refine_s", "flops", "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Fem,
    Pinn,
    FitExact,
    PinnCentroid,
}

impl Arm {
    pub fn label(self) -> &'static str {
        match self {
            Arm::Fem => "fem",
            Arm::Pinn => "pinn",
            Arm::FitExact => "fit-exact",
            Arm::PinnCentroid => "pinn-centroid",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        [Arm::Fem, Arm::Pinn, Arm::FitExact, Arm::PinnCentroid].into_iter().find(|a| a.label() == label)
    }
}

/// Whether wall times are written. Omitting them makes reruns byte-identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    Record,
    Omit,
}

/// One row of the results table. FEM rows put the node count in `n_domain`
/// and leave the network columns empty; their solve time goes in `t_train_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: String,
    pub arm: Arm,
    pub n_domain: Option<usize>,
    pub n_boundary: Option<usize>,
    pub n_test: Option<usize>,
    pub width: Option<usize>,
    pub depth: Option<usize>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub refine: Option<bool>,
    pub seed: Option<u64>,
    pub sol_dev: Option<f64>,
    pub tst_err: Option<f64>,
    pub t_setup_s: Option<f64>,
    pub t_train_s: Option<f64>,
    pub t_refine_s: Option<f64>,
    pub flops: Option<f64>,
    pub status: String,
}

impl RunRecord {
    pub fn empty(run_id: impl Into<String>, arm: Arm) -> Self {
        RunRecord {
            run_id: run_id.into(),
            arm,
            n_domain: None,
            n_boundary: None,
            n_test: None,
            width: None,
            depth: None,
            epochs: None,
            lr: None,
            refine: None,
            seed: None,
            sol_dev: None,
            tst_err: None,
            t_setup_s: None,
            t_train_s: None,
            t_refine_s: None,
            flops: None,
            status: "ok".into(),
        }
    }

    pub fn is_ok(&self) -> bool {
        !self.status.starts_with("failed")
    }

    pub fn fields(&self, timing: Timing) -> Vec<String> {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|v| v.to_string()).unwrap_or_default()
        }
        let num = |v: Option<f64>| v.map(compact).unwrap_or_default();
        let time = |v: Option<f64>| match timing {
            Timing::Record => v.map(|t| format!("{t:.3}")).unwrap_or_default(),
            Timing::Omit => String::new(),
        };
        vec![
            self.run_id.clone(),
            self.arm.label().into(),
            opt(self.n_domain),
            opt(self.n_boundary),
            opt(self.n_test),
            opt(self.width),
            opt(self.depth),
            opt(self.epochs),
            num(self.lr),
            opt(self.refine),
            opt(self.seed),
            num(self.sol_dev),
            num(self.tst_err),
            time(self.t_setup_s),
            time(self.t_train_s),
            time(self.t_refine_s),
            num(self.flops),
            self.status.clone(),
        ]
    }
}

/// Writes the header on creation and one line per record.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
    timing: Timing,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(sink: W, timing: Timing) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
        inner.write_record(RECORD_COLUMNS)?;
        Ok(RecordWriter { inner, timing })
    }

    pub fn write(&mut self, record: &RunRecord) -> Result<()> {
        self.inner.write_record(record.fields(self.timing))?;
        self.inner.flush().map_err(|e| Error::io("<records>", e))
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| Error::io("<records>", e.into_error()))
    }
}

pub fn records_to_string(records: &[RunRecord], timing: Timing) -> Result<String> {
    let mut w = RecordWriter::new(Vec::new(), timing)?;
    for r in records {
        w.write(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?).expect("csv output is UTF-8"))
}

pub fn write_records(path: &Path, records: &[RunRecord], timing: Timing) -> Result<()> {
    std::fs::write(path, records_to_string(records, timing)?).map_err(|e| Error::io(path, e))
}

/// Column index of each name in `required`, or a schema error naming the missing ones.
pub fn column_indices(headers: &csv::StringRecord, required: &[&str]) -> Result<Vec<usize>> {
    let mut missing = Vec::new();
    let mut indices = Vec::with_capacity(required.len());
    for name in required {
        match headers.iter().position(|h| h == *name) {
            Some(i) => indices.push(i),
            None => missing.push(name.to_string()),
        }
    }
    if missing.is_empty() {
        Ok(indices)
    } else {
        Err(Error::Schema { missing })
    }
}

fn parse_field<T: std::str::FromStr>(raw: &str, line: usize, column: &str) -> Result<Option<T>> {
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse()
        .map(Some)
        .map_err(|_| Error::Parse { line, message: format!("bad value `{raw}` in column {column}") })
}

pub fn records_from_str(text: &str) -> Result<Vec<RunRecord>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let idx = column_indices(reader.headers()?, &RECORD_COLUMNS)?;
    let mut out = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let row = row?;
        let line = k + 2;
        let get = |c: usize| row.get(idx[c]).unwrap_or("");
        let arm = Arm::from_label(get(1)).ok_or_else(|| Error::Parse { line, message: format!("unknown arm `{}`", get(1)) })?;
        out.push(RunRecord {
            run_id: get(0).to_string(),
            arm,
            n_domain: parse_field(get(2), line, RECORD_COLUMNS[2])?,
            n_boundary: parse_field(get(3), line, RECORD_COLUMNS[3])?,
            n_test: parse_field(get(4), line, RECORD_COLUMNS[4])?,
            width: parse_field(get(5), line, RECORD_COLUMNS[5])?,
            depth: parse_field(get(6), line, RECORD_COLUMNS[6])?,
            epochs: parse_field(get(7), line, RECORD_COLUMNS[7])?,
            lr: parse_field(get(8), line, RECORD_COLUMNS[8])?,
            refine: parse_field(get(9), line, RECORD_COLUMNS[9])?,
            seed: parse_field(get(10), line, RECORD_COLUMNS[10])?,
            sol_dev: parse_field(get(11), line, RECORD_COLUMNS[11])?,
            tst_err: parse_field(get(12), line, RECORD_COLUMNS[12])?,
            t_setup_s: parse_field(get(13), line, RECORD_COLUMNS[13])?,
            t_train_s: parse_field(get(14), line, RECORD_COLUMNS[14])?,
            t_refine_s: parse_field(get(15), line, RECORD_COLUMNS[15])?,
            flops: parse_field(get(16), line, RECORD_COLUMNS[16])?,
            status: get(17).to_string(),
        });
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    records_from_str(&text)
}
