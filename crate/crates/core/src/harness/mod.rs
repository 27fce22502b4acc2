//! Metrics, benchmark matrices, the hyperparameter sweep and report emission.

pub mod bench;
pub mod fields;
pub mod metrics;
pub mod records;
pub mod report;
pub mod sweep;

pub use bench::{fem_ladder, run_benchmark, run_one, seed_block, RunSpec};
pub use fields::{emit_field_maps, FieldMap};
pub use metrics::{solution_deviation, spearman};
pub use records::{read_records, write_records, Arm, RecordWriter, RunRecord, Timing, RECORD_COLUMNS};
pub use report::compare_report;
pub use sweep::{sweep, RefineMode, SweepSpec};
