//! Seeded random hyperparameter sweep.

use std::path::Path;

use crate::error::{Error, Result};
use crate::net::Arch;
use crate::numfmt::compact;
use crate::optim::LbfgsConfig;
use crate::pinn::{LossWeights, TrainConfig};
use crate::problem::HeatProblem;
use crate::rng::{stream, SeededRng};

use super::bench::{run_benchmark, RunSpec};
use super::records::{RunRecord, Timing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefineMode {
    Never,
    Always,
    /// Each run flips a fair coin.
    Random,
}

/// Inclusive ranges; the learning rate is drawn log-uniformly.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub runs: usize,
    pub master_seed: u64,
    pub n_domain: [usize; 2],
    pub n_boundary: [usize; 2],
    pub width: [usize; 2],
    pub depth: [usize; 2],
    pub epochs: [usize; 2],
    pub lr: [f64; 2],
    pub refine: RefineMode,
    /// L-BFGS iteration cap for refined runs.
    pub lbfgs_max_iter: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            runs: 50,
            master_seed: 0,
            n_domain: [50, 250],
            n_boundary: [40, 120],
            width: [5, 20],
            depth: [1, 3],
            epochs: [200, 1000],
            lr: [1e-3, 1e-1],
            refine: RefineMode::Random,
            lbfgs_max_iter: 500,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("n_domain", self.n_domain),
            ("n_boundary", self.n_boundary),
            ("width", self.width),
            ("depth", self.depth),
            ("epochs", self.epochs),
        ];
        for (name, [lo, hi]) in ranges {
            if lo > hi {
                return Err(Error::Config(format!("sweep range {name} is empty: [{lo}, {hi}]")));
            }
        }
        if self.width[0] == 0 || self.depth[0] == 0 {
            return Err(Error::Config("sweep width and depth must start at 1".into()));
        }
        if !(self.lr[0] > 0.0 && self.lr[0] <= self.lr[1] && self.lr[1].is_finite()) {
            return Err(Error::Config(format!("sweep lr range must be positive and ordered, got {:?}", self.lr)));
        }
        Ok(())
    }

    /// Configuration of run `index`; depends only on the master seed and the index.
    pub fn draw(&self, index: usize) -> TrainConfig {
        let mut rng = SeededRng::new(self.master_seed, (stream::SWEEP << 32) | index as u64);
        let mut int = |[lo, hi]: [usize; 2]| rng.integer_in(lo as u64, hi as u64) as usize;
        let n_domain = int(self.n_domain);
        let n_boundary = int(self.n_boundary);
        let width = int(self.width);
        let depth = int(self.depth);
        let epochs = int(self.epochs);
        let lr = (rng.uniform_in(self.lr[0].ln(), self.lr[1].ln())).exp();
        let refine = match self.refine {
            RefineMode::Never => false,
            RefineMode::Always => true,
            RefineMode::Random => rng.uniform() < 0.5,
        };
        let seed = rng.next_u64() >> 1;
        TrainConfig {
            n_domain,
            n_boundary,
            n_test: n_domain + n_boundary,
            arch: Arch { hidden_width: width, hidden_depth: depth },
            epochs,
            lr,
            refine,
            weights: LossWeights::default(),
            seed,
            lbfgs: LbfgsConfig { max_iter: self.lbfgs_max_iter, ..LbfgsConfig::default() },
        }
    }

    pub fn run_specs(&self) -> Vec<RunSpec> {
        (0..self.runs).map(|i| RunSpec::Pinn { id: format!("sweep-{i:04}"), config: self.draw(i) }).collect()
    }
}

pub fn sweep(problem: &HeatProblem, spec: &SweepSpec, jobs: usize) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    Ok(run_benchmark(problem, &spec.run_specs(), jobs))
}

pub const AXES_COLUMNS: [&str; 7] = ["run_id", "tst_acc", "sol_dev", "cpt_tm", "pts_tst", "lrn_rate", "nn_cplx"];

/// Per-run axes of the sweep plots: test error, deviation, training plus
/// refinement time, test points, learning rate, depth × width².
pub fn axes_to_string(records: &[RunRecord], timing: Timing) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(AXES_COLUMNS)?;
    for r in records {
        let num = |v: Option<f64>| v.map(compact).unwrap_or_default();
        let time = match (timing, r.t_train_s, r.t_refine_s) {
            (Timing::Record, Some(a), b) => format!("{:.3}", a + b.unwrap_or(0.0)),
            _ => String::new(),
        };
        let complexity = match (r.width, r.depth) {
            (Some(w), Some(d)) => (d * w * w).to_string(),
            _ => String::new(),
        };
        w.write_record([
            r.run_id.clone(),
            num(r.tst_err),
            num(r.sol_dev),
            time,
            r.n_test.map(|n| n.to_string()).unwrap_or_default(),
            num(r.lr),
            complexity,
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<sweep axes>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_axes(path: &Path, records: &[RunRecord], timing: Timing) -> Result<()> {
    std::fs::write(path, axes_to_string(records, timing)?).map_err(|e| Error::io(path, e))
}

/// Spearman correlation of test error against deviation over successful runs.
pub fn test_deviation_correlation(records: &[RunRecord]) -> Option<f64> {
    let (a, b): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.is_ok())
        .filter_map(|r| Some((r.tst_err?, r.sol_dev?)))
        .unzip();
    (a.len() >= 3).then(|| super::metrics::spearman(&a, &b))
}
