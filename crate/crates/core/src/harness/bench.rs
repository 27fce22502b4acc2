//! Benchmark matrices: each entry is one isolated run producing one record.

use rayon::prelude::*;

use crate::fem::{self, centroids, generate_mesh, FemRecord, MeshSpec, Order};
use crate::geometry::EvalGrid;
use crate::pinn::{self, TrainConfig, TrainReport};
use crate::problem::HeatProblem;

use super::records::{Arm, RunRecord};

#[derive(Debug, Clone, PartialEq)]
pub enum RunSpec {
    Pinn { id: String, config: TrainConfig },
    FitExact { id: String, config: TrainConfig },
    /// Interior collocation points at the element centroids of `mesh`.
    PinnCentroid { id: String, config: TrainConfig, mesh: MeshSpec },
    Fem { mesh: MeshSpec },
}

impl RunSpec {
    pub fn id(&self) -> String {
        match self {
            RunSpec::Pinn { id, .. } | RunSpec::FitExact { id, .. } | RunSpec::PinnCentroid { id, .. } => id.clone(),
            RunSpec::Fem { mesh } => mesh.id(),
        }
    }
}

pub fn pinn_record(id: &str, arm: Arm, config: &TrainConfig, report: &TrainReport) -> RunRecord {
    RunRecord {
        n_domain: Some(config.n_domain),
        n_boundary: Some(config.n_boundary),
        n_test: Some(config.n_test),
        width: Some(config.arch.hidden_width),
        depth: Some(config.arch.hidden_depth),
        epochs: Some(config.epochs),
        lr: Some(config.lr),
        refine: Some(config.refine),
        seed: Some(config.seed),
        sol_dev: report.solution_deviation,
        tst_err: report.test_error,
        t_setup_s: Some(report.t_setup_s),
        t_train_s: Some(report.t_train_s),
        t_refine_s: Some(report.t_refine_s),
        flops: Some(report.flops),
        status: report.status.label(),
        ..RunRecord::empty(id, arm)
    }
}

pub fn fem_record(record: &FemRecord) -> RunRecord {
    RunRecord {
        n_domain: Some(record.nodes),
        sol_dev: Some(record.solution_deviation),
        t_setup_s: Some(record.t_setup_s),
        t_train_s: Some(record.t_solve_s),
        flops: Some(record.flops as f64),
        status: if record.uncovered == 0 { "ok".into() } else { format!("ok:uncovered={}", record.uncovered) },
        ..RunRecord::empty(record.spec.id(), Arm::Fem)
    }
}

fn failed(id: String, arm: Arm, reason: impl std::fmt::Display) -> RunRecord {
    RunRecord { status: format!("failed:{reason}"), ..RunRecord::empty(id, arm) }
}

/// Runs one spec; errors become a failed record.
pub fn run_one(problem: &HeatProblem, spec: &RunSpec, grid: &EvalGrid) -> RunRecord {
    match spec {
        RunSpec::Pinn { id, config } => match pinn::train(problem, config) {
            Ok((_, report)) => pinn_record(id, Arm::Pinn, config, &report),
            Err(e) => failed(id.clone(), Arm::Pinn, e),
        },
        RunSpec::FitExact { id, config } => match pinn::fit_exact(problem, config) {
            Ok((_, report)) => pinn_record(id, Arm::FitExact, config, &report),
            Err(e) => failed(id.clone(), Arm::FitExact, e),
        },
        RunSpec::PinnCentroid { id, config, mesh } => {
            let run = generate_mesh(&problem.geometry, *mesh).and_then(|m| {
                let points = centroids(&m);
                let config = TrainConfig {
                    n_domain: m.element_count(),
                    n_boundary: m.facets.len(),
                    ..config.clone()
                };
                pinn::train_on_points(problem, &config, &points).map(|(_, r)| (config, r))
            });
            match run {
                Ok((config, report)) => pinn_record(id, Arm::PinnCentroid, &config, &report),
                Err(e) => failed(id.clone(), Arm::PinnCentroid, e),
            }
        }
        RunSpec::Fem { mesh } => match fem::solve_problem(problem, *mesh, grid) {
            Ok((_, record)) => fem_record(&record),
            Err(e) => failed(mesh.id(), Arm::Fem, e),
        },
    }
}

/// Runs every spec on `jobs` worker threads; records come back in input order.
pub fn run_benchmark(problem: &HeatProblem, specs: &[RunSpec], jobs: usize) -> Vec<RunRecord> {
    let grid = problem.geometry.eval_grid(pinn::GRID_SIDE);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    pool.install(|| specs.par_iter().map(|s| run_one(problem, s, &grid)).collect())
}

/// Refinement ladder for both element orders: `levels` nested meshes starting
/// at `n_radial × n_angular`, each doubling both divisions.
pub fn fem_ladder(n_radial: usize, n_angular: usize, levels: usize) -> Vec<RunSpec> {
    let mut out = Vec::new();
    for order in [Order::Linear, Order::Quadratic] {
        for k in 0..levels {
            out.push(RunSpec::Fem { mesh: MeshSpec::new(n_radial << k, n_angular << k, order) });
        }
    }
    out
}

/// `seeds` copies of `config`, one per seed `0..seeds`, as PINN or fit-exact runs.
pub fn seed_block(prefix: &str, config: &TrainConfig, seeds: u64, exact_fit: bool) -> Vec<RunSpec> {
    (0..seeds)
        .map(|seed| {
            let config = TrainConfig { seed, ..config.clone() };
            let id = format!("{prefix}-s{seed}");
            if exact_fit {
                RunSpec::FitExact { id, config }
            } else {
                RunSpec::Pinn { id, config }
            }
        })
        .collect()
}
