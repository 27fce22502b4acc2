//! Physics-informed training: loss assembly from tagged point sets, the
//! Adam → L-BFGS training chain, test error, supervised fitting to the exact
//! field, and training on externally supplied collocation points.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{EvalGrid, PointKind, PointSet, SamplePoint};
use crate::harness::metrics::solution_deviation;
use crate::net::{self, forward, forward_jet, Arch, LossFunction, MlpParams, ResidualRow, ResidualTerm};
use crate::optim::{adam_run, lbfgs_run, AdamConfig, LbfgsConfig};
use crate::problem::{BoundaryValueProblem, HeatProblem};
use crate::rng::test_seed;

/// Runs with fewer interior collocation points than this are flagged.
pub const LOW_COVERAGE_POINTS: usize = 10;

/// Side of the evaluation grid used for the solution deviation.
pub const GRID_SIDE: usize = 50;

/// Per-term loss weights.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub interior: f64,
    pub hole: f64,
    pub dirichlet: f64,
    pub neumann: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { interior: 1.0, hole: 1.0, dirichlet: 1.0, neumann: 1.0 }
    }
}

impl LossWeights {
    fn for_kind(&self, kind: PointKind) -> f64 {
        match kind {
            PointKind::Interior => self.interior,
            PointKind::HoleCircle => self.hole,
            PointKind::DirichletEdge => self.dirichlet,
            PointKind::NeumannEdge => self.neumann,
        }
    }
}

/// Which scalar loss a network is trained on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossSpec {
    /// PDE residual in the interior plus one penalty per boundary group.
    Pinn(LossWeights),
    /// Mean squared difference to the exact field over all points.
    SupervisedMse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub n_domain: usize,
    pub n_boundary: usize,
    pub n_test: usize,
    pub arch: Arch,
    pub epochs: usize,
    pub lr: f64,
    pub refine: bool,
    pub weights: LossWeights,
    pub seed: u64,
    pub lbfgs: LbfgsConfig,
}

impl TrainConfig {
    /// 50/40/90 points, width 20 depth 1, 1000 Adam epochs at 1e-2.
    pub fn first_block(seed: u64) -> Self {
        TrainConfig {
            n_domain: 50,
            n_boundary: 40,
            n_test: 90,
            arch: Arch { hidden_width: 20, hidden_depth: 1 },
            epochs: 1000,
            lr: 1e-2,
            refine: false,
            weights: LossWeights::default(),
            seed,
            lbfgs: LbfgsConfig::default(),
        }
    }

    /// 250/90/340 points, width 10 depth 4, 1000 Adam epochs at 1e-2, then L-BFGS.
    pub fn second_block(seed: u64) -> Self {
        TrainConfig {
            n_domain: 250,
            n_boundary: 90,
            n_test: 340,
            arch: Arch { hidden_width: 10, hidden_depth: 4 },
            refine: true,
            ..TrainConfig::first_block(seed)
        }
    }

    /// 3600/1300 points, width 20 depth 4, 10000 Adam epochs at 0.015, then L-BFGS.
    pub fn best(seed: u64) -> Self {
        TrainConfig {
            n_domain: 3600,
            n_boundary: 1300,
            n_test: 4900,
            arch: Arch { hidden_width: 20, hidden_depth: 4 },
            epochs: 10_000,
            lr: 0.015,
            refine: true,
            ..TrainConfig::first_block(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        Arch::new(self.arch.hidden_width, self.arch.hidden_depth)?;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        let w = self.weights;
        if [w.interior, w.hole, w.dirichlet, w.neumann].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Config("loss weights must be finite and non-negative".into()));
        }
        if self.n_test == 0 {
            return Err(Error::Config("at least one test point is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// Completed, but with too few interior points to be representative.
    LowCoverage,
    Failed(String),
}

impl RunStatus {
    pub fn label(&self) -> String {
        match self {
            RunStatus::Ok => "ok".into(),
            RunStatus::LowCoverage => "low-coverage".into(),
            RunStatus::Failed(reason) => format!("failed:{reason}"),
        }
    }

    pub fn is_success(&self) -> bool {
        !matches!(self, RunStatus::Failed(_))
    }
}

/// Outcome of one training run. Test error is the RMS residual on the test
/// set (square root of the test loss); solution deviation is the RMS error
/// against the exact field on the evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub final_loss: Option<f64>,
    pub test_error: Option<f64>,
    pub solution_deviation: Option<f64>,
    /// Deviation right after the Adam phase (equal to the final one without refinement).
    pub adam_deviation: Option<f64>,
    pub t_setup_s: f64,
    pub t_train_s: f64,
    pub t_refine_s: f64,
    pub flops: f64,
    pub loss_history: Vec<f64>,
    pub refine_history: Vec<f64>,
    pub lbfgs_iterations: usize,
    pub lbfgs_evaluations: usize,
    /// Why optimization stopped: `epochs`, an L-BFGS termination label, or the abort reason.
    pub termination: String,
    pub status: RunStatus,
}

fn interior_residual(problem: &HeatProblem, p: &SamplePoint) -> Result<ResidualRow> {
    if p.x.hypot(p.y) <= problem.geometry.a {
        return Err(Error::Contract(format!("interior point ({}, {}) lies inside the hole", p.x, p.y)));
    }
    Ok(ResidualRow { x: p.x, y: p.y, coef: [0.0, 0.0, 0.0, 1.0, 1.0], target: -problem.source(p.x, p.y) })
}

fn boundary_residual(problem: &HeatProblem, p: &SamplePoint) -> ResidualRow {
    match p.kind {
        PointKind::NeumannEdge => {
            let [nx, ny] = p.normal.unwrap_or([0.0, p.y.signum()]);
            let g = problem.neumann_flux(p.x, p.y, [nx, ny]);
            ResidualRow { x: p.x, y: p.y, coef: [0.0, nx, ny, 0.0, 0.0], target: g }
        }
        kind => {
            let target = problem.dirichlet_value(kind, p.x, p.y);
            ResidualRow { x: p.x, y: p.y, coef: [1.0, 0.0, 0.0, 0.0, 0.0], target }
        }
    }
}

/// Residual terms of `spec` over `set`, one per point kind present (PINN) or
/// a single supervised term.
pub fn build_terms(problem: &HeatProblem, spec: LossSpec, set: &PointSet) -> Result<Vec<ResidualTerm>> {
    match spec {
        LossSpec::SupervisedMse => {
            let rows = set
                .points
                .iter()
                .map(|p| ResidualRow { x: p.x, y: p.y, coef: [1.0, 0.0, 0.0, 0.0, 0.0], target: problem.exact_t(p.x, p.y) })
                .collect();
            Ok(vec![ResidualTerm { name: "supervised".into(), weight: 1.0, rows }])
        }
        LossSpec::Pinn(weights) => {
            let mut terms = Vec::new();
            for kind in PointKind::ALL {
                let points: Vec<&SamplePoint> = set.of_kind(kind).collect();
                let weight = weights.for_kind(kind);
                if points.is_empty() || weight == 0.0 {
                    continue;
                }
                let rows = points
                    .into_iter()
                    .map(|p| if kind == PointKind::Interior { interior_residual(problem, p) } else { Ok(boundary_residual(problem, p)) })
                    .collect::<Result<Vec<_>>>()?;
                terms.push(ResidualTerm { name: kind.label().into(), weight, rows });
            }
            Ok(terms)
        }
    }
}

/// PINN loss through the scalar jet path: each point kind contributes
/// `weight · mean(residual²)`.
pub fn assemble_loss(params: &MlpParams, problem: &HeatProblem, weights: LossWeights, set: &PointSet) -> Result<f64> {
    let mut total = 0.0;
    for kind in PointKind::ALL {
        let weight = weights.for_kind(kind);
        let points: Vec<&SamplePoint> = set.of_kind(kind).collect();
        if weight == 0.0 || points.is_empty() {
            continue;
        }
        let mut sum = 0.0;
        for p in &points {
            let jet = forward_jet(params, p.x, p.y);
            let r = match kind {
                PointKind::Interior => {
                    let row = interior_residual(problem, p)?;
                    jet.laplacian() - row.target
                }
                _ => {
                    let row = boundary_residual(problem, p);
                    row.coef.iter().zip(jet.as_array()).map(|(c, v)| c * v).sum::<f64>() - row.target
                }
            };
            sum += r * r;
        }
        total += weight * sum / points.len() as f64;
    }
    Ok(total)
}

/// RMS of the loss residuals on `test_set`.
pub fn test_error(params: &MlpParams, problem: &HeatProblem, spec: LossSpec, test_set: &PointSet) -> Result<f64> {
    if test_set.is_empty() {
        return Err(Error::Config("test set is empty".into()));
    }
    let loss = match spec {
        LossSpec::Pinn(weights) => assemble_loss(params, problem, weights, test_set)?,
        LossSpec::SupervisedMse => {
            let sum: f64 = test_set
                .points
                .iter()
                .map(|p| (forward(params, p.x, p.y) - problem.exact_t(p.x, p.y)).powi(2))
                .sum();
            sum / test_set.len() as f64
        }
    };
    Ok(loss.sqrt())
}

/// Network output at every grid point, in grid order.
pub fn predict_grid(params: &MlpParams, grid: &EvalGrid) -> Vec<f64> {
    grid.points.iter().map(|p| forward(params, p.x, p.y)).collect()
}

/// Held-out points: same samplers, seed derived from the training seed,
/// split between interior and boundary in the training proportion.
pub fn test_points(problem: &HeatProblem, config: &TrainConfig) -> PointSet {
    let total = config.n_domain + config.n_boundary;
    let n_interior = if total == 0 {
        config.n_test
    } else {
        ((config.n_test * config.n_domain) as f64 / total as f64).round() as usize
    };
    let seed = test_seed(config.seed);
    let g = problem.geometry;
    g.sample_interior(n_interior, seed).merged(&g.sample_boundary(config.n_test - n_interior, seed))
}

/// Collocation set drawn from `config.seed`.
pub fn training_points(problem: &HeatProblem, config: &TrainConfig) -> PointSet {
    let g = problem.geometry;
    g.sample_interior(config.n_domain, config.seed).merged(&g.sample_boundary(config.n_boundary, config.seed))
}

/// Samples points and initializes the network from `config.seed`, runs Adam
/// for `config.epochs`, then L-BFGS if `config.refine`.
pub fn train(problem: &HeatProblem, config: &TrainConfig) -> Result<(MlpParams, TrainReport)> {
    let start = Instant::now();
    let set = training_points(problem, config);
    run(problem, config, LossSpec::Pinn(config.weights), set, start)
}

/// Same optimizer chain on the supervised loss against the exact field.
pub fn fit_exact(problem: &HeatProblem, config: &TrainConfig) -> Result<(MlpParams, TrainReport)> {
    let start = Instant::now();
    let set = training_points(problem, config);
    run(problem, config, LossSpec::SupervisedMse, set, start)
}

/// Trains with the interior collocation points replaced by `imported`.
/// Boundary points come from `imported` when it has any, otherwise they are
/// sampled as in [`train`].
pub fn train_on_points(problem: &HeatProblem, config: &TrainConfig, imported: &PointSet) -> Result<(MlpParams, TrainReport)> {
    let start = Instant::now();
    if imported.count(PointKind::Interior) == 0 {
        return Err(Error::Config("imported point set has no interior points".into()));
    }
    let boundary = if imported.boundary_only().is_empty() {
        problem.geometry.sample_boundary(config.n_boundary, config.seed)
    } else {
        imported.boundary_only()
    };
    let set = imported.interior_only().merged(&boundary);
    run(problem, config, LossSpec::Pinn(config.weights), set, start)
}

fn run(problem: &HeatProblem, config: &TrainConfig, spec: LossSpec, set: PointSet, start: Instant) -> Result<(MlpParams, TrainReport)> {
    config.validate()?;
    let arch = config.arch;
    let loss = LossFunction::new(arch, build_terms(problem, spec, &set)?)?;
    let test_set = test_points(problem, config);
    let grid = problem.geometry.eval_grid(GRID_SIDE);
    let init = net::init_glorot(arch, config.seed);
    let flops_per_pass = net::flops_per_eval(arch) as f64 * set.len() as f64 * 3.0;
    let low_coverage = set.count(PointKind::Interior) < LOW_COVERAGE_POINTS && spec != LossSpec::SupervisedMse;
    let t_setup_s = start.elapsed().as_secs_f64();

    let deviation = |params: &MlpParams| solution_deviation(problem, &grid, |x, y| forward(params, x, y));
    let objective = |values: &[f64], grad: &mut [f64]| loss.eval(values, grad);

    let train_start = Instant::now();
    let adam = adam_run(init.into_flat(), objective, AdamConfig::with_lr(config.lr), config.epochs);
    let t_train_s = train_start.elapsed().as_secs_f64();
    let mut report = TrainReport {
        final_loss: None,
        test_error: None,
        solution_deviation: None,
        adam_deviation: None,
        t_setup_s,
        t_train_s,
        t_refine_s: 0.0,
        flops: flops_per_pass * adam.history.len() as f64,
        loss_history: adam.history,
        refine_history: Vec::new(),
        lbfgs_iterations: 0,
        lbfgs_evaluations: 0,
        termination: "epochs".into(),
        status: RunStatus::Ok,
    };
    let mut params = MlpParams::from_flat(arch, adam.params)?;
    if let Some(abort) = adam.aborted {
        report.termination = abort.to_string();
        report.status = RunStatus::Failed(format!("adam {abort}"));
        return Ok((params, report));
    }
    report.adam_deviation = Some(deviation(&params));

    if config.refine {
        let refine_start = Instant::now();
        let out = lbfgs_run(params.into_flat(), objective, config.lbfgs);
        report.t_refine_s = refine_start.elapsed().as_secs_f64();
        report.flops += flops_per_pass * out.evaluations as f64;
        report.lbfgs_iterations = out.iterations;
        report.lbfgs_evaluations = out.evaluations;
        report.termination = out.termination.label().into();
        report.refine_history = out.history;
        params = MlpParams::from_flat(arch, out.params)?;
        if out.termination == crate::optim::Termination::NonFinite && !out.value.is_finite() {
            report.status = RunStatus::Failed("lbfgs non-finite".into());
            return Ok((params, report));
        }
    }

    let final_loss = loss.value(params.as_slice());
    if !final_loss.is_finite() {
        report.status = RunStatus::Failed("non-finite final loss".into());
        return Ok((params, report));
    }
    report.final_loss = Some(final_loss);
    report.test_error = Some(test_error(&params, problem, spec, &test_set)?);
    report.solution_deviation = Some(deviation(&params));
    if !config.refine {
        report.adam_deviation = report.solution_deviation;
    }
    if low_coverage {
        report.status = RunStatus::LowCoverage;
    }
    Ok((params, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem() -> HeatProblem {
        HeatProblem::default()
    }

    fn quick(seed: u64) -> TrainConfig {
        TrainConfig {
            n_domain: 20,
            n_boundary: 16,
            n_test: 36,
            arch: Arch { hidden_width: 5, hidden_depth: 1 },
            epochs: 30,
            ..TrainConfig::first_block(seed)
        }
    }

    #[test]
    fn zero_net_single_point_loss() {
        let params = MlpParams::zeros(Arch { hidden_width: 4, hidden_depth: 2 });
        let set = PointSet { points: vec![SamplePoint::interior(0.5, 0.0)], seed: 0 };
        let loss = assemble_loss(&params, &problem(), LossWeights::default(), &set).unwrap();
        assert!((loss - 10.24).abs() < 1e-12);
        let err = test_error(&params, &problem(), LossSpec::Pinn(LossWeights::default()), &set).unwrap();
        assert!((err - 3.2).abs() < 1e-12);
    }

    #[test]
    fn interior_point_in_hole_is_rejected() {
        let params = MlpParams::zeros(Arch { hidden_width: 2, hidden_depth: 1 });
        let set = PointSet { points: vec![SamplePoint::interior(0.1, 0.0)], seed: 0 };
        assert!(matches!(assemble_loss(&params, &problem(), LossWeights::default(), &set), Err(Error::Contract(_))));
        assert!(build_terms(&problem(), LossSpec::Pinn(LossWeights::default()), &set).is_err());
    }

    #[test]
    fn batch_loss_agrees_with_scalar_assembly() {
        let p = problem();
        let params = net::init_glorot(Arch { hidden_width: 8, hidden_depth: 2 }, 3);
        let set = training_points(&p, &TrainConfig::first_block(4));
        let weights = LossWeights { interior: 1.0, hole: 2.0, dirichlet: 0.5, neumann: 3.0 };
        let terms = build_terms(&p, LossSpec::Pinn(weights), &set).unwrap();
        let batch = LossFunction::new(params.arch(), terms).unwrap().value(params.as_slice());
        let scalar = assemble_loss(&params, &p, weights, &set).unwrap();
        assert!((batch - scalar).abs() <= 1e-12 * scalar.max(1.0));
    }

    #[test]
    fn loss_is_permutation_and_duplicate_invariant() {
        let p = problem();
        let params = net::init_glorot(Arch { hidden_width: 6, hidden_depth: 1 }, 1);
        let set = training_points(&p, &TrainConfig::first_block(2));
        let w = LossWeights::default();
        let base = assemble_loss(&params, &p, w, &set).unwrap();
        let mut reversed = set.clone();
        reversed.points.reverse();
        assert!((assemble_loss(&params, &p, w, &reversed).unwrap() - base).abs() <= 1e-12);
        let doubled = set.clone().merged(&set.interior_only());
        let interior_doubled = set.interior_only().merged(&set);
        assert!((assemble_loss(&params, &p, w, &doubled).unwrap() - assemble_loss(&params, &p, w, &interior_doubled).unwrap()).abs() <= 1e-12);
        let dup = set.clone().merged(&set);
        assert!((assemble_loss(&params, &p, w, &dup).unwrap() - base).abs() <= 1e-12);
    }

    #[test]
    fn zero_weight_term_changes_nothing() {
        let p = problem();
        let params = net::init_glorot(Arch { hidden_width: 6, hidden_depth: 1 }, 1);
        let set = training_points(&p, &TrainConfig::first_block(2));
        let w = LossWeights { neumann: 0.0, ..LossWeights::default() };
        let without_neumann = PointSet { points: set.points.iter().filter(|q| q.kind != PointKind::NeumannEdge).copied().collect(), seed: 0 };
        assert_eq!(
            assemble_loss(&params, &p, w, &set).unwrap(),
            assemble_loss(&params, &p, LossWeights::default(), &without_neumann).unwrap()
        );
    }

    #[test]
    fn zero_epochs_reports_initial_deviation() {
        let p = problem();
        let config = TrainConfig { epochs: 0, ..quick(5) };
        let (params, report) = train(&p, &config).unwrap();
        assert_eq!(params, net::init_glorot(config.arch, 5));
        let grid = p.geometry.eval_grid(GRID_SIDE);
        let expected = solution_deviation(&p, &grid, |x, y| forward(&params, x, y));
        assert_eq!(report.solution_deviation, Some(expected));
        assert!(report.loss_history.is_empty());
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let p = problem();
        let (pa, ra) = train(&p, &quick(7)).unwrap();
        let (pb, rb) = train(&p, &quick(7)).unwrap();
        assert_eq!(pa, pb);
        assert_eq!(ra.loss_history, rb.loss_history);
        assert_eq!(ra.solution_deviation, rb.solution_deviation);
        assert!(ra.final_loss.unwrap() < ra.loss_history[0]);
        assert_eq!(ra.status, RunStatus::Ok);
    }

    #[test]
    fn refinement_never_increases_loss() {
        let p = problem();
        let config = TrainConfig { refine: true, lbfgs: LbfgsConfig { max_iter: 50, ..LbfgsConfig::default() }, ..quick(2) };
        let (_, report) = train(&p, &config).unwrap();
        assert!(report.refine_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(report.lbfgs_iterations > 0);
        assert!(report.flops > 0.0);
    }

    #[test]
    fn fit_to_zero_target_starts_at_zero_loss() {
        // A zero network on the rim reproduces T = 0 exactly.
        let p = problem();
        let params = MlpParams::zeros(Arch { hidden_width: 3, hidden_depth: 1 });
        let set = PointSet { points: vec![SamplePoint::boundary(0.2, 0.0, PointKind::HoleCircle)], seed: 0 };
        let terms = build_terms(&p, LossSpec::SupervisedMse, &set).unwrap();
        assert_eq!(LossFunction::new(params.arch(), terms).unwrap().value(params.as_slice()), 0.0);
    }

    #[test]
    fn imported_points() {
        let p = problem();
        let config = quick(3);
        assert!(matches!(train_on_points(&p, &config, &PointSet::default()), Err(Error::Config(_))));
        let one = PointSet { points: vec![SamplePoint::interior(0.5, 0.5)], seed: 0 };
        let (_, report) = train_on_points(&p, &config, &one).unwrap();
        assert_eq!(report.status, RunStatus::LowCoverage);
        assert!(report.solution_deviation.unwrap().is_finite());
    }

    #[test]
    fn predict_grid_zero_net() {
        let grid = problem().geometry.eval_grid(10);
        let values = predict_grid(&MlpParams::zeros(Arch { hidden_width: 2, hidden_depth: 2 }), &grid);
        assert_eq!(values.len(), grid.len());
        assert!(values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn test_split_follows_training_ratio() {
        let p = problem();
        let set = test_points(&p, &TrainConfig::second_block(1));
        assert_eq!(set.len(), 340);
        assert_eq!(set.count(PointKind::Interior), 250);
    }
}
