//! Command-line front end. Settings resolve as built-in defaults, then the
//! TOML config file, then flags; the resolved settings are written to
//! `resolved.toml` in the output directory.
//!
//! Exit codes: 0 success, 1 run failure, 2 configuration or usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{self, centroids, generate_mesh, MeshSpec, Order};
use crate::geometry::{PlateWithHole, PointSet};
use crate::harness::{self, bench, fields, records, sweep::write_axes, RunRecord, SweepSpec, Timing};
use crate::net::{Arch, MlpParams};
use crate::optim::LbfgsConfig;
use crate::pinn::{self, LossWeights, TrainConfig, TrainReport};
use crate::problem::HeatProblem;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUN_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pinnfem", version, about = "Physics-informed network and finite-element solvers for a heated plate with a hole")]
pub struct Cli {
    /// TOML config file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long, global = true, env = "PINNFEM_OUT")]
    pub out: Option<PathBuf>,
    /// Seed for sampling, initialization and sweeps [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: 1]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Leave wall times out of the CSV output so reruns are byte-identical
    #[arg(long, global = true)]
    pub no_times: bool,
    /// Progress messages on standard error
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a physics-informed network
    SolvePinn(TrainArgs),
    /// Solve with finite elements
    SolveFem(MeshArgs),
    /// Fit a network directly to the exact solution
    FitExact(TrainArgs),
    /// Train on mesh centroids or on an imported point set
    CentroidTrain(CentroidArgs),
    /// Random hyperparameter sweep
    Sweep(SweepArgs),
    /// Summarize a finite-element and a network records file side by side
    Compare(CompareArgs),
    /// Write solution and residual maps for a checkpoint, a mesh solution or the exact field
    Fields(FieldArgs),
    /// Write a collocation point set (random or mesh centroids)
    ExportPoints(ExportArgs),
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// Interior training points [default: 50]
    #[arg(long)]
    pub n_domain: Option<usize>,
    /// Boundary training points [default: 40]
    #[arg(long)]
    pub n_boundary: Option<usize>,
    /// Test points [default: n-domain + n-boundary]
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Hidden layer width [default: 20]
    #[arg(long)]
    pub width: Option<usize>,
    /// Hidden layer count [default: 1]
    #[arg(long)]
    pub depth: Option<usize>,
    /// Adam epochs [default: 1000]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam learning rate [default: 0.01]
    #[arg(long)]
    pub lr: Option<f64>,
    /// L-BFGS refinement after Adam [default: false]
    #[arg(long)]
    pub refine: Option<bool>,
    /// L-BFGS iteration cap [default: 15000]
    #[arg(long)]
    pub lbfgs_max_iter: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct MeshArgs {
    /// Radial divisions [default: 4]
    #[arg(long)]
    pub radial: Option<usize>,
    /// Angular divisions, a multiple of 4 [default: 24]
    #[arg(long)]
    pub angular: Option<usize>,
    /// Element order, linear or quadratic [default: linear]
    #[arg(long)]
    pub order: Option<String>,
}

#[derive(Debug, Args)]
pub struct CentroidArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Point set file to train on instead of mesh centroids
    #[arg(long)]
    pub points: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Number of runs [default: 50]
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Finite-element records CSV
    #[arg(long)]
    pub fem: PathBuf,
    /// Network records CSV
    #[arg(long)]
    pub pinn: PathBuf,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Network checkpoint to evaluate
    #[arg(long, conflicts_with = "exact")]
    pub checkpoint: Option<PathBuf>,
    /// Use the exact solution
    #[arg(long)]
    pub exact: bool,
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// File name prefix [default: field]
    #[arg(long)]
    pub stem: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Interior points to sample [default: 50]
    #[arg(long)]
    pub n_domain: Option<usize>,
    /// Boundary points to sample [default: 40]
    #[arg(long)]
    pub n_boundary: Option<usize>,
    /// Export mesh centroids instead of random points
    #[arg(long)]
    pub centroids: bool,
    #[command(flatten)]
    pub mesh: MeshArgs,
}

/// Config file layout; every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub geometry: Option<PlateWithHole>,
    pub train: Option<TrainSection>,
    pub mesh: Option<MeshSection>,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub n_domain: Option<usize>,
    pub n_boundary: Option<usize>,
    pub n_test: Option<usize>,
    pub width: Option<usize>,
    pub depth: Option<usize>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub refine: Option<bool>,
    pub lbfgs_max_iter: Option<usize>,
    pub weights: Option<LossWeights>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub radial: Option<usize>,
    pub angular: Option<usize>,
    pub order: Option<Order>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub runs: Option<usize>,
    pub n_domain: Option<[usize; 2]>,
    pub n_boundary: Option<[usize; 2]>,
    pub width: Option<[usize; 2]>,
    pub depth: Option<[usize; 2]>,
    pub epochs: Option<[usize; 2]>,
    pub lr: Option<[f64; 2]>,
    pub refine: Option<harness::RefineMode>,
    pub lbfgs_max_iter: Option<usize>,
}

/// Fully resolved settings, echoed to `resolved.toml`.
#[derive(Debug, Serialize)]
struct Resolved<'a> {
    command: &'a str,
    seed: u64,
    jobs: usize,
    out: &'a Path,
    record_times: bool,
    geometry: PlateWithHole,
    #[serde(skip_serializing_if = "Option::is_none")]
    train: Option<ResolvedTrain>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mesh: Option<MeshSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<&'a SweepSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inputs: Option<Vec<PathBuf>>,
}

#[derive(Debug, Serialize)]
struct ResolvedTrain {
    n_domain: usize,
    n_boundary: usize,
    n_test: usize,
    width: usize,
    depth: usize,
    epochs: usize,
    lr: f64,
    refine: bool,
    lbfgs_max_iter: usize,
    weights: LossWeights,
}

impl ResolvedTrain {
    fn of(c: &TrainConfig) -> Self {
        ResolvedTrain {
            n_domain: c.n_domain,
            n_boundary: c.n_boundary,
            n_test: c.n_test,
            width: c.arch.hidden_width,
            depth: c.arch.hidden_depth,
            epochs: c.epochs,
            lr: c.lr,
            refine: c.refine,
            lbfgs_max_iter: c.lbfgs.max_iter,
            weights: c.weights,
        }
    }
}

struct Context {
    file: FileConfig,
    seed: u64,
    jobs: usize,
    out: PathBuf,
    timing: Timing,
    verbose: bool,
    problem: HeatProblem,
}

impl Context {
    fn log(&self, message: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", message.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_resolved(&self, command: &str, train: Option<&TrainConfig>, mesh: Option<MeshSpec>, sweep: Option<&SweepSpec>, inputs: Option<Vec<PathBuf>>) -> Result<()> {
        let resolved = Resolved {
            command,
            seed: self.seed,
            jobs: self.jobs,
            out: &self.out,
            record_times: self.timing == Timing::Record,
            geometry: self.problem.geometry,
            train: train.map(ResolvedTrain::of),
            mesh,
            sweep,
            inputs,
        };
        let text = toml::to_string(&resolved).map_err(|e| Error::Config(format!("cannot serialize resolved config: {e}")))?;
        let path = self.path("resolved.toml");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    fn train_config(&self, args: &TrainArgs) -> Result<TrainConfig> {
        let file = self.file.train.clone().unwrap_or_default();
        let pick = |flag: Option<usize>, file: Option<usize>, default: usize| flag.or(file).unwrap_or(default);
        let base = TrainConfig::first_block(self.seed);
        let n_domain = pick(args.n_domain, file.n_domain, base.n_domain);
        let n_boundary = pick(args.n_boundary, file.n_boundary, base.n_boundary);
        let config = TrainConfig {
            n_domain,
            n_boundary,
            n_test: pick(args.n_test, file.n_test, n_domain + n_boundary),
            arch: Arch::new(pick(args.width, file.width, 20), pick(args.depth, file.depth, 1))?,
            epochs: pick(args.epochs, file.epochs, base.epochs),
            lr: args.lr.or(file.lr).unwrap_or(base.lr),
            refine: args.refine.or(file.refine).unwrap_or(false),
            weights: file.weights.unwrap_or_default(),
            seed: self.seed,
            lbfgs: LbfgsConfig {
                max_iter: pick(args.lbfgs_max_iter, file.lbfgs_max_iter, LbfgsConfig::default().max_iter),
                ..LbfgsConfig::default()
            },
        };
        config.validate()?;
        Ok(config)
    }

    fn mesh_spec(&self, args: &MeshArgs) -> Result<MeshSpec> {
        let file = self.file.mesh.clone().unwrap_or_default();
        let order = match &args.order {
            Some(label) => Order::from_label(label).ok_or_else(|| Error::Config(format!("unknown element order `{label}`, expected linear or quadratic")))?,
            None => file.order.unwrap_or(Order::Linear),
        };
        let spec = MeshSpec::new(args.radial.or(file.radial).unwrap_or(4), args.angular.or(file.angular).unwrap_or(24), order);
        spec.validate()?;
        Ok(spec)
    }

    fn sweep_spec(&self, args: &SweepArgs) -> Result<SweepSpec> {
        let file = self.file.sweep.clone().unwrap_or_default();
        let d = SweepSpec::default();
        let spec = SweepSpec {
            runs: args.runs.or(file.runs).unwrap_or(d.runs),
            master_seed: self.seed,
            n_domain: file.n_domain.unwrap_or(d.n_domain),
            n_boundary: file.n_boundary.unwrap_or(d.n_boundary),
            width: file.width.unwrap_or(d.width),
            depth: file.depth.unwrap_or(d.depth),
            epochs: file.epochs.unwrap_or(d.epochs),
            lr: file.lr.unwrap_or(d.lr),
            refine: file.refine.unwrap_or(d.refine),
            lbfgs_max_iter: file.lbfgs_max_iter.unwrap_or(d.lbfgs_max_iter),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn write_records(&self, name: &str, records: &[RunRecord]) -> Result<()> {
        records::write_records(&self.path(name), records, self.timing)
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0);
        Error::Config(format!("{}:{line}: {}", path.display(), e.message()))
    })
}

/// Status of a finished run: failed runs map to exit code 1.
enum Outcome {
    Ok,
    RunFailed(String),
}

fn training_outcome(report: &TrainReport) -> Outcome {
    if report.status.is_success() {
        Outcome::Ok
    } else {
        Outcome::RunFailed(report.status.label())
    }
}

fn train_command(ctx: &Context, name: &str, args: &TrainArgs, exact_fit: bool) -> Result<Outcome> {
    let config = ctx.train_config(args)?;
    ctx.write_resolved(name, Some(&config), None, None, None)?;
    ctx.log(format!("{name}: {} interior, {} boundary, {}x{} net, {} epochs", config.n_domain, config.n_boundary, config.arch.hidden_width, config.arch.hidden_depth, config.epochs));
    let (params, report) = if exact_fit { pinn::fit_exact(&ctx.problem, &config)? } else { pinn::train(&ctx.problem, &config)? };
    let arm = if exact_fit { harness::Arm::FitExact } else { harness::Arm::Pinn };
    let id = format!("{}-s{}", arm.label(), config.seed);
    finish_training(ctx, &id, arm, &config, &params, &report)
}

fn finish_training(ctx: &Context, id: &str, arm: harness::Arm, config: &TrainConfig, params: &MlpParams, report: &TrainReport) -> Result<Outcome> {
    ctx.write_records("records.csv", &[bench::pinn_record(id, arm, config, report)])?;
    params.write_checkpoint(&ctx.path("checkpoint.txt"))?;
    if report.status.is_success() {
        let grid = ctx.problem.geometry.eval_grid(pinn::GRID_SIDE);
        fields::emit_field_maps(&ctx.problem, &grid, &pinn::predict_grid(params, &grid), &ctx.out, "pinn")?;
    }
    ctx.log(format!(
        "deviation {:?}, test error {:?}, termination {}",
        report.solution_deviation, report.test_error, report.termination
    ));
    Ok(training_outcome(report))
}

fn execute(ctx: &Context, command: &Command) -> Result<Outcome> {
    match command {
        Command::SolvePinn(args) => train_command(ctx, "solve-pinn", args, false),
        Command::FitExact(args) => train_command(ctx, "fit-exact", args, true),
        Command::SolveFem(args) => {
            let spec = ctx.mesh_spec(args)?;
            ctx.write_resolved("solve-fem", None, Some(spec), None, None)?;
            let grid = ctx.problem.geometry.eval_grid(pinn::GRID_SIDE);
            let (solution, record) = fem::solve_problem(&ctx.problem, spec, &grid)?;
            ctx.write_records("records.csv", &[bench::fem_record(&record)])?;
            solution.mesh.write(&ctx.path("mesh.txt"))?;
            let (values, _) = solution.evaluate_grid(&grid);
            fields::emit_field_maps(&ctx.problem, &grid, &values, &ctx.out, "fem")?;
            ctx.log(format!("{} nodes, deviation {:e}, {} CG iterations", record.nodes, record.solution_deviation, record.cg_iterations));
            Ok(Outcome::Ok)
        }
        Command::CentroidTrain(args) => {
            let (points, mesh, inputs) = match &args.points {
                Some(path) => (PointSet::read(path)?, None, Some(vec![path.clone()])),
                None => {
                    let spec = ctx.mesh_spec(&args.mesh)?;
                    (centroids(&generate_mesh(&ctx.problem.geometry, spec)?), Some(spec), None)
                }
            };
            let base = ctx.train_config(&args.train)?;
            let n_domain = points.count(crate::geometry::PointKind::Interior);
            let n_boundary = if points.boundary_only().is_empty() { base.n_boundary } else { points.len() - n_domain };
            let config = TrainConfig { n_domain, n_boundary, n_test: args.train.n_test.unwrap_or(n_domain + n_boundary), ..base };
            ctx.write_resolved("centroid-train", Some(&config), mesh, None, inputs)?;
            let (params, report) = pinn::train_on_points(&ctx.problem, &config, &points)?;
            let id = format!("pinn-centroid-s{}", config.seed);
            finish_training(ctx, &id, harness::Arm::PinnCentroid, &config, &params, &report)
        }
        Command::Sweep(args) => {
            let spec = ctx.sweep_spec(args)?;
            ctx.write_resolved("sweep", None, None, Some(&spec), None)?;
            ctx.log(format!("sweep: {} runs on {} threads", spec.runs, ctx.jobs));
            let records = harness::sweep(&ctx.problem, &spec, ctx.jobs)?;
            ctx.write_records("sweep.csv", &records)?;
            write_axes(&ctx.path("sweep_axes.csv"), &records, ctx.timing)?;
            if let Some(rho) = harness::sweep::test_deviation_correlation(&records) {
                ctx.log(format!("Spearman(test error, deviation) = {rho:.3}"));
            }
            let failures = records.iter().filter(|r| !r.is_ok()).count();
            Ok(if failures == 0 { Outcome::Ok } else { Outcome::RunFailed(format!("{failures} sweep runs failed")) })
        }
        Command::Compare(args) => {
            ctx.write_resolved("compare", None, None, None, Some(vec![args.fem.clone(), args.pinn.clone()]))?;
            harness::compare_report(&args.fem, &args.pinn, &ctx.path("summary.csv"))?;
            Ok(Outcome::Ok)
        }
        Command::Fields(args) => {
            let grid = ctx.problem.geometry.eval_grid(pinn::GRID_SIDE);
            let stem = args.stem.clone().unwrap_or_else(|| "field".into());
            let values = if let Some(path) = &args.checkpoint {
                ctx.write_resolved("fields", None, None, None, Some(vec![path.clone()]))?;
                pinn::predict_grid(&MlpParams::read_checkpoint(path)?, &grid)
            } else if args.exact {
                ctx.write_resolved("fields", None, None, None, None)?;
                grid.points.iter().map(|p| ctx.problem.exact_t(p.x, p.y)).collect()
            } else {
                let spec = ctx.mesh_spec(&args.mesh)?;
                ctx.write_resolved("fields", None, Some(spec), None, None)?;
                fem::solve_problem(&ctx.problem, spec, &grid)?.0.evaluate_grid(&grid).0
            };
            let summary = fields::emit_field_maps(&ctx.problem, &grid, &values, &ctx.out, &stem)?;
            ctx.log(format!("max |u - T| = {:e}", summary.residual_max));
            Ok(Outcome::Ok)
        }
        Command::ExportPoints(args) => {
            let set = if args.centroids {
                let spec = ctx.mesh_spec(&args.mesh)?;
                ctx.write_resolved("export-points", None, Some(spec), None, None)?;
                centroids(&generate_mesh(&ctx.problem.geometry, spec)?)
            } else {
                let train = TrainArgs { n_domain: args.n_domain, n_boundary: args.n_boundary, ..TrainArgs::default() };
                let config = ctx.train_config(&train)?;
                ctx.write_resolved("export-points", Some(&config), None, None, None)?;
                pinn::training_points(&ctx.problem, &config)
            };
            set.write(&ctx.path("points.txt"))?;
            Ok(Outcome::Ok)
        }
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Parse { .. } | Error::Schema { .. })
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let file = match load_config(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let geometry = file.geometry.unwrap_or_default();
    if let Err(e) = PlateWithHole::new(geometry.a, geometry.b) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let ctx = Context {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        jobs: cli.jobs.or(file.jobs).unwrap_or(1).max(1),
        out: cli.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        timing: if cli.no_times { Timing::Omit } else { Timing::Record },
        verbose: cli.verbose,
        problem: HeatProblem::new(geometry),
        file,
    };
    if let Err(e) = std::fs::create_dir_all(&ctx.out) {
        eprintln!("error: cannot create {}: {e}", ctx.out.display());
        return EXIT_RUN_FAILURE;
    }
    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
        .and_then(|pool| pool.install(|| execute(&ctx, &cli.command)));
    match result {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::RunFailed(reason)) => {
            eprintln!("run failed: {reason}");
            EXIT_RUN_FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            if is_config_error(&e) {
                EXIT_CONFIG
            } else {
                EXIT_RUN_FAILURE
            }
        }
    }
}
