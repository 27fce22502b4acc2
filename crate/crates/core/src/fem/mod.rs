//! Finite-element reference solver: structured mesher, linear and quadratic
//! triangles, Galerkin assembly, Dirichlet elimination, Jacobi-PCG solve,
//! interpolation and centroid export.

pub mod assembly;
pub mod element;
pub mod locate;
pub mod mesh;
pub mod sparse;

use std::time::Instant;

use crate::error::Result;
use crate::geometry::{EvalGrid, PlateWithHole, PointKind, PointSet, SamplePoint};
use crate::problem::{BoundaryValueProblem, HeatProblem};

pub use assembly::{apply_dirichlet, assemble, ConstrainedSystem, SparseSystem};
pub use locate::{interpolate, Locator};
pub use mesh::{generate_mesh, generate_straight_mesh, Facet, Mesh, MeshSpec, Order};
pub use sparse::{solve_system, CgSolution, CsrMatrix};

/// Nodal solution with a point locator.
#[derive(Debug, Clone)]
pub struct FemSolution {
    pub mesh: Mesh,
    pub nodal: Vec<f64>,
    locator: Locator,
}

impl FemSolution {
    pub fn new(mesh: Mesh, nodal: Vec<f64>) -> Self {
        let locator = Locator::new(&mesh);
        FemSolution { mesh, nodal, locator }
    }

    /// `None` outside the mesh.
    pub fn value_at(&self, x: f64, y: f64) -> Option<f64> {
        self.locator
            .locate(&self.mesh, [x, y])
            .map(|(e, r)| locate::evaluate(&self.mesh, &self.nodal, e, r))
    }

    /// Values at every grid point and the number of points that needed the
    /// nearest-element fallback.
    pub fn evaluate_grid(&self, grid: &EvalGrid) -> (Vec<f64>, usize) {
        let mut uncovered = 0;
        let values = grid
            .points
            .iter()
            .map(|p| {
                self.value_at(p.x, p.y).unwrap_or_else(|| {
                    uncovered += 1;
                    locate::nearest_projection(&self.mesh, &self.nodal, [p.x, p.y])
                })
            })
            .collect();
        (values, uncovered)
    }
}

/// Outcome of one finite-element run.
#[derive(Debug, Clone, PartialEq)]
pub struct FemRecord {
    pub spec: MeshSpec,
    pub nodes: usize,
    pub elements: usize,
    pub solution_deviation: f64,
    /// Grid points outside every element.
    pub uncovered: usize,
    pub cg_iterations: usize,
    /// Mesh generation, assembly and elimination.
    pub t_setup_s: f64,
    pub t_solve_s: f64,
    /// Solver FLOPs only.
    pub flops: u64,
    pub assembly_flops: u64,
}

/// Nodal solution of `problem` on `mesh`.
pub fn solve_on_mesh(mesh: &Mesh, problem: &dyn BoundaryValueProblem) -> Result<(Vec<f64>, CgSolution, u64)> {
    let system = assemble(mesh, problem)?;
    let constrained = apply_dirichlet(&system, mesh, problem)?;
    let cg = solve_system(&constrained.matrix, &constrained.rhs)?;
    Ok((constrained.expand(&cg.x), cg, system.flops))
}

/// Mesh, assemble, constrain, solve and score against the exact field on
/// the standard grid.
pub fn solve_problem(problem: &HeatProblem, spec: MeshSpec, grid: &EvalGrid) -> Result<(FemSolution, FemRecord)> {
    let start = Instant::now();
    let mesh = generate_mesh(&problem.geometry, spec)?;
    let system = assemble(&mesh, problem)?;
    let constrained = apply_dirichlet(&system, &mesh, problem)?;
    let t_setup_s = start.elapsed().as_secs_f64();
    let solve_start = Instant::now();
    let cg = solve_system(&constrained.matrix, &constrained.rhs)?;
    let t_solve_s = solve_start.elapsed().as_secs_f64();
    let solution = FemSolution::new(mesh, constrained.expand(&cg.x));
    let (values, uncovered) = solution.evaluate_grid(grid);
    let solution_deviation = crate::harness::metrics::deviation_from_values(problem, grid, &values);
    let record = FemRecord {
        spec,
        nodes: solution.mesh.node_count(),
        elements: solution.mesh.element_count(),
        solution_deviation,
        uncovered,
        cg_iterations: cg.iterations,
        t_setup_s,
        t_solve_s,
        flops: cg.flops,
        assembly_flops: system.flops,
    };
    Ok((solution, record))
}

/// Element centroids (vertex averages) as interior points, plus one point
/// per boundary facet at its midpoint, moved onto the circle for rim facets.
pub fn centroids(mesh: &Mesh) -> PointSet {
    let mut points = Vec::with_capacity(mesh.element_count() + mesh.facets.len());
    for e in &mesh.elements {
        let (x, y) = e[..3].iter().fold((0.0, 0.0), |(x, y), &n| (x + mesh.nodes[n][0], y + mesh.nodes[n][1]));
        points.push(SamplePoint::interior(x / 3.0, y / 3.0));
    }
    for f in &mesh.facets {
        let [p, q] = [mesh.nodes[f.nodes[0]], mesh.nodes[f.nodes[1]]];
        let (mut x, mut y) = (0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]));
        if f.kind == PointKind::HoleCircle {
            let rim = PlateWithHole { a: p[0].hypot(p[1]), b: f64::INFINITY };
            (x, y) = rim.onto_rim(x, y);
        }
        points.push(SamplePoint::boundary(x, y, f.kind));
    }
    PointSet { points, seed: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_triangle_centroid() {
        let mesh = Mesh { nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], elements: vec![vec![0, 1, 2]], facets: vec![], order: Order::Linear };
        let c = centroids(&mesh);
        assert_eq!(c.len(), 1);
        assert!((c.points[0].x - 1.0 / 3.0).abs() < 1e-15 && (c.points[0].y - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn centroids_lie_in_domain_with_unit_normals() {
        let g = PlateWithHole::default();
        for spec in [MeshSpec::new(4, 24, Order::Linear), MeshSpec::new(2, 8, Order::Quadratic)] {
            let mesh = generate_mesh(&g, spec).unwrap();
            let set = centroids(&mesh);
            assert_eq!(set.count(PointKind::Interior), mesh.element_count());
            for p in &set.points {
                assert!(g.contains(p.x, p.y), "{p:?}");
                if let Some([nx, ny]) = p.normal {
                    assert!((nx.hypot(ny) - 1.0).abs() < 1e-14);
                    let outward = match p.kind {
                        PointKind::HoleCircle => -(nx * p.x + ny * p.y),
                        _ => nx * p.x + ny * p.y,
                    };
                    assert!(outward > 0.0);
                }
            }
        }
    }

    #[test]
    fn coarse_linear_deviation() {
        let p = HeatProblem::default();
        let grid = p.geometry.eval_grid(50);
        let (sol, rec) = solve_problem(&p, MeshSpec::new(4, 24, Order::Linear), &grid).unwrap();
        assert_eq!(rec.nodes, 120);
        assert_eq!(rec.uncovered, 0);
        assert!(rec.solution_deviation > 0.0 && rec.solution_deviation < 5e-2);
        // Nodal values on the rim are exactly zero.
        assert_eq!(sol.value_at(0.2 * std::f64::consts::FRAC_1_SQRT_2, 0.2 * std::f64::consts::FRAC_1_SQRT_2).map(|v| v.abs() < 1e-15), Some(true));
    }

    #[test]
    fn solver_flops_grow_with_refinement() {
        let p = HeatProblem::default();
        let grid = p.geometry.eval_grid(20);
        let (_, a) = solve_problem(&p, MeshSpec::new(2, 16, Order::Linear), &grid).unwrap();
        let (_, b) = solve_problem(&p, MeshSpec::new(4, 32, Order::Linear), &grid).unwrap();
        assert!(b.flops > a.flops);
        let (_, c) = solve_problem(&p, MeshSpec::new(4, 32, Order::Linear), &grid).unwrap();
        assert_eq!(b.flops, c.flops);
        assert_eq!(b.solution_deviation, c.solution_deviation);
    }
}
