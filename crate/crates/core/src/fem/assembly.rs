//! Galerkin assembly of `∫∇N_a·∇N_b = ∫ s N_a + ∫_Γq g N_a` and Dirichlet elimination.

use crate::error::{Error, Result};
use crate::geometry::outward_normal;
use crate::problem::BoundaryValueProblem;

use super::element::{element_rule, facet_rule, facet_shape, shape, Mapping};
use super::mesh::Mesh;
use super::sparse::CsrMatrix;

/// Assembled, unconstrained system.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Floating-point operations spent on assembly.
    pub flops: u64,
}

/// System on the free nodes after Dirichlet elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Mesh node of each free unknown.
    pub free: Vec<usize>,
    /// Prescribed value per mesh node, `None` where free.
    pub prescribed: Vec<Option<f64>>,
}

impl ConstrainedSystem {
    /// Nodal field from a solution on the free unknowns.
    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.prescribed.iter().map(|v| v.unwrap_or(0.0)).collect();
        for (&node, &v) in self.free.iter().zip(free_values) {
            out[node] = v;
        }
        out
    }
}

pub fn assemble(mesh: &Mesh, problem: &dyn BoundaryValueProblem) -> Result<SparseSystem> {
    let n = mesh.node_count();
    let k = mesh.order.nodes_per_element();
    let rule = element_rule(mesh.order);
    let mut triplets = Vec::with_capacity(mesh.element_count() * k * k);
    let mut rhs = vec![0.0; n];
    let mut flops = 0u64;
    let shapes: Vec<_> = rule.iter().map(|q| shape(mesh.order, q.xi, q.eta)).collect();
    let per_point = (8 * k + 3 + 6 * k + k * k * 3 + 3 * k) as u64;

    for (e, nodes) in mesh.elements.iter().enumerate() {
        let coords = mesh.element_coords(e);
        let mut ke = vec![0.0; k * k];
        let mut fe = vec![0.0; k];
        for (q, (nv, dn)) in rule.iter().zip(&shapes) {
            let map = Mapping::at(&coords, nv, dn);
            if !(map.det > 0.0) {
                return Err(Error::DegenerateElement {
                    element: e,
                    message: format!("Jacobian determinant {:e} at (ξ, η) = ({}, {})", map.det, q.xi, q.eta),
                });
            }
            let w = q.weight * map.det;
            let grads: Vec<[f64; 2]> = dn.iter().map(|d| map.physical_gradient(*d)).collect();
            let s = problem.source(map.point[0], map.point[1]);
            for a in 0..k {
                fe[a] += w * s * nv[a];
                for b in 0..k {
                    ke[a * k + b] += w * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                }
            }
            flops += per_point;
        }
        for a in 0..k {
            rhs[nodes[a]] += fe[a];
            for b in 0..k {
                triplets.push((nodes[a], nodes[b], ke[a * k + b]));
            }
        }
        flops += k as u64;
    }

    let frule = facet_rule(mesh.order);
    for f in &mesh.facets {
        if problem.is_dirichlet(f.kind) {
            continue;
        }
        let coords: Vec<[f64; 2]> = f.nodes.iter().map(|&i| mesh.nodes[i]).collect();
        for &(s, w) in &frule {
            let (nv, dn) = facet_shape(mesh.order, s);
            let mut p = [0.0; 2];
            let mut t = [0.0; 2];
            for ((c, v), d) in coords.iter().zip(&nv).zip(&dn) {
                for i in 0..2 {
                    p[i] += v * c[i];
                    t[i] += d * c[i];
                }
            }
            let jac = t[0].hypot(t[1]);
            let g = problem.neumann_flux(p[0], p[1], outward_normal(f.kind, p[0], p[1]));
            for (&node, v) in f.nodes.iter().zip(&nv) {
                rhs[node] += w * jac * g * v;
            }
            flops += (4 * nv.len() + 4 + 4 * nv.len()) as u64;
        }
    }

    Ok(SparseSystem { matrix: CsrMatrix::from_triplets(n, triplets), rhs, flops })
}

/// Prescribed value for every node of a Dirichlet facet. Nodes shared with a
/// Neumann facet (the plate corners) are Dirichlet-owned.
pub fn dirichlet_values(mesh: &Mesh, problem: &dyn BoundaryValueProblem) -> Result<Vec<Option<f64>>> {
    let mut prescribed: Vec<Option<f64>> = vec![None; mesh.node_count()];
    for f in mesh.facets.iter().filter(|f| problem.is_dirichlet(f.kind)) {
        for &node in &f.nodes {
            let [x, y] = mesh.nodes[node];
            let value = problem.dirichlet_value(f.kind, x, y);
            match prescribed[node] {
                Some(first) if (first - value).abs() > 1e-10 => {
                    return Err(Error::DirichletConflict { node, first, second: value });
                }
                Some(_) => {}
                None => prescribed[node] = Some(value),
            }
        }
    }
    Ok(prescribed)
}

/// Removes constrained rows and columns, moving their known contributions to
/// the right-hand side.
pub fn apply_dirichlet(system: &SparseSystem, mesh: &Mesh, problem: &dyn BoundaryValueProblem) -> Result<ConstrainedSystem> {
    let prescribed = dirichlet_values(mesh, problem)?;
    let n = mesh.node_count();
    let mut index = vec![usize::MAX; n];
    let free: Vec<usize> = (0..n).filter(|&i| prescribed[i].is_none()).collect();
    for (k, &node) in free.iter().enumerate() {
        index[node] = k;
    }
    let mut triplets = Vec::with_capacity(system.matrix.nnz());
    let mut rhs = Vec::with_capacity(free.len());
    for (k, &node) in free.iter().enumerate() {
        let mut b = system.rhs[node];
        for (j, v) in system.matrix.row(node) {
            match prescribed[j] {
                Some(u) => b -= v * u,
                None => triplets.push((k, index[j], v)),
            }
        }
        rhs.push(b);
    }
    Ok(ConstrainedSystem { matrix: CsrMatrix::from_triplets(free.len(), triplets), rhs, free, prescribed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{generate_mesh, MeshSpec, Order};
    use crate::geometry::{PlateWithHole, PointKind};
    use crate::problem::HeatProblem;
    use crate::rng::SeededRng;

    struct Zero;

    impl BoundaryValueProblem for Zero {
        fn source(&self, _: f64, _: f64) -> f64 {
            0.0
        }
        fn dirichlet_value(&self, _: PointKind, _: f64, _: f64) -> f64 {
            0.0
        }
        fn neumann_flux(&self, _: f64, _: f64, _: [f64; 2]) -> f64 {
            0.0
        }
    }

    fn single_triangle(order: Order) -> Mesh {
        let mut nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let mut element = vec![0, 1, 2];
        if order == Order::Quadratic {
            nodes.extend([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]);
            element.extend([3, 4, 5]);
        }
        Mesh { nodes, elements: vec![element], facets: vec![], order }
    }

    #[test]
    fn unit_triangle_stiffness() {
        let sys = assemble(&single_triangle(Order::Linear), &Zero).unwrap();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for (i, row) in expected.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((sys.matrix.get(i, j) - v).abs() < 1e-15);
            }
        }
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_triangle_stiffness_row_sums() {
        let sys = assemble(&single_triangle(Order::Quadratic), &Zero).unwrap();
        for i in 0..6 {
            assert!(sys.matrix.row(i).map(|(_, v)| v).sum::<f64>().abs() < 1e-14);
        }
        // Vertex-vertex entry of the P2 stiffness on the unit right triangle.
        assert!((sys.matrix.get(0, 0) - 1.0).abs() < 1e-14);
        assert!((sys.matrix.get(1, 1) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn degenerate_element_is_named() {
        let mut mesh = single_triangle(Order::Linear);
        mesh.elements.push(vec![0, 2, 1]);
        match assemble(&mesh, &Zero) {
            Err(Error::DegenerateElement { element, .. }) => assert_eq!(element, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn generated_meshes_are_symmetric_with_null_row_sums() {
        let g = PlateWithHole::default();
        for order in [Order::Linear, Order::Quadratic] {
            let mesh = generate_mesh(&g, MeshSpec::new(3, 16, order)).unwrap();
            let sys = assemble(&mesh, &HeatProblem::new(g)).unwrap();
            assert!(sys.matrix.asymmetry() <= 1e-12);
            for i in 0..sys.matrix.n {
                assert!(sys.matrix.row(i).map(|(_, v)| v).sum::<f64>().abs() <= 1e-10);
            }
            assert!(sys.flops > 0);
            assert_eq!(assemble(&mesh, &HeatProblem::new(g)).unwrap().flops, sys.flops);
        }
    }

    #[test]
    fn eliminated_system_is_positive_definite() {
        let g = PlateWithHole::default();
        let mesh = generate_mesh(&g, MeshSpec::new(3, 16, Order::Quadratic)).unwrap();
        let p = HeatProblem::new(g);
        let c = apply_dirichlet(&assemble(&mesh, &p).unwrap(), &mesh, &p).unwrap();
        assert!(c.matrix.diagonal().iter().all(|&d| d > 0.0));
        let mut rng = SeededRng::new(9, 0);
        let mut az = vec![0.0; c.matrix.n];
        for _ in 0..100 {
            let z: Vec<f64> = (0..c.matrix.n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            c.matrix.matvec(&z, &mut az);
            assert!(z.iter().zip(&az).map(|(a, b)| a * b).sum::<f64>() > 0.0);
        }
    }

    #[test]
    fn corners_are_constrained() {
        let g = PlateWithHole::default();
        let mesh = generate_mesh(&g, MeshSpec::new(2, 8, Order::Linear)).unwrap();
        let p = HeatProblem::new(g);
        let values = dirichlet_values(&mesh, &p).unwrap();
        for (node, xy) in mesh.nodes.iter().enumerate() {
            if xy[0].abs() == 1.0 && xy[1].abs() == 1.0 {
                let expected = (2f64.sqrt() - 0.2).powi(2);
                assert!((values[node].unwrap() - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn all_dirichlet_gives_empty_system() {
        struct AllDirichlet;
        impl BoundaryValueProblem for AllDirichlet {
            fn source(&self, _: f64, _: f64) -> f64 {
                1.0
            }
            fn dirichlet_value(&self, _: PointKind, x: f64, _: f64) -> f64 {
                x
            }
            fn neumann_flux(&self, _: f64, _: f64, _: [f64; 2]) -> f64 {
                0.0
            }
            fn is_dirichlet(&self, _: PointKind) -> bool {
                true
            }
        }
        let g = PlateWithHole::default();
        let mesh = generate_mesh(&g, MeshSpec::new(1, 8, Order::Linear)).unwrap();
        let c = apply_dirichlet(&assemble(&mesh, &AllDirichlet).unwrap(), &mesh, &AllDirichlet).unwrap();
        assert_eq!(c.matrix.n, 0);
        let nodal = c.expand(&[]);
        for (v, xy) in nodal.iter().zip(&mesh.nodes) {
            assert_eq!(*v, xy[0]);
        }
    }

    #[test]
    fn conflicting_dirichlet_values() {
        struct Clash;
        impl BoundaryValueProblem for Clash {
            fn source(&self, _: f64, _: f64) -> f64 {
                0.0
            }
            fn dirichlet_value(&self, kind: PointKind, _: f64, _: f64) -> f64 {
                if kind == PointKind::HoleCircle { 0.0 } else { 1.0 }
            }
            fn neumann_flux(&self, _: f64, _: f64, _: [f64; 2]) -> f64 {
                0.0
            }
        }
        let mut mesh = single_triangle(Order::Linear);
        mesh.facets.push(crate::fem::mesh::Facet { nodes: vec![0, 1], kind: PointKind::HoleCircle });
        mesh.facets.push(crate::fem::mesh::Facet { nodes: vec![1, 2], kind: PointKind::DirichletEdge });
        assert!(matches!(dirichlet_values(&mesh, &Clash), Err(Error::DirichletConflict { node: 1, .. })));
    }
}
