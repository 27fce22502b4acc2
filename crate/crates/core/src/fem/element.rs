//! Reference-triangle shape functions, quadrature rules and the
//! isoparametric element map.

use super::mesh::Order;

/// Point and weight on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}` (area 1/2).
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub xi: f64,
    pub eta: f64,
    pub weight: f64,
}

/// Degree-2 rule, three interior points.
pub fn triangle_rule_3() -> Vec<QuadPoint> {
    let w = 1.0 / 6.0;
    vec![
        QuadPoint { xi: 1.0 / 6.0, eta: 1.0 / 6.0, weight: w },
        QuadPoint { xi: 2.0 / 3.0, eta: 1.0 / 6.0, weight: w },
        QuadPoint { xi: 1.0 / 6.0, eta: 2.0 / 3.0, weight: w },
    ]
}

/// Degree-5 Radon rule, seven points.
pub fn triangle_rule_7() -> Vec<QuadPoint> {
    let s = 15f64.sqrt();
    let (a1, b1) = ((6.0 - s) / 21.0, (9.0 + 2.0 * s) / 21.0);
    let (a2, b2) = ((6.0 + s) / 21.0, (9.0 - 2.0 * s) / 21.0);
    let (w1, w2) = ((155.0 - s) / 2400.0, (155.0 + s) / 2400.0);
    vec![
        QuadPoint { xi: 1.0 / 3.0, eta: 1.0 / 3.0, weight: 9.0 / 80.0 },
        QuadPoint { xi: a1, eta: a1, weight: w1 },
        QuadPoint { xi: b1, eta: a1, weight: w1 },
        QuadPoint { xi: a1, eta: b1, weight: w1 },
        QuadPoint { xi: a2, eta: a2, weight: w2 },
        QuadPoint { xi: b2, eta: a2, weight: w2 },
        QuadPoint { xi: a2, eta: b2, weight: w2 },
    ]
}

/// Gauss–Legendre points and weights on `[-1, 1]`.
pub fn gauss_1d(n: usize) -> Vec<(f64, f64)> {
    match n {
        2 => {
            let p = 1.0 / 3f64.sqrt();
            vec![(-p, 1.0), (p, 1.0)]
        }
        3 => {
            let p = 0.6f64.sqrt();
            vec![(-p, 5.0 / 9.0), (0.0, 8.0 / 9.0), (p, 5.0 / 9.0)]
        }
        _ => panic!("no {n}-point Gauss rule"),
    }
}

pub fn element_rule(order: Order) -> Vec<QuadPoint> {
    match order {
        Order::Linear => triangle_rule_3(),
        Order::Quadratic => triangle_rule_7(),
    }
}

pub fn facet_rule(order: Order) -> Vec<(f64, f64)> {
    match order {
        Order::Linear => gauss_1d(2),
        Order::Quadratic => gauss_1d(3),
    }
}

/// Shape function values and reference gradients at `(ξ, η)`. Quadratic
/// node order: vertices 0, 1, 2, then mid-edges 01, 12, 20.
pub fn shape(order: Order, xi: f64, eta: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
    let l = [1.0 - xi - eta, xi, eta];
    let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    match order {
        Order::Linear => (l.to_vec(), dl.to_vec()),
        Order::Quadratic => {
            let mut n = Vec::with_capacity(6);
            let mut dn = Vec::with_capacity(6);
            for i in 0..3 {
                n.push(l[i] * (2.0 * l[i] - 1.0));
                let f = 4.0 * l[i] - 1.0;
                dn.push([f * dl[i][0], f * dl[i][1]]);
            }
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                n.push(4.0 * l[i] * l[j]);
                dn.push([4.0 * (l[j] * dl[i][0] + l[i] * dl[j][0]), 4.0 * (l[j] * dl[i][1] + l[i] * dl[j][1])]);
            }
            (n, dn)
        }
    }
}

/// 1D facet shape functions at `s ∈ [-1, 1]`: end nodes, then the mid node.
pub fn facet_shape(order: Order, s: f64) -> (Vec<f64>, Vec<f64>) {
    match order {
        Order::Linear => (vec![0.5 * (1.0 - s), 0.5 * (1.0 + s)], vec![-0.5, 0.5]),
        Order::Quadratic => (
            vec![0.5 * s * (s - 1.0), 0.5 * s * (s + 1.0), 1.0 - s * s],
            vec![s - 0.5, s + 0.5, -2.0 * s],
        ),
    }
}

/// Physical point, Jacobian `∂(x, y)/∂(ξ, η)` and its determinant.
pub struct Mapping {
    pub point: [f64; 2],
    pub jac: [[f64; 2]; 2],
    pub det: f64,
}

impl Mapping {
    pub fn at(coords: &[[f64; 2]], n: &[f64], dn: &[[f64; 2]]) -> Mapping {
        let mut point = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        for ((c, v), d) in coords.iter().zip(n).zip(dn) {
            for k in 0..2 {
                point[k] += v * c[k];
                jac[k][0] += c[k] * d[0];
                jac[k][1] += c[k] * d[1];
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        Mapping { point, jac, det }
    }

    /// Physical gradient from a reference gradient: `J⁻ᵀ ∇_ξ`.
    pub fn physical_gradient(&self, d: [f64; 2]) -> [f64; 2] {
        let j = &self.jac;
        [(j[1][1] * d[0] - j[1][0] * d[1]) / self.det, (-j[0][1] * d[0] + j[0][0] * d[1]) / self.det]
    }
}
