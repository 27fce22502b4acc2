//! Steady heat conduction with a radial source on the plate with a hole.
//!
//! The field `T = (r - a)²` solves `ΔT + s = 0` with `s = 2a/r - 4`, vanishes
//! on the hole rim, and supplies the Dirichlet data on `x = ±b` and the
//! outward-normal flux on `y = ±b`. Every boundary datum below is derived
//! from this one closed form.

use crate::error::{Error, Result};
use crate::geometry::{PlateWithHole, PointKind, SamplePoint};

/// Data of a Poisson problem `-ΔT = s` that the finite-element and network
/// solvers both consume.
pub trait BoundaryValueProblem: Sync {
    fn source(&self, x: f64, y: f64) -> f64;

    /// Prescribed value on a Dirichlet piece.
    fn dirichlet_value(&self, kind: PointKind, x: f64, y: f64) -> f64;

    /// Prescribed outward-normal derivative `∂T/∂n` on a Neumann piece.
    fn neumann_flux(&self, x: f64, y: f64, normal: [f64; 2]) -> f64;

    /// Whether `kind` carries a Dirichlet condition.
    fn is_dirichlet(&self, kind: PointKind) -> bool {
        matches!(kind, PointKind::HoleCircle | PointKind::DirichletEdge)
    }
}

/// Prescribed boundary datum at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcValue {
    Dirichlet(f64),
    /// Outward-normal derivative.
    Neumann(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeatProblem {
    pub geometry: PlateWithHole,
}

impl HeatProblem {
    pub fn new(geometry: PlateWithHole) -> Self {
        HeatProblem { geometry }
    }

    fn a(&self) -> f64 {
        self.geometry.a
    }

    pub fn exact_t(&self, x: f64, y: f64) -> f64 {
        let d = x.hypot(y) - self.a();
        d * d
    }

    /// `∇T = 2(1 - a/r)(x, y)`.
    pub fn exact_gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let factor = 2.0 * (1.0 - self.a() / x.hypot(y));
        [factor * x, factor * y]
    }

    /// The additive term `s = 2a/r - 4`; undefined at the origin.
    pub fn source_checked(&self, x: f64, y: f64) -> Result<f64> {
        let r = x.hypot(y);
        if r == 0.0 {
            return Err(Error::Contract("source term is singular at r = 0".into()));
        }
        Ok(2.0 * self.a() / r - 4.0)
    }

    /// Boundary condition at a boundary point; interior points are a
    /// contract violation.
    pub fn boundary_data(&self, p: &SamplePoint) -> Result<BcValue> {
        match p.kind {
            PointKind::Interior => Err(Error::Contract(format!(
                "boundary data requested for interior point ({}, {})",
                p.x, p.y
            ))),
            PointKind::HoleCircle | PointKind::DirichletEdge => {
                Ok(BcValue::Dirichlet(self.dirichlet_value(p.kind, p.x, p.y)))
            }
            PointKind::NeumannEdge => {
                let normal = p.normal.unwrap_or([0.0, p.y.signum()]);
                Ok(BcValue::Neumann(self.neumann_flux(p.x, p.y, normal)))
            }
        }
    }

    /// `ΔT + s` from hand-differentiated second derivatives
    /// `T_xx = 2 - 2a y²/r³`, `T_yy = 2 - 2a x²/r³`.
    pub fn residual_oracle(&self, x: f64, y: f64) -> f64 {
        let a = self.a();
        let r = x.hypot(y);
        let r3 = r * r * r;
        let t_xx = 2.0 - 2.0 * a * y * y / r3;
        let t_yy = 2.0 - 2.0 * a * x * x / r3;
        t_xx + t_yy + (2.0 * a / r - 4.0)
    }
}

impl BoundaryValueProblem for HeatProblem {
    fn source(&self, x: f64, y: f64) -> f64 {
        2.0 * self.a() / x.hypot(y) - 4.0
    }

    /// `0` on the rim, `(√(b² + y²) - a)²` on `x = ±b`.
    fn dirichlet_value(&self, kind: PointKind, _x: f64, y: f64) -> f64 {
        match kind {
            PointKind::HoleCircle => 0.0,
            _ => {
                let d = self.geometry.b.hypot(y) - self.a();
                d * d
            }
        }
    }

    /// On `y = ±b` with outward normal `(0, ±1)` the flux is
    /// `2b(1 - a/√(x² + b²))` on both edges.
    fn neumann_flux(&self, x: f64, y: f64, normal: [f64; 2]) -> f64 {
        let [gx, gy] = self.exact_gradient(x, y);
        gx * normal[0] + gy * normal[1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn problem() -> HeatProblem {
        HeatProblem::default()
    }

    #[test]
    fn exact_values() {
        let p = problem();
        assert_eq!(p.exact_t(0.2, 0.0), 0.0);
        assert!((p.exact_t(1.0, 0.0) - 0.64).abs() < 1e-15);
        assert!((p.exact_t(0.0, -1.0) - 0.64).abs() < 1e-15);
    }

    #[test]
    fn source_values() {
        let p = problem();
        assert!((p.source(0.2, 0.0) + 2.0).abs() < 1e-15);
        assert!(p.source(0.1, 0.0).abs() < 1e-15);
        let s = p.source(1.0, 1.0);
        assert!((s - (0.4 / 2f64.sqrt() - 4.0)).abs() < 1e-15);
        assert!((s + 3.7172).abs() < 1e-4);
        assert!(p.source_checked(0.0, 0.0).is_err());
    }

    #[test]
    fn boundary_examples() {
        let p = problem();
        let hole = SamplePoint::boundary(0.0, 0.2, PointKind::HoleCircle);
        assert_eq!(p.boundary_data(&hole).unwrap(), BcValue::Dirichlet(0.0));
        let edge = SamplePoint::boundary(1.0, 0.0, PointKind::DirichletEdge);
        match p.boundary_data(&edge).unwrap() {
            BcValue::Dirichlet(v) => assert!((v - 0.64).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        let top = SamplePoint::boundary(0.0, 1.0, PointKind::NeumannEdge);
        match p.boundary_data(&top).unwrap() {
            BcValue::Neumann(v) => assert!((v - 1.6).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        let bottom = SamplePoint::boundary(0.3, -1.0, PointKind::NeumannEdge);
        let top = SamplePoint::boundary(0.3, 1.0, PointKind::NeumannEdge);
        assert_eq!(p.boundary_data(&bottom).unwrap(), p.boundary_data(&top).unwrap());
        assert!(p.boundary_data(&SamplePoint::interior(0.5, 0.5)).is_err());
    }

    #[test]
    fn neumann_matches_closed_form() {
        let p = problem();
        for x in [-1.0, -0.4, 0.0, 0.7, 1.0] {
            let expected = 2.0 * (1.0 - 0.2 / (x * x + 1.0f64).sqrt());
            assert!((p.neumann_flux(x, 1.0, [0.0, 1.0]) - expected).abs() < 1e-14);
            assert!((p.neumann_flux(x, -1.0, [0.0, -1.0]) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn residual_oracle_vanishes() {
        let p = problem();
        for (x, y) in [(0.3, 0.4), (1.0, 1.0), (0.2, 0.0)] {
            assert!(p.residual_oracle(x, y).abs() <= 1e-12);
        }
        let g = p.geometry;
        for s in &g.sample_interior(2000, 11).points {
            assert!(p.residual_oracle(s.x, s.y).abs() <= 1e-10);
        }
    }

    #[test]
    fn radial_symmetry() {
        let p = problem();
        let mut rng = SeededRng::new(4, 0);
        for _ in 0..1000 {
            let x = rng.uniform_in(-1.0, 1.0);
            let y = rng.uniform_in(-1.0, 1.0);
            let t = p.exact_t(x, y);
            assert_eq!(t, p.exact_t(-x, y));
            assert!((t - p.exact_t(y, x)).abs() <= 1e-15);
        }
    }
}
