//! Point location and evaluation of nodal fields.

use super::element::{shape, Mapping};
use super::mesh::{Mesh, Order};

/// Reference-coordinate slack when deciding whether a point is inside an element.
pub const INSIDE_TOL: f64 = 1e-9;

/// Uniform bucket grid over the mesh bounding box; each bucket lists the
/// elements whose bounding boxes overlap it.
#[derive(Debug, Clone)]
pub struct Locator {
    lo: [f64; 2],
    cell: [f64; 2],
    side: usize,
    buckets: Vec<Vec<usize>>,
}

fn bbox(coords: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for c in coords {
        for k in 0..2 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    (lo, hi)
}

impl Locator {
    pub fn new(mesh: &Mesh) -> Locator {
        let (lo, hi) = bbox(&mesh.nodes);
        let side = ((mesh.element_count() as f64).sqrt().ceil() as usize).max(1);
        let cell = [((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE), ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE)];
        let mut loc = Locator { lo, cell, side, buckets: vec![Vec::new(); side * side] };
        for e in 0..mesh.element_count() {
            let (elo, ehi) = bbox(&mesh.element_coords(e));
            let (i0, j0) = loc.bucket_of(elo);
            let (i1, j1) = loc.bucket_of(ehi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * side + i].push(e);
                }
            }
        }
        loc
    }

    fn bucket_of(&self, p: [f64; 2]) -> (usize, usize) {
        let idx = |k: usize| (((p[k] - self.lo[k]) / self.cell[k]).floor().max(0.0) as usize).min(self.side - 1);
        (idx(0), idx(1))
    }

    /// First element (lowest index) containing `p`, with its reference coordinates.
    pub fn locate(&self, mesh: &Mesh, p: [f64; 2]) -> Option<(usize, [f64; 2])> {
        let (i, j) = self.bucket_of(p);
        self.buckets[j * self.side + i].iter().find_map(|&e| {
            let r = reference_coords(mesh, e, p)?;
            inside(r).then_some((e, r))
        })
    }
}

fn inside(r: [f64; 2]) -> bool {
    r[0] >= -INSIDE_TOL && r[1] >= -INSIDE_TOL && 1.0 - r[0] - r[1] >= -INSIDE_TOL
}

/// Inverse of the element map at `p`: exact for straight elements, Newton
/// iterations for curved ones. `None` if Newton fails to converge.
pub fn reference_coords(mesh: &Mesh, e: usize, p: [f64; 2]) -> Option<[f64; 2]> {
    let coords = mesh.element_coords(e);
    let [a, b, c] = [coords[0], coords[1], coords[2]];
    let m = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let d = [p[0] - a[0], p[1] - a[1]];
    let mut r = [(m[1][1] * d[0] - m[0][1] * d[1]) / det, (-m[1][0] * d[0] + m[0][0] * d[1]) / det];
    if mesh.order == Order::Linear {
        return Some(r);
    }
    for _ in 0..30 {
        let (n, dn) = shape(Order::Quadratic, r[0], r[1]);
        let map = Mapping::at(&coords, &n, &dn);
        let f = [map.point[0] - p[0], map.point[1] - p[1]];
        let j = map.jac;
        let step = [(j[1][1] * f[0] - j[0][1] * f[1]) / map.det, (-j[1][0] * f[0] + j[0][0] * f[1]) / map.det];
        r = [r[0] - step[0], r[1] - step[1]];
        if !(r[0].is_finite() && r[1].is_finite()) {
            return None;
        }
        if step[0].abs().max(step[1].abs()) < 1e-14 {
            return Some(r);
        }
    }
    let (n, dn) = shape(Order::Quadratic, r[0], r[1]);
    let map = Mapping::at(&coords, &n, &dn);
    ((map.point[0] - p[0]).hypot(map.point[1] - p[1]) < 1e-12).then_some(r)
}

/// Nodal field value at reference coordinates `r` of element `e`.
pub fn evaluate(mesh: &Mesh, nodal: &[f64], e: usize, r: [f64; 2]) -> f64 {
    let (n, _) = shape(mesh.order, r[0], r[1]);
    mesh.elements[e].iter().zip(&n).map(|(&i, v)| nodal[i] * v).sum()
}

/// Point in the reference triangle closest to `r` (Euclidean in reference space).
fn clamp_reference(r: [f64; 2]) -> [f64; 2] {
    let [mut x, mut y] = r;
    if x + y > 1.0 {
        let t = 0.5 * (x - y + 1.0);
        x = t;
        y = 1.0 - t;
    }
    [x.clamp(0.0, 1.0), y.clamp(0.0, 1.0)]
}

/// Field at each point; `None` marks points inside no element.
pub fn interpolate(mesh: &Mesh, locator: &Locator, nodal: &[f64], points: &[[f64; 2]]) -> Vec<Option<f64>> {
    points
        .iter()
        .map(|&p| locator.locate(mesh, p).map(|(e, r)| evaluate(mesh, nodal, e, r)))
        .collect()
}

/// Value at the mapped, clamped reference point of the element whose image
/// of that point lies closest to `p`. Fallback for uncovered points.
pub fn nearest_projection(mesh: &Mesh, nodal: &[f64], p: [f64; 2]) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for e in 0..mesh.element_count() {
        let coords = mesh.element_coords(e);
        let r = clamp_reference(reference_coords(mesh, e, p).unwrap_or([1.0 / 3.0, 1.0 / 3.0]));
        let (n, dn) = shape(mesh.order, r[0], r[1]);
        let q = Mapping::at(&coords, &n, &dn).point;
        let dist = (q[0] - p[0]).hypot(q[1] - p[1]);
        if dist < best.0 {
            best = (dist, evaluate(mesh, nodal, e, r));
        }
    }
    best.1
}
