//! The square plate with a centred circular hole, its boundary pieces,
//! collocation sampling and the fixed evaluation grid.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numfmt;
use crate::rng::{stream, SeededRng};

/// Square `[-b, b]²` minus the open disk of radius `a`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateWithHole {
    pub a: f64,
    pub b: f64,
}

impl Default for PlateWithHole {
    fn default() -> Self {
        PlateWithHole { a: 0.2, b: 1.0 }
    }
}

/// Role of a point in the boundary value problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointKind {
    Interior,
    /// The hole rim `r = a` (Dirichlet, `T = 0`).
    HoleCircle,
    /// The edges `x = ±b` (Dirichlet).
    DirichletEdge,
    /// The edges `y = ±b` (Neumann).
    NeumannEdge,
}

impl PointKind {
    pub const ALL: [PointKind; 4] =
        [PointKind::Interior, PointKind::HoleCircle, PointKind::DirichletEdge, PointKind::NeumannEdge];

    pub fn is_boundary(self) -> bool {
        self != PointKind::Interior
    }

    pub fn label(self) -> &'static str {
        match self {
            PointKind::Interior => "interior",
            PointKind::HoleCircle => "hole",
            PointKind::DirichletEdge => "dirichlet",
            PointKind::NeumannEdge => "neumann",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        PointKind::ALL.into_iter().find(|k| k.label() == label)
    }
}

/// One of the five boundary curves, in the fixed allocation order used by
/// [`PlateWithHole::sample_boundary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece {
    Hole,
    Right,
    Left,
    Top,
    Bottom,
}

impl Piece {
    pub const ALL: [Piece; 5] = [Piece::Hole, Piece::Right, Piece::Left, Piece::Top, Piece::Bottom];

    pub fn kind(self) -> PointKind {
        match self {
            Piece::Hole => PointKind::HoleCircle,
            Piece::Right | Piece::Left => PointKind::DirichletEdge,
            Piece::Top | Piece::Bottom => PointKind::NeumannEdge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub x: f64,
    pub y: f64,
    pub kind: PointKind,
    /// Outward unit normal of the material; `Some` iff `kind` is a boundary kind.
    pub normal: Option<[f64; 2]>,
}

impl SamplePoint {
    pub fn interior(x: f64, y: f64) -> Self {
        SamplePoint { x, y, kind: PointKind::Interior, normal: None }
    }

    /// Boundary point with the normal implied by its position and kind.
    pub fn boundary(x: f64, y: f64, kind: PointKind) -> Self {
        SamplePoint { x, y, kind, normal: Some(outward_normal(kind, x, y)) }
    }
}

/// Outward normal of the material at a boundary point. On the hole rim this
/// points toward the hole centre.
pub fn outward_normal(kind: PointKind, x: f64, y: f64) -> [f64; 2] {
    match kind {
        PointKind::HoleCircle => {
            let r = x.hypot(y);
            [-x / r, -y / r]
        }
        PointKind::DirichletEdge => [x.signum(), 0.0],
        PointKind::NeumannEdge => [0.0, y.signum()],
        PointKind::Interior => panic!("interior points have no normal"),
    }
}

/// Ordered collection of tagged points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointSet {
    pub points: Vec<SamplePoint>,
    pub seed: u64,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn of_kind(&self, kind: PointKind) -> impl Iterator<Item = &SamplePoint> {
        self.points.iter().filter(move |p| p.kind == kind)
    }

    pub fn count(&self, kind: PointKind) -> usize {
        self.of_kind(kind).count()
    }

    pub fn interior_only(&self) -> PointSet {
        PointSet { points: self.of_kind(PointKind::Interior).copied().collect(), seed: self.seed }
    }

    pub fn boundary_only(&self) -> PointSet {
        PointSet { points: self.points.iter().filter(|p| p.kind.is_boundary()).copied().collect(), seed: self.seed }
    }

    /// Concatenation keeping `self`'s seed.
    pub fn merged(mut self, other: &PointSet) -> PointSet {
        self.points.extend_from_slice(&other.points);
        self
    }

    /// Text form: `kind x y [nx ny]` per line, coordinates at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("# seed {}\n", self.seed);
        for p in &self.points {
            let _ = write!(out, "{} {} {}", p.kind.label(), numfmt::exact(p.x), numfmt::exact(p.y));
            if let Some([nx, ny]) = p.normal {
                let _ = write!(out, " {} {}", numfmt::exact(nx), numfmt::exact(ny));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<PointSet> {
        let mut set = PointSet::default();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let trimmed = raw.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(seed) = comment.trim().strip_prefix("seed ") {
                    set.seed = seed.trim().parse().map_err(|_| Error::Parse {
                        line,
                        message: format!("bad seed `{}`", seed.trim()),
                    })?;
                }
                continue;
            }
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let kind = PointKind::from_label(fields[0])
                .ok_or_else(|| Error::Parse { line, message: format!("unknown point kind `{}`", fields[0]) })?;
            let expected = if kind.is_boundary() { 5 } else { 3 };
            if fields.len() != expected {
                return Err(Error::Parse {
                    line,
                    message: format!("`{}` point needs {} fields, found {}", kind.label(), expected, fields.len()),
                });
            }
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse { line, message: format!("bad number `{s}`") })
            };
            let normal = if kind.is_boundary() {
                let n = [num(fields[3])?, num(fields[4])?];
                if (n[0].hypot(n[1]) - 1.0).abs() > 1e-9 {
                    return Err(Error::Parse { line, message: "normal is not unit length".into() });
                }
                Some(n)
            } else {
                None
            };
            set.points.push(SamplePoint { x: num(fields[1])?, y: num(fields[2])?, kind, normal });
        }
        Ok(set)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<PointSet> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PointSet::from_text(&text)
    }
}

/// Node of the evaluation grid; `(ix, iy)` locate it in the `n_side × n_side` lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
}

/// Regular lattice over the full square with nodes inside the hole removed.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid {
    pub n_side: usize,
    /// Node coordinates along either axis.
    pub axis: Vec<f64>,
    /// Retained nodes, `iy`-major then `ix`.
    pub points: Vec<GridPoint>,
}

impl EvalGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl PlateWithHole {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a < b && b.is_finite()) {
            return Err(Error::Config(format!("plate needs 0 < a < b, got a={a}, b={b}")));
        }
        Ok(PlateWithHole { a, b })
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x.abs() <= self.b && y.abs() <= self.b && x.hypot(y) >= self.a
    }

    pub fn piece_length(&self, piece: Piece) -> f64 {
        match piece {
            Piece::Hole => 2.0 * PI * self.a,
            _ => 2.0 * self.b,
        }
    }

    /// Distance from a point to the curve of `piece` (unsigned).
    pub fn distance_to_piece(&self, piece: Piece, x: f64, y: f64) -> f64 {
        match piece {
            Piece::Hole => (x.hypot(y) - self.a).abs(),
            Piece::Right => (x - self.b).abs(),
            Piece::Left => (x + self.b).abs(),
            Piece::Top => (y - self.b).abs(),
            Piece::Bottom => (y + self.b).abs(),
        }
    }

    /// `n` material points by rejection from the square (rejecting `r <= a`).
    pub fn sample_interior(&self, n: usize, seed: u64) -> PointSet {
        let mut rng = SeededRng::new(seed, stream::INTERIOR);
        let mut points = Vec::with_capacity(n);
        while points.len() < n {
            let x = rng.uniform_in(-self.b, self.b);
            let y = rng.uniform_in(-self.b, self.b);
            if x.hypot(y) > self.a && x.abs() < self.b && y.abs() < self.b {
                points.push(SamplePoint::interior(x, y));
            }
        }
        PointSet { points, seed }
    }

    /// Split of `n` boundary points over [`Piece::ALL`], proportional to arc
    /// length with largest-remainder rounding (ties go to the earlier piece).
    pub fn boundary_allocation(&self, n: usize) -> [usize; 5] {
        let total: f64 = Piece::ALL.iter().map(|&p| self.piece_length(p)).sum();
        let quotas: Vec<f64> = Piece::ALL.iter().map(|&p| n as f64 * self.piece_length(p) / total).collect();
        let mut counts = [0usize; 5];
        for (c, q) in counts.iter_mut().zip(&quotas) {
            *c = q.floor() as usize;
        }
        let assigned: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..5).collect();
        order.sort_by(|&i, &j| {
            let ri = quotas[i] - quotas[i].floor();
            let rj = quotas[j] - quotas[j].floor();
            rj.total_cmp(&ri).then(i.cmp(&j))
        });
        for &i in order.iter().take(n.saturating_sub(assigned)) {
            counts[i] += 1;
        }
        counts
    }

    /// Point of the rim in direction `(x, y)`, rounded so that `r >= a` holds.
    pub fn onto_rim(&self, x: f64, y: f64) -> (f64, f64) {
        let r = x.hypot(y);
        let (mut px, mut py) = (self.a * x / r, self.a * y / r);
        while px.hypot(py) < self.a {
            px *= 1.0 + f64::EPSILON;
            py *= 1.0 + f64::EPSILON;
        }
        (px, py)
    }

    /// `n` boundary points, uniform along each piece, normals attached.
    pub fn sample_boundary(&self, n: usize, seed: u64) -> PointSet {
        let mut rng = SeededRng::new(seed, stream::BOUNDARY);
        let counts = self.boundary_allocation(n);
        let mut points = Vec::with_capacity(n);
        for (piece, count) in Piece::ALL.into_iter().zip(counts) {
            for _ in 0..count {
                let (x, y) = match piece {
                    Piece::Hole => {
                        let theta = rng.uniform_in(0.0, 2.0 * PI);
                        self.onto_rim(theta.cos(), theta.sin())
                    }
                    Piece::Right => (self.b, rng.uniform_in(-self.b, self.b)),
                    Piece::Left => (-self.b, rng.uniform_in(-self.b, self.b)),
                    Piece::Top => (rng.uniform_in(-self.b, self.b), self.b),
                    Piece::Bottom => (rng.uniform_in(-self.b, self.b), -self.b),
                };
                points.push(SamplePoint::boundary(x, y, piece.kind()));
            }
        }
        PointSet { points, seed }
    }

    /// `n_side × n_side` lattice including the endpoints `±b`; nodes with
    /// `r < a` are dropped, nodes exactly on the rim are kept.
    pub fn eval_grid(&self, n_side: usize) -> EvalGrid {
        assert!(n_side >= 2, "evaluation grid needs at least two nodes per side");
        let axis: Vec<f64> =
            (0..n_side).map(|i| -self.b + 2.0 * self.b * i as f64 / (n_side - 1) as f64).collect();
        let mut points = Vec::with_capacity(n_side * n_side);
        for (iy, &y) in axis.iter().enumerate() {
            for (ix, &x) in axis.iter().enumerate() {
                if x.hypot(y) >= self.a {
                    points.push(GridPoint { ix, iy, x, y });
                }
            }
        }
        EvalGrid { n_side, axis, points }
    }
}
