//! Structured ring-to-square mesher and the mesh text format.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{PlateWithHole, PointKind};
use crate::numfmt;

/// Polynomial order of the triangular elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Linear,
    Quadratic,
}

impl Order {
    pub fn label(self) -> &'static str {
        match self {
            Order::Linear => "linear",
            Order::Quadratic => "quadratic",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "linear" => Some(Order::Linear),
            "quadratic" => Some(Order::Quadratic),
            _ => None,
        }
    }

    /// Polynomial degree `k`.
    pub fn degree(self) -> usize {
        match self {
            Order::Linear => 1,
            Order::Quadratic => 2,
        }
    }

    pub fn nodes_per_element(self) -> usize {
        match self {
            Order::Linear => 3,
            Order::Quadratic => 6,
        }
    }

    pub fn nodes_per_facet(self) -> usize {
        self.degree() + 1
    }
}

/// Boundary edge: end nodes first, then the mid-edge node for quadratic meshes.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub nodes: Vec<usize>,
    pub kind: PointKind,
}

/// Triangles store vertices counter-clockwise; quadratic ones append the
/// mid-edge nodes of edges 0-1, 1-2 and 2-0.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<Vec<usize>>,
    pub facets: Vec<Facet>,
    pub order: Order,
}

/// Division counts and element order of a generated mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub n_radial: usize,
    pub n_angular: usize,
    pub order: Order,
}

impl MeshSpec {
    pub fn new(n_radial: usize, n_angular: usize, order: Order) -> Self {
        MeshSpec { n_radial, n_angular, order }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_radial < 1 {
            return Err(Error::Config("n_radial must be at least 1".into()));
        }
        if self.n_angular < 8 || !self.n_angular.is_multiple_of(4) {
            return Err(Error::Config(format!(
                "n_angular must be at least 8 and divisible by 4, got {}",
                self.n_angular
            )));
        }
        Ok(())
    }

    pub fn id(&self) -> String {
        format!("fem-{}-r{}-a{}", self.order.label(), self.n_radial, self.n_angular)
    }
}

/// Transfinite map from the hole rim to the outer square. Angles start at
/// `π/4` so the four corners are nodes; quadratic meshes place the mid-edge
/// nodes of the rim on the circle (curved first ring).
pub fn generate_mesh(g: &PlateWithHole, spec: MeshSpec) -> Result<Mesh> {
    generate(g, spec, true)
}

/// As [`generate_mesh`], but with every quadratic edge straight, so the mesh
/// represents a polygon exactly. Used for polynomial reproduction checks.
pub fn generate_straight_mesh(g: &PlateWithHole, spec: MeshSpec) -> Result<Mesh> {
    generate(g, spec, false)
}

fn angle(j: usize, n: usize) -> f64 {
    PI / 4.0 + 2.0 * PI * j as f64 / n as f64
}

fn outer_point(b: f64, theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    let m = c.abs().max(s.abs());
    let mut p = [b * c / m, b * s / m];
    // Snap the coordinate on the edge so facets lie exactly on x = ±b or y = ±b.
    if c.abs() >= s.abs() - 1e-14 {
        p[0] = b * c.signum();
    }
    if s.abs() >= c.abs() - 1e-14 {
        p[1] = b * s.signum();
    }
    p
}

fn generate(g: &PlateWithHole, spec: MeshSpec, curved: bool) -> Result<Mesh> {
    spec.validate()?;
    let (nr, na) = (spec.n_radial, spec.n_angular);
    let mut nodes = Vec::with_capacity((nr + 1) * na);
    for i in 0..=nr {
        let t = i as f64 / nr as f64;
        for j in 0..na {
            let theta = angle(j, na);
            let (s, c) = theta.sin_cos();
            let (ix, iy) = g.onto_rim(c, s);
            let inner = [ix, iy];
            let outer = outer_point(g.b, theta);
            let p = if i == nr {
                outer
            } else {
                [inner[0] + t * (outer[0] - inner[0]), inner[1] + t * (outer[1] - inner[1])]
            };
            nodes.push(p);
        }
    }
    let id = |i: usize, j: usize| i * na + j % na;
    let mut elements = Vec::with_capacity(2 * nr * na);
    for i in 0..nr {
        for j in 0..na {
            elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            elements.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut facets = Vec::with_capacity(2 * na);
    for j in 0..na {
        facets.push(Facet { nodes: vec![id(0, j + 1), id(0, j)], kind: PointKind::HoleCircle });
    }
    for j in 0..na {
        let (p, q) = (id(nr, j), id(nr, j + 1));
        let xm = 0.5 * (nodes[p][0] + nodes[q][0]);
        let ym = 0.5 * (nodes[p][1] + nodes[q][1]);
        let kind = if xm.abs() >= ym.abs() { PointKind::DirichletEdge } else { PointKind::NeumannEdge };
        facets.push(Facet { nodes: vec![p, q], kind });
    }
    let mut mesh = Mesh { nodes, elements, facets, order: Order::Linear };
    if spec.order == Order::Quadratic {
        mesh.elevate(g, curved);
    }
    Ok(mesh)
}

impl Mesh {
    /// Adds one node per unique edge. Edges whose end points both lie on the
    /// hole rim get their node on the circle when `curved`.
    fn elevate(&mut self, g: &PlateWithHole, curved: bool) {
        let on_rim = |p: [f64; 2]| (p[0].hypot(p[1]) - g.a).abs() <= 1e-12;
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |nodes: &mut Vec<[f64; 2]>, p: usize, q: usize| -> usize {
            let key = (p.min(q), p.max(q));
            *mids.entry(key).or_insert_with(|| {
                let (a, b) = (nodes[p], nodes[q]);
                let mut m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                if curved && on_rim(a) && on_rim(b) {
                    let (x, y) = g.onto_rim(m[0], m[1]);
                    m = [x, y];
                }
                nodes.push(m);
                nodes.len() - 1
            })
        };
        for e in 0..self.elements.len() {
            let [v0, v1, v2] = [self.elements[e][0], self.elements[e][1], self.elements[e][2]];
            let m01 = mid(&mut self.nodes, v0, v1);
            let m12 = mid(&mut self.nodes, v1, v2);
            let m20 = mid(&mut self.nodes, v2, v0);
            self.elements[e].extend([m01, m12, m20]);
        }
        for f in 0..self.facets.len() {
            let (p, q) = (self.facets[f].nodes[0], self.facets[f].nodes[1]);
            let m = mid(&mut self.nodes, p, q);
            self.facets[f].nodes.push(m);
        }
        self.order = Order::Quadratic;
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    /// Coordinates of the nodes of element `e`.
    pub fn element_coords(&self, e: usize) -> Vec<[f64; 2]> {
        self.elements[e].iter().map(|&n| self.nodes[n]).collect()
    }

    /// Text form: `nodes N`, coordinate lines, `elements M order k`, index
    /// lines, `facets F`, then `kind i j [m]` lines. Coordinates carry 17
    /// significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        for [x, y] in &self.nodes {
            let _ = writeln!(out, "{} {}", numfmt::exact(*x), numfmt::exact(*y));
        }
        let _ = writeln!(out, "elements {} order {}", self.elements.len(), self.order.degree());
        for e in &self.elements {
            let line: Vec<String> = e.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        let _ = writeln!(out, "facets {}", self.facets.len());
        for f in &self.facets {
            let line: Vec<String> = f.nodes.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(out, "{} {}", f.kind.label(), line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse { line: 0, message: format!("unexpected end of input, expected {what}") });
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        let count = |line: usize, l: &str, key: &str| -> Result<(usize, Vec<String>)> {
            let mut words = l.split_whitespace();
            if words.next() != Some(key) {
                return Err(parse_err(line, format!("expected `{key} <count>`")));
            }
            let n = words
                .next()
                .and_then(|w| w.parse().ok())
                .ok_or_else(|| parse_err(line, format!("bad {key} count")))?;
            Ok((n, words.map(str::to_string).collect()))
        };

        let (line, l) = next("nodes header")?;
        let (n_nodes, _) = count(line, l, "nodes")?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let (line, l) = next("node coordinates")?;
            let v: Vec<f64> = l.split_whitespace().map(|w| w.parse()).collect::<std::result::Result<_, _>>().map_err(|e| parse_err(line, format!("{e}")))?;
            if v.len() != 2 {
                return Err(parse_err(line, "node needs two coordinates".into()));
            }
            nodes.push([v[0], v[1]]);
        }

        let (line, l) = next("elements header")?;
        let (n_elem, rest) = count(line, l, "elements")?;
        let order = match rest.as_slice() {
            [key, k] if key == "order" && k == "1" => Order::Linear,
            [key, k] if key == "order" && k == "2" => Order::Quadratic,
            _ => return Err(parse_err(line, "expected `order 1` or `order 2`".into())),
        };
        let index_line = |line: usize, words: &[&str], expected: usize| -> Result<Vec<usize>> {
            if words.len() != expected {
                return Err(parse_err(line, format!("expected {expected} node indices")));
            }
            words
                .iter()
                .map(|w| match w.parse::<usize>() {
                    Ok(n) if n < n_nodes => Ok(n),
                    _ => Err(parse_err(line, format!("bad node index `{w}`"))),
                })
                .collect()
        };
        let mut elements = Vec::with_capacity(n_elem);
        for _ in 0..n_elem {
            let (line, l) = next("element")?;
            let words: Vec<&str> = l.split_whitespace().collect();
            elements.push(index_line(line, &words, order.nodes_per_element())?);
        }

        let (line, l) = next("facets header")?;
        let (n_facets, _) = count(line, l, "facets")?;
        let mut facets = Vec::with_capacity(n_facets);
        for _ in 0..n_facets {
            let (line, l) = next("facet")?;
            let words: Vec<&str> = l.split_whitespace().collect();
            let kind = words
                .first()
                .and_then(|w| PointKind::from_label(w))
                .filter(|k| k.is_boundary())
                .ok_or_else(|| parse_err(line, "facet needs a boundary kind".into()))?;
            facets.push(Facet { nodes: index_line(line, &words[1..], order.nodes_per_facet())?, kind });
        }
        if let Some((line, _)) = lines.next() {
            return Err(parse_err(line, "trailing content after facets".into()));
        }
        Ok(Mesh { nodes, elements, facets, order })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Mesh> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Mesh::from_text(&text)
    }
}
