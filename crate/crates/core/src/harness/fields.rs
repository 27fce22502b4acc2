//! Field maps on the evaluation grid as CSV and SVG heatmaps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::EvalGrid;
use crate::numfmt::{exact, sci};
use crate::problem::HeatProblem;

/// One scalar per lattice cell; `None` inside the hole.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub n_side: usize,
    pub axis: Vec<f64>,
    /// `iy`-major, `n_side²` entries.
    pub cells: Vec<Option<f64>>,
}

impl FieldMap {
    pub fn from_grid(grid: &EvalGrid, values: &[f64]) -> FieldMap {
        assert_eq!(values.len(), grid.len(), "one value per grid point");
        let mut cells = vec![None; grid.n_side * grid.n_side];
        for (p, v) in grid.points.iter().zip(values) {
            cells[p.iy * grid.n_side + p.ix] = Some(*v);
        }
        FieldMap { n_side: grid.n_side, axis: grid.axis.clone(), cells }
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.cells.iter().flatten().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// `x,y,value` rows; hole cells are omitted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,value\n");
        for iy in 0..self.n_side {
            for ix in 0..self.n_side {
                if let Some(v) = self.cells[iy * self.n_side + ix] {
                    let _ = writeln!(out, "{},{},{}", exact(self.axis[ix]), exact(self.axis[iy]), exact(v));
                }
            }
        }
        out
    }

    /// Heatmap with one `<rect>` per cell, `y` increasing upwards, hole cells
    /// in neutral grey and the value range printed below.
    pub fn to_svg(&self, title: &str) -> String {
        const CELL: usize = 8;
        let size = self.n_side * CELL;
        let (lo, hi) = self.min_max().unwrap_or((0.0, 0.0));
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{}" viewBox="0 0 {size} {}">"#,
            size + 40,
            size + 40
        );
        let _ = writeln!(out, "<title>{title}</title>");
        for iy in 0..self.n_side {
            for ix in 0..self.n_side {
                let fill = match self.cells[iy * self.n_side + ix] {
                    Some(v) => ramp(if hi > lo { (v - lo) / (hi - lo) } else { 0.0 }),
                    None => "#d0d0d0".to_string(),
                };
                let _ = writeln!(
                    out,
                    r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{fill}"/>"#,
                    ix * CELL,
                    (self.n_side - 1 - iy) * CELL
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="4" y="{}" font-family="monospace" font-size="12">min {} max {}</text>"#,
            size + 24,
            sci(lo, 4),
            sci(hi, 4)
        );
        out.push_str("</svg>\n");
        out
    }
}

/// Linear ramp from blue (0) to red (1).
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(59.0, 180.0), lerp(76.0, 4.0), lerp(192.0, 38.0))
}

/// Parses `x,y,value` rows written by [`FieldMap::to_csv`].
pub fn read_field_csv(path: &Path) -> Result<Vec<[f64; 3]>> {
    let mut reader = csv::Reader::from_path(path)?;
    let idx = super::records::column_indices(reader.headers()?, &["x", "y", "value"])?;
    let mut out = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let row = row?;
        let mut v = [0.0; 3];
        for (slot, &i) in v.iter_mut().zip(&idx) {
            let raw = row.get(i).unwrap_or("");
            *slot = raw.parse().map_err(|_| Error::Parse { line: k + 2, message: format!("bad number `{raw}`") })?;
        }
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSummary {
    pub solution_range: (f64, f64),
    pub residual_max: f64,
    pub files: Vec<PathBuf>,
}

/// Writes `<stem>_solution.{csv,svg}` and `<stem>_residual.{csv,svg}`, the
/// residual being `|u - T|`.
pub fn emit_field_maps(problem: &HeatProblem, grid: &EvalGrid, values: &[f64], dir: &Path, stem: &str) -> Result<FieldSummary> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let residual: Vec<f64> = grid.points.iter().zip(values).map(|(p, v)| (v - problem.exact_t(p.x, p.y)).abs()).collect();
    let solution = FieldMap::from_grid(grid, values);
    let residual = FieldMap::from_grid(grid, &residual);
    let mut files = Vec::new();
    for (name, map) in [("solution", &solution), ("residual", &residual)] {
        let csv_path = dir.join(format!("{stem}_{name}.csv"));
        std::fs::write(&csv_path, map.to_csv()).map_err(|e| Error::io(&csv_path, e))?;
        let svg_path = dir.join(format!("{stem}_{name}.svg"));
        std::fs::write(&svg_path, map.to_svg(&format!("{stem} {name}"))).map_err(|e| Error::io(&svg_path, e))?;
        files.extend([csv_path, svg_path]);
    }
    Ok(FieldSummary {
        solution_range: solution.min_max().unwrap_or((0.0, 0.0)),
        residual_max: residual.min_max().map(|(_, hi)| hi).unwrap_or(0.0),
        files,
    })
}
