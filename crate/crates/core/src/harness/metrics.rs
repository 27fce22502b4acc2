//! Accuracy metrics and rank statistics.

use crate::geometry::EvalGrid;
use crate::problem::HeatProblem;

/// RMS of `predictor - T` over the grid.
pub fn solution_deviation(problem: &HeatProblem, grid: &EvalGrid, predictor: impl Fn(f64, f64) -> f64) -> f64 {
    let values: Vec<f64> = grid.points.iter().map(|p| predictor(p.x, p.y)).collect();
    deviation_from_values(problem, grid, &values)
}

/// RMS of `values[i] - T` at the grid points, in grid order.
pub fn deviation_from_values(problem: &HeatProblem, grid: &EvalGrid, values: &[f64]) -> f64 {
    assert_eq!(values.len(), grid.len(), "one value per grid point");
    assert!(!grid.is_empty(), "deviation needs a non-empty grid");
    let sum: f64 = grid
        .points
        .iter()
        .zip(values)
        .map(|(p, v)| (v - problem.exact_t(p.x, p.y)).powi(2))
        .sum();
    (sum / grid.len() as f64).sqrt()
}

/// Ranks starting at 1; ties share the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}
