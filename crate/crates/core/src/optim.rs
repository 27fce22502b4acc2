//! Full-batch Adam and limited-memory BFGS with a strong-Wolfe line search.
//!
//! Both optimizers take the objective as a closure that writes the gradient
//! into a caller-owned buffer and returns the loss.

use std::collections::VecDeque;
use std::fmt;

/// Objective callback: `f(params, grad_out) -> loss`.
pub trait Objective: FnMut(&[f64], &mut [f64]) -> f64 {}
impl<F: FnMut(&[f64], &mut [f64]) -> f64> Objective for F {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, n: usize) -> Self {
        AdamState { config, t: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    /// One bias-corrected update of `params` given `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.t += 1;
        let c1 = 1.0 - beta1.powf(self.t as f64);
        let c2 = 1.0 - beta2.powf(self.t as f64);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Non-finite loss or gradient met during optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct NonFinite {
    /// Epoch (Adam) or iteration (L-BFGS) at which it was detected.
    pub step: usize,
    pub value: f64,
    pub what: &'static str,
}

impl fmt::Display for NonFinite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "non-finite {} ({}) at step {}", self.what, self.value, self.step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamOutcome {
    pub params: Vec<f64>,
    /// Loss before each epoch's update.
    pub history: Vec<f64>,
    /// `Some` if the run stopped early on a non-finite value; `params` are then
    /// the last finite iterate.
    pub aborted: Option<NonFinite>,
}

fn first_non_finite(grad: &[f64]) -> Option<f64> {
    grad.iter().copied().find(|g| !g.is_finite())
}

/// `epochs` full-batch Adam steps.
pub fn adam_run(params: Vec<f64>, mut objective: impl Objective, config: AdamConfig, epochs: usize) -> AdamOutcome {
    let mut params = params;
    let mut state = AdamState::new(config, params.len());
    let mut grad = vec![0.0; params.len()];
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let loss = objective(&params, &mut grad);
        if !loss.is_finite() {
            return AdamOutcome { params, history, aborted: Some(NonFinite { step: epoch, value: loss, what: "loss" }) };
        }
        if let Some(value) = first_non_finite(&grad) {
            return AdamOutcome { params, history, aborted: Some(NonFinite { step: epoch, value, what: "gradient" }) };
        }
        history.push(loss);
        state.step(&mut params, &grad);
    }
    AdamOutcome { params, history, aborted: None }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub memory: usize,
    /// Stop when `‖g‖∞ <= gtol`.
    pub gtol: f64,
    /// Stop when `(f_prev - f) / max(|f_prev|, |f|, 1) <= ftol`.
    pub ftol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig { memory: 50, gtol: 1e-8, ftol: 1e-11, max_iter: 15_000, c1: 1e-4, c2: 0.9, max_line_search: 25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    FunctionDecrease,
    MaxIterations,
    LineSearch,
    NonFinite,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Termination::Gradient => "gtol",
            Termination::FunctionDecrease => "ftol",
            Termination::MaxIterations => "max-iter",
            Termination::LineSearch => "line-search",
            Termination::NonFinite => "non-finite",
        }
    }
}

/// Curvature pairs and counters of a running L-BFGS minimization.
#[derive(Debug, Clone, Default)]
pub struct LbfgsState {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    pub iterations: usize,
    pub evaluations: usize,
}

impl LbfgsState {
    /// Stored `(s, y)` pairs; every one satisfies `sᵀy > 0`.
    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.pairs.iter().map(|(s, y, _)| (s.as_slice(), y.as_slice()))
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>, memory: usize) -> bool {
        let sy = dot(&s, &y);
        if !(sy > 1e-10 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt()) {
            return false;
        }
        if self.pairs.len() == memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }

    /// Two-loop recursion: `-H g` with `H₀ = (sᵀy / yᵀy) I`.
    fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut q: Vec<f64> = grad.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let alpha = rho * dot(s, &q);
            axpy(-alpha, y, &mut q);
            alphas.push(alpha);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), alpha) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let beta = rho * dot(y, &q);
            axpy(alpha - beta, s, &mut q);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub params: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    /// Loss after each accepted iteration, starting with the initial value.
    pub history: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `objective` from `params`. Accepted iterates never increase the
/// loss; a failed line search returns the best point found so far.
pub fn lbfgs_run(params: Vec<f64>, mut objective: impl Objective, config: LbfgsConfig) -> LbfgsOutcome {
    let n = params.len();
    let mut state = LbfgsState::default();
    let mut x = params;
    let mut g = vec![0.0; n];
    let mut f = objective(&x, &mut g);
    state.evaluations += 1;
    let mut history = vec![f];
    let finish = |x, f, state: &LbfgsState, termination, history| LbfgsOutcome {
        params: x,
        value: f,
        iterations: state.iterations,
        evaluations: state.evaluations,
        termination,
        history,
    };
    if !f.is_finite() || first_non_finite(&g).is_some() {
        return finish(x, f, &state, Termination::NonFinite, history);
    }

    loop {
        if inf_norm(&g) <= config.gtol {
            return finish(x, f, &state, Termination::Gradient, history);
        }
        if state.iterations >= config.max_iter {
            return finish(x, f, &state, Termination::MaxIterations, history);
        }

        let mut d = state.direction(&g);
        let mut gtd = dot(&g, &d);
        if !(gtd < 0.0) {
            state.pairs.clear();
            d = g.iter().map(|v| -v).collect();
            gtd = dot(&g, &d);
        }
        let t0 = if state.pairs.is_empty() { (1.0 / g.iter().map(|v| v.abs()).sum::<f64>()).min(1.0) } else { 1.0 };

        let mut search = line_search(&mut objective, &x, f, &g, &d, gtd, t0, &config);
        state.evaluations += search.evaluations;
        if search.accepted.is_none() && !state.pairs.is_empty() {
            // Stale curvature: retry once along steepest descent.
            state.pairs.clear();
            d = g.iter().map(|v| -v).collect();
            gtd = dot(&g, &d);
            let t0 = (1.0 / g.iter().map(|v| v.abs()).sum::<f64>()).min(1.0);
            search = line_search(&mut objective, &x, f, &g, &d, gtd, t0, &config);
            state.evaluations += search.evaluations;
        }
        let Some(step) = search.accepted else {
            if let Some(best) = search.best.filter(|b| b.f < f) {
                history.push(best.f);
                return finish(best.x, best.f, &state, Termination::LineSearch, history);
            }
            let termination = if search.non_finite { Termination::NonFinite } else { Termination::LineSearch };
            return finish(x, f, &state, termination, history);
        };

        state.iterations += 1;
        let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        state.push(s, y, config.memory);
        let f_prev = f;
        x = step.x;
        f = step.f;
        g = step.g;
        history.push(f);
        if (f_prev - f) / f_prev.abs().max(f.abs()).max(1.0) <= config.ftol {
            return finish(x, f, &state, Termination::FunctionDecrease, history);
        }
    }
}

struct Trial {
    t: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    gtd: f64,
}

struct SearchResult {
    accepted: Option<Trial>,
    /// Lowest finite trial, kept for the failure path.
    best: Option<Trial>,
    evaluations: usize,
    non_finite: bool,
}

/// Minimizer of the cubic interpolating `(t1, f1, g1)` and `(t2, f2, g2)`,
/// clamped to `[lo, hi]`.
fn cubic_minimizer(t1: f64, f1: f64, g1: f64, t2: f64, f2: f64, g2: f64, lo: f64, hi: f64) -> f64 {
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (t1 - t2);
    let disc = d1 * d1 - g1 * g2;
    if disc >= 0.0 {
        let d2 = disc.sqrt() * (t2 - t1).signum();
        let t = t2 - (t2 - t1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2));
        if t.is_finite() {
            return t.clamp(lo, hi);
        }
    }
    0.5 * (lo + hi)
}

#[allow(clippy::too_many_arguments)]
fn line_search(
    objective: &mut impl Objective,
    x0: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    gtd0: f64,
    t_init: f64,
    config: &LbfgsConfig,
) -> SearchResult {
    let mut evaluations = 0;
    let mut non_finite = false;
    let mut best: Option<Trial> = None;
    let mut eval = |t: f64, evaluations: &mut usize, non_finite: &mut bool| -> Option<Trial> {
        let x: Vec<f64> = x0.iter().zip(d).map(|(a, b)| a + t * b).collect();
        let mut g = vec![0.0; x.len()];
        let f = objective(&x, &mut g);
        *evaluations += 1;
        if !f.is_finite() || first_non_finite(&g).is_some() {
            *non_finite = true;
            return None;
        }
        let gtd = dot(&g, d);
        Some(Trial { t, x, f, g, gtd })
    };
    let remember = |best: &mut Option<Trial>, trial: &Trial| {
        if best.as_ref().is_none_or(|b| trial.f < b.f) {
            *best = Some(Trial { t: trial.t, x: trial.x.clone(), f: trial.f, g: trial.g.clone(), gtd: trial.gtd });
        }
    };
    let armijo = |trial: &Trial| trial.f <= f0 + config.c1 * trial.t * gtd0;
    let curvature = |trial: &Trial| trial.gtd.abs() <= -config.c2 * gtd0;

    // Bracketing phase.
    let mut prev = Trial { t: 0.0, x: x0.to_vec(), f: f0, g: g0.to_vec(), gtd: gtd0 };
    let mut t = t_init;
    let mut bracket: Option<(Trial, Trial)> = None;
    for i in 0..config.max_line_search {
        let Some(trial) = eval(t, &mut evaluations, &mut non_finite) else {
            // Overshot into a non-finite region: shrink toward the last good step.
            t = 0.5 * (prev.t + t);
            continue;
        };
        remember(&mut best, &trial);
        if !armijo(&trial) || (i > 0 && trial.f >= prev.f) {
            bracket = Some((prev, trial));
            break;
        }
        if curvature(&trial) {
            return SearchResult { accepted: Some(trial), best, evaluations, non_finite };
        }
        if trial.gtd >= 0.0 {
            bracket = Some((trial, prev));
            break;
        }
        let next = cubic_minimizer(prev.t, prev.f, prev.gtd, trial.t, trial.f, trial.gtd, trial.t + 0.01 * (trial.t - prev.t), 10.0 * trial.t);
        prev = trial;
        t = next;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return SearchResult { accepted: None, best, evaluations, non_finite };
    };

    // Zoom phase: `lo` always satisfies sufficient decrease and has the lower value.
    while evaluations < 2 * config.max_line_search {
        let (a, b) = if lo.t < hi.t { (lo.t, hi.t) } else { (hi.t, lo.t) };
        let width = b - a;
        if width.abs() * inf_norm(d) < 1e-16 * (1.0 + inf_norm(x0)) {
            break;
        }
        let mut t = cubic_minimizer(lo.t, lo.f, lo.gtd, hi.t, hi.f, hi.gtd, a, b);
        // Keep the trial away from the bracket ends.
        let margin = 0.1 * width;
        if t - a < margin || b - t < margin {
            t = 0.5 * (a + b);
        }
        let Some(trial) = eval(t, &mut evaluations, &mut non_finite) else {
            hi = Trial { t, x: Vec::new(), f: f64::INFINITY, g: Vec::new(), gtd: f64::INFINITY };
            continue;
        };
        remember(&mut best, &trial);
        if !armijo(&trial) || trial.f >= lo.f {
            hi = trial;
        } else {
            if curvature(&trial) {
                return SearchResult { accepted: Some(trial), best, evaluations, non_finite };
            }
            if trial.gtd * (hi.t - lo.t) >= 0.0 {
                hi = lo;
            }
            lo = trial;
        }
    }
    // No strong-Wolfe point; accept the best sufficient-decrease point if it
    // made progress.
    if lo.t > 0.0 && lo.f < f0 {
        return SearchResult { accepted: Some(lo), best, evaluations, non_finite };
    }
    SearchResult { accepted: None, best, evaluations, non_finite }
}
