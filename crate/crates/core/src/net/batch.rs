//! Batched loss evaluation with reverse accumulation through the
//! second-order forward pass.
//!
//! Every loss handled here is a weighted sum of mean-squared linear residuals
//! of the jet, `r = c · (u, u_x, u_y, u_xx, u_yy) - target`. Rows are processed
//! in fixed chunks of [`CHUNK_ROWS`]; chunk results are summed in term order,
//! then chunk order, so the outcome is bitwise identical for any thread count.

use rayon::prelude::*;

use super::{layer_views, Arch, MlpParams};
use crate::error::{Error, Result};

pub const CHUNK_ROWS: usize = 128;

/// One residual `coef · jet(x, y) - target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub x: f64,
    pub y: f64,
    /// Weights on `(u, ∂x u, ∂y u, ∂xx u, ∂yy u)`.
    pub coef: [f64; 5],
    pub target: f64,
}

/// `weight · mean(residual²)` over `rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTerm {
    pub name: String,
    pub weight: f64,
    pub rows: Vec<ResidualRow>,
}

/// Jet components a term needs: value only, value + gradient, or all five.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Channels {
    Value = 1,
    Gradient = 3,
    Full = 5,
}

impl ResidualTerm {
    pub fn channels(&self) -> Channels {
        let uses = |i: usize| self.rows.iter().any(|r| r.coef[i] != 0.0);
        if uses(3) || uses(4) {
            Channels::Full
        } else if uses(1) || uses(2) {
            Channels::Gradient
        } else {
            Channels::Value
        }
    }

    fn is_active(&self) -> bool {
        self.weight != 0.0
    }
}

/// Loss value and its gradient with respect to the flat parameter vector.
///
/// Terms with zero weight are skipped; an active term without rows is a
/// configuration error.
pub fn loss_param_gradient(params: &MlpParams, terms: &[ResidualTerm]) -> Result<(f64, Vec<f64>)> {
    let loss = LossFunction::new(params.arch(), terms.to_vec())?;
    let mut grad = vec![0.0; params.as_slice().len()];
    let value = loss.eval(params.as_slice(), &mut grad);
    Ok((value, grad))
}

/// A validated loss over flat parameter vectors of one architecture.
#[derive(Debug, Clone)]
pub struct LossFunction {
    arch: Arch,
    terms: Vec<ResidualTerm>,
    channels: Vec<Channels>,
}

impl LossFunction {
    pub fn new(arch: Arch, terms: Vec<ResidualTerm>) -> Result<Self> {
        let terms: Vec<ResidualTerm> = terms.into_iter().filter(|t| t.is_active()).collect();
        for term in &terms {
            if term.rows.is_empty() {
                return Err(Error::Config(format!("loss term `{}` has no points", term.name)));
            }
            if !(term.weight > 0.0 && term.weight.is_finite()) {
                return Err(Error::Config(format!("loss term `{}` has weight {}", term.name, term.weight)));
            }
        }
        let channels = terms.iter().map(ResidualTerm::channels).collect();
        Ok(LossFunction { arch, terms, channels })
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn terms(&self) -> &[ResidualTerm] {
        &self.terms
    }

    /// Number of residual rows per evaluation.
    pub fn rows(&self) -> usize {
        self.terms.iter().map(|t| t.rows.len()).sum()
    }

    /// Loss at `values`; its gradient overwrites `grad`.
    pub fn eval(&self, values: &[f64], grad: &mut [f64]) -> f64 {
        assert_eq!(values.len(), self.arch.param_count(), "parameter vector does not match architecture");
        let kernel = Kernel::new(&self.arch, values);
        let tasks: Vec<(usize, &[ResidualRow])> = self
            .terms
            .iter()
            .enumerate()
            .flat_map(|(i, t)| t.rows.chunks(CHUNK_ROWS).map(move |c| (i, c)))
            .collect();
        let partials: Vec<(f64, Vec<f64>)> = tasks
            .par_iter()
            .map(|&(i, rows)| {
                let term = &self.terms[i];
                let mut g = vec![0.0; grad.len()];
                let scale = term.weight / term.rows.len() as f64;
                let l = kernel.chunk(rows, self.channels[i], scale, &mut g);
                (l, g)
            })
            .collect();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for (l, g) in partials {
            loss += l;
            for (acc, v) in grad.iter_mut().zip(&g) {
                *acc += v;
            }
        }
        loss
    }

    /// Loss value only (the gradient is computed and discarded).
    pub fn value(&self, values: &[f64]) -> f64 {
        let mut grad = vec![0.0; values.len()];
        self.eval(values, &mut grad)
    }
}

struct DenseLayer<'a> {
    fan_in: usize,
    fan_out: usize,
    weights: &'a [f64],
    /// `fan_in × fan_out`, for the forward product.
    weights_t: Vec<f64>,
    bias: &'a [f64],
    offset: usize,
}

struct Kernel<'a> {
    hidden: Vec<DenseLayer<'a>>,
    output: DenseLayer<'a>,
}

/// Forward state kept for the reverse sweep of one hidden layer.
struct Tape {
    input: Vec<f64>,
    pre: Vec<f64>,
    t: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl<'a> Kernel<'a> {
    fn new(arch: &Arch, values: &'a [f64]) -> Self {
        let mut offset = 0;
        let mut layers: Vec<DenseLayer<'a>> = layer_views(arch, values)
            .into_iter()
            .map(|v| {
                let mut weights_t = vec![0.0; v.weights.len()];
                for j in 0..v.fan_out {
                    for k in 0..v.fan_in {
                        weights_t[k * v.fan_out + j] = v.weights[j * v.fan_in + k];
                    }
                }
                let layer = DenseLayer {
                    fan_in: v.fan_in,
                    fan_out: v.fan_out,
                    weights: v.weights,
                    weights_t,
                    bias: v.bias,
                    offset,
                };
                offset += v.weights.len() + v.bias.len();
                layer
            })
            .collect();
        let output = layers.pop().expect("output layer");
        Kernel { hidden: layers, output }
    }

    /// Adds `scale · Σ r²` over `rows` to the return value and its parameter
    /// gradient into `grad`.
    fn chunk(&self, rows: &[ResidualRow], channels: Channels, scale: f64, grad: &mut [f64]) -> f64 {
        let p = rows.len();
        let c = channels as usize;
        let n = c * p;

        // Input jets, laid out channel-major: row index = channel * p + point.
        let mut h = vec![0.0; n * 2];
        for (i, r) in rows.iter().enumerate() {
            h[2 * i] = r.x;
            h[2 * i + 1] = r.y;
            if c >= 3 {
                h[2 * (p + i)] = 1.0;
                h[2 * (2 * p + i) + 1] = 1.0;
            }
        }

        let mut tapes = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let (fi, fo) = (layer.fan_in, layer.fan_out);
            let mut pre = vec![0.0; n * fo];
            for row in 0..n {
                let z = &mut pre[row * fo..(row + 1) * fo];
                if row < p {
                    z.copy_from_slice(layer.bias);
                }
                for k in 0..fi {
                    let hk = h[row * fi + k];
                    if hk != 0.0 {
                        let wk = &layer.weights_t[k * fo..(k + 1) * fo];
                        for (zj, wj) in z.iter_mut().zip(wk) {
                            *zj += hk * wj;
                        }
                    }
                }
            }
            let mut t = vec![0.0; p * fo];
            let mut d1 = vec![0.0; p * fo];
            let mut d2 = vec![0.0; p * fo];
            let mut out = vec![0.0; n * fo];
            for i in 0..p * fo {
                let ti = pre[i].tanh();
                let s1 = 1.0 - ti * ti;
                let s2 = -2.0 * ti * s1;
                t[i] = ti;
                d1[i] = s1;
                d2[i] = s2;
                out[i] = ti;
                if c >= 3 {
                    let zx = pre[p * fo + i];
                    let zy = pre[2 * p * fo + i];
                    out[p * fo + i] = s1 * zx;
                    out[2 * p * fo + i] = s1 * zy;
                    if c == 5 {
                        out[3 * p * fo + i] = s2 * zx * zx + s1 * pre[3 * p * fo + i];
                        out[4 * p * fo + i] = s2 * zy * zy + s1 * pre[4 * p * fo + i];
                    }
                }
            }
            tapes.push(Tape { input: std::mem::replace(&mut h, out), pre, t, d1, d2 });
        }

        // Output layer and residual seeds.
        let out_layer = &self.output;
        let w = out_layer.fan_in;
        let mut jets = vec![0.0; n];
        for row in 0..n {
            let hr = &h[row * w..(row + 1) * w];
            let bias = if row < p { out_layer.bias[0] } else { 0.0 };
            jets[row] = bias + hr.iter().zip(out_layer.weights).map(|(a, b)| a * b).sum::<f64>();
        }
        let mut loss = 0.0;
        let mut seed = vec![0.0; n];
        for (i, r) in rows.iter().enumerate() {
            let mut res = -r.target;
            for ch in 0..c {
                res += r.coef[ch] * jets[ch * p + i];
            }
            loss += res * res;
            for ch in 0..c {
                seed[ch * p + i] = 2.0 * scale * res * r.coef[ch];
            }
        }

        // Reverse sweep.
        let (gw, rest) = grad[out_layer.offset..].split_at_mut(w);
        for row in 0..n {
            let s = seed[row];
            if s != 0.0 {
                for (g, hv) in gw.iter_mut().zip(&h[row * w..(row + 1) * w]) {
                    *g += s * hv;
                }
                if row < p {
                    rest[0] += s;
                }
            }
        }
        let mut h_bar = vec![0.0; n * w];
        for row in 0..n {
            let s = seed[row];
            if s != 0.0 {
                for (hb, wv) in h_bar[row * w..(row + 1) * w].iter_mut().zip(out_layer.weights) {
                    *hb = s * wv;
                }
            }
        }

        for (layer, tape) in self.hidden.iter().zip(tapes).rev() {
            let (fi, fo) = (layer.fan_in, layer.fan_out);
            let m = p * fo;
            let mut z_bar = vec![0.0; n * fo];
            for i in 0..m {
                let (s1, s2) = (tape.d1[i], tape.d2[i]);
                let mut zb = h_bar[i] * s1;
                if c >= 3 {
                    let zx = tape.pre[m + i];
                    let zy = tape.pre[2 * m + i];
                    let (hx, hy) = (h_bar[m + i], h_bar[2 * m + i]);
                    zb += (hx * zx + hy * zy) * s2;
                    let mut zxb = hx * s1;
                    let mut zyb = hy * s1;
                    if c == 5 {
                        let ti = tape.t[i];
                        let s3 = s1 * (6.0 * ti * ti - 2.0);
                        let (hxx, hyy) = (h_bar[3 * m + i], h_bar[4 * m + i]);
                        let (zxx, zyy) = (tape.pre[3 * m + i], tape.pre[4 * m + i]);
                        zb += hxx * (s3 * zx * zx + s2 * zxx) + hyy * (s3 * zy * zy + s2 * zyy);
                        zxb += 2.0 * hxx * s2 * zx;
                        zyb += 2.0 * hyy * s2 * zy;
                        z_bar[3 * m + i] = hxx * s1;
                        z_bar[4 * m + i] = hyy * s1;
                    }
                    z_bar[m + i] = zxb;
                    z_bar[2 * m + i] = zyb;
                }
                z_bar[i] = zb;
            }

            let (gw, gb) = grad[layer.offset..layer.offset + fi * fo + fo].split_at_mut(fi * fo);
            for row in 0..n {
                let zr = &z_bar[row * fo..(row + 1) * fo];
                let hr = &tape.input[row * fi..(row + 1) * fi];
                for (j, &zj) in zr.iter().enumerate() {
                    if zj != 0.0 {
                        for (g, hv) in gw[j * fi..(j + 1) * fi].iter_mut().zip(hr) {
                            *g += zj * hv;
                        }
                    }
                }
                if row < p {
                    for (g, zj) in gb.iter_mut().zip(zr) {
                        *g += zj;
                    }
                }
            }

            if layer.offset > 0 {
                let mut prev = vec![0.0; n * fi];
                for row in 0..n {
                    let zr = &z_bar[row * fo..(row + 1) * fo];
                    let pr = &mut prev[row * fi..(row + 1) * fi];
                    for (j, &zj) in zr.iter().enumerate() {
                        if zj != 0.0 {
                            for (pv, wv) in pr.iter_mut().zip(&layer.weights[j * fi..(j + 1) * fi]) {
                                *pv += zj * wv;
                            }
                        }
                    }
                }
                h_bar = prev;
            }
        }

        scale * loss
    }
}
