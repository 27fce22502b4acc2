//! Dense tanh network `R² → R` with second-order forward evaluation in the
//! inputs and exact parameter gradients of residual-based losses.
//!
//! Parameters live in one flat vector. Layers are stored in order (input →
//! hidden₁, hidden → hidden repeated, hidden → output); each layer contributes
//! its weight matrix row-major (`fan_out × fan_in`) followed by its bias
//! vector. The optimizers work directly on this flat view.

mod batch;

use std::fmt::Write as _;
use std::path::Path;

pub use batch::{loss_param_gradient, Channels, LossFunction, ResidualRow, ResidualTerm, CHUNK_ROWS};

use crate::error::{Error, Result};
use crate::numfmt;
use crate::rng::{stream, SeededRng};

/// FLOPs charged for one `tanh` evaluation in [`flops_per_eval`].
pub const TANH_FLOPS: u64 = 10;

const CHECKPOINT_MAGIC: &str = "pinnfem-checkpoint v1";

/// Two inputs, `hidden_depth` tanh layers of `hidden_width` units, one linear output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Arch {
    pub hidden_width: usize,
    pub hidden_depth: usize,
}

impl Arch {
    pub const INPUTS: usize = 2;

    pub fn new(hidden_width: usize, hidden_depth: usize) -> Result<Self> {
        if hidden_width == 0 || hidden_depth == 0 {
            return Err(Error::Config(format!(
                "network needs width >= 1 and depth >= 1, got {hidden_width} x {hidden_depth}"
            )));
        }
        Ok(Arch { hidden_width, hidden_depth })
    }

    /// `(fan_in, fan_out)` of every dense layer, output layer last.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let w = self.hidden_width;
        let mut shapes = vec![(Self::INPUTS, w)];
        shapes.extend(std::iter::repeat_n((w, w), self.hidden_depth - 1));
        shapes.push((w, 1));
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| i * o + o).sum()
    }

    /// Depth times width squared.
    pub fn complexity(&self) -> u64 {
        (self.hidden_depth * self.hidden_width * self.hidden_width) as u64
    }
}

/// Borrowed view of one dense layer inside a flat parameter vector.
#[derive(Debug, Clone, Copy)]
pub struct LayerView<'a> {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major `fan_out × fan_in`.
    pub weights: &'a [f64],
    pub bias: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    arch: Arch,
    values: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(arch: Arch) -> Self {
        MlpParams { arch, values: vec![0.0; arch.param_count()] }
    }

    pub fn from_flat(arch: Arch, values: Vec<f64>) -> Result<Self> {
        if values.len() != arch.param_count() {
            return Err(Error::Config(format!(
                "{} parameters given, architecture {}x{} needs {}",
                values.len(),
                arch.hidden_width,
                arch.hidden_depth,
                arch.param_count()
            )));
        }
        Ok(MlpParams { arch, values })
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    pub fn layers(&self) -> Vec<LayerView<'_>> {
        layer_views(&self.arch, &self.values)
    }

    pub fn to_checkpoint(&self) -> String {
        let mut out = format!(
            "{CHECKPOINT_MAGIC}\narch width {} depth {}\nparams {}\n",
            self.arch.hidden_width,
            self.arch.hidden_depth,
            self.values.len()
        );
        for v in &self.values {
            let _ = writeln!(out, "{}", numfmt::exact(*v));
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let bad = |line: usize, message: &str| Error::Parse { line, message: message.to_string() };
        match lines.next() {
            Some((_, CHECKPOINT_MAGIC)) => {}
            _ => return Err(bad(1, "missing checkpoint header")),
        }
        let (line, arch_line) = lines.next().ok_or_else(|| bad(2, "missing arch line"))?;
        let arch = match arch_line.split_whitespace().collect::<Vec<_>>()[..] {
            ["arch", "width", w, "depth", d] => {
                let w = w.parse().map_err(|_| bad(line, "bad width"))?;
                let d = d.parse().map_err(|_| bad(line, "bad depth"))?;
                Arch::new(w, d)?
            }
            _ => return Err(bad(line, "expected `arch width W depth D`")),
        };
        let (line, count_line) = lines.next().ok_or_else(|| bad(3, "missing params line"))?;
        let count: usize = count_line
            .strip_prefix("params ")
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| bad(line, "expected `params N`"))?;
        let mut values = Vec::with_capacity(count);
        for (line, raw) in lines.filter(|(_, l)| !l.is_empty()) {
            values.push(raw.parse::<f64>().map_err(|_| bad(line, "bad parameter value"))?);
        }
        if values.len() != count {
            return Err(bad(line, &format!("declared {count} parameters, found {}", values.len())));
        }
        MlpParams::from_flat(arch, values)
    }

    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn read_checkpoint(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MlpParams::from_checkpoint(&text)
    }
}

pub(crate) fn layer_views<'a>(arch: &Arch, values: &'a [f64]) -> Vec<LayerView<'a>> {
    let mut offset = 0;
    arch.layer_shapes()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let weights = &values[offset..offset + fan_in * fan_out];
            offset += fan_in * fan_out;
            let bias = &values[offset..offset + fan_out];
            offset += fan_out;
            LayerView { fan_in, fan_out, weights, bias }
        })
        .collect()
}

/// Glorot-uniform weights `U(±√(6/(fan_in + fan_out)))`, zero biases.
pub fn init_glorot(arch: Arch, seed: u64) -> MlpParams {
    let mut rng = SeededRng::new(seed, stream::INIT);
    let mut values = Vec::with_capacity(arch.param_count());
    for (fan_in, fan_out) in arch.layer_shapes() {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        values.extend((0..fan_in * fan_out).map(|_| rng.uniform_in(-limit, limit)));
        values.extend(std::iter::repeat_n(0.0, fan_out));
    }
    MlpParams { arch, values }
}

pub fn forward(params: &MlpParams, x: f64, y: f64) -> f64 {
    let layers = params.layers();
    let (output, hidden) = layers.split_last().expect("at least one layer");
    let mut h = vec![x, y];
    for layer in hidden {
        h = (0..layer.fan_out)
            .map(|j| {
                let row = &layer.weights[j * layer.fan_in..(j + 1) * layer.fan_in];
                let z = layer.bias[j] + row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>();
                z.tanh()
            })
            .collect();
    }
    output.bias[0] + output.weights.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>()
}

/// Value, input gradient and diagonal input Hessian of the network output.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dyy: f64,
}

impl Jet2 {
    /// Components in the order `(u, ∂x, ∂y, ∂xx, ∂yy)` used by [`ResidualRow::coef`].
    pub fn as_array(&self) -> [f64; 5] {
        [self.value, self.dx, self.dy, self.dxx, self.dyy]
    }

    pub fn laplacian(&self) -> f64 {
        self.dxx + self.dyy
    }
}

/// Second-order forward propagation, one point at a time.
pub fn forward_jet(params: &MlpParams, x: f64, y: f64) -> Jet2 {
    let layers = params.layers();
    let (output, hidden) = layers.split_last().expect("at least one layer");
    let mut h: Vec<Jet2> = vec![
        Jet2 { value: x, dx: 1.0, ..Jet2::default() },
        Jet2 { value: y, dy: 1.0, ..Jet2::default() },
    ];
    let affine = |layer: &LayerView, h: &[Jet2], j: usize| {
        let row = &layer.weights[j * layer.fan_in..(j + 1) * layer.fan_in];
        let mut z = Jet2 { value: layer.bias[j], ..Jet2::default() };
        for (w, v) in row.iter().zip(h) {
            z.value += w * v.value;
            z.dx += w * v.dx;
            z.dy += w * v.dy;
            z.dxx += w * v.dxx;
            z.dyy += w * v.dyy;
        }
        z
    };
    for layer in hidden {
        h = (0..layer.fan_out)
            .map(|j| {
                let z = affine(layer, &h, j);
                let t = z.value.tanh();
                let d1 = 1.0 - t * t;
                let d2 = -2.0 * t * d1;
                Jet2 {
                    value: t,
                    dx: d1 * z.dx,
                    dy: d1 * z.dy,
                    dxx: d2 * z.dx * z.dx + d1 * z.dxx,
                    dyy: d2 * z.dy * z.dy + d1 * z.dyy,
                }
            })
            .collect();
    }
    affine(output, &h, 0)
}

/// Analytic FLOPs of one prediction: every dense layer costs
/// `2·fan_in·fan_out + fan_out`, hidden layers add `fan_out · TANH_FLOPS`.
/// This over-counts what an optimized kernel executes and is meant as an
/// upper estimate.
pub fn flops_per_eval(arch: Arch) -> u64 {
    let shapes = arch.layer_shapes();
    let last = shapes.len() - 1;
    shapes
        .iter()
        .enumerate()
        .map(|(l, &(fan_in, fan_out))| {
            let (fan_in, fan_out) = (fan_in as u64, fan_out as u64);
            let activation = if l < last { fan_out * TANH_FLOPS } else { 0 };
            2 * fan_in * fan_out + fan_out + activation
        })
        .sum()
}
