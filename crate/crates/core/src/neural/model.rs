use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::gemm::{affine, back_input};
use super::train::TrainConfig;
use crate::collision::SdfProvider;
use crate::geometry::NormalizationTransform;
use crate::{Error, Result, Vec3};

const CHUNK: usize = 256;

/// `[cos(2 pi B p), sin(2 pi B p)]` for a row-major `m x 3` frequency matrix.
pub fn fourier_features(p: &Vec3, frequencies: &[f64], out: &mut [f64]) {
    let m = frequencies.len() / 3;
    debug_assert_eq!(out.len(), 2 * m);
    for j in 0..m {
        let b = &frequencies[3 * j..3 * j + 3];
        let angle = TAU * (b[0] * p.x + b[1] * p.y + b[2] * p.z);
        let (s, c) = angle.sin_cos();
        out[j] = c;
        out[m + j] = s;
    }
}

/// Fourier-feature MLP. Hidden layers use ReLU, the output layer is linear.
///
/// Parameters are stored as `f32` (the serialized precision) and mirrored
/// in `f64` for queries, so query results do not depend on how a model was
/// obtained (trained or loaded).
#[derive(Debug, Clone)]
pub struct NeuralSdf {
    config: TrainConfig,
    norm: NormalizationTransform,
    dims: Vec<usize>,
    fourier: Vec<f32>,
    params: Vec<f32>,
    fourier64: Vec<f64>,
    params64: Vec<f64>,
}

/// Layer widths from input to the scalar output.
pub(crate) fn layer_dims(cfg: &TrainConfig) -> Vec<usize> {
    let input = if cfg.fourier_features > 0 { 2 * cfg.fourier_features } else { 3 };
    let mut dims = vec![input];
    dims.extend(std::iter::repeat_n(cfg.hidden_width, cfg.layers - 1));
    dims.push(1);
    dims
}

/// `(weight offset, bias offset, inputs, outputs)` per layer in the flat
/// parameter vector.
pub(crate) fn layer_slices(dims: &[usize]) -> Vec<(usize, usize, usize, usize)> {
    let mut off = 0;
    dims.windows(2)
        .map(|w| {
            let (i, o) = (w[0], w[1]);
            let entry = (off, off + i * o, i, o);
            off += i * o + o;
            entry
        })
        .collect()
}

pub(crate) fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl NeuralSdf {
    /// Fresh model: Gaussian frequencies with standard deviation
    /// `fourier_scale`, He-initialized weights, zero biases.
    pub fn init(cfg: &TrainConfig, norm: NormalizationTransform) -> Result<Self> {
        cfg.validate()?;
        let dims = layer_dims(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let gauss = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

        let fourier = (0..cfg.fourier_features * 3)
            .map(|_| (gauss(&mut rng) * cfg.fourier_scale) as f32)
            .collect();
        let mut params = vec![0f32; param_count(&dims)];
        for (w_off, b_off, inputs, _) in layer_slices(&dims) {
            let std = (2.0 / inputs as f64).sqrt();
            for w in &mut params[w_off..b_off] {
                *w = (gauss(&mut rng) * std) as f32;
            }
        }
        Self::from_parts(cfg.clone(), norm, fourier, params)
    }

    /// Assembles a model from explicit tensors (row-major, declaration order).
    pub fn from_parts(
        config: TrainConfig,
        norm: NormalizationTransform,
        fourier: Vec<f32>,
        params: Vec<f32>,
    ) -> Result<Self> {
        config.validate()?;
        let dims = layer_dims(&config);
        if fourier.len() != config.fourier_features * 3 {
            return Err(Error::Config(format!(
                "expected {} frequency entries, got {}",
                config.fourier_features * 3,
                fourier.len()
            )));
        }
        if params.len() != param_count(&dims) {
            return Err(Error::Config(format!(
                "expected {} parameters, got {}",
                param_count(&dims),
                params.len()
            )));
        }
        let fourier64 = fourier.iter().map(|&v| v as f64).collect();
        let params64 = params.iter().map(|&v| v as f64).collect();
        Ok(Self {
            config,
            norm,
            dims,
            fourier,
            params,
            fourier64,
            params64,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn normalization(&self) -> &NormalizationTransform {
        &self.norm
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn frequencies(&self) -> &[f32] {
        &self.fourier
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub(crate) fn set_config(&mut self, config: TrainConfig) {
        self.config = config;
    }

    pub(crate) fn with_params(&self, params: Vec<f32>) -> Self {
        Self::from_parts(self.config.clone(), self.norm, self.fourier.clone(), params)
            .expect("same architecture")
    }

    pub fn forward(&self, points: &[Vec3]) -> Vec<f64> {
        self.evaluate(points, false).0
    }

    /// Exact derivative of [`forward`](Self::forward) with respect to the
    /// input point (unnormalized).
    pub fn input_gradient(&self, points: &[Vec3]) -> Vec<Vec3> {
        self.evaluate(points, true).1
    }

    pub fn forward_with_gradient(&self, points: &[Vec3]) -> (Vec<f64>, Vec<Vec3>) {
        self.evaluate(points, true)
    }

    fn evaluate(&self, points: &[Vec3], want_grad: bool) -> (Vec<f64>, Vec<Vec3>) {
        let parts: Vec<(Vec<f64>, Vec<Vec3>)> = points
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut ws = Workspace::new(&self.dims, chunk.len());
                self.run_chunk(chunk, &mut ws, want_grad)
            })
            .collect();
        let mut dist = Vec::with_capacity(points.len());
        let mut grad = Vec::with_capacity(if want_grad { points.len() } else { 0 });
        for (d, g) in parts {
            dist.extend(d);
            grad.extend(g);
        }
        (dist, grad)
    }

    fn run_chunk(&self, pts: &[Vec3], ws: &mut Workspace, want_grad: bool) -> (Vec<f64>, Vec<Vec3>) {
        let rows = pts.len();
        let m = self.config.fourier_features;
        let d0 = self.dims[0];
        for (r, p) in pts.iter().enumerate() {
            let row = &mut ws.input[r * d0..(r + 1) * d0];
            if m > 0 {
                fourier_features(p, &self.fourier64, row);
            } else {
                row.copy_from_slice(p.as_slice());
            }
        }

        let slices = layer_slices(&self.dims);
        let hidden = slices.len() - 1;
        for (l, &(w, b, i, o)) in slices[..hidden].iter().enumerate() {
            let x: &[f64] = if l == 0 { &ws.input } else { &ws.act[l - 1] };
            affine(x, rows, i, &self.params64[w..b], &self.params64[b..b + o], &mut ws.pre[l]);
            for (a, &z) in ws.act[l].iter_mut().zip(&ws.pre[l]) {
                *a = if z > 0.0 { z } else { 0.0 };
            }
        }
        let (w, b, i, _) = slices[hidden];
        let x: &[f64] = if hidden == 0 { &ws.input } else { &ws.act[hidden - 1] };
        let mut out = vec![0.0; rows];
        affine(x, rows, i, &self.params64[w..b], &self.params64[b..b + 1], &mut out);

        if !want_grad {
            return (out, Vec::new());
        }

        // d out / d (last hidden activation) is the output weight row
        let w_out = &self.params64[w..b];
        let mut g = vec![0.0; rows * i];
        for r in 0..rows {
            for j in 0..i {
                let open = hidden == 0 || ws.pre[hidden - 1][r * i + j] > 0.0;
                g[r * i + j] = if open { w_out[j] } else { 0.0 };
            }
        }
        for l in (0..hidden).rev() {
            let (w, b, inputs, outputs) = slices[l];
            let mut gin = vec![0.0; rows * inputs];
            back_input(&g, rows, outputs, &self.params64[w..b], inputs, &mut gin);
            if l > 0 {
                for (gv, &z) in gin.iter_mut().zip(&ws.pre[l - 1]) {
                    if z <= 0.0 {
                        *gv = 0.0;
                    }
                }
            }
            g = gin;
        }

        let grads = (0..rows)
            .map(|r| {
                let gf = &g[r * d0..(r + 1) * d0];
                if m == 0 {
                    return Vec3::new(gf[0], gf[1], gf[2]);
                }
                let feats = &ws.input[r * d0..(r + 1) * d0];
                let mut acc = Vec3::zeros();
                for j in 0..m {
                    let (c, s) = (feats[j], feats[m + j]);
                    let coef = TAU * (c * gf[m + j] - s * gf[j]);
                    let b = &self.fourier64[3 * j..3 * j + 3];
                    acc += coef * Vec3::new(b[0], b[1], b[2]);
                }
                acc
            })
            .collect();
        (out, grads)
    }
}

struct Workspace {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(dims: &[usize], rows: usize) -> Self {
        let hidden = &dims[1..dims.len() - 1];
        Self {
            input: vec![0.0; rows * dims[0]],
            pre: hidden.iter().map(|&h| vec![0.0; rows * h]).collect(),
            act: hidden.iter().map(|&h| vec![0.0; rows * h]).collect(),
        }
    }
}

impl SdfProvider for NeuralSdf {
    fn distance(&self, points: &[Vec3]) -> Vec<f64> {
        self.forward(points)
    }

    fn gradient(&self, points: &[Vec3]) -> Vec<Vec3> {
        self.input_gradient(points)
    }

    fn distance_gradient(&self, points: &[Vec3]) -> (Vec<f64>, Vec<Vec3>) {
        self.forward_with_gradient(points)
    }

    fn size_bytes(&self) -> usize {
        4 * (self.params.len() + self.fourier.len())
    }

    fn label(&self) -> String {
        format!("neural{}x{}", self.config.layers, self.config.hidden_width)
    }
}
