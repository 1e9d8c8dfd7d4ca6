use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gemm::{affine, back_input, back_weights};
use super::model::{fourier_features, layer_slices, NeuralSdf};
use crate::sampling::{SdfDataset, SdfSample};
use crate::{Error, Result, Vec3};

/// Optimizer and architecture settings. The loss is always mean absolute
/// error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate reached at the last epoch by geometric decay; `None`
    /// keeps it constant.
    pub final_learning_rate: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    /// Number of Fourier frequencies `m`; 0 feeds raw coordinates.
    pub fourier_features: usize,
    /// Standard deviation of the frequency matrix entries.
    pub fourier_scale: f64,
    /// Number of dense layers, including the output layer.
    pub layers: usize,
    pub hidden_width: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 8192,
            learning_rate: 1e-4,
            final_learning_rate: None,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            fourier_features: 128,
            fourier_scale: 6.0,
            layers: 4,
            hidden_width: 256,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.layers == 0 {
            return bad("layers must be at least 1");
        }
        if self.layers > 1 && self.hidden_width == 0 {
            return bad("hidden_width must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0) || self.final_learning_rate.is_some_and(|l| !(l > 0.0)) {
            return bad("learning rates must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.adam_epsilon > 0.0) {
            return bad("adam betas must lie in [0, 1) and epsilon must be positive");
        }
        if !(self.fourier_scale >= 0.0) {
            return bad("fourier_scale must be non-negative");
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.final_learning_rate {
            Some(last) if self.epochs > 1 => {
                let t = epoch as f64 / (self.epochs - 1) as f64;
                self.learning_rate * (last / self.learning_rate).powf(t)
            }
            _ => self.learning_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub initial_validation_loss: f64,
    pub epochs: Vec<EpochStats>,
    pub seconds: f64,
}

impl TrainHistory {
    pub fn final_validation_loss(&self) -> f64 {
        self.epochs.last().map_or(self.initial_validation_loss, |e| e.validation_loss)
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "learning_rate", "train_loss", "validation_loss", "seconds"])?;
        w.write_record(["0", "", "", &self.initial_validation_loss.to_string(), "0"])?;
        for e in &self.epochs {
            w.write_record([
                (e.epoch + 1).to_string(),
                e.learning_rate.to_string(),
                e.train_loss.to_string(),
                e.validation_loss.to_string(),
                e.seconds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Training-time network state in `f32`.
struct Trainer<'a> {
    model: &'a NeuralSdf,
    frequencies: Vec<f64>,
    slices: Vec<(usize, usize, usize, usize)>,
    rows: usize,
    input: Vec<f32>,
    pre: Vec<Vec<f32>>,
    act: Vec<Vec<f32>>,
    out: Vec<f32>,
    g: Vec<f32>,
    gin: Vec<f32>,
}

impl<'a> Trainer<'a> {
    fn new(model: &'a NeuralSdf, rows: usize) -> Self {
        let dims = model.dims();
        let hidden = &dims[1..dims.len() - 1];
        let widest = dims.iter().copied().max().unwrap_or(1);
        Self {
            model,
            frequencies: model.frequencies().iter().map(|&v| v as f64).collect(),
            slices: layer_slices(dims),
            rows,
            input: vec![0.0; rows * dims[0]],
            pre: hidden.iter().map(|&h| vec![0.0; rows * h]).collect(),
            act: hidden.iter().map(|&h| vec![0.0; rows * h]).collect(),
            out: vec![0.0; rows],
            g: vec![0.0; rows * widest],
            gin: vec![0.0; rows * widest],
        }
    }

    fn load_inputs(&mut self, samples: &[&SdfSample]) {
        let d0 = self.model.dims()[0];
        let m = self.model.config().fourier_features;
        let mut row = vec![0.0f64; d0];
        for (r, s) in samples.iter().enumerate() {
            let p = Vec3::from(s.p.map(f64::from));
            if m > 0 {
                fourier_features(&p, &self.frequencies, &mut row);
            } else {
                row.copy_from_slice(p.as_slice());
            }
            for (dst, &v) in self.input[r * d0..(r + 1) * d0].iter_mut().zip(&row) {
                *dst = v as f32;
            }
        }
    }

    fn forward(&mut self, params: &[f32], rows: usize) {
        let hidden = self.slices.len() - 1;
        for l in 0..hidden {
            let (w, b, i, o) = self.slices[l];
            let x: &[f32] = if l == 0 { &self.input } else { &self.act[l - 1] };
            affine(x, rows, i, &params[w..b], &params[b..b + o], &mut self.pre[l]);
            for (a, &z) in self.act[l][..rows * o].iter_mut().zip(&self.pre[l][..rows * o]) {
                *a = z.max(0.0);
            }
        }
        let (w, b, i, _) = self.slices[hidden];
        let x: &[f32] = if hidden == 0 { &self.input } else { &self.act[hidden - 1] };
        affine(x, rows, i, &params[w..b], &params[b..b + 1], &mut self.out);
    }

    /// Accumulates d(mean |out - target|)/d(params) into `grads`.
    fn backward(&mut self, params: &[f32], targets: &[f32], rows: usize, grads: &mut [f32]) -> f64 {
        let mut loss = 0.0f64;
        for r in 0..rows {
            let e = self.out[r] - targets[r];
            loss += e.abs() as f64;
            let s = if e > 0.0 {
                1.0
            } else if e < 0.0 {
                -1.0
            } else {
                0.0
            };
            self.g[r] = s / rows as f32;
        }

        for l in (0..self.slices.len()).rev() {
            let (w, b, inputs, outputs) = self.slices[l];
            let x: &[f32] = if l == 0 { &self.input } else { &self.act[l - 1] };
            back_weights(&self.g, rows, outputs, x, inputs, &mut grads[w..b]);
            for j in 0..outputs {
                grads[b + j] = (0..rows).map(|r| self.g[r * outputs + j]).sum();
            }
            if l == 0 {
                break;
            }
            back_input(&self.g, rows, outputs, &params[w..b], inputs, &mut self.gin);
            for (gv, &z) in self.gin[..rows * inputs].iter_mut().zip(&self.pre[l - 1][..rows * inputs]) {
                if z <= 0.0 {
                    *gv = 0.0;
                }
            }
            std::mem::swap(&mut self.g, &mut self.gin);
        }
        loss
    }

    fn mean_abs_error(&mut self, params: &[f32], samples: &[SdfSample]) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for chunk in samples.chunks(self.rows) {
            let refs: Vec<&SdfSample> = chunk.iter().collect();
            self.load_inputs(&refs);
            self.forward(params, chunk.len());
            total += chunk
                .iter()
                .zip(&self.out)
                .map(|(s, &y)| (y - s.d).abs() as f64)
                .sum::<f64>();
        }
        total / samples.len() as f64
    }
}

/// Fits `model` to the dataset with Adam on the L1 loss. Batches are visited
/// in a seeded order per epoch; the validation split is only evaluated.
pub fn train(model: &NeuralSdf, dataset: &SdfDataset, cfg: &TrainConfig) -> Result<(NeuralSdf, TrainHistory)> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let start = Instant::now();
    let mut params = model.params().to_vec();
    let mut grads = vec![0f32; params.len()];
    let mut m1 = vec![0f32; params.len()];
    let mut m2 = vec![0f32; params.len()];
    let batch = cfg.batch_size.min(dataset.train.len());
    let mut trainer = Trainer::new(model, batch);
    let mut history = TrainHistory {
        initial_validation_loss: trainer.mean_abs_error(&params, &dataset.validation),
        ..Default::default()
    };

    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut targets = vec![0f32; batch];
    let mut step = 0i32;

    for epoch in 0..cfg.epochs {
        let epoch_start = Instant::now();
        let lr = cfg.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;

        for idx in order.chunks(batch) {
            let rows = idx.len();
            let samples: Vec<&SdfSample> = idx.iter().map(|&i| &dataset.train[i]).collect();
            trainer.load_inputs(&samples);
            for (t, s) in targets.iter_mut().zip(&samples) {
                *t = s.d;
            }
            trainer.forward(&params, rows);
            loss_sum += trainer.backward(&params, &targets, rows, &mut grads);

            step += 1;
            let b1 = cfg.beta1 as f32;
            let b2 = cfg.beta2 as f32;
            let correction = (1.0 - cfg.beta2.powi(step)).sqrt() / (1.0 - cfg.beta1.powi(step));
            let step_size = (lr * correction) as f32;
            let eps = cfg.adam_epsilon as f32;
            for k in 0..params.len() {
                let g = grads[k];
                m1[k] = b1 * m1[k] + (1.0 - b1) * g;
                m2[k] = b2 * m2[k] + (1.0 - b2) * g * g;
                params[k] -= step_size * m1[k] / (m2[k].sqrt() + eps);
            }
        }

        let train_loss = loss_sum / dataset.train.len() as f64;
        if !train_loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                learning_rate: lr,
            });
        }
        let validation_loss = trainer.mean_abs_error(&params, &dataset.validation);
        let stats = EpochStats {
            epoch,
            learning_rate: lr,
            train_loss,
            validation_loss,
            seconds: epoch_start.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {:>4}  lr {:.2e}  train {:.6}  val {:.6}  ({:.1}s)",
            epoch + 1,
            lr,
            train_loss,
            validation_loss,
            stats.seconds
        );
        history.epochs.push(stats);
    }

    history.seconds = start.elapsed().as_secs_f64();
    let mut trained = model.with_params(params);
    trained.set_config(cfg.clone());
    Ok((trained, history))
}
