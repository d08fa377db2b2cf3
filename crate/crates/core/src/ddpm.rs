//! Denoising diffusion over standardized (dip direction, dip angle, ln trace
//! length) rows: closed-form forward noising, ε-prediction training and
//! ancestral reverse sampling with variance `β_t`.
//!
//! Steps are 1-based throughout: `t ∈ 1..=T`.

use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DiscontinuitySet;
use crate::gan::destandardize;
use crate::generators::{generated_set, GenError, MAX_REJECTIONS};
use crate::nn::{Activation, AdamConfig, AdamState, Head, Mlp, NnError};
use crate::rng::SimRng;
use crate::standardize::Standardizer;

pub const ENGINE_DDPM: &str = "ddpm";

#[derive(Debug, Error)]
pub enum DdpmError {
    #[error("step {t} outside 1..={steps}")]
    StepOutOfRange { t: usize, steps: usize },
    #[error("invalid noise schedule: {0}")]
    InvalidSchedule(String),
    #[error("training needs at least 2 records, got {0}")]
    TooFewRecords(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite gradient at epoch {0}")]
    NonFiniteGradient(usize),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// `β_1..β_T` with the derived `α_t = 1 − β_t` and `ᾱ_t = ∏_{s≤t} α_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ScheduleFile", try_from = "ScheduleFile")]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScheduleFile {
    steps: usize,
    betas: Vec<f64>,
}

impl From<NoiseSchedule> for ScheduleFile {
    fn from(s: NoiseSchedule) -> Self {
        Self { steps: s.steps(), betas: s.betas }
    }
}

impl TryFrom<ScheduleFile> for NoiseSchedule {
    type Error = DdpmError;

    fn try_from(f: ScheduleFile) -> Result<Self, DdpmError> {
        if f.steps != f.betas.len() {
            return Err(DdpmError::InvalidSchedule(format!("{} steps but {} betas", f.steps, f.betas.len())));
        }
        NoiseSchedule::new(f.betas)
    }
}

impl NoiseSchedule {
    /// Betas must lie in `[0, 1)` and be non-decreasing. Zero is accepted so
    /// the no-noise limit can be expressed.
    pub fn new(betas: Vec<f64>) -> Result<Self, DdpmError> {
        if betas.is_empty() {
            return Err(DdpmError::InvalidSchedule("no steps".into()));
        }
        if let Some(b) = betas.iter().find(|b| !(0.0..1.0).contains(*b)) {
            return Err(DdpmError::InvalidSchedule(format!("beta {b} outside [0, 1)")));
        }
        if betas.windows(2).any(|w| w[1] < w[0]) {
            return Err(DdpmError::InvalidSchedule("betas must be non-decreasing".into()));
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let alpha_bars = alphas
            .iter()
            .scan(1.0, |acc, a| {
                *acc *= a;
                Some(*acc)
            })
            .collect();
        Ok(Self { betas, alphas, alpha_bars })
    }

    /// Evenly spaced betas from `start` to `end`.
    pub fn linear(steps: usize, start: f64, end: f64) -> Result<Self, DdpmError> {
        if steps == 0 {
            return Err(DdpmError::InvalidSchedule("no steps".into()));
        }
        let betas = if steps == 1 {
            vec![start]
        } else {
            (0..steps).map(|i| start + (end - start) * i as f64 / (steps - 1) as f64).collect()
        };
        Self::new(betas)
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    fn check(&self, t: usize) -> Result<usize, DdpmError> {
        if t == 0 || t > self.steps() {
            return Err(DdpmError::StepOutOfRange { t, steps: self.steps() });
        }
        Ok(t - 1)
    }

    pub fn beta(&self, t: usize) -> Result<f64, DdpmError> {
        Ok(self.betas[self.check(t)?])
    }

    pub fn alpha(&self, t: usize) -> Result<f64, DdpmError> {
        Ok(self.alphas[self.check(t)?])
    }

    pub fn alpha_bar(&self, t: usize) -> Result<f64, DdpmError> {
        Ok(self.alpha_bars[self.check(t)?])
    }
}

/// Closed-form jump `x_t = √ᾱ_t·x₀ + √(1 − ᾱ_t)·ε`.
pub fn forward_diffuse(x0: &[f64], t: usize, noise: &[f64], schedule: &NoiseSchedule) -> Result<Vec<f64>, DdpmError> {
    let ab = schedule.alpha_bar(t)?;
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0.iter().zip(noise).map(|(x, e)| a * x + b * e).collect())
}

/// One Markov step `x_t = √(1 − β_t)·x_{t−1} + √β_t·ε`.
pub fn diffuse_step(x_prev: &[f64], t: usize, noise: &[f64], schedule: &NoiseSchedule) -> Result<Vec<f64>, DdpmError> {
    let beta = schedule.beta(t)?;
    let (a, b) = ((1.0 - beta).sqrt(), beta.sqrt());
    Ok(x_prev.iter().zip(noise).map(|(x, e)| a * x + b * e).collect())
}

/// Sinusoidal features of `t/T`: `sin(π·2^k·t/T)` then `cos(π·2^k·t/T)` for
/// `k = 0..frequencies`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeEmbedding {
    pub frequencies: usize,
}

impl TimeEmbedding {
    pub fn width(&self) -> usize {
        2 * self.frequencies
    }

    pub fn embed(&self, t: usize, steps: usize) -> Vec<f64> {
        let u = t as f64 / steps as f64;
        let angles: Vec<f64> = (0..self.frequencies)
            .map(|k| std::f64::consts::PI * (1u64 << k) as f64 * u)
            .collect();
        angles.iter().map(|a| a.sin()).chain(angles.iter().map(|a| a.cos())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DdpmTrainConfig {
    pub epochs: usize,
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub frequencies: usize,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for DdpmTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 4000,
            steps: 200,
            beta_start: 1e-4,
            beta_end: 0.02,
            frequencies: 8,
            hidden: vec![64, 64],
            learning_rate: 1e-3,
            batch_size: 512,
        }
    }
}

impl DdpmTrainConfig {
    pub fn validate(&self) -> Result<(), DdpmError> {
        if self.steps == 0 || self.batch_size == 0 || self.hidden.contains(&0) {
            return Err(DdpmError::InvalidConfig("steps, batch_size and hidden widths must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(DdpmError::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpmModel {
    pub network: Mlp,
    pub schedule: NoiseSchedule,
    pub embedding: TimeEmbedding,
    pub standardizer: Standardizer,
    pub config: DdpmTrainConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpmTraining {
    pub model: DdpmModel,
    /// Loss of every optimizer step, in order.
    pub loss_curve: Vec<f64>,
}

impl DdpmModel {
    /// Network input rows `[x_t, embed(t)]` for per-row steps.
    fn network_input(&self, x: &Array2<f64>, ts: &[usize]) -> Array2<f64> {
        let w = self.embedding.width();
        let steps = self.schedule.steps();
        let mut input = Array2::zeros((x.nrows(), 3 + w));
        input.slice_mut(s![.., ..3]).assign(x);
        for (i, &t) in ts.iter().enumerate() {
            let e = self.embedding.embed(t, steps);
            for (j, v) in e.into_iter().enumerate() {
                input[[i, 3 + j]] = v;
            }
        }
        input
    }

    /// Predicted noise for each row at the given steps.
    pub fn predict_noise(&self, x: &Array2<f64>, ts: &[usize]) -> Result<Array2<f64>, DdpmError> {
        Ok(self.network.forward(&self.network_input(x, ts))?)
    }
}

/// Seeded, untrained model.
pub fn init_ddpm(data: &DiscontinuitySet, cfg: &DdpmTrainConfig, seed: u64) -> Result<DdpmModel, DdpmError> {
    cfg.validate()?;
    let schedule = NoiseSchedule::linear(cfg.steps, cfg.beta_start, cfg.beta_end)?;
    let embedding = TimeEmbedding { frequencies: cfg.frequencies };
    let mut widths = vec![3 + embedding.width()];
    widths.extend_from_slice(&cfg.hidden);
    widths.push(3);
    let mut rng = SimRng::new(seed);
    let network = Mlp::new(&widths, Activation::Relu, Head::Identity, &mut rng)?;
    Ok(DdpmModel {
        network,
        schedule,
        embedding,
        standardizer: Standardizer::fit(data),
        config: cfg.clone(),
        seed,
    })
}

/// Noised inputs for explicit steps and noises.
fn noised(model: &DdpmModel, x0: &Array2<f64>, ts: &[usize], eps: &Array2<f64>) -> Result<Array2<f64>, DdpmError> {
    let mut xt = Array2::zeros(x0.raw_dim());
    for (i, &t) in ts.iter().enumerate() {
        let ab = model.schedule.alpha_bar(t)?;
        let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
        for c in 0..3 {
            xt[[i, c]] = a * x0[[i, c]] + b * eps[[i, c]];
        }
    }
    Ok(xt)
}

/// Mean over rows of `‖ε − ε_θ(x_t, t)‖²` for explicit steps and noises.
pub fn ddpm_loss_with(model: &DdpmModel, x0: &Array2<f64>, ts: &[usize], eps: &Array2<f64>) -> Result<f64, DdpmError> {
    if x0.nrows() == 0 || ts.len() != x0.nrows() || eps.dim() != x0.dim() || x0.ncols() != 3 {
        return Err(DdpmError::Nn(NnError::ShapeMismatch {
            context: "diffusion loss batch",
            expected: x0.nrows(),
            got: ts.len(),
        }));
    }
    let xt = noised(model, x0, ts, eps)?;
    let pred = model.predict_noise(&xt, ts)?;
    Ok((&pred - eps).mapv(|d| d * d).sum() / x0.nrows() as f64)
}

/// As [`ddpm_loss_with`], drawing `t` uniformly on `1..=T` and `ε ~ N(0, I)` per row.
pub fn ddpm_loss(model: &DdpmModel, x0: &Array2<f64>, rng: &mut SimRng) -> Result<f64, DdpmError> {
    let (ts, eps) = draw_steps_and_noise(model, x0.nrows(), rng);
    ddpm_loss_with(model, x0, &ts, &eps)
}

fn draw_steps_and_noise(model: &DdpmModel, rows: usize, rng: &mut SimRng) -> (Vec<usize>, Array2<f64>) {
    let steps = model.schedule.steps();
    let ts: Vec<usize> = (0..rows).map(|_| rng.below(steps) + 1).collect();
    let eps = Array2::from_shape_simple_fn((rows, 3), || rng.normal());
    (ts, eps)
}

pub fn train_ddpm(data: &DiscontinuitySet, cfg: &DdpmTrainConfig, seed: u64) -> Result<DdpmTraining, DdpmError> {
    if data.len() < 2 {
        return Err(DdpmError::TooFewRecords(data.len()));
    }
    let mut model = init_ddpm(data, cfg, seed)?;
    let x0_all = model.standardizer.transform(data);
    let n = x0_all.nrows();
    let mut rng = SimRng::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut opt = AdamState::for_network(&model.network, AdamConfig { learning_rate: cfg.learning_rate, ..AdamConfig::default() });
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_curve = Vec::with_capacity(cfg.epochs * n.div_ceil(cfg.batch_size));

    for epoch in 1..=cfg.epochs {
        if n > cfg.batch_size {
            rng.shuffle(&mut order);
        }
        for chunk in order.chunks(cfg.batch_size) {
            let x0 = x0_all.select(Axis(0), chunk);
            let m = x0.nrows() as f64;
            let (ts, eps) = draw_steps_and_noise(&model, x0.nrows(), &mut rng);
            let xt = noised(&model, &x0, &ts, &eps)?;
            let cache = model.network.forward_cached(&model.network_input(&xt, &ts))?;
            let diff = &cache.output - &eps;
            loss_curve.push(diff.mapv(|d| d * d).sum() / m);
            let upstream = diff.mapv(|d| 2.0 * d / m);
            let grads = model.network.backward(&cache, &upstream)?;
            model.network.apply_adam(&grads, &mut opt).map_err(|e| match e {
                NnError::NonFiniteGradient => DdpmError::NonFiniteGradient(epoch),
                other => DdpmError::Nn(other),
            })?;
        }
    }
    if !model.network.is_finite() {
        return Err(DdpmError::NonFiniteGradient(cfg.epochs));
    }
    Ok(DdpmTraining { model, loss_curve })
}

/// Run the reverse chain from `x_T` down to `x_0` in standardized space.
/// Noise is added at every step except `t = 1`.
pub fn reverse_chain(model: &DdpmModel, x_t: Array2<f64>, rng: &mut SimRng) -> Result<Array2<f64>, DdpmError> {
    let mut x = x_t;
    let rows = x.nrows();
    for t in (1..=model.schedule.steps()).rev() {
        let beta = model.schedule.beta(t)?;
        let alpha = model.schedule.alpha(t)?;
        let ab = model.schedule.alpha_bar(t)?;
        let eps = model.predict_noise(&x, &vec![t; rows])?;
        let coef = if ab < 1.0 { beta / (1.0 - ab).sqrt() } else { 0.0 };
        let inv = 1.0 / alpha.sqrt();
        let sigma = beta.sqrt();
        ndarray::Zip::from(&mut x).and(&eps).for_each(|xv, &e| {
            *xv = inv * (*xv - coef * e);
        });
        if t > 1 {
            x.mapv_inplace(|v| v + sigma * rng.normal());
        }
    }
    Ok(x)
}

/// Ancestral sampling. A row that decodes to an invalid record is resampled
/// by rerunning the whole chain for that row from a fresh `x_T`.
pub fn ddpm_sample(model: &DdpmModel, n: usize, seed: u64) -> Result<DiscontinuitySet, GenError> {
    if n == 0 {
        return Err(GenError::EmptyRequest);
    }
    let invalid = |e: DdpmError| GenError::InvalidModel(e.to_string());
    let mut rng = SimRng::new(seed);
    let x_t = Array2::from_shape_simple_fn((n, 3), || rng.normal());
    let x0 = reverse_chain(model, x_t, &mut rng).map_err(invalid)?;
    let mut records = Vec::with_capacity(n);
    for row in x0.rows() {
        let mut candidate = destandardize(&model.standardizer, &row.to_vec());
        let mut tries = 0;
        while let Err(param) = candidate {
            tries += 1;
            if tries > MAX_REJECTIONS {
                return Err(GenError::RejectionOverflow(param));
            }
            let start = Array2::from_shape_simple_fn((1, 3), || rng.normal());
            let x = reverse_chain(model, start, &mut rng).map_err(invalid)?;
            candidate = destandardize(&model.standardizer, &x.row(0).to_vec());
        }
        records.push(candidate.unwrap());
    }
    generated_set(ENGINE_DDPM, seed, records)
}
