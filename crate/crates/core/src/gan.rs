//! Tabular GAN over standardized (dip direction, dip angle, ln trace length)
//! rows.
//!
//! Each step updates the discriminator `d_steps` times on a real and a fake
//! batch with the generator frozen, then updates the generator once. The
//! generator minimizes `−log D(G(z))` by default; the literal `log(1 − D(G(z)))`
//! objective is available through [`GeneratorLoss::Saturating`].

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{normalize_dip_direction, DiscontinuityRecord, DiscontinuitySet, Parameter};
use crate::generators::{generated_set, valid_dip_angle, valid_trace, GenError, MAX_REJECTIONS};
use crate::nn::{Activation, AdamConfig, AdamState, Head, Mlp, NnError};
use crate::rng::SimRng;
use crate::standardize::Standardizer;

pub const ENGINE_GAN: &str = "gan";

/// Probabilities are clamped to `[P_FLOOR, 1 − P_FLOOR]` inside the losses.
const P_FLOOR: f64 = 1e-12;

/// Training aborts once the empirical value leaves `[-DIVERGENCE_LIMIT, DIVERGENCE_LIMIT]`.
pub const DIVERGENCE_LIMIT: f64 = 50.0;

#[derive(Debug, Error)]
pub enum GanError {
    #[error("discriminator output {0} is not in (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("empty probability batch")]
    EmptyBatch,
    #[error("training needs at least 2 records, got {0}")]
    TooFewRecords(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite gradient at epoch {0}")]
    NonFiniteGradient(usize),
    #[error("adversarial value {value} diverged at epoch {epoch}")]
    DivergenceDetected { epoch: usize, value: f64 },
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorLoss {
    NonSaturating,
    Saturating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanTrainConfig {
    pub epochs: usize,
    pub d_steps: usize,
    pub generator_learning_rate: f64,
    pub discriminator_learning_rate: f64,
    pub z_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub generator_loss: GeneratorLoss,
    /// Log every this many epochs (the last epoch is always logged).
    pub log_every: usize,
    pub batch_size: usize,
}

impl Default for GanTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3000,
            d_steps: 2,
            generator_learning_rate: 1e-3,
            discriminator_learning_rate: 1e-3,
            z_dim: 8,
            generator_hidden: vec![32, 32],
            discriminator_hidden: vec![32, 32],
            generator_loss: GeneratorLoss::NonSaturating,
            log_every: 50,
            batch_size: 512,
        }
    }
}

impl GanTrainConfig {
    pub fn validate(&self) -> Result<(), GanError> {
        let rates = [self.generator_learning_rate, self.discriminator_learning_rate];
        if self.d_steps == 0 || self.z_dim == 0 || self.log_every == 0 || self.batch_size == 0 {
            return Err(GanError::InvalidConfig("d_steps, z_dim, log_every and batch_size must be positive".into()));
        }
        if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(GanError::InvalidConfig("learning rates must be positive".into()));
        }
        if self.generator_hidden.contains(&0) || self.discriminator_hidden.contains(&0) {
            return Err(GanError::InvalidConfig("hidden widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanModel {
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub z_dim: usize,
    pub standardizer: Standardizer,
    pub config: GanTrainConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GanLogEntry {
    pub epoch: usize,
    pub value: f64,
    pub d_real_mean: f64,
    pub d_fake_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanTraining {
    pub model: GanModel,
    pub log: Vec<GanLogEntry>,
    /// Mean discriminator output over the whole training table after the last step.
    pub final_d_real_mean: f64,
}

/// Empirical `mean log D(x) + mean log(1 − D(G(z)))`.
pub fn gan_value(d_real: &[f64], d_fake: &[f64]) -> Result<f64, GanError> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(GanError::EmptyBatch);
    }
    if let Some(&p) = d_real.iter().chain(d_fake).find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(GanError::ProbabilityOutOfRange(p));
    }
    let real = d_real.iter().map(|p| p.ln()).sum::<f64>() / d_real.len() as f64;
    let fake = d_fake.iter().map(|p| (1.0 - p).ln()).sum::<f64>() / d_fake.len() as f64;
    Ok(real + fake)
}

fn clamp_p(p: f64) -> f64 {
    p.clamp(P_FLOOR, 1.0 - P_FLOOR)
}

fn widths(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut w = vec![input];
    w.extend_from_slice(hidden);
    w.push(output);
    w
}

fn latent(rng: &mut SimRng, rows: usize, z_dim: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, z_dim), || rng.normal())
}

/// Seeded, untrained model. Training with zero epochs returns exactly this.
pub fn init_gan(data: &DiscontinuitySet, cfg: &GanTrainConfig, seed: u64) -> Result<GanModel, GanError> {
    cfg.validate()?;
    let mut rng = SimRng::new(seed);
    let generator = Mlp::new(&widths(cfg.z_dim, &cfg.generator_hidden, 3), Activation::Relu, Head::Identity, &mut rng)?;
    let discriminator = Mlp::new(&widths(3, &cfg.discriminator_hidden, 1), Activation::Relu, Head::Sigmoid, &mut rng)?;
    Ok(GanModel {
        generator,
        discriminator,
        z_dim: cfg.z_dim,
        standardizer: Standardizer::fit(data),
        config: cfg.clone(),
        seed,
    })
}

pub fn train_gan(data: &DiscontinuitySet, cfg: &GanTrainConfig, seed: u64) -> Result<GanTraining, GanError> {
    if data.len() < 2 {
        return Err(GanError::TooFewRecords(data.len()));
    }
    let mut model = init_gan(data, cfg, seed)?;
    let real = model.standardizer.transform(data);
    let n = real.nrows();
    // The training stream is separate from the initialization stream.
    let mut rng = SimRng::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut g_opt = AdamState::for_network(
        &model.generator,
        AdamConfig { learning_rate: cfg.generator_learning_rate, ..AdamConfig::default() },
    );
    let mut d_opt = AdamState::for_network(
        &model.discriminator,
        AdamConfig { learning_rate: cfg.discriminator_learning_rate, ..AdamConfig::default() },
    );
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::new();

    for epoch in 1..=cfg.epochs {
        if n > cfg.batch_size {
            rng.shuffle(&mut order);
        }
        let mut last = None;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = real.select(Axis(0), chunk);
            for _ in 0..cfg.d_steps {
                let stats = discriminator_step(&mut model, &batch, &mut d_opt, &mut rng)
                    .map_err(|e| nn_to_gan(e, epoch))?;
                if stats.value.abs() > DIVERGENCE_LIMIT || !stats.value.is_finite() {
                    return Err(GanError::DivergenceDetected { epoch, value: stats.value });
                }
                last = Some(stats);
            }
            generator_step(&mut model, batch.nrows(), &mut g_opt, &mut rng).map_err(|e| nn_to_gan(e, epoch))?;
        }
        if let Some(stats) = last {
            if epoch % cfg.log_every == 0 || epoch == cfg.epochs {
                log.push(GanLogEntry { epoch, ..stats });
            }
        }
    }
    if !(model.generator.is_finite() && model.discriminator.is_finite()) {
        return Err(GanError::NonFiniteGradient(cfg.epochs));
    }
    let d_real = model.discriminator.forward(&real)?;
    let final_d_real_mean = d_real.mean().unwrap_or(f64::NAN);
    Ok(GanTraining { model, log, final_d_real_mean })
}

fn nn_to_gan(e: NnError, epoch: usize) -> GanError {
    match e {
        NnError::NonFiniteGradient => GanError::NonFiniteGradient(epoch),
        other => GanError::Nn(other),
    }
}

/// One ascent step on the adversarial value with the generator frozen.
/// Returns the value and mean outputs measured before the update.
fn discriminator_step(
    model: &mut GanModel,
    real: &Array2<f64>,
    opt: &mut AdamState,
    rng: &mut SimRng,
) -> Result<GanLogEntry, NnError> {
    let m = real.nrows();
    let z = latent(rng, m, model.z_dim);
    let fake = model.generator.forward(&z)?;
    let d = &model.discriminator;

    let real_cache = d.forward_cached(real)?;
    let fake_cache = d.forward_cached(&fake)?;
    let mf = m as f64;
    // Loss = −mean log D(x) − mean log(1 − D(G(z))).
    let up_real = real_cache.output.mapv(|y| -1.0 / (mf * clamp_p(y)));
    let up_fake = fake_cache.output.mapv(|y| 1.0 / (mf * clamp_p(1.0 - y)));
    let mut grads = d.backward(&real_cache, &up_real)?;
    grads.accumulate(&d.backward(&fake_cache, &up_fake)?);

    let pr: Vec<f64> = real_cache.output.iter().map(|&p| clamp_p(p)).collect();
    let pf: Vec<f64> = fake_cache.output.iter().map(|&p| clamp_p(p)).collect();
    let value = gan_value(&pr, &pf).unwrap_or(f64::NAN);
    let stats = GanLogEntry {
        epoch: 0,
        value,
        d_real_mean: real_cache.output.mean().unwrap_or(f64::NAN),
        d_fake_mean: fake_cache.output.mean().unwrap_or(f64::NAN),
    };
    model.discriminator.apply_adam(&grads, opt)?;
    Ok(stats)
}

fn generator_step(model: &mut GanModel, m: usize, opt: &mut AdamState, rng: &mut SimRng) -> Result<(), NnError> {
    let z = latent(rng, m, model.z_dim);
    let g_cache = model.generator.forward_cached(&z)?;
    let d_cache = model.discriminator.forward_cached(&g_cache.output)?;
    let mf = m as f64;
    let upstream = match model.config.generator_loss {
        // Loss = −mean log D(G(z)).
        GeneratorLoss::NonSaturating => d_cache.output.mapv(|y| -1.0 / (mf * clamp_p(y))),
        // Loss = mean log(1 − D(G(z))).
        GeneratorLoss::Saturating => d_cache.output.mapv(|y| -1.0 / (mf * clamp_p(1.0 - y))),
    };
    let d_grads = model.discriminator.backward(&d_cache, &upstream)?;
    let g_grads = model.generator.backward(&g_cache, &d_grads.input)?;
    model.generator.apply_adam(&g_grads, opt)
}

/// Map a standardized row back to a record, or name the offending parameter.
pub(crate) fn destandardize(st: &Standardizer, z: &[f64]) -> Result<DiscontinuityRecord, Parameter> {
    let [dd, da, tl] = st.inverse(z);
    if !dd.is_finite() {
        return Err(Parameter::DipDirection);
    }
    if !valid_dip_angle(da) {
        return Err(Parameter::DipAngle);
    }
    if !valid_trace(tl) {
        return Err(Parameter::TraceLength);
    }
    DiscontinuityRecord::new(normalize_dip_direction(dd), da, tl).map_err(|_| Parameter::DipDirection)
}

/// Push latent draws through the generator. Invalid rows are redrawn one at a
/// time from the same stream, in row order.
pub fn gan_generate(model: &GanModel, n: usize, seed: u64) -> Result<DiscontinuitySet, GenError> {
    if n == 0 {
        return Err(GenError::EmptyRequest);
    }
    let mut rng = SimRng::new(seed);
    let z = latent(&mut rng, n, model.z_dim);
    let out = model.generator.forward(&z).map_err(|e| GenError::InvalidModel(e.to_string()))?;
    let mut records = Vec::with_capacity(n);
    for row in out.rows() {
        let mut candidate = destandardize(&model.standardizer, &row.to_vec());
        let mut tries = 0;
        while let Err(param) = candidate {
            tries += 1;
            if tries > MAX_REJECTIONS {
                return Err(GenError::RejectionOverflow(param));
            }
            let z = latent(&mut rng, 1, model.z_dim);
            let x = model.generator.forward(&z).map_err(|e| GenError::InvalidModel(e.to_string()))?;
            candidate = destandardize(&model.standardizer, &x.row(0).to_vec());
        }
        records.push(candidate.unwrap());
    }
    generated_set(ENGINE_GAN, seed, records)
}
