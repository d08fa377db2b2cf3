//! Uniform train/generate entry points over the four built-in engines.

use std::fmt::Write;

use fracgen_core::ddpm::{ddpm_sample, train_ddpm, DdpmModel};
use fracgen_core::gan::{gan_generate, train_gan, GanModel};
use fracgen_core::generators::{GenError, MarginalFits};
use fracgen_core::{
    bootstrap_generate, mc_generate, DiscontinuitySet, Family, MonteCarloModel, SmoothedBootstrapModel,
};
use serde::{Deserialize, Serialize};

use crate::config::{EngineKind, EngineOverrides};
use crate::error::CliError;

/// A fitted or trained engine, serialized with an `engine` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "snake_case")]
pub enum TrainedModel {
    MonteCarlo(MonteCarloModel),
    Bootstrap(SmoothedBootstrapModel),
    Gan(GanModel),
    Ddpm(DdpmModel),
}

impl TrainedModel {
    pub fn kind(&self) -> EngineKind {
        match self {
            TrainedModel::MonteCarlo(_) => EngineKind::MonteCarlo,
            TrainedModel::Bootstrap(_) => EngineKind::Bootstrap,
            TrainedModel::Gan(_) => EngineKind::Gan,
            TrainedModel::Ddpm(_) => EngineKind::Ddpm,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: TrainedModel,
    /// Training trace as CSV, for the neural engines.
    pub log_csv: Option<String>,
}

/// Fit or train `engine` on `data`. The statistical engines store `seed` as
/// their sampling seed; the neural engines use it for initialization and batches.
pub fn train(engine: EngineKind, data: &DiscontinuitySet, overrides: &EngineOverrides, seed: u64) -> Result<Trained, CliError> {
    let (model, log_csv) = match engine {
        EngineKind::MonteCarlo => {
            let forced = overrides.monte_carlo.forced()?;
            let mut all = vec![
                (fracgen_core::Parameter::DipDirection, Family::Normal),
                (fracgen_core::Parameter::DipAngle, Family::Normal),
                (fracgen_core::Parameter::TraceLength, Family::LogNormal),
            ];
            for (p, f) in forced {
                if let Some(slot) = all.iter_mut().find(|(q, _)| *q == p) {
                    slot.1 = f;
                }
            }
            let fits = MarginalFits::fit(data, &Family::ALL, &all).map_err(CliError::runtime)?;
            (TrainedModel::MonteCarlo(MonteCarloModel { fits, seed }), None)
        }
        EngineKind::Bootstrap => {
            let mut model = SmoothedBootstrapModel::with_silverman(data.clone(), seed);
            if let Some(h) = overrides.bootstrap.bandwidth {
                model.bandwidth = h;
            }
            (TrainedModel::Bootstrap(model), None)
        }
        EngineKind::Gan => {
            let t = train_gan(data, &overrides.gan, seed).map_err(CliError::runtime)?;
            let mut csv = String::from("epoch,value,d_real_mean,d_fake_mean\n");
            for e in &t.log {
                let _ = writeln!(csv, "{},{},{},{}", e.epoch, e.value, e.d_real_mean, e.d_fake_mean);
            }
            (TrainedModel::Gan(t.model), Some(csv))
        }
        EngineKind::Ddpm => {
            let t = train_ddpm(data, &overrides.ddpm, seed).map_err(CliError::runtime)?;
            let mut csv = String::from("step,loss\n");
            for (i, l) in t.loss_curve.iter().enumerate() {
                let _ = writeln!(csv, "{},{}", i + 1, l);
            }
            (TrainedModel::Ddpm(t.model), Some(csv))
        }
        EngineKind::External => {
            return Err(CliError::Usage("the external engine is not trained; its samples are loaded from disk".into()))
        }
    };
    Ok(Trained { model, log_csv })
}

/// Seed used to sample from a model trained with `train_seed`. The neural
/// engines already consumed `train_seed`, so sampling uses a distinct stream.
pub fn generation_seed(engine: EngineKind, train_seed: u64) -> u64 {
    if engine.is_neural() {
        train_seed ^ 1
    } else {
        train_seed
    }
}

pub fn generate(model: &TrainedModel, n: usize, seed: u64) -> Result<DiscontinuitySet, GenError> {
    match model {
        TrainedModel::MonteCarlo(m) => mc_generate(&MonteCarloModel { seed, ..*m }, n),
        TrainedModel::Bootstrap(m) => {
            let m = SmoothedBootstrapModel { seed, ..m.clone() };
            bootstrap_generate(&m, n)
        }
        TrainedModel::Gan(m) => gan_generate(m, n, seed),
        TrainedModel::Ddpm(m) => ddpm_sample(m, n, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fracgen_core::synthetic::{correlated_set, CorrelatedSpec};
    use fracgen_core::Parameter;

    #[test]
    fn model_json_round_trip_keeps_samples() {
        let data = correlated_set(&CorrelatedSpec::reference(), 60, 1).unwrap();
        let mut o = EngineOverrides::default();
        o.gan.epochs = 5;
        o.ddpm.epochs = 5;
        for engine in EngineKind::BUILTIN {
            let t = train(engine, &data, &o, 9).unwrap();
            assert_eq!(t.model.kind(), engine);
            assert_eq!(t.log_csv.is_some(), engine.is_neural());
            let json = serde_json::to_string(&t.model).unwrap();
            assert!(json.contains(&format!("\"engine\":\"{}\"", engine.tag())));
            let back: TrainedModel = serde_json::from_str(&json).unwrap();
            assert_eq!(generate(&back, 7, 3).unwrap(), generate(&t.model, 7, 3).unwrap());
        }
    }

    #[test]
    fn forced_family_reaches_the_fit() {
        let data = correlated_set(&CorrelatedSpec::reference(), 60, 1).unwrap();
        let mut o = EngineOverrides::default();
        o.monte_carlo.families.insert("trace_length".into(), Family::Exponential);
        let TrainedModel::MonteCarlo(m) = train(EngineKind::MonteCarlo, &data, &o, 1).unwrap().model else {
            panic!("wrong engine")
        };
        assert_eq!(m.fits.get(Parameter::TraceLength).family, Family::Exponential);
        assert_eq!(m.fits.get(Parameter::DipAngle).family, Family::Normal);
    }

    #[test]
    fn generation_seeds() {
        assert_eq!(generation_seed(EngineKind::Bootstrap, 10), 10);
        assert_eq!(generation_seed(EngineKind::Gan, 10), 11);
    }
}
