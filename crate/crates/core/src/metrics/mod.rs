//! Fidelity scores comparing a generated set with an observed one.

mod correlation;
mod permanova;
mod univariate;

pub use correlation::{corr_rmse_mae, correlation_matrix, frobenius_diff, pearson, CorrMatrix};
pub use permanova::{permanova, Permanova};
pub use univariate::{
    chi_square_gof, kolmogorov_survival, ks_one_sample, ks_two_sample, quantile_sorted, wasserstein_1d, ChiSquare,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DiscontinuitySet, Parameter, Source};
use crate::generators::MarginalFits;
use crate::rng::SimRng;
use crate::standardize::Standardizer;

/// Bumped whenever a field of [`EvaluationReport`] changes meaning or shape.
pub const SCHEMA_VERSION: u32 = 1;

/// Floor on the denominator of relative errors.
pub const REL_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("sample is empty or too small")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("input is constant, correlation undefined")]
    ConstantInput,
    #[error("only {0} chi-square bins remain, at least 2 are needed")]
    TooFewBins(usize),
    #[error("at least 99 permutations are required, got {0}")]
    TooFewPermutations(usize),
}

/// Mean 1-D W₁ over seeded random unit directions, computed on rows jointly
/// z-scored with trace length in log space.
pub fn sliced_wasserstein(
    a: &DiscontinuitySet,
    b: &DiscontinuitySet,
    projections: usize,
    seed: u64,
) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() || projections == 0 {
        return Err(MetricError::EmptySample);
    }
    let st = Standardizer::fit_many(&[a, b]);
    let (za, zb) = (st.transform(a), st.transform(b));
    let mut rng = SimRng::new(seed);
    let mut total = 0.0;
    for _ in 0..projections {
        let dir = loop {
            let v = [rng.normal(), rng.normal(), rng.normal()];
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if norm > 1e-12 {
                break v.map(|x| x / norm);
            }
        };
        let project = |z: &ndarray::Array2<f64>| -> Vec<f64> {
            z.rows().into_iter().map(|r| r[0] * dir[0] + r[1] * dir[1] + r[2] * dir[2]).collect()
        };
        total += wasserstein_1d(&project(&za), &project(&zb))?;
    }
    Ok(total / projections as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub chi2_bins: usize,
    pub permutations: usize,
    pub projections: usize,
    pub seed: u64,
    /// When set, each generated column is also tested against these fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_fits: Option<MarginalFits>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            chi2_bins: 10,
            permutations: 999,
            projections: 64,
            seed: 0,
            reference_fits: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateComparison {
    pub parameter: Parameter,
    pub mean_observed: f64,
    pub mean_generated: f64,
    pub std_observed: f64,
    pub std_generated: f64,
    pub mean_rel_error: f64,
    pub std_rel_error: f64,
    pub ks_stat: f64,
    pub ks_p: f64,
    pub wasserstein_1: f64,
    pub chi2_stat: f64,
    pub chi2_df: usize,
    pub chi2_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_fit_stat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_fit_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateComparison {
    pub corr_observed: CorrMatrix,
    pub corr_generated: CorrMatrix,
    pub frobenius_diff: f64,
    pub corr_rmse: f64,
    pub corr_mae: f64,
    pub permanova_f: f64,
    pub permanova_p: f64,
    pub permanova_permutations: usize,
    pub sliced_wasserstein: f64,
    pub pearson_dipdir_dipangle_observed: f64,
    pub pearson_dipdir_dipangle_generated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub observed: String,
    pub engine: String,
    pub generator_seed: Option<u64>,
    pub evaluation_seed: u64,
    pub n_observed: usize,
    pub n_generated: usize,
    pub univariate: Vec<UnivariateComparison>,
    pub multivariate: MultivariateComparison,
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt())
}

fn rel_error(generated: f64, observed: f64) -> f64 {
    (generated - observed).abs() / observed.abs().max(REL_EPSILON)
}

fn compare_column(
    parameter: Parameter,
    obs: &[f64],
    gen: &[f64],
    cfg: &EvalConfig,
) -> Result<UnivariateComparison, MetricError> {
    let (mo, so) = mean_std(obs);
    let (mg, sg) = mean_std(gen);
    let (ks_stat, ks_p) = ks_two_sample(obs, gen)?;
    let chi = chi_square_gof(obs, gen, cfg.chi2_bins)?;
    let (ks_fit_stat, ks_fit_p) = match &cfg.reference_fits {
        Some(fits) => {
            let (d, p) = ks_one_sample(gen, fits.get(parameter))?;
            (Some(d), Some(p))
        }
        None => (None, None),
    };
    Ok(UnivariateComparison {
        parameter,
        mean_observed: mo,
        mean_generated: mg,
        std_observed: so,
        std_generated: sg,
        mean_rel_error: rel_error(mg, mo),
        std_rel_error: rel_error(sg, so),
        ks_stat,
        ks_p,
        wasserstein_1: wasserstein_1d(obs, gen)?,
        chi2_stat: chi.stat,
        chi2_df: chi.df,
        chi2_p: chi.p,
        ks_fit_stat,
        ks_fit_p,
    })
}

/// Run the whole battery.
pub fn evaluate(
    observed: &DiscontinuitySet,
    generated: &DiscontinuitySet,
    cfg: &EvalConfig,
) -> Result<EvaluationReport, MetricError> {
    let univariate = Parameter::ALL
        .iter()
        .map(|&p| compare_column(p, &observed.column(p), &generated.column(p), cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let corr_observed = correlation_matrix(observed)?;
    let corr_generated = correlation_matrix(generated)?;
    let (corr_rmse, corr_mae) = corr_rmse_mae(&corr_observed, &corr_generated);
    let perm = permanova(observed, generated, cfg.permutations, cfg.seed)?;
    let (engine, generator_seed) = match &generated.source {
        Source::Generated { engine, seed } => (engine.clone(), Some(*seed)),
        Source::Observed => ("observed".to_string(), None),
    };
    Ok(EvaluationReport {
        schema_version: SCHEMA_VERSION,
        observed: observed.name.clone(),
        engine,
        generator_seed,
        evaluation_seed: cfg.seed,
        n_observed: observed.len(),
        n_generated: generated.len(),
        univariate,
        multivariate: MultivariateComparison {
            frobenius_diff: frobenius_diff(&corr_observed, &corr_generated),
            corr_rmse,
            corr_mae,
            permanova_f: perm.f,
            permanova_p: perm.p,
            permanova_permutations: perm.permutations,
            sliced_wasserstein: sliced_wasserstein(observed, generated, cfg.projections, cfg.seed)?,
            pearson_dipdir_dipangle_observed: corr_observed[0][1],
            pearson_dipdir_dipangle_generated: corr_generated[0][1],
            corr_observed,
            corr_generated,
        },
    })
}
