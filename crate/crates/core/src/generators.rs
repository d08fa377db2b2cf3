//! Statistical engines: independent Monte Carlo sampling from marginal fits,
//! the Gaussian-kernel smoothed bootstrap, and the adapter for samples produced
//! by an external model.
//!
//! Range handling is shared by every engine (including the neural ones):
//! dip direction is reduced modulo 360, dip angle is redrawn until it lies in
//! `[0, 90]`, and trace length is redrawn until positive and finite. More than
//! [`MAX_REJECTIONS`] consecutive redraws for one cell is reported as
//! [`GenError::RejectionOverflow`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{
    normalize_dip_direction, parse_csv, ColumnMap, DataError, DiscontinuityRecord, DiscontinuitySet,
    Parameter, Source,
};
use crate::fit::{select_family, Family, FitError, MarginalFit};
use crate::rng::SimRng;

pub const MAX_REJECTIONS: usize = 10_000;

pub const ENGINE_MONTE_CARLO: &str = "monte_carlo";
pub const ENGINE_BOOTSTRAP: &str = "bootstrap";

#[derive(Debug, Error)]
pub enum GenError {
    #[error("more than {MAX_REJECTIONS} consecutive rejections drawing {0}")]
    RejectionOverflow(Parameter),
    #[error("requested sample size must be at least 1")]
    EmptyRequest,
    #[error("bandwidth for {0} must be positive and finite")]
    InvalidBandwidth(Parameter),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Draw until `accept` holds, giving up after [`MAX_REJECTIONS`] rejections.
pub(crate) fn draw_valid(
    parameter: Parameter,
    mut draw: impl FnMut() -> f64,
    accept: impl Fn(f64) -> bool,
) -> Result<f64, GenError> {
    for _ in 0..=MAX_REJECTIONS {
        let x = draw();
        if accept(x) {
            return Ok(x);
        }
    }
    Err(GenError::RejectionOverflow(parameter))
}

pub(crate) fn valid_dip_angle(x: f64) -> bool {
    (0.0..=90.0).contains(&x)
}

pub(crate) fn valid_trace(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

pub(crate) fn generated_set(
    engine: &str,
    seed: u64,
    records: Vec<DiscontinuityRecord>,
) -> Result<DiscontinuitySet, GenError> {
    DiscontinuitySet::new(
        engine,
        records,
        Source::Generated {
            engine: engine.to_string(),
            seed,
        },
    )
    .map_err(|e| GenError::InvalidModel(e.to_string()))
}

/// One fit per parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalFits {
    pub dip_direction: MarginalFit,
    pub dip_angle: MarginalFit,
    pub trace_length: MarginalFit,
}

impl MarginalFits {
    pub fn get(&self, p: Parameter) -> &MarginalFit {
        match p {
            Parameter::DipDirection => &self.dip_direction,
            Parameter::DipAngle => &self.dip_angle,
            Parameter::TraceLength => &self.trace_length,
        }
    }

    /// Fit each column, choosing among `candidates` unless a family is forced for it.
    pub fn fit(
        set: &DiscontinuitySet,
        candidates: &[Family],
        forced: &[(Parameter, Family)],
    ) -> Result<Self, FitError> {
        let fit_one = |p: Parameter| -> Result<MarginalFit, FitError> {
            let column = set.column(p);
            match forced.iter().find(|(q, _)| *q == p) {
                Some((_, family)) => select_family(&column, &[*family]).map(|s| s.best),
                None => select_family(&column, candidates).map(|s| s.best),
            }
        };
        Ok(Self {
            dip_direction: fit_one(Parameter::DipDirection)?,
            dip_angle: fit_one(Parameter::DipAngle)?,
            trace_length: fit_one(Parameter::TraceLength)?,
        })
    }

    /// The families named for every parameter: normal orientations, lognormal trace length.
    pub fn fit_default(set: &DiscontinuitySet) -> Result<Self, FitError> {
        Self::fit(
            set,
            &Family::ALL,
            &[
                (Parameter::DipDirection, Family::Normal),
                (Parameter::DipAngle, Family::Normal),
                (Parameter::TraceLength, Family::LogNormal),
            ],
        )
    }
}

/// Independent marginal sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloModel {
    pub fits: MarginalFits,
    pub seed: u64,
}

pub fn mc_generate(model: &MonteCarloModel, n: usize) -> Result<DiscontinuitySet, GenError> {
    if n == 0 {
        return Err(GenError::EmptyRequest);
    }
    let mut rng = SimRng::new(model.seed);
    let fits = &model.fits;
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let dd = normalize_dip_direction(draw_valid(
            Parameter::DipDirection,
            || fits.dip_direction.sample(&mut rng),
            f64::is_finite,
        )?);
        let da = draw_valid(
            Parameter::DipAngle,
            || fits.dip_angle.sample(&mut rng),
            valid_dip_angle,
        )?;
        let tl = draw_valid(
            Parameter::TraceLength,
            || fits.trace_length.sample(&mut rng),
            valid_trace,
        )?;
        records.push(DiscontinuityRecord {
            dip_direction: dd,
            dip_angle: da,
            trace_length: tl,
        });
    }
    generated_set(ENGINE_MONTE_CARLO, model.seed, records)
}

/// Resampling of reference records with independent Gaussian jitter per parameter.
///
/// Bandwidths are in (degrees, degrees, ln metres): trace length is jittered
/// multiplicatively, `l · exp(h·z)`, which is additive jitter in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedBootstrapModel {
    pub reference: DiscontinuitySet,
    pub bandwidth: [f64; 3],
    pub seed: u64,
}

/// `1.06 · σ · n^(-1/5)` with the population standard deviation.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    1.06 * sd * n.powf(-0.2)
}

impl SmoothedBootstrapModel {
    /// Silverman bandwidths for each column (trace length in log space). A
    /// zero-spread column gets a tiny positive bandwidth instead of zero.
    pub fn with_silverman(reference: DiscontinuitySet, seed: u64) -> Self {
        let cols = reference.log_trace_columns();
        let bandwidth = [0, 1, 2].map(|c| {
            let h = silverman_bandwidth(&cols[c]);
            if h > 0.0 {
                h
            } else {
                f64::MIN_POSITIVE
            }
        });
        Self {
            reference,
            bandwidth,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        for p in Parameter::ALL {
            let h = self.bandwidth[p.index()];
            if !(h > 0.0 && h.is_finite()) {
                return Err(GenError::InvalidBandwidth(p));
            }
        }
        Ok(())
    }
}

pub fn bootstrap_generate(model: &SmoothedBootstrapModel, n: usize) -> Result<DiscontinuitySet, GenError> {
    if n == 0 {
        return Err(GenError::EmptyRequest);
    }
    model.validate()?;
    let [h_dd, h_da, h_tl] = model.bandwidth;
    let reference = model.reference.records();
    let mut rng = SimRng::new(model.seed);
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let base = reference[rng.below(reference.len())];
        let dd = normalize_dip_direction(base.dip_direction + h_dd * rng.normal());
        let da = draw_valid(
            Parameter::DipAngle,
            || base.dip_angle + h_da * rng.normal(),
            valid_dip_angle,
        )?;
        let tl = draw_valid(
            Parameter::TraceLength,
            || base.trace_length * (h_tl * rng.normal()).exp(),
            valid_trace,
        )?;
        records.push(DiscontinuityRecord {
            dip_direction: dd,
            dip_angle: da,
            trace_length: tl,
        });
    }
    generated_set(ENGINE_BOOTSTRAP, model.seed, records)
}

/// A CSV of samples produced outside this crate (for example by a pretrained
/// tabular foundation model), scored through the same pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalSampleSource {
    pub path: PathBuf,
    pub declared_engine: String,
}

impl ExternalSampleSource {
    pub fn new(path: impl AsRef<Path>, declared_engine: impl Into<String>) -> Self {
        Self {
            path: path.as_ref().to_path_buf(),
            declared_engine: declared_engine.into(),
        }
    }
}

pub fn load_external(source: &ExternalSampleSource) -> Result<DiscontinuitySet, GenError> {
    let mut set = parse_csv(&source.path, &ColumnMap::default())?;
    set.name = source.declared_engine.clone();
    Ok(set.with_source(Source::Generated {
        engine: source.declared_engine.clone(),
        seed: 0,
    }))
}

/// JSON sidecar written next to every generated CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSidecar {
    pub engine: String,
    pub seed: u64,
    pub n: usize,
    pub rng: String,
    pub model: serde_json::Value,
}
