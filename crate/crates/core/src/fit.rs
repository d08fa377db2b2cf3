//! Maximum-likelihood fits of univariate families to one parameter column.
//!
//! All scale estimates use the population denominator `n`, which is the MLE.
//! Family selection ranks candidates by raw log-likelihood; every supported
//! family has at most two parameters, so an information criterion would only
//! reorder one-parameter against two-parameter families.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::rng::SimRng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Normal,
    #[serde(rename = "lognormal")]
    LogNormal,
    Exponential,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Normal, Family::LogNormal, Family::Exponential];

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::LogNormal => "lognormal",
            Family::Exponential => "exponential",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(Family::Normal),
            "lognormal" | "log-normal" | "log_normal" => Ok(Family::LogNormal),
            "exponential" | "exp" => Ok(Family::Exponential),
            other => Err(format!("unknown family `{other}`")),
        }
    }
}

/// Family-specific parameters, serialized with named keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FitParams {
    Normal { mu: f64, sigma: f64 },
    LogNormal { mu_log: f64, sigma_log: f64 },
    Exponential { rate: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("sample is degenerate (fewer than two points or zero spread)")]
    DegenerateSample,
    #[error("sample {0} is not strictly positive")]
    NonPositiveSample(usize),
    #[error("sample {0} is not finite")]
    NonFiniteSample(usize),
    #[error("no candidate family accepts this sample")]
    NoViableCandidate,
    #[error("fit parameters do not match family {0}")]
    Inconsistent(Family),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalFit {
    pub family: Family,
    pub params: FitParams,
    pub n: usize,
    pub log_likelihood: f64,
}

impl MarginalFit {
    /// Checks the family/params pairing and parameter positivity, e.g. after deserializing.
    pub fn validate(&self) -> Result<(), FitError> {
        let ok = match (self.family, self.params) {
            (Family::Normal, FitParams::Normal { mu, sigma }) => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
            (Family::LogNormal, FitParams::LogNormal { mu_log, sigma_log }) => {
                mu_log.is_finite() && sigma_log > 0.0 && sigma_log.is_finite()
            }
            (Family::Exponential, FitParams::Exponential { rate }) => rate > 0.0 && rate.is_finite(),
            _ => false,
        };
        if ok && self.log_likelihood.is_finite() {
            Ok(())
        } else {
            Err(FitError::Inconsistent(self.family))
        }
    }

    /// Exact log-likelihood of `samples` under this fit.
    pub fn log_likelihood_of(&self, samples: &[f64]) -> f64 {
        match self.params {
            FitParams::Normal { mu, sigma } => normal_ll(samples.iter().copied(), mu, sigma),
            FitParams::LogNormal { mu_log, sigma_log } => {
                let sum_log: f64 = samples.iter().map(|x| x.ln()).sum();
                normal_ll(samples.iter().map(|x| x.ln()), mu_log, sigma_log) - sum_log
            }
            FitParams::Exponential { rate } => {
                samples.len() as f64 * rate.ln() - rate * samples.iter().sum::<f64>()
            }
        }
    }

    /// Distribution mean and standard deviation.
    pub fn moments(&self) -> (f64, f64) {
        match self.params {
            FitParams::Normal { mu, sigma } => (mu, sigma),
            FitParams::LogNormal { mu_log, sigma_log } => {
                let s2 = sigma_log * sigma_log;
                let mean = (mu_log + s2 / 2.0).exp();
                (mean, mean * (s2.exp() - 1.0).sqrt())
            }
            FitParams::Exponential { rate } => (1.0 / rate, 1.0 / rate),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let phi = |z: f64| 0.5 * erfc(-z / std::f64::consts::SQRT_2);
        match self.params {
            FitParams::Normal { mu, sigma } => phi((x - mu) / sigma),
            FitParams::LogNormal { mu_log, sigma_log } => {
                if x <= 0.0 {
                    0.0
                } else {
                    phi((x.ln() - mu_log) / sigma_log)
                }
            }
            FitParams::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-rate * x).exp()
                }
            }
        }
    }

    /// One draw from the fitted distribution.
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match self.params {
            FitParams::Normal { mu, sigma } => mu + sigma * rng.normal(),
            FitParams::LogNormal { mu_log, sigma_log } => (mu_log + sigma_log * rng.normal()).exp(),
            FitParams::Exponential { rate } => -rng.uniform_open().ln() / rate,
        }
    }
}

fn normal_ll(xs: impl Iterator<Item = f64>, mu: f64, sigma: f64) -> f64 {
    let mut n = 0usize;
    let mut ss = 0.0;
    for x in xs {
        n += 1;
        ss += (x - mu) * (x - mu);
    }
    -0.5 * n as f64 * (LN_2PI + 2.0 * sigma.ln()) - ss / (2.0 * sigma * sigma)
}

fn check_finite(samples: &[f64]) -> Result<(), FitError> {
    match samples.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(FitError::NonFiniteSample(i)),
        None => Ok(()),
    }
}

fn check_positive(samples: &[f64]) -> Result<(), FitError> {
    check_finite(samples)?;
    match samples.iter().position(|&x| x <= 0.0) {
        Some(i) => Err(FitError::NonPositiveSample(i)),
        None => Ok(()),
    }
}

fn mean_and_pop_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn fit_normal(samples: &[f64]) -> Result<MarginalFit, FitError> {
    check_finite(samples)?;
    if samples.len() < 2 {
        return Err(FitError::DegenerateSample);
    }
    let (mu, sigma) = mean_and_pop_std(samples);
    if sigma <= 0.0 {
        return Err(FitError::DegenerateSample);
    }
    let fit = MarginalFit {
        family: Family::Normal,
        params: FitParams::Normal { mu, sigma },
        n: samples.len(),
        log_likelihood: 0.0,
    };
    Ok(MarginalFit {
        log_likelihood: fit.log_likelihood_of(samples),
        ..fit
    })
}

/// Normal fit of `ln x`; parameters are those of the underlying normal.
pub fn fit_lognormal(samples: &[f64]) -> Result<MarginalFit, FitError> {
    check_positive(samples)?;
    let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
    let inner = fit_normal(&logs)?;
    let FitParams::Normal { mu, sigma } = inner.params else {
        unreachable!()
    };
    let fit = MarginalFit {
        family: Family::LogNormal,
        params: FitParams::LogNormal {
            mu_log: mu,
            sigma_log: sigma,
        },
        n: samples.len(),
        log_likelihood: 0.0,
    };
    Ok(MarginalFit {
        log_likelihood: fit.log_likelihood_of(samples),
        ..fit
    })
}

/// Rate MLE `1 / mean`.
pub fn fit_exponential(samples: &[f64]) -> Result<MarginalFit, FitError> {
    if samples.is_empty() {
        return Err(FitError::DegenerateSample);
    }
    check_positive(samples)?;
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let fit = MarginalFit {
        family: Family::Exponential,
        params: FitParams::Exponential { rate: 1.0 / mean },
        n: samples.len(),
        log_likelihood: 0.0,
    };
    Ok(MarginalFit {
        log_likelihood: fit.log_likelihood_of(samples),
        ..fit
    })
}

pub fn fit_family(samples: &[f64], family: Family) -> Result<MarginalFit, FitError> {
    match family {
        Family::Normal => fit_normal(samples),
        Family::LogNormal => fit_lognormal(samples),
        Family::Exponential => fit_exponential(samples),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub family: Family,
    /// `None` when the sample violates the family's preconditions.
    pub log_likelihood: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySelection {
    pub best: MarginalFit,
    pub candidates: Vec<CandidateScore>,
}

/// Fit every candidate and keep the highest log-likelihood. Ties go to the
/// earlier family in `Normal < LogNormal < Exponential`.
pub fn select_family(samples: &[f64], candidates: &[Family]) -> Result<FamilySelection, FitError> {
    let mut families = candidates.to_vec();
    families.sort();
    families.dedup();

    let mut best: Option<MarginalFit> = None;
    let mut scores = Vec::with_capacity(families.len());
    for family in families {
        match fit_family(samples, family) {
            Ok(fit) => {
                scores.push(CandidateScore {
                    family,
                    log_likelihood: Some(fit.log_likelihood),
                    skipped: None,
                });
                if best.is_none_or(|b| fit.log_likelihood > b.log_likelihood) {
                    best = Some(fit);
                }
            }
            Err(e) => scores.push(CandidateScore {
                family,
                log_likelihood: None,
                skipped: Some(e.to_string()),
            }),
        }
    }
    best.map(|best| FamilySelection {
        best,
        candidates: scores,
    })
    .ok_or(FitError::NoViableCandidate)
}
