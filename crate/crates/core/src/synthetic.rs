//! Seeded synthetic discontinuity tables with a prescribed correlation
//! structure, for tests, benchmarks and the bundled fixtures.
//!
//! The latent vector is Gaussian in (dip direction, dip angle, ln trace
//! length). Dip direction is reduced modulo 360, rows whose dip angle falls
//! outside `[0, 90]` are redrawn.

use serde::{Deserialize, Serialize};

use crate::data::{DiscontinuityRecord, DiscontinuitySet, Source};
use crate::generators::{GenError, MAX_REJECTIONS};
use crate::rng::SimRng;
use crate::Parameter;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedSpec {
    /// Means of (dip direction, dip angle, ln trace length).
    pub mean: [f64; 3],
    pub std: [f64; 3],
    pub corr: [[f64; 3]; 3],
}

impl CorrelatedSpec {
    /// Only dip direction and dip angle correlated.
    pub fn with_dip_correlation(mean: [f64; 3], std: [f64; 3], r: f64) -> Self {
        Self {
            mean,
            std,
            corr: [[1.0, r, 0.0], [r, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// The reference table used throughout the tests: dip direction
    /// N(180, 20), dip angle N(45, 10), trace length LN(0.5, 0.4), and
    /// r(dip direction, dip angle) = −0.7.
    pub fn reference() -> Self {
        Self::with_dip_correlation([180.0, 45.0, 0.5], [20.0, 10.0, 0.4], -0.7)
    }
}

/// Lower Cholesky factor of a symmetric positive-definite 3×3 matrix.
pub fn cholesky3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                if d <= 0.0 {
                    return None;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

fn to_record(spec: &CorrelatedSpec, z: [f64; 3]) -> Option<DiscontinuityRecord> {
    let dd = spec.mean[0] + spec.std[0] * z[0];
    let da = spec.mean[1] + spec.std[1] * z[1];
    let tl = (spec.mean[2] + spec.std[2] * z[2]).exp();
    DiscontinuityRecord::new(dd, da, tl).ok()
}

fn invalid_spec(spec: &CorrelatedSpec) -> GenError {
    GenError::InvalidModel(format!("correlation matrix is not positive definite: {:?}", spec.corr))
}

/// Independent draws from the spec.
pub fn correlated_set(spec: &CorrelatedSpec, n: usize, seed: u64) -> Result<DiscontinuitySet, GenError> {
    if n == 0 {
        return Err(GenError::EmptyRequest);
    }
    let l = cholesky3(&spec.corr).ok_or_else(|| invalid_spec(spec))?;
    let mut rng = SimRng::new(seed);
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let mut tries = 0;
        loop {
            let e = [rng.normal(), rng.normal(), rng.normal()];
            let z = [
                l[0][0] * e[0],
                l[1][0] * e[0] + l[1][1] * e[1],
                l[2][0] * e[0] + l[2][1] * e[1] + l[2][2] * e[2],
            ];
            if let Some(r) = to_record(spec, z) {
                records.push(r);
                break;
            }
            tries += 1;
            if tries > MAX_REJECTIONS {
                return Err(GenError::RejectionOverflow(Parameter::DipAngle));
            }
        }
    }
    finish(records, seed)
}

/// Draws whose sample mean, population std and Pearson matrix equal the spec
/// exactly (up to rounding), provided no dip angle leaves `[0, 90]` and no dip
/// direction wraps. Used to build fixtures that must reproduce published
/// summary statistics.
pub fn exact_correlated_set(spec: &CorrelatedSpec, n: usize, seed: u64) -> Result<DiscontinuitySet, GenError> {
    if n < 4 {
        return Err(GenError::InvalidModel("exact recolouring needs at least 4 rows".into()));
    }
    let target = cholesky3(&spec.corr).ok_or_else(|| invalid_spec(spec))?;
    let mut rng = SimRng::new(seed);
    let mut attempt = 0;
    loop {
        attempt += 1;
        if attempt > 100 {
            return Err(GenError::RejectionOverflow(Parameter::DipAngle));
        }
        let mut raw: Vec<[f64; 3]> = (0..n).map(|_| [rng.normal(), rng.normal(), rng.normal()]).collect();
        // Centre and whiten with the sample covariance, then colour with the target.
        let nf = n as f64;
        let mut mean = [0.0; 3];
        for row in &raw {
            for c in 0..3 {
                mean[c] += row[c] / nf;
            }
        }
        let mut cov = [[0.0; 3]; 3];
        for row in raw.iter_mut() {
            for c in 0..3 {
                row[c] -= mean[c];
            }
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += row[i] * row[j] / nf;
                }
            }
        }
        let Some(lc) = cholesky3(&cov) else { continue };
        let records: Option<Vec<_>> = raw
            .iter()
            .map(|row| {
                let mut w = [0.0; 3];
                for i in 0..3 {
                    let s: f64 = (0..i).map(|k| lc[i][k] * w[k]).sum();
                    w[i] = (row[i] - s) / lc[i][i];
                }
                let z = [
                    target[0][0] * w[0],
                    target[1][0] * w[0] + target[1][1] * w[1],
                    target[2][0] * w[0] + target[2][1] * w[1] + target[2][2] * w[2],
                ];
                let dd = spec.mean[0] + spec.std[0] * z[0];
                if !(0.0..360.0).contains(&dd) {
                    return None;
                }
                to_record(spec, z)
            })
            .collect();
        if let Some(records) = records {
            return finish(records, seed);
        }
    }
}

fn finish(records: Vec<DiscontinuityRecord>, seed: u64) -> Result<DiscontinuitySet, GenError> {
    DiscontinuitySet::new("synthetic", records, Source::Generated { engine: "synthetic".into(), seed })
        .map_err(|e| GenError::InvalidModel(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pearson(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn cholesky_reproduces_matrix() {
        let m = [[4.0, 2.0, 0.4], [2.0, 3.0, 0.1], [0.4, 0.1, 1.0]];
        let l = cholesky3(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i][k] * l[j][k]).sum();
                assert!((v - m[i][j]).abs() < 1e-12);
            }
        }
        assert!(cholesky3(&[[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_none());
    }

    #[test]
    fn exact_set_hits_targets() {
        let spec = CorrelatedSpec::reference();
        let set = exact_correlated_set(&spec, 68, 3).unwrap();
        let [dd, da, ltl] = set.log_trace_columns();
        assert!((pearson(&dd, &da) + 0.7).abs() < 1e-9);
        assert!(pearson(&dd, &ltl).abs() < 1e-9);
        let m = da.iter().sum::<f64>() / 68.0;
        assert!((m - 45.0).abs() < 1e-9);
    }

    #[test]
    fn random_set_is_close_and_deterministic() {
        let spec = CorrelatedSpec::reference();
        let a = correlated_set(&spec, 5000, 9).unwrap();
        let b = correlated_set(&spec, 5000, 9).unwrap();
        assert_eq!(a.records(), b.records());
        let r = pearson(&a.column(Parameter::DipDirection), &a.column(Parameter::DipAngle));
        assert!((r + 0.7).abs() < 0.03, "{r}");
    }
}
