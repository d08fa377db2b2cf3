//! Pearson correlation and comparisons of correlation matrices.

use super::MetricError;
use crate::data::{DiscontinuitySet, Parameter};

pub type CorrMatrix = [[f64; 3]; 3];

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricError::EmptySample);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson matrix of (dip direction, dip angle, trace length) on raw values.
pub fn correlation_matrix(set: &DiscontinuitySet) -> Result<CorrMatrix, MetricError> {
    let cols = Parameter::ALL.map(|p| set.column(p));
    let mut m = [[1.0; 3]; 3];
    for i in 0..3 {
        for j in i + 1..3 {
            let r = pearson(&cols[i], &cols[j])?;
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    Ok(m)
}

pub fn frobenius_diff(a: &CorrMatrix, b: &CorrMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += (a[i][j] - b[i][j]).powi(2);
        }
    }
    s.sqrt()
}

/// RMSE and MAE over the three upper off-diagonal entries.
pub fn corr_rmse_mae(a: &CorrMatrix, b: &CorrMatrix) -> (f64, f64) {
    let d = [a[0][1] - b[0][1], a[0][2] - b[0][2], a[1][2] - b[1][2]];
    let rmse = (d.iter().map(|x| x * x).sum::<f64>() / 3.0).sqrt();
    let mae = d.iter().map(|x| x.abs()).sum::<f64>() / 3.0;
    (rmse, mae)
}
