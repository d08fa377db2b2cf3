//! Z-scoring of discontinuity tables for the neural engines and PERMANOVA.
//!
//! Columns are (dip direction, dip angle, ln trace length). A column with zero
//! spread keeps scale 1 so it maps to a constant zero column.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::DiscontinuitySet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: [f64; 3],
    pub scale: [f64; 3],
}

impl Standardizer {
    pub fn fit(set: &DiscontinuitySet) -> Self {
        Self::fit_many(&[set])
    }

    /// Joint constants over the union of several sets.
    pub fn fit_many(sets: &[&DiscontinuitySet]) -> Self {
        let mut mean = [0.0; 3];
        let mut scale = [1.0; 3];
        for c in 0..3 {
            let values: Vec<f64> = sets
                .iter()
                .flat_map(|s| s.log_trace_columns()[c].clone())
                .collect();
            let n = values.len() as f64;
            let m = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
            mean[c] = m;
            if var > 0.0 {
                scale[c] = var.sqrt();
            }
        }
        Self { mean, scale }
    }

    pub fn transform(&self, set: &DiscontinuitySet) -> Array2<f64> {
        let mut out = Array2::zeros((set.len(), 3));
        for (i, r) in set.records().iter().enumerate() {
            let raw = [r.dip_direction, r.dip_angle, r.trace_length.ln()];
            for c in 0..3 {
                out[[i, c]] = (raw[c] - self.mean[c]) / self.scale[c];
            }
        }
        out
    }

    /// Back to (dip direction, dip angle, trace length); trace length is exponentiated.
    /// The result is not range-checked.
    pub fn inverse(&self, z: &[f64]) -> [f64; 3] {
        [
            z[0] * self.scale[0] + self.mean[0],
            z[1] * self.scale[1] + self.mean[1],
            (z[2] * self.scale[2] + self.mean[2]).exp(),
        ]
    }
}
