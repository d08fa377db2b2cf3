//! Figure data (histograms with KDE overlays, boxplot statistics, dip
//! scatter) and their SVG rendering.
//!
//! Quartiles use linear interpolation between order statistics (type 7).
//! Whiskers reach the most extreme points inside the 1.5·IQR fences.

mod svg;

pub use svg::{render_svg, Figure, Style};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DiscontinuitySet, Parameter};
use crate::generators::silverman_bandwidth;
use crate::metrics::{pearson, quantile_sorted};

/// Points on every KDE curve.
pub const KDE_POINTS: usize = 512;

/// The KDE grid extends this many bandwidths past the data range.
const KDE_REACH: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("at least 2 bins are required, got {0}")]
    TooFewBins(usize),
    #[error("set `{0}` is empty")]
    EmptySet(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub parameter: Parameter,
    pub edges: Vec<f64>,
    pub observed_counts: Vec<usize>,
    pub generated_counts: Option<Vec<usize>>,
    pub kde_x: Vec<f64>,
    pub kde_observed: Vec<f64>,
    pub kde_generated: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub label: String,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSpec {
    pub observed: Vec<[f64; 2]>,
    pub generated: Option<Vec<[f64; 2]>>,
    /// `None` when a column is constant.
    pub r_observed: Option<f64>,
    pub r_generated: Option<f64>,
}

fn kde_bandwidth(values: &[f64]) -> f64 {
    let h = silverman_bandwidth(values);
    if h > 0.0 {
        h
    } else {
        // A constant sample gets a narrow but visible bump.
        1e-3 * values[0].abs().max(1.0)
    }
}

/// Gaussian kernel density of `values` evaluated at `grid`.
pub fn kde(values: &[f64], bandwidth: f64, grid: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (values.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    grid.iter()
        .map(|&x| {
            values
                .iter()
                .map(|v| {
                    let u = (x - v) / bandwidth;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect()
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Shared-edge histogram over the union range plus KDE curves on a shared grid.
pub fn build_histogram(
    observed: &DiscontinuitySet,
    generated: Option<&DiscontinuitySet>,
    parameter: Parameter,
    bins: usize,
) -> Result<HistogramSpec, ReportError> {
    if bins < 2 {
        return Err(ReportError::TooFewBins(bins));
    }
    let obs = observed.column(parameter);
    let gen = generated.map(|g| g.column(parameter));
    if obs.is_empty() {
        return Err(ReportError::EmptySet(observed.name.clone()));
    }
    if let (Some(g), Some(set)) = (&gen, generated) {
        if g.is_empty() {
            return Err(ReportError::EmptySet(set.name.clone()));
        }
    }
    let all = || obs.iter().chain(gen.iter().flatten()).copied();
    let (mut lo, mut hi) = min_max(all());
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| if k == bins { hi } else { lo + width * k as f64 }).collect();
    let count = |values: &[f64]| {
        let mut c = vec![0usize; bins];
        for &x in values {
            let k = (((x - lo) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
            c[k] += 1;
        }
        c
    };

    let h_obs = kde_bandwidth(&obs);
    let h_gen = gen.as_deref().map(kde_bandwidth);
    let reach = KDE_REACH * h_obs.max(h_gen.unwrap_or(0.0));
    let (dlo, dhi) = min_max(all());
    let (glo, ghi) = (dlo - reach, dhi + reach);
    let kde_x: Vec<f64> = (0..KDE_POINTS)
        .map(|i| glo + (ghi - glo) * i as f64 / (KDE_POINTS - 1) as f64)
        .collect();

    Ok(HistogramSpec {
        parameter,
        observed_counts: count(&obs),
        generated_counts: gen.as_deref().map(count),
        kde_observed: kde(&obs, h_obs, &kde_x),
        kde_generated: gen.as_deref().zip(h_gen).map(|(g, h)| kde(g, h, &kde_x)),
        kde_x,
        edges,
    })
}

/// Trapezoid-rule area under a curve.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| (xs[1] - xs[0]) * (ys[0] + ys[1]) / 2.0).sum()
}

pub fn boxplot_stats(label: impl Into<String>, values: &[f64]) -> Result<BoxplotStats, ReportError> {
    let label = label.into();
    if values.is_empty() {
        return Err(ReportError::EmptySet(label));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&v, 0.25);
    let median = quantile_sorted(&v, 0.5);
    let q3 = quantile_sorted(&v, 0.75);
    let iqr = q3 - q1;
    let (fence_lo, fence_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = || v.iter().copied().filter(|x| (fence_lo..=fence_hi).contains(x));
    let whisker_low = inside().next().unwrap_or(q1);
    let whisker_high = inside().next_back().unwrap_or(q3);
    let outliers = v.iter().copied().filter(|x| !(fence_lo..=fence_hi).contains(x)).collect();
    Ok(BoxplotStats { label, median, q1, q3, whisker_low, whisker_high, outliers })
}

/// One box per set for the given parameter, labelled with the set name.
pub fn build_boxplot(sets: &[&DiscontinuitySet], parameter: Parameter) -> Result<Vec<BoxplotStats>, ReportError> {
    sets.iter().map(|s| boxplot_stats(s.name.clone(), &s.column(parameter))).collect()
}

pub fn build_scatter(observed: &DiscontinuitySet, generated: Option<&DiscontinuitySet>) -> ScatterSpec {
    let points = |s: &DiscontinuitySet| -> Vec<[f64; 2]> {
        s.records().iter().map(|r| [r.dip_direction, r.dip_angle]).collect()
    };
    let r = |s: &DiscontinuitySet| pearson(&s.column(Parameter::DipDirection), &s.column(Parameter::DipAngle)).ok();
    ScatterSpec {
        observed: points(observed),
        generated: generated.map(points),
        r_observed: r(observed),
        r_generated: generated.and_then(r),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl HistogramSpec {
    /// `bin_low,bin_high,observed,generated` rows.
    pub fn counts_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,observed,generated\n");
        for k in 0..self.observed_counts.len() {
            let g = self.generated_counts.as_ref().map(|c| c[k]);
            out += &format!("{},{},{},{}\n", self.edges[k], self.edges[k + 1], self.observed_counts[k], opt(g));
        }
        out
    }

    /// `x,observed_density,generated_density` rows.
    pub fn kde_csv(&self) -> String {
        let mut out = String::from("x,observed_density,generated_density\n");
        for (i, x) in self.kde_x.iter().enumerate() {
            let g = self.kde_generated.as_ref().map(|k| k[i]);
            out += &format!("{},{},{}\n", x, self.kde_observed[i], opt(g));
        }
        out
    }
}

pub fn boxplot_csv(stats: &[BoxplotStats]) -> String {
    let mut out = String::from("label,whisker_low,q1,median,q3,whisker_high,outliers\n");
    for s in stats {
        let outliers: Vec<String> = s.outliers.iter().map(|x| x.to_string()).collect();
        out += &format!(
            "{},{},{},{},{},{},{}\n",
            s.label,
            s.whisker_low,
            s.q1,
            s.median,
            s.q3,
            s.whisker_high,
            outliers.join(";")
        );
    }
    out
}

impl ScatterSpec {
    /// `set,dip_direction,dip_angle` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("set,dip_direction,dip_angle\n");
        for p in &self.observed {
            out += &format!("observed,{},{}\n", p[0], p[1]);
        }
        for p in self.generated.iter().flatten() {
            out += &format!("generated,{},{}\n", p[0], p[1]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DiscontinuityRecord, Source};
    use crate::synthetic::{correlated_set, CorrelatedSpec};

    fn set_from_dip_angles(name: &str, values: &[f64]) -> DiscontinuitySet {
        let recs = values.iter().map(|&v| DiscontinuityRecord::new(100.0, v, 1.0).unwrap()).collect();
        DiscontinuitySet::new(name, recs, Source::Observed).unwrap()
    }

    #[test]
    fn hand_binned_counts() {
        let values = [1.0, 2.0, 2.5, 3.0, 4.0, 5.5, 6.0, 7.0, 9.0, 11.0];
        let s = set_from_dip_angles("a", &values);
        let h = build_histogram(&s, None, Parameter::DipAngle, 5).unwrap();
        // Range 1..11, width 2: [1,3) [3,5) [5,7) [7,9) [9,11].
        assert_eq!(h.edges, vec![1.0, 3.0, 5.0, 7.0, 9.0, 11.0]);
        assert_eq!(h.observed_counts, vec![3, 2, 2, 1, 2]);
        assert!(h.generated_counts.is_none() && h.kde_generated.is_none());
    }

    #[test]
    fn identical_sets_and_single_value() {
        let s = correlated_set(&CorrelatedSpec::reference(), 80, 2).unwrap();
        let h = build_histogram(&s, Some(&s), Parameter::TraceLength, 12).unwrap();
        assert_eq!(Some(h.observed_counts.clone()), h.generated_counts);
        assert_eq!(Some(h.kde_observed.clone()), h.kde_generated);
        let one = set_from_dip_angles("c", &[30.0; 7]);
        let h = build_histogram(&one, None, Parameter::DipAngle, 10).unwrap();
        assert_eq!(h.observed_counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.observed_counts.iter().sum::<usize>(), 7);
        assert!(matches!(build_histogram(&one, None, Parameter::DipAngle, 1), Err(ReportError::TooFewBins(1))));
    }

    #[test]
    fn kde_integrates_to_one() {
        let s = correlated_set(&CorrelatedSpec::reference(), 300, 5).unwrap();
        for p in Parameter::ALL {
            let h = build_histogram(&s, None, p, 20).unwrap();
            let area = trapezoid(&h.kde_x, &h.kde_observed);
            assert!((area - 1.0).abs() < 0.01, "{p}: {area}");
            assert!(h.kde_observed.iter().all(|&d| d >= 0.0));
        }
    }

    #[test]
    fn boxplot_odd_range() {
        let v: Vec<f64> = (1..=9).map(f64::from).collect();
        let b = boxplot_stats("x", &v).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (3.0, 5.0, 7.0));
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 9.0));
        assert!(b.outliers.is_empty());
    }

    #[test]
    fn boxplot_constant_and_outlier() {
        let b = boxplot_stats("c", &[4.0; 6]).unwrap();
        assert_eq!((b.q1, b.median, b.q3, b.whisker_low, b.whisker_high), (4.0, 4.0, 4.0, 4.0, 4.0));
        assert!(b.outliers.is_empty());
        // Q1 = 3.5, Q3 = 8.5, IQR = 5, upper fence 16: only 30 lies outside.
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 30.0];
        let b = boxplot_stats("o", &v).unwrap();
        assert_eq!((b.q1, b.q3), (3.5, 8.5));
        assert_eq!(b.outliers, vec![30.0]);
        assert_eq!(b.whisker_high, 10.0);
        assert!(matches!(boxplot_stats("e", &[]), Err(ReportError::EmptySet(_))));
    }

    #[test]
    fn scatter_annotations() {
        let s = correlated_set(&CorrelatedSpec::reference(), 50, 1).unwrap();
        let sc = build_scatter(&s, None);
        assert_eq!(sc.observed.len(), 50);
        assert!(sc.r_observed.unwrap() < -0.4);
        assert!(sc.generated.is_none() && sc.r_generated.is_none());
        assert!(sc.to_csv().lines().count() == 51);
    }
}
