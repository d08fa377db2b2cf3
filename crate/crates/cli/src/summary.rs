//! Cross-engine summary table: one row per pair, every headline metric, and
//! the engine's rank on that metric among the engines run on the same dataset.

use std::fmt::Write;

use fracgen_core::metrics::EvaluationReport;
use fracgen_core::Parameter;

use crate::compare::PairOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Better {
    Lower,
    Higher,
}

pub struct Metric {
    pub name: String,
    pub better: Better,
    pub value: fn(&EvaluationReport, usize) -> f64,
    /// Parameter index for univariate metrics.
    pub column: usize,
}

/// Headline metrics in column order.
pub fn metrics() -> Vec<Metric> {
    type Getter = fn(&EvaluationReport, usize) -> f64;
    let univariate: [(&str, Better, Getter); 6] = [
        ("mean_rel_error", Better::Lower, |r, c| r.univariate[c].mean_rel_error),
        ("std_rel_error", Better::Lower, |r, c| r.univariate[c].std_rel_error),
        ("ks_stat", Better::Lower, |r, c| r.univariate[c].ks_stat),
        ("ks_p", Better::Higher, |r, c| r.univariate[c].ks_p),
        ("wasserstein_1", Better::Lower, |r, c| r.univariate[c].wasserstein_1),
        ("chi2_p", Better::Higher, |r, c| r.univariate[c].chi2_p),
    ];
    let multivariate: [(&str, Better, Getter); 6] = [
        ("frobenius_diff", Better::Lower, |r, _| r.multivariate.frobenius_diff),
        ("corr_rmse", Better::Lower, |r, _| r.multivariate.corr_rmse),
        ("corr_mae", Better::Lower, |r, _| r.multivariate.corr_mae),
        ("permanova_f", Better::Lower, |r, _| r.multivariate.permanova_f),
        ("permanova_p", Better::Higher, |r, _| r.multivariate.permanova_p),
        ("sliced_wasserstein", Better::Lower, |r, _| r.multivariate.sliced_wasserstein),
    ];
    let mut out = Vec::new();
    for p in Parameter::ALL {
        for (name, better, value) in univariate {
            out.push(Metric { name: format!("{name}_{p}"), better, value, column: p.index() });
        }
    }
    for (name, better, value) in multivariate {
        out.push(Metric { name: name.into(), better, value, column: 0 });
    }
    out
}

/// Competition ranks (1 = best, ties share the smaller rank).
pub fn ranks(values: &[f64], better: Better) -> Vec<usize> {
    values
        .iter()
        .map(|&v| {
            1 + values
                .iter()
                .filter(|&&w| match better {
                    Better::Lower => w < v,
                    Better::Higher => w > v,
                })
                .count()
        })
        .collect()
}

pub fn summary_csv(pairs: &[PairOutcome]) -> String {
    let metrics = metrics();
    let mut out = String::from("dataset,scenario,engine,status,n_observed,n_generated");
    for m in &metrics {
        let _ = write!(out, ",{}", m.name);
    }
    for m in &metrics {
        let _ = write!(out, ",rank_{}", m.name);
    }
    out.push('\n');

    // Rank within each dataset over the pairs that produced a report.
    let mut rank_of: Vec<Option<Vec<usize>>> = vec![None; pairs.len()];
    let mut datasets: Vec<&str> = pairs.iter().map(|p| p.status.dataset.as_str()).collect();
    datasets.dedup();
    for d in datasets {
        let idx: Vec<usize> = (0..pairs.len())
            .filter(|&i| pairs[i].status.dataset == d && pairs[i].report.is_some())
            .collect();
        let per_metric: Vec<Vec<usize>> = metrics
            .iter()
            .map(|m| {
                let vals: Vec<f64> = idx.iter().map(|&i| (m.value)(pairs[i].report.as_ref().unwrap(), m.column)).collect();
                ranks(&vals, m.better)
            })
            .collect();
        for (k, &i) in idx.iter().enumerate() {
            rank_of[i] = Some(per_metric.iter().map(|r| r[k]).collect());
        }
    }

    for (p, ranks) in pairs.iter().zip(&rank_of) {
        let s = &p.status;
        let _ = write!(out, "{},{},{}", s.dataset, s.scenario, s.engine);
        match (&p.report, ranks) {
            (Some(r), Some(ranks)) => {
                let _ = write!(out, ",ok,{},{}", r.n_observed, r.n_generated);
                for m in &metrics {
                    let _ = write!(out, ",{}", (m.value)(r, m.column));
                }
                for k in ranks {
                    let _ = write!(out, ",{k}");
                }
            }
            _ => {
                out.push_str(",failed,,");
                for _ in 0..2 * metrics.len() {
                    out.push(',');
                }
            }
        }
        out.push('\n');
    }
    out
}
