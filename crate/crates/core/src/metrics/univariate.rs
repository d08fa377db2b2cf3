//! Two-sample distribution comparisons for one parameter.

use statrs::function::gamma::gamma_ur;

use super::MetricError;
use crate::fit::MarginalFit;

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<(), MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptySample);
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // Theta-function form converges fast for small λ.
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            cdf += (-j * j * c).exp();
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * cdf
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
///
/// Both ECDFs are evaluated right-continuously at every pooled value, so tied
/// values step together. The p-value uses `λ = √(n_a·n_b/(n_a+n_b))·D`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64), MetricError> {
    check_samples(a, b)?;
    let (sa, sb) = (sorted(a), sorted(b));
    let (na, nb) = (sa.len(), sb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = sa[i].min(sb[j]);
        while i < na && sa[i] <= x {
            i += 1;
        }
        while j < nb && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    // Once one sample is exhausted the gap only shrinks, so nothing remains to scan.
    let ne = (na * nb) as f64 / (na + nb) as f64;
    Ok((d, kolmogorov_survival(ne.sqrt() * d)))
}

/// One-sample Kolmogorov–Smirnov test of `a` against a fitted distribution.
pub fn ks_one_sample(a: &[f64], fit: &MarginalFit) -> Result<(f64, f64), MetricError> {
    check_samples(a, &[0.0])?;
    let s = sorted(a);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = fit.cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok((d, kolmogorov_survival(n.sqrt() * d)))
}

/// Exact 1-Wasserstein distance between two empirical distributions: the
/// integral of `|F_a − F_b|` over the pooled support.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    check_samples(a, b)?;
    let (sa, sb) = (sorted(a), sorted(b));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let mut pooled: Vec<f64> = sa.iter().chain(&sb).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    for w in pooled.windows(2) {
        while i < sa.len() && sa[i] <= w[0] {
            i += 1;
        }
        while j < sb.len() && sb[j] <= w[0] {
            j += 1;
        }
        total += (i as f64 / na - j as f64 / nb).abs() * (w[1] - w[0]);
    }
    Ok(total)
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub stat: f64,
    pub df: usize,
    pub p: f64,
    /// Observed and expected counts of the final (merged) bins.
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
}

/// Chi-square goodness of fit of sample `b` against the distribution of `a`.
///
/// Edges are the `k/bins` quantiles of `a` (type 7); bin `k` is `(e_{k−1}, e_k]`
/// with open outer ends. The expected count of a bin is `n_b` times the share
/// of `a` in it. Bins are merged left to right until each expected count is
/// at least 5; a short tail is folded into the last full bin.
pub fn chi_square_gof(a: &[f64], b: &[f64], bins: usize) -> Result<ChiSquare, MetricError> {
    check_samples(a, b)?;
    if bins < 2 {
        return Err(MetricError::TooFewBins(bins));
    }
    let sa = sorted(a);
    let edges: Vec<f64> = (1..bins).map(|k| quantile_sorted(&sa, k as f64 / bins as f64)).collect();
    let bin_of = |x: f64| edges.partition_point(|&e| e < x);
    let mut share = vec![0.0; bins];
    for &x in &sa {
        share[bin_of(x)] += 1.0;
    }
    let mut obs = vec![0.0; bins];
    for &x in b {
        obs[bin_of(x)] += 1.0;
    }
    let (na, nb) = (sa.len() as f64, b.len() as f64);

    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for k in 0..bins {
        o_acc += obs[k];
        e_acc += nb * share[k] / na;
        if e_acc >= 5.0 {
            observed.push(o_acc);
            expected.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if o_acc > 0.0 || e_acc > 0.0 {
        match (observed.last_mut(), expected.last_mut()) {
            (Some(o), Some(e)) => {
                *o += o_acc;
                *e += e_acc;
            }
            _ => {
                observed.push(o_acc);
                expected.push(e_acc);
            }
        }
    }
    if observed.len() < 2 {
        return Err(MetricError::TooFewBins(observed.len()));
    }
    let stat: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = observed.len() - 1;
    let p = if stat <= 0.0 { 1.0 } else { gamma_ur(df as f64 / 2.0, stat / 2.0) };
    Ok(ChiSquare { stat, df, p, observed, expected })
}
