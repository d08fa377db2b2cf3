//! Two-group PERMANOVA with Euclidean distance on jointly z-scored features
//! (trace length in log space).
//!
//! For Euclidean distances the sums of squares reduce to centroid form:
//! `SS_T = Σ‖z_i − z̄‖²`, `SS_A = Σ_g n_g‖z̄_g − z̄‖²`, `SS_W = SS_T − SS_A`
//! and `F = SS_A / (SS_W / (N − 2))`. A permutation only changes the group-1
//! coordinate sum, so each one costs `O(n_1)`.

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::data::DiscontinuitySet;
use crate::rng::SimRng;
use crate::standardize::Standardizer;

/// Permuted statistics within this margin (relative, floored at 1) of the
/// observed one count as ties.
const TIE_TOLERANCE: f64 = 1e-9;

/// Pools up to this size are enumerated exactly when the requested permutation
/// count reaches every distinct relabelling.
const EXACT_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Permanova {
    pub f: f64,
    pub p: f64,
    pub permutations: usize,
    pub exact: bool,
}

/// Rows of both sets, jointly standardized and put in a canonical order so
/// the result does not depend on which set is listed first.
fn pooled_rows(a: &DiscontinuitySet, b: &DiscontinuitySet) -> (Vec<[f64; 3]>, Vec<bool>) {
    let st = Standardizer::fit_many(&[a, b]);
    let mut rows: Vec<([f64; 3], bool)> = Vec::with_capacity(a.len() + b.len());
    // The label marks membership of the smaller group (the first on a tie).
    let a_small = a.len() <= b.len();
    for (set, is_a) in [(a, true), (b, false)] {
        let z = st.transform(set);
        for r in z.rows() {
            rows.push(([r[0], r[1], r[2]], is_a == a_small));
        }
    }
    rows.sort_by(|x, y| {
        x.0.iter()
            .zip(&y.0)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.1.cmp(&y.1))
    });
    rows.into_iter().unzip()
}

struct Pool {
    rows: Vec<[f64; 3]>,
    total: [f64; 3],
    ss_total: f64,
    n1: usize,
}

impl Pool {
    fn new(rows: Vec<[f64; 3]>, n1: usize) -> Self {
        let n = rows.len() as f64;
        let mut total = [0.0; 3];
        for r in &rows {
            for c in 0..3 {
                total[c] += r[c];
            }
        }
        let mean = total.map(|t| t / n);
        let ss_total = rows
            .iter()
            .map(|r| (0..3).map(|c| (r[c] - mean[c]).powi(2)).sum::<f64>())
            .sum();
        Self { rows, total, ss_total, n1 }
    }

    fn f_for(&self, group1: impl Iterator<Item = usize>) -> f64 {
        let n = self.rows.len() as f64;
        let (n1, n2) = (self.n1 as f64, n - self.n1 as f64);
        let mut s1 = [0.0; 3];
        for i in group1 {
            for c in 0..3 {
                s1[c] += self.rows[i][c];
            }
        }
        let mut ss_a = 0.0;
        for c in 0..3 {
            let m = self.total[c] / n;
            let m1 = s1[c] / n1;
            let m2 = (self.total[c] - s1[c]) / n2;
            ss_a += n1 * (m1 - m).powi(2) + n2 * (m2 - m).powi(2);
        }
        let ss_w = (self.ss_total - ss_a).max(0.0);
        if ss_w == 0.0 {
            return if ss_a > 0.0 { f64::INFINITY } else { 0.0 };
        }
        ss_a / (ss_w / (n - 2.0))
    }
}

fn at_least(f: f64, observed: f64) -> bool {
    if observed.is_infinite() {
        return f.is_infinite();
    }
    f >= observed - TIE_TOLERANCE * observed.abs().max(1.0)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Visit every `k`-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else { return };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Pseudo-F of the two-group split and its permutation p-value
/// `(#{F_perm ≥ F} + 1) / (permutations + 1)`.
///
/// When the pool has at most ten rows and `permutations + 1` reaches `N!`,
/// every distinct split is enumerated instead and `p` is the exact
/// permutation-distribution tail.
pub fn permanova(
    observed: &DiscontinuitySet,
    generated: &DiscontinuitySet,
    permutations: usize,
    seed: u64,
) -> Result<Permanova, MetricError> {
    if observed.len() < 2 || generated.len() < 2 {
        return Err(MetricError::EmptySample);
    }
    if permutations < 99 {
        return Err(MetricError::TooFewPermutations(permutations));
    }
    let (rows, labels) = pooled_rows(observed, generated);
    let n = rows.len();
    let n1 = observed.len().min(generated.len());
    let pool = Pool::new(rows, n1);
    let f_obs = pool.f_for(labels.iter().enumerate().filter(|(_, &l)| l).map(|(i, _)| i));

    if n <= EXACT_LIMIT && (permutations + 1) as f64 >= factorial(n) {
        let (mut hits, mut total) = (0usize, 0usize);
        for_each_combination(n, n1, |g| {
            total += 1;
            if at_least(pool.f_for(g.iter().copied()), f_obs) {
                hits += 1;
            }
        });
        return Ok(Permanova {
            f: f_obs,
            p: hits as f64 / total as f64,
            permutations: total,
            exact: true,
        });
    }

    let mut rng = SimRng::new(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut hits = 0usize;
    for _ in 0..permutations {
        // Partial Fisher–Yates: the first n1 slots become group 1.
        for i in 0..n1 {
            let j = i + rng.below(n - i);
            idx.swap(i, j);
        }
        if at_least(pool.f_for(idx[..n1].iter().copied()), f_obs) {
            hits += 1;
        }
    }
    Ok(Permanova {
        f: f_obs,
        p: (hits + 1) as f64 / (permutations + 1) as f64,
        permutations,
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DiscontinuityRecord, Source};

    fn set(rows: &[[f64; 3]]) -> DiscontinuitySet {
        let recs = rows.iter().map(|r| DiscontinuityRecord::new(r[0], r[1], r[2]).unwrap()).collect();
        DiscontinuitySet::new("t", recs, Source::Observed).unwrap()
    }

    #[test]
    fn combinations_count() {
        let mut c = 0;
        for_each_combination(6, 3, |_| c += 1);
        assert_eq!(c, 20);
        let mut last = vec![];
        for_each_combination(4, 2, |g| last = g.to_vec());
        assert_eq!(last, vec![2, 3]);
    }

    #[test]
    fn duplicated_set_gives_zero_f() {
        let a = set(&[[10.0, 20.0, 1.0], [50.0, 40.0, 2.0], [90.0, 60.0, 3.0], [120.0, 30.0, 0.5]]);
        let r = permanova(&a, &a, 199, 1).unwrap();
        assert!(r.f.abs() < 1e-12);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn argument_checks() {
        let a = set(&[[10.0, 20.0, 1.0]]);
        let b = set(&[[10.0, 20.0, 1.0], [11.0, 21.0, 1.5]]);
        assert!(matches!(permanova(&a, &b, 199, 1), Err(MetricError::EmptySample)));
        assert!(matches!(permanova(&b, &b, 98, 1), Err(MetricError::TooFewPermutations(98))));
    }
}
