use fracgen_core::generators::{mc_generate, MarginalFits};
use fracgen_core::metrics::{chi_square_gof, evaluate, frobenius_diff, ks_two_sample, permanova, wasserstein_1d, EvalConfig};
use fracgen_core::synthetic::{correlated_set, CorrelatedSpec};
use fracgen_core::{DiscontinuityRecord, DiscontinuitySet, MonteCarloModel, SimRng, Source};

fn draws(n: usize, seed: u64, mean: f64, sd: f64) -> Vec<f64> {
    let mut rng = SimRng::new(seed);
    (0..n).map(|_| mean + sd * rng.normal()).collect()
}

fn ecdf(sample: &[f64], x: f64) -> f64 {
    sample.iter().filter(|&&v| v <= x).count() as f64 / sample.len() as f64
}

#[test]
fn ks_matches_brute_force_grid() {
    let a = draws(30, 1, 0.0, 1.0);
    // Rounded so the two samples share some tied values.
    let b: Vec<f64> = draws(40, 2, 0.3, 1.2).iter().map(|v| (v * 4.0).round() / 4.0).collect();
    let lo = a.iter().chain(&b).copied().fold(f64::INFINITY, f64::min) - 1.0;
    let hi = a.iter().chain(&b).copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let mut grid: Vec<f64> = (0..=20_000).map(|k| lo + (hi - lo) * k as f64 / 20_000.0).collect();
    grid.extend(a.iter().chain(&b));
    let oracle = grid.iter().map(|&x| (ecdf(&a, x) - ecdf(&b, x)).abs()).fold(0.0, f64::max);
    let (d, _) = ks_two_sample(&a, &b).unwrap();
    assert!((d - oracle).abs() < 1e-12, "{d} vs {oracle}");
}

/// Left-continuous empirical quantile function.
fn empirical_quantile(sorted: &[f64], u: f64) -> f64 {
    let k = ((u * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

#[test]
fn w1_matches_quantile_quadrature() {
    let a = [0.3, 2.5, 1.1];
    let b = [4.0, -1.5, 0.7, 2.2, 3.3];
    let (mut sa, mut sb) = (a.to_vec(), b.to_vec());
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    // 10 005 = 667 · 15 cells, so every quantile step falls on a cell edge.
    let cells = 10_005;
    let oracle: f64 = (0..cells)
        .map(|k| {
            let u = (k as f64 + 0.5) / cells as f64;
            (empirical_quantile(&sa, u) - empirical_quantile(&sb, u)).abs()
        })
        .sum::<f64>()
        / cells as f64;
    let w = wasserstein_1d(&a, &b).unwrap();
    assert!((w - oracle).abs() < 1e-6, "{w} vs {oracle}");
}

#[test]
fn chi_square_hand_fixture() {
    // Deciles of 1..=100 are 10.9, 20.8, ..., 90.1, so each decile bin holds ten
    // reference values and expects ten of the 100 comparison values.
    let a: Vec<f64> = (1..=100).map(f64::from).collect();
    let counts: [u32; 10] = [12, 8, 10, 15, 5, 10, 9, 11, 10, 10];
    let b: Vec<f64> = counts
        .iter()
        .enumerate()
        .flat_map(|(k, &c)| std::iter::repeat_n(10.0 * k as f64 + 5.0, c as usize))
        .collect();
    let r = chi_square_gof(&a, &b, 10).unwrap();
    assert_eq!(r.observed, counts.map(f64::from).to_vec());
    assert_eq!(r.expected, vec![10.0; 10]);
    // (4 + 4 + 0 + 25 + 25 + 0 + 1 + 1 + 0 + 0) / 10
    assert!((r.stat - 6.0).abs() < 1e-9);
    assert_eq!(r.df, 9);
    // Survival function of chi-square(9) at 6.
    assert!((r.p - 0.739_918_292_094_653_8).abs() < 1e-9, "{}", r.p);
}

fn set_of(rows: &[[f64; 3]]) -> DiscontinuitySet {
    let recs = rows.iter().map(|r| DiscontinuityRecord::new(r[0], r[1], r[2]).unwrap()).collect();
    DiscontinuitySet::new("fixture", recs, Source::Observed).unwrap()
}

/// Pseudo-F from the distance matrix form of the sums of squares.
fn distance_f(z: &[[f64; 3]], labels: &[bool]) -> f64 {
    let n = z.len();
    let d2 = |i: usize, j: usize| (0..3).map(|c| (z[i][c] - z[j][c]).powi(2)).sum::<f64>();
    let mut ss_t = 0.0;
    let mut within = [0.0, 0.0];
    for i in 0..n {
        for j in i + 1..n {
            ss_t += d2(i, j);
            if labels[i] == labels[j] {
                within[labels[i] as usize] += d2(i, j);
            }
        }
    }
    let sizes = [labels.iter().filter(|&&l| !l).count() as f64, labels.iter().filter(|&&l| l).count() as f64];
    let ss_t = ss_t / n as f64;
    let ss_w = within[0] / sizes[0] + within[1] / sizes[1];
    (ss_t - ss_w) / (ss_w / (n as f64 - 2.0))
}

fn permutations(items: &mut Vec<bool>, k: usize, out: &mut Vec<Vec<bool>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

#[test]
fn permanova_matches_exhaustive_label_permutations() {
    let obs: [[f64; 3]; 3] = [[120.0, 40.0, 1.2], [135.0, 44.0, 2.0], [128.0, 52.0, 0.8]];
    let gen: [[f64; 3]; 3] = [[150.0, 38.0, 3.1], [142.0, 60.0, 1.6], [160.0, 47.0, 2.4]];
    // Joint z-scores with trace length in log space, population std.
    let rows: Vec<[f64; 3]> = obs.iter().chain(&gen).map(|r| [r[0], r[1], r[2].ln()]).collect();
    let mut z = rows.clone();
    for c in 0..3 {
        let m = rows.iter().map(|r| r[c]).sum::<f64>() / 6.0;
        let s = (rows.iter().map(|r| (r[c] - m).powi(2)).sum::<f64>() / 6.0).sqrt();
        for r in z.iter_mut() {
            r[c] = (r[c] - m) / s;
        }
    }
    let labels = vec![false, false, false, true, true, true];
    let f_obs = distance_f(&z, &labels);
    let mut all = Vec::new();
    permutations(&mut labels.clone(), 0, &mut all);
    assert_eq!(all.len(), 720);
    let hits = all.iter().filter(|l| distance_f(&z, l) >= f_obs - 1e-9).count();
    let oracle_p = hits as f64 / 720.0;

    let r = permanova(&set_of(&obs), &set_of(&gen), 719, 5).unwrap();
    assert!((r.f - f_obs).abs() < 1e-9 * f_obs.max(1.0), "{} vs {f_obs}", r.f);
    assert!((r.p - oracle_p).abs() <= 0.01, "{} vs {oracle_p}", r.p);
}

#[test]
fn permanova_separated_groups_hit_the_floor() {
    let a = correlated_set(&CorrelatedSpec::reference(), 30, 1).unwrap();
    let mut spec = CorrelatedSpec::reference();
    spec.mean[1] += 5.0 * spec.std[1];
    spec.mean[0] += 5.0 * spec.std[0];
    let b = correlated_set(&spec, 30, 2).unwrap();
    let r = permanova(&a, &b, 199, 3).unwrap();
    assert_eq!(r.p, 1.0 / 200.0);
}

#[test]
fn correlation_perturbation_closed_form() {
    let m1 = [[1.0, -0.4, 0.1], [-0.4, 1.0, 0.2], [0.1, 0.2, 1.0]];
    let mut m2 = m1;
    m2[0][2] += 0.3;
    m2[2][0] += 0.3;
    assert!((frobenius_diff(&m1, &m2) - 0.3 * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn monte_carlo_erases_the_oernlia_dip_correlation() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/table1/catalog.json");
    let cat = fracgen_core::load_catalog(&path).unwrap();
    let obs = &cat.get("oernlia_1").unwrap().set;
    let model = MonteCarloModel { fits: MarginalFits::fit_default(obs).unwrap(), seed: 77 };
    let gen = mc_generate(&model, 10_000).unwrap();
    let rep = evaluate(obs, &gen, &EvalConfig::default()).unwrap();
    let m = &rep.multivariate;
    assert!(m.pearson_dipdir_dipangle_generated.abs() < 0.1, "{}", m.pearson_dipdir_dipangle_generated);
    assert!((m.pearson_dipdir_dipangle_observed + 0.69).abs() <= 0.02);
    assert!(m.frobenius_diff >= 0.69 * 2f64.sqrt() * 0.8, "{}", m.frobenius_diff);
}
