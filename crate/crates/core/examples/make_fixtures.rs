//! Regenerates the bundled ten-dataset fixture catalog.
//!
//! Each table draws normal dip direction and dip angle with a lognormal trace
//! length. Sample means, standard deviations and Pearson coefficients match
//! the listed targets exactly before rounding to field precision (0.1° for
//! angles, 0.01 m for trace length).
//!
//! Usage: `cargo run -p fracgen-core --example make_fixtures -- data/table1`

use std::path::PathBuf;

use fracgen_core::catalog::ManifestEntry;
use fracgen_core::data::{write_csv_file, DiscontinuityRecord, DiscontinuitySet, Source};
use fracgen_core::synthetic::{exact_correlated_set, CorrelatedSpec};
use fracgen_core::Scenario;

struct Fixture {
    name: &'static str,
    location: &'static str,
    group: u32,
    count: usize,
    scenario: Scenario,
    /// Mean and std of (dip direction, dip angle, ln trace length).
    mean: [f64; 3],
    std: [f64; 3],
    /// r(dd, da), r(dd, ln tl), r(da, ln tl).
    r: [f64; 3],
}

const FIXTURES: [Fixture; 10] = [
    Fixture { name: "oernlia_1", location: "Oernlia, Norway", group: 1, count: 766, scenario: Scenario::I, mean: [150.0, 62.0, 0.9], std: [18.0, 9.0, 0.55], r: [-0.69, -0.15, 0.2] },
    Fixture { name: "laerdal_1", location: "Laerdal, Norway", group: 1, count: 562, scenario: Scenario::I, mean: [230.0, 70.0, 0.6], std: [15.0, 7.0, 0.5], r: [-0.6, -0.1, 0.15] },
    Fixture { name: "thundovd_2", location: "Thundovd, Norway", group: 2, count: 325, scenario: Scenario::I, mean: [95.0, 55.0, 1.1], std: [20.0, 10.0, 0.6], r: [-0.4, 0.1, 0.2] },
    Fixture { name: "valle_2", location: "Valle, Norway", group: 2, count: 253, scenario: Scenario::II, mean: [300.0, 48.0, 0.4], std: [22.0, 13.0, 0.7], r: [-0.22, 0.15, 0.1] },
    Fixture { name: "thundovd_1", location: "Thundovd, Norway", group: 1, count: 157, scenario: Scenario::III, mean: [200.0, 63.0, 0.8], std: [17.0, 9.0, 0.5], r: [0.35, -0.1, 0.25] },
    Fixture { name: "oernlia_3", location: "Oernlia, Norway", group: 3, count: 68, scenario: Scenario::III, mean: [40.0, 58.0, 0.5], std: [12.0, 10.0, 0.45], r: [0.12, 0.1, 0.3] },
    Fixture { name: "valle_3", location: "Valle, Norway", group: 3, count: 40, scenario: Scenario::IV, mean: [120.0, 50.0, 0.3], std: [22.0, 12.0, 0.6], r: [-0.37, -0.2, 0.2] },
    Fixture { name: "chenjiazhuang_1", location: "Chenjiazhuang, China", group: 1, count: 104, scenario: Scenario::IV, mean: [170.0, 66.0, 1.3], std: [20.0, 7.0, 0.5], r: [0.3, 0.1, 0.2] },
    Fixture { name: "chenjiazhuang_2", location: "Chenjiazhuang, China", group: 2, count: 115, scenario: Scenario::IV, mean: [260.0, 64.0, 1.0], std: [18.0, 8.0, 0.55], r: [0.0, -0.15, 0.25] },
    Fixture { name: "chenjiazhuang_3", location: "Chenjiazhuang, China", group: 3, count: 119, scenario: Scenario::IV, mean: [75.0, 60.0, 1.2], std: [16.0, 9.0, 0.5], r: [0.0, 0.1, 0.2] },
];

/// Round to `1/per_unit` resolution.
fn round_to(x: f64, per_unit: f64) -> f64 {
    (x * per_unit).round() / per_unit
}

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/table1".into()));
    std::fs::create_dir_all(&out).expect("create output directory");
    let mut manifest = Vec::new();
    for (i, f) in FIXTURES.iter().enumerate() {
        let spec = CorrelatedSpec {
            mean: f.mean,
            std: f.std,
            corr: [[1.0, f.r[0], f.r[1]], [f.r[0], 1.0, f.r[2]], [f.r[1], f.r[2], 1.0]],
        };
        let raw = exact_correlated_set(&spec, f.count, 1000 + i as u64).expect("fixture draw");
        let records = raw
            .records()
            .iter()
            .map(|r| {
                DiscontinuityRecord::new(
                    round_to(r.dip_direction, 10.0),
                    round_to(r.dip_angle, 10.0),
                    round_to(r.trace_length, 100.0).max(0.01),
                )
                .expect("rounded record stays valid")
            })
            .collect();
        let set = DiscontinuitySet::new(f.name, records, Source::Observed).expect("non-empty");
        let file = format!("{}.csv", f.name);
        write_csv_file(&set, &out.join(&file)).expect("write fixture");
        manifest.push(ManifestEntry {
            name: f.name.into(),
            location: f.location.into(),
            group: f.group,
            path: file.into(),
            count: f.count,
            scenario: f.scenario,
        });
    }
    let json = serde_json::to_string_pretty(&manifest).expect("serialize manifest");
    std::fs::write(out.join("catalog.json"), json + "\n").expect("write manifest");
    println!("wrote {} datasets to {}", manifest.len(), out.display());
}
