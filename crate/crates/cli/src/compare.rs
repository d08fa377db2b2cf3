//! Dataset × engine comparison runs.
//!
//! Layout of a bundle:
//!
//! ```text
//! <output>/run.json                      resolved settings (no output path)
//! <output>/pairs.json                    status of every pair, in run order
//! <output>/summary.csv                   one row per pair, metrics and per-dataset ranks
//! <output>/<dataset>/<engine>/report.json
//! <output>/<dataset>/<engine>/generated.csv (+ generated.json sidecar)
//! <output>/<dataset>/<engine>/model.json, training_log.csv
//! <output>/<dataset>/<engine>/*.svg, *.csv figures and figure data
//! ```

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use fracgen_core::catalog::CatalogEntry;
use fracgen_core::generators::{load_external, ExternalSampleSource, GenerationSidecar};
use fracgen_core::metrics::{evaluate, EvaluationReport};
use fracgen_core::rng::{derive_seed, RNG_ALGORITHM};
use fracgen_core::{load_catalog, Scenario};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EngineKind, RunConfig};
use crate::engines::{generate, generation_seed, train, TrainedModel};
use crate::error::{CliError, EXIT_FAILURE, EXIT_OK};
use crate::figures::write_figures;
use crate::summary::summary_csv;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStatus {
    pub dataset: String,
    pub scenario: Scenario,
    pub engine: EngineKind,
    pub seed: u64,
    /// `None` on success.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PairOutcome {
    pub status: PairStatus,
    pub report: Option<EvaluationReport>,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub output: PathBuf,
    pub pairs: Vec<PairOutcome>,
}

impl CompareOutcome {
    pub fn failures(&self) -> usize {
        self.pairs.iter().filter(|p| p.report.is_none()).count()
    }

    /// Non-zero only when no pair produced a report.
    pub fn exit_code(&self) -> i32 {
        if !self.pairs.is_empty() && self.failures() == self.pairs.len() {
            EXIT_FAILURE
        } else {
            EXIT_OK
        }
    }

    pub fn report(&self, dataset: &str, engine: EngineKind) -> Option<&EvaluationReport> {
        self.pairs
            .iter()
            .find(|p| p.status.dataset == dataset && p.status.engine == engine)
            .and_then(|p| p.report.as_ref())
    }
}

/// Settings echoed into the bundle; the output path is left out so that
/// bundles written to different directories stay byte-identical.
#[derive(Serialize)]
struct RunRecord<'a> {
    catalog: &'a Path,
    engines: &'a [EngineKind],
    seed: u64,
    size: &'a crate::config::SizePolicy,
    evaluation: &'a crate::config::EvaluationSettings,
    overrides: &'a crate::config::EngineOverrides,
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable value") + "\n"
}

fn sidecar_model(model: &TrainedModel) -> serde_json::Value {
    match model {
        TrainedModel::MonteCarlo(m) => serde_json::json!({ "fits": m.fits }),
        TrainedModel::Bootstrap(m) => serde_json::json!({
            "bandwidth": m.bandwidth,
            "reference": m.reference.name,
            "reference_size": m.reference.len(),
        }),
        TrainedModel::Gan(m) => serde_json::json!({ "config": m.config, "train_seed": m.seed }),
        TrainedModel::Ddpm(m) => serde_json::json!({ "config": m.config, "train_seed": m.seed }),
    }
}

fn run_pair(cfg: &RunConfig, entry: &CatalogEntry, engine: EngineKind, seed: u64, dir: &Path) -> Result<EvaluationReport, String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let observed = &entry.set;
    let generated = if engine == EngineKind::External {
        let base = cfg.overrides.external.dir.as_ref().ok_or("external engine has no sample directory")?;
        let source = ExternalSampleSource::new(base.join(format!("{}.csv", entry.manifest.name)), engine.tag());
        load_external(&source).map_err(|e| e.to_string())?
    } else {
        let trained = train(engine, observed, &cfg.overrides, seed).map_err(|e| e.to_string())?;
        write_file(&dir.join("model.json"), &to_json(&trained.model))?;
        if let Some(log) = &trained.log_csv {
            write_file(&dir.join("training_log.csv"), log)?;
        }
        let n = cfg.size.size_for(observed.len());
        let gen_seed = generation_seed(engine, seed);
        let set = generate(&trained.model, n, gen_seed).map_err(|e| e.to_string())?;
        let sidecar = GenerationSidecar {
            engine: engine.tag().into(),
            seed: gen_seed,
            n,
            rng: RNG_ALGORITHM.into(),
            model: sidecar_model(&trained.model),
        };
        write_file(&dir.join("generated.json"), &to_json(&sidecar))?;
        set
    };
    let mut csv = Vec::new();
    fracgen_core::data::write_csv(&generated, &mut csv).map_err(|e| e.to_string())?;
    write_file(&dir.join("generated.csv"), std::str::from_utf8(&csv).expect("CSV output is UTF-8"))?;

    let report = evaluate(observed, &generated, &cfg.evaluation.eval_config(seed)).map_err(|e| e.to_string())?;
    write_file(&dir.join("report.json"), &to_json(&report))?;
    write_figures(dir, observed, Some(&generated), cfg.evaluation.histogram_bins).map_err(|e| e.to_string())?;
    Ok(report)
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panicked: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panicked: {s}")
    } else {
        "panicked".into()
    }
}

/// Run every dataset × engine pair. Pair failures (including panics) are
/// recorded in the bundle and do not stop the other pairs.
pub fn run_compare(cfg: &RunConfig) -> Result<CompareOutcome, CliError> {
    cfg.validate()?;
    let master = cfg.master_seed()?;
    let catalog = load_catalog(&cfg.catalog).map_err(|e| CliError::Validation(e.to_string()))?;
    std::fs::create_dir_all(&cfg.output)
        .map_err(|e| CliError::Validation(format!("cannot create output directory {}: {e}", cfg.output.display())))?;

    let jobs: Vec<(&CatalogEntry, EngineKind)> = catalog
        .entries
        .iter()
        .flat_map(|e| cfg.engines.iter().map(move |&k| (e, k)))
        .collect();
    let total = jobs.len();
    let pairs: Vec<PairOutcome> = jobs
        .par_iter()
        .map(|&(entry, engine)| {
            let name = &entry.manifest.name;
            let seed = derive_seed(master, name, engine.tag());
            let dir = cfg.output.join(name).join(engine.tag());
            let start = Instant::now();
            let result = catch_unwind(AssertUnwindSafe(|| run_pair(cfg, entry, engine, seed, &dir)))
                .unwrap_or_else(|p| Err(panic_message(p)));
            match &result {
                Ok(_) => eprintln!("{name}/{engine}: done in {:.1?}", start.elapsed()),
                Err(e) => eprintln!("{name}/{engine}: FAILED: {e}"),
            }
            PairOutcome {
                status: PairStatus {
                    dataset: name.clone(),
                    scenario: entry.manifest.scenario,
                    engine,
                    seed,
                    error: result.as_ref().err().cloned(),
                },
                report: result.ok(),
            }
        })
        .collect();

    let outcome = CompareOutcome { output: cfg.output.clone(), pairs };
    let statuses: Vec<&PairStatus> = outcome.pairs.iter().map(|p| &p.status).collect();
    let record = RunRecord {
        catalog: &cfg.catalog,
        engines: &cfg.engines,
        seed: master,
        size: &cfg.size,
        evaluation: &cfg.evaluation,
        overrides: &cfg.overrides,
    };
    let write = |name: &str, text: String| write_file(&cfg.output.join(name), &text).map_err(CliError::Runtime);
    write("run.json", to_json(&record))?;
    write("pairs.json", to_json(&statuses))?;
    write("summary.csv", summary_csv(&outcome.pairs))?;
    eprintln!("{} of {total} pairs succeeded; bundle in {}", total - outcome.failures(), cfg.output.display());
    Ok(outcome)
}
