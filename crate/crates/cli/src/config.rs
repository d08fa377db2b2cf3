//! Run configuration for `compare`, read from JSON and patched by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fracgen_core::ddpm::DdpmTrainConfig;
use fracgen_core::gan::GanTrainConfig;
use fracgen_core::metrics::EvalConfig;
use fracgen_core::{Family, Parameter};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    #[value(name = "monte_carlo")]
    MonteCarlo,
    Bootstrap,
    Gan,
    Ddpm,
    External,
}

impl EngineKind {
    /// The four built-in engines, in report order.
    pub const BUILTIN: [EngineKind; 4] = [EngineKind::MonteCarlo, EngineKind::Bootstrap, EngineKind::Gan, EngineKind::Ddpm];

    pub fn tag(self) -> &'static str {
        match self {
            EngineKind::MonteCarlo => "monte_carlo",
            EngineKind::Bootstrap => "bootstrap",
            EngineKind::Gan => "gan",
            EngineKind::Ddpm => "ddpm",
            EngineKind::External => "external",
        }
    }

    pub fn is_neural(self) -> bool {
        matches!(self, EngineKind::Gan | EngineKind::Ddpm)
    }
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// How many records each engine generates per dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SizePolicy {
    #[default]
    MatchObserved,
    Fixed { n: usize },
}

impl SizePolicy {
    pub fn size_for(self, observed: usize) -> usize {
        match self {
            SizePolicy::MatchObserved => observed,
            SizePolicy::Fixed { n } => n,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloOverrides {
    /// Parameter name → forced family. Unlisted parameters use the default
    /// families (normal orientations, lognormal trace length).
    pub families: BTreeMap<String, Family>,
}

impl MonteCarloOverrides {
    pub fn forced(&self) -> Result<Vec<(Parameter, Family)>, CliError> {
        self.families
            .iter()
            .map(|(name, &f)| {
                Parameter::from_name(name)
                    .map(|p| (p, f))
                    .ok_or_else(|| CliError::Validation(format!("unknown parameter `{name}` in family overrides")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapOverrides {
    /// Jitter bandwidths (degrees, degrees, ln metres). Silverman's rule when absent.
    pub bandwidth: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExternalOverrides {
    /// Directory holding `<dataset>.csv` sample files.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineOverrides {
    pub monte_carlo: MonteCarloOverrides,
    pub bootstrap: BootstrapOverrides,
    pub gan: GanTrainConfig,
    pub ddpm: DdpmTrainConfig,
    pub external: ExternalOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    pub chi2_bins: usize,
    pub permutations: usize,
    pub projections: usize,
    pub histogram_bins: usize,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        let e = EvalConfig::default();
        Self {
            chi2_bins: e.chi2_bins,
            permutations: e.permutations,
            projections: e.projections,
            histogram_bins: 20,
        }
    }
}

impl EvaluationSettings {
    pub fn eval_config(&self, seed: u64) -> EvalConfig {
        EvalConfig {
            chi2_bins: self.chi2_bins,
            permutations: self.permutations,
            projections: self.projections,
            seed,
            reference_fits: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Relative paths in a config file resolve against the file's directory.
    pub catalog: PathBuf,
    #[serde(default = "default_engines")]
    pub engines: Vec<EngineKind>,
    #[serde(default)]
    pub overrides: EngineOverrides,
    #[serde(default)]
    pub size: SizePolicy,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub evaluation: EvaluationSettings,
}

fn default_engines() -> Vec<EngineKind> {
    EngineKind::BUILTIN.to_vec()
}

fn default_output() -> PathBuf {
    PathBuf::from("compare-output")
}

impl RunConfig {
    pub fn new(catalog: impl Into<PathBuf>, output: impl Into<PathBuf>, seed: u64) -> Self {
        Self {
            catalog: catalog.into(),
            engines: default_engines(),
            overrides: EngineOverrides::default(),
            size: SizePolicy::default(),
            seed: Some(seed),
            output: output.into(),
            evaluation: EvaluationSettings::default(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.catalog);
        resolve(&mut cfg.output);
        if let Some(dir) = cfg.overrides.external.dir.as_mut() {
            resolve(dir);
        }
        Ok(cfg)
    }

    pub fn master_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage("a master seed is required (--seed or `seed` in the config)".into()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.master_seed()?;
        if self.engines.is_empty() {
            return Err(CliError::Validation("at least one engine must be selected".into()));
        }
        let mut seen = self.engines.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.engines.len() {
            return Err(CliError::Validation("an engine is listed more than once".into()));
        }
        if let SizePolicy::Fixed { n: 0 } = self.size {
            return Err(CliError::Validation("fixed generation size must be at least 1".into()));
        }
        if self.engines.contains(&EngineKind::External) && self.overrides.external.dir.is_none() {
            return Err(CliError::Validation("the external engine needs `overrides.external.dir`".into()));
        }
        if let Some(h) = self.overrides.bootstrap.bandwidth {
            if !h.iter().all(|&v| v > 0.0 && v.is_finite()) {
                return Err(CliError::Validation("bootstrap bandwidths must be positive and finite".into()));
            }
        }
        self.overrides.monte_carlo.forced()?;
        self.overrides.gan.validate().map_err(|e| CliError::Validation(format!("gan overrides: {e}")))?;
        self.overrides.ddpm.validate().map_err(|e| CliError::Validation(format!("ddpm overrides: {e}")))?;
        Ok(())
    }
}
