//! Argument definitions and the handler behind each subcommand.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fracgen_core::data::{parse_csv, write_csv_file, ColumnMap};
use fracgen_core::generators::{load_external, ExternalSampleSource, GenerationSidecar, MarginalFits};
use fracgen_core::metrics::{evaluate, EvalConfig};
use fracgen_core::rng::RNG_ALGORITHM;
use fracgen_core::{DiscontinuitySet, Family, MonteCarloModel, Parameter, SmoothedBootstrapModel};

use crate::compare::run_compare;
use crate::config::{EngineKind, EngineOverrides, EvaluationSettings, RunConfig, SizePolicy};
use crate::engines::{generate, train, TrainedModel};
use crate::error::{CliError, EXIT_OK};
use crate::figures::write_figures;

#[derive(Debug, Parser)]
#[command(name = "fracgen", version, about = "Generate and score synthetic rock-discontinuity sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a marginal distribution to each parameter of a CSV table.
    Fit(FitArgs),
    /// Fit or train one engine and save the model as JSON.
    Train(TrainArgs),
    /// Sample from a saved model, a fit file, or a reference table.
    Generate(GenerateArgs),
    /// Score a generated table against an observed one.
    Evaluate(EvaluateArgs),
    /// Run every engine on every catalog dataset and write a report bundle.
    Compare(CompareArgs),
    /// Render histograms, boxplots and the dip scatter for one or two tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ColumnArgs {
    /// Header of the dip-direction column.
    #[arg(long, default_value = "dip_direction")]
    pub dip_direction_col: String,
    /// Header of the dip-angle column.
    #[arg(long, default_value = "dip_angle")]
    pub dip_angle_col: String,
    /// Header of the trace-length column.
    #[arg(long, default_value = "trace_length")]
    pub trace_length_col: String,
}

impl ColumnArgs {
    fn map(&self) -> ColumnMap {
        ColumnMap {
            dip_direction: self.dip_direction_col.clone(),
            dip_angle: self.dip_angle_col.clone(),
            trace_length: self.trace_length_col.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for `<parameter>.json` and the combined `fits.json`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Force a family, e.g. `trace_length=lognormal`. Repeatable.
    #[arg(long = "family", value_parser = parse_forced_family)]
    pub families: Vec<(Parameter, Family)>,
    /// Candidate families for parameters without a forced family.
    #[arg(long, value_delimiter = ',', default_values_t = Family::ALL.to_vec(), value_parser = parse_family)]
    pub candidates: Vec<Family>,
    #[command(flatten)]
    pub columns: ColumnArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub engine: EngineKind,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Model JSON to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Engine overrides as JSON (same shape as `overrides` in a run config).
    #[arg(long)]
    pub overrides: Option<PathBuf>,
    /// Override the training epochs of a neural engine.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[command(flatten)]
    pub columns: ColumnArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// A model written by `train`.
    #[arg(long, conflicts_with_all = ["engine", "fits", "reference"])]
    pub model: Option<PathBuf>,
    /// Engine to build on the fly: `monte_carlo` (needs --fits) or `bootstrap` (needs --reference).
    #[arg(long, value_enum)]
    pub engine: Option<EngineKind>,
    /// Combined fit file written by `fit`.
    #[arg(long)]
    pub fits: Option<PathBuf>,
    /// Reference table for the bootstrap engine.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(short = 'n', long = "n", value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    /// CSV to write; the sidecar goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub observed: PathBuf,
    #[arg(long)]
    pub generated: PathBuf,
    /// Engine tag recorded for the generated table.
    #[arg(long, default_value = "external")]
    pub engine: String,
    /// Also test each generated column against these fits.
    #[arg(long)]
    pub fits: Option<PathBuf>,
    #[arg(long, default_value_t = EvalConfig::default().chi2_bins)]
    pub chi2_bins: usize,
    #[arg(long, default_value_t = EvalConfig::default().permutations)]
    pub permutations: usize,
    #[arg(long, default_value_t = EvalConfig::default().projections)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report JSON to write; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Run configuration JSON. Flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; every pair seed derives from it.
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub engines: Option<Vec<EngineKind>>,
    /// Generate this many records per pair instead of the observed count.
    #[arg(short = 'n', long = "n", value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub permutations: Option<usize>,
    /// Directory of `<dataset>.csv` files for the external engine.
    #[arg(long)]
    pub external_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub observed: PathBuf,
    #[arg(long)]
    pub generated: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = EvaluationSettings::default().histogram_bins)]
    pub bins: usize,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
}

fn parse_forced_family(s: &str) -> Result<(Parameter, Family), String> {
    let (p, f) = s.split_once('=').ok_or_else(|| format!("expected PARAMETER=FAMILY, got `{s}`"))?;
    let p = Parameter::from_name(p.trim()).ok_or_else(|| format!("unknown parameter `{p}`"))?;
    Ok((p, f.trim().parse()?))
}

fn read_set(path: &Path, columns: &ColumnMap) -> Result<DiscontinuitySet, CliError> {
    if !path.is_file() {
        return Err(CliError::Validation(format!("{}: file not found", path.display())));
    }
    parse_csv(path, columns).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Runtime(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable value") + "\n"
}

pub fn cmd_fit(args: &FitArgs) -> Result<MarginalFits, CliError> {
    let set = read_set(&args.input, &args.columns.map())?;
    let fits = MarginalFits::fit(&set, &args.candidates, &args.families).map_err(CliError::runtime)?;
    for p in Parameter::ALL {
        write_text(&args.out.join(format!("{p}.json")), &to_json(fits.get(p)))?;
    }
    write_text(&args.out.join("fits.json"), &to_json(&fits))?;
    for p in Parameter::ALL {
        println!("{p}: {}", fits.get(p).family);
    }
    Ok(fits)
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainedModel, CliError> {
    let set = read_set(&args.input, &args.columns.map())?;
    let mut overrides: EngineOverrides = match &args.overrides {
        Some(p) => read_json(p)?,
        None => EngineOverrides::default(),
    };
    if let Some(e) = args.epochs {
        overrides.gan.epochs = e;
        overrides.ddpm.epochs = e;
    }
    let trained = train(args.engine, &set, &overrides, args.seed)?;
    write_text(&args.out, &to_json(&trained.model))?;
    if let Some(log) = &trained.log_csv {
        write_text(&args.out.with_extension("log.csv"), log)?;
    }
    Ok(trained.model)
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<DiscontinuitySet, CliError> {
    let n = args.n as usize;
    let model: TrainedModel = match (&args.model, args.engine) {
        (Some(path), _) => read_json(path)?,
        (None, Some(EngineKind::MonteCarlo)) => {
            let fits_path = args.fits.as_ref().ok_or_else(|| CliError::Usage("--engine monte_carlo needs --fits".into()))?;
            let fits: MarginalFits = read_json(fits_path)?;
            for p in Parameter::ALL {
                fits.get(p).validate().map_err(|e| CliError::Validation(format!("{}: {p}: {e}", fits_path.display())))?;
            }
            TrainedModel::MonteCarlo(MonteCarloModel { fits, seed: args.seed })
        }
        (None, Some(EngineKind::Bootstrap)) => {
            let r = args.reference.as_ref().ok_or_else(|| CliError::Usage("--engine bootstrap needs --reference".into()))?;
            TrainedModel::Bootstrap(SmoothedBootstrapModel::with_silverman(read_set(r, &ColumnMap::default())?, args.seed))
        }
        (None, Some(other)) => {
            return Err(CliError::Usage(format!("`{other}` cannot be built on the fly; train it first and pass --model")))
        }
        (None, None) => return Err(CliError::Usage("either --model or --engine is required".into())),
    };
    let set = generate(&model, n, args.seed).map_err(|e| CliError::Validation(format!("invalid model: {e}")))?;
    write_csv_file(&set, &args.out).map_err(CliError::runtime)?;
    let sidecar = GenerationSidecar {
        engine: model.kind().tag().into(),
        seed: args.seed,
        n,
        rng: RNG_ALGORITHM.into(),
        model: args
            .model
            .as_ref()
            .map_or(serde_json::Value::Null, |p| serde_json::Value::String(p.display().to_string())),
    };
    write_text(&sidecar_path(&args.out), &to_json(&sidecar))?;
    Ok(set)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<fracgen_core::metrics::EvaluationReport, CliError> {
    let observed = read_set(&args.observed, &ColumnMap::default())?;
    let generated = load_external(&ExternalSampleSource::new(&args.generated, args.engine.clone()))
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.generated.display())))?;
    let cfg = EvalConfig {
        chi2_bins: args.chi2_bins,
        permutations: args.permutations,
        projections: args.projections,
        seed: args.seed,
        reference_fits: args.fits.as_deref().map(read_json).transpose()?,
    };
    let report = evaluate(&observed, &generated, &cfg).map_err(|e| CliError::Validation(e.to_string()))?;
    match &args.out {
        Some(p) => write_text(p, &to_json(&report))?,
        None => print!("{}", to_json(&report)),
    }
    Ok(report)
}

/// Build the effective run configuration from the optional file and the flags.
pub fn compare_config(args: &CompareArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match (&args.config, &args.catalog) {
        (Some(path), _) => RunConfig::from_file(path)?,
        (None, Some(catalog)) => RunConfig::new(catalog.clone(), "compare-output", args.seed),
        (None, None) => return Err(CliError::Usage("compare needs --config or --catalog".into())),
    };
    cfg.seed = Some(args.seed);
    if let Some(c) = &args.catalog {
        cfg.catalog = c.clone();
    }
    if let Some(e) = &args.engines {
        cfg.engines = e.clone();
    }
    if let Some(n) = args.n {
        cfg.size = SizePolicy::Fixed { n: n as usize };
    }
    if let Some(o) = &args.out {
        cfg.output = o.clone();
    }
    if let Some(p) = args.permutations {
        cfg.evaluation.permutations = p;
    }
    if let Some(d) = &args.external_dir {
        cfg.overrides.external.dir = Some(d.clone());
    }
    Ok(cfg)
}

pub fn cmd_report(args: &ReportArgs) -> Result<Vec<String>, CliError> {
    let observed = read_set(&args.observed, &ColumnMap::default())?;
    let generated = args.generated.as_deref().map(|p| read_set(p, &ColumnMap::default())).transpose()?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Runtime(format!("{}: {e}", args.out.display())))?;
    write_figures(&args.out, &observed, generated.as_ref(), args.bins)
}

/// Dispatch a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a).map(|_| EXIT_OK),
        Command::Train(a) => cmd_train(a).map(|_| EXIT_OK),
        Command::Generate(a) => cmd_generate(a).map(|_| EXIT_OK),
        Command::Evaluate(a) => cmd_evaluate(a).map(|_| EXIT_OK),
        Command::Compare(a) => compare_config(a).and_then(|c| run_compare(&c)).map(|o| o.exit_code()),
        Command::Report(a) => cmd_report(a).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
