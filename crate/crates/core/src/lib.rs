//! Synthetic rock-discontinuity generation and fidelity scoring.
//!
//! Observed tables of (dip direction, dip angle, trace length) are fitted or
//! learned by one of four engines, sampled, and compared against the
//! observations with a univariate and multivariate metric battery.

pub mod catalog;
pub mod data;
pub mod ddpm;
pub mod fit;
pub mod gan;
pub mod metrics;
pub mod generators;
pub mod nn;
pub mod report;
pub mod rng;
pub mod standardize;
pub mod synthetic;

pub use catalog::{load_catalog, DatasetCatalog, Scenario};
pub use data::{
    parse_csv, summary_stats, ColumnMap, DiscontinuityRecord, DiscontinuitySet, Parameter, Source,
};
pub use fit::{select_family, Family, MarginalFit};
pub use rng::SimRng;
pub use generators::{bootstrap_generate, mc_generate, MonteCarloModel, SmoothedBootstrapModel};
pub use standardize::Standardizer;
