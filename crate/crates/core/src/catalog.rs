//! Dataset manifests: which observed sets exist, where they live, and how many
//! records each one is expected to hold.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{parse_csv, ColumnMap, DataError, DiscontinuitySet};

/// Sample-abundance × regularity quadrant a dataset belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// More samples, clear regularity.
    I,
    /// More samples, unclear regularity.
    II,
    /// Fewer samples, clear regularity.
    III,
    /// Fewer samples, unclear regularity.
    IV,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::I => "I",
            Scenario::II => "II",
            Scenario::III => "III",
            Scenario::IV => "IV",
        };
        f.write_str(s)
    }
}

/// One manifest row as it appears on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub location: String,
    pub group: u32,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    pub count: usize,
    pub scenario: Scenario,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub manifest: ManifestEntry,
    pub resolved_path: PathBuf,
    pub set: DiscontinuitySet,
}

#[derive(Debug, Clone)]
pub struct DatasetCatalog {
    pub entries: Vec<CatalogEntry>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest is not valid: {0}")]
    ManifestParseError(String),
    #[error("dataset `{0}` file is missing")]
    DatasetFileMissing(String),
    #[error("dataset `{name}`: manifest expects {expected} records, file has {actual}")]
    CountMismatch {
        name: String,
        expected: usize,
        actual: usize,
    },
    #[error("dataset `{name}`: {source}")]
    Dataset {
        name: String,
        #[source]
        source: DataError,
    },
}

impl DatasetCatalog {
    pub fn by_scenario(&self, scenario: Scenario) -> impl Iterator<Item = &CatalogEntry> {
        self.entries
            .iter()
            .filter(move |e| e.manifest.scenario == scenario)
    }

    pub fn get(&self, name: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.manifest.name == name)
    }
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, CatalogError> {
    let entries: Vec<ManifestEntry> =
        serde_json::from_str(text).map_err(|e| CatalogError::ManifestParseError(e.to_string()))?;
    let mut names = BTreeSet::new();
    for e in &entries {
        if !names.insert(e.name.as_str()) {
            return Err(CatalogError::ManifestParseError(format!(
                "duplicate dataset name `{}`",
                e.name
            )));
        }
        if e.count == 0 {
            return Err(CatalogError::ManifestParseError(format!(
                "dataset `{}` declares zero records",
                e.name
            )));
        }
    }
    Ok(entries)
}

/// Load a manifest and every dataset it references, cross-checking record counts.
pub fn load_catalog(path: &Path) -> Result<DatasetCatalog, CatalogError> {
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let manifest = parse_manifest(&text)?;
    let columns = ColumnMap::default();
    let mut entries = Vec::with_capacity(manifest.len());
    for m in manifest {
        let resolved = if m.path.is_absolute() {
            m.path.clone()
        } else {
            base.join(&m.path)
        };
        if !resolved.is_file() {
            return Err(CatalogError::DatasetFileMissing(m.name.clone()));
        }
        let set = parse_csv(&resolved, &columns).map_err(|source| CatalogError::Dataset {
            name: m.name.clone(),
            source,
        })?;
        if set.len() != m.count {
            return Err(CatalogError::CountMismatch {
                name: m.name.clone(),
                expected: m.count,
                actual: set.len(),
            });
        }
        let mut set = set.with_location(m.location.clone(), m.group);
        set.name = m.name.clone();
        entries.push(CatalogEntry {
            manifest: m,
            resolved_path: resolved,
            set,
        });
    }
    Ok(DatasetCatalog { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_serializes_as_roman_numeral() {
        let s: Scenario = serde_json::from_str("\"III\"").unwrap();
        assert_eq!(s, Scenario::III);
        assert_eq!(serde_json::to_string(&Scenario::IV).unwrap(), "\"IV\"");
        assert!(serde_json::from_str::<Scenario>("\"V\"").is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = r#"[
            {"name":"a","location":"x","group":1,"path":"a.csv","count":3,"scenario":"I"},
            {"name":"a","location":"x","group":2,"path":"b.csv","count":3,"scenario":"II"}
        ]"#;
        assert!(matches!(parse_manifest(text), Err(CatalogError::ManifestParseError(_))));
    }

    #[test]
    fn zero_count_rejected() {
        let text = r#"[{"name":"a","location":"x","group":1,"path":"a.csv","count":0,"scenario":"I"}]"#;
        assert!(matches!(parse_manifest(text), Err(CatalogError::ManifestParseError(_))));
    }

    #[test]
    fn garbage_rejected() {
        assert!(matches!(parse_manifest("{"), Err(CatalogError::ManifestParseError(_))));
        let bad_scenario = r#"[{"name":"a","location":"x","group":1,"path":"a.csv","count":1,"scenario":"VI"}]"#;
        assert!(matches!(parse_manifest(bad_scenario), Err(CatalogError::ManifestParseError(_))));
    }
}
