//! Discontinuity records, sets, CSV ingestion and summary statistics.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The three parameters carried by every record, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    DipDirection,
    DipAngle,
    TraceLength,
}

impl Parameter {
    pub const ALL: [Parameter; 3] = [
        Parameter::DipDirection,
        Parameter::DipAngle,
        Parameter::TraceLength,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::DipDirection => "dip_direction",
            Parameter::DipAngle => "dip_angle",
            Parameter::TraceLength => "trace_length",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error("dip direction {0} is not finite")]
    NonFiniteDipDirection(f64),
    #[error("dip direction {0} outside [0, 360)")]
    DipDirectionOutOfRange(f64),
    #[error("dip angle {0} outside [0, 90]")]
    DipAngleOutOfRange(f64),
    #[error("trace length {0} must be positive and finite")]
    NonPositiveTraceLength(f64),
}

/// Reduce any finite angle into `[0, 360)`.
pub fn normalize_dip_direction(x: f64) -> f64 {
    let r = x.rem_euclid(360.0);
    // rem_euclid of a tiny negative value rounds up to exactly 360
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// One discontinuity. Dip direction is stored reduced into `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscontinuityRecord {
    pub dip_direction: f64,
    pub dip_angle: f64,
    pub trace_length: f64,
}

impl DiscontinuityRecord {
    /// Validates the record, reducing the dip direction modulo 360.
    pub fn new(dip_direction: f64, dip_angle: f64, trace_length: f64) -> Result<Self, RecordError> {
        if !dip_direction.is_finite() {
            return Err(RecordError::NonFiniteDipDirection(dip_direction));
        }
        if !(0.0..=90.0).contains(&dip_angle) {
            return Err(RecordError::DipAngleOutOfRange(dip_angle));
        }
        if !(trace_length > 0.0 && trace_length.is_finite()) {
            return Err(RecordError::NonPositiveTraceLength(trace_length));
        }
        Ok(Self {
            dip_direction: normalize_dip_direction(dip_direction),
            dip_angle,
            trace_length,
        })
    }

    pub fn get(&self, parameter: Parameter) -> f64 {
        match parameter {
            Parameter::DipDirection => self.dip_direction,
            Parameter::DipAngle => self.dip_angle,
            Parameter::TraceLength => self.trace_length,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.dip_direction, self.dip_angle, self.trace_length]
    }

    fn check(&self) -> Result<(), RecordError> {
        if !(0.0..360.0).contains(&self.dip_direction) {
            return Err(RecordError::DipDirectionOutOfRange(self.dip_direction));
        }
        Self::new(self.dip_direction, self.dip_angle, self.trace_length).map(|_| ())
    }
}

/// Where a set came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Observed,
    Generated { engine: String, seed: u64 },
}

#[derive(Debug, Error)]
pub enum SetError {
    #[error("a discontinuity set must contain at least one record")]
    Empty,
    #[error("record {index}: {source}")]
    InvalidRecord {
        index: usize,
        #[source]
        source: RecordError,
    },
}

/// A named, non-empty collection of valid records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSet")]
pub struct DiscontinuitySet {
    pub name: String,
    pub location: String,
    pub group_id: u32,
    records: Vec<DiscontinuityRecord>,
    pub source: Source,
}

impl DiscontinuitySet {
    pub fn new(
        name: impl Into<String>,
        records: Vec<DiscontinuityRecord>,
        source: Source,
    ) -> Result<Self, SetError> {
        if records.is_empty() {
            return Err(SetError::Empty);
        }
        for (index, r) in records.iter().enumerate() {
            r.check().map_err(|source| SetError::InvalidRecord { index, source })?;
        }
        Ok(Self {
            name: name.into(),
            location: String::new(),
            group_id: 0,
            records,
            source,
        })
    }

    pub fn with_location(mut self, location: impl Into<String>, group_id: u32) -> Self {
        self.location = location.into();
        self.group_id = group_id;
        self
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }

    pub fn records(&self) -> &[DiscontinuityRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Always false; sets are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn column(&self, parameter: Parameter) -> Vec<f64> {
        self.records.iter().map(|r| r.get(parameter)).collect()
    }

    /// Columns in canonical order with trace length replaced by its natural log.
    pub fn log_trace_columns(&self) -> [Vec<f64>; 3] {
        [
            self.column(Parameter::DipDirection),
            self.column(Parameter::DipAngle),
            self.records.iter().map(|r| r.trace_length.ln()).collect(),
        ]
    }
}

#[derive(Deserialize)]
struct RawSet {
    name: String,
    location: String,
    group_id: u32,
    records: Vec<DiscontinuityRecord>,
    source: Source,
}

impl TryFrom<RawSet> for DiscontinuitySet {
    type Error = SetError;

    fn try_from(raw: RawSet) -> Result<Self, SetError> {
        Ok(DiscontinuitySet::new(raw.name, raw.records, raw.source)?
            .with_location(raw.location, raw.group_id))
    }
}

/// Header names for the three parameter columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub dip_direction: String,
    pub dip_angle: String,
    pub trace_length: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            dip_direction: "dip_direction".into(),
            dip_angle: "dip_angle".into(),
            trace_length: "trace_length".into(),
        }
    }
}

impl ColumnMap {
    fn name(&self, parameter: Parameter) -> &str {
        match parameter {
            Parameter::DipDirection => &self.dip_direction,
            Parameter::DipAngle => &self.dip_angle,
            Parameter::TraceLength => &self.trace_length,
        }
    }
}

/// Errors from CSV ingestion. Row numbers are 1-based data rows (the header is row 0).
#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse {value:?} as a number")]
    UnparseableCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: {reason}")]
    InvariantViolation { row: usize, reason: RecordError },
    #[error("file contains no data rows")]
    EmptyFile,
}

/// Parse a discontinuity CSV. The set is named after the file stem.
pub fn parse_csv(path: &Path, columns: &ColumnMap) -> Result<DiscontinuitySet, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv_reader(file, &name, columns)
}

/// Parse discontinuity CSV text from any reader.
pub fn parse_csv_reader<R: Read>(
    reader: R,
    name: &str,
    columns: &ColumnMap,
) -> Result<DiscontinuitySet, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(DataError::EmptyFile);
    }
    let mut idx = [0usize; 3];
    for p in Parameter::ALL {
        let wanted = columns.name(p);
        idx[p.index()] = headers
            .iter()
            .position(|h| h == wanted)
            .ok_or_else(|| DataError::MissingColumn(wanted.to_string()))?;
    }

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let mut vals = [0.0f64; 3];
        for p in Parameter::ALL {
            let cell = row.get(idx[p.index()]).unwrap_or("");
            vals[p.index()] = cell.parse::<f64>().map_err(|_| DataError::UnparseableCell {
                row: row_no,
                column: columns.name(p).to_string(),
                value: cell.to_string(),
            })?;
        }
        let rec = DiscontinuityRecord::new(vals[0], vals[1], vals[2])
            .map_err(|reason| DataError::InvariantViolation { row: row_no, reason })?;
        records.push(rec);
    }
    if records.is_empty() {
        return Err(DataError::EmptyFile);
    }
    Ok(DiscontinuitySet::new(name, records, Source::Observed).expect("records validated above"))
}

/// Write a set in the default column schema. Values use shortest round-trip formatting,
/// so parsing the output reproduces the set exactly.
pub fn write_csv<W: Write>(set: &DiscontinuitySet, writer: W) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(Parameter::ALL.map(Parameter::name))?;
    for r in set.records() {
        wtr.write_record([
            r.dip_direction.to_string(),
            r.dip_angle.to_string(),
            r.trace_length.to_string(),
        ])?;
    }
    wtr.flush().map_err(|source| DataError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

pub fn write_csv_file(set: &DiscontinuitySet, path: &Path) -> Result<(), DataError> {
    let file = std::fs::File::create(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv(set, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub mean: f64,
    /// Population standard deviation (denominator `n`).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl ParamSummary {
    /// Values are summed in sorted order so the result does not depend on input order.
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = sorted.iter().map(|x| (x - mean) * (x - mean)).collect();
        dev.sort_by(f64::total_cmp);
        let var = dev.iter().sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            count: sorted.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub dip_direction: ParamSummary,
    pub dip_angle: ParamSummary,
    pub trace_length: ParamSummary,
}

impl SetSummary {
    pub fn get(&self, p: Parameter) -> &ParamSummary {
        match p {
            Parameter::DipDirection => &self.dip_direction,
            Parameter::DipAngle => &self.dip_angle,
            Parameter::TraceLength => &self.trace_length,
        }
    }
}

pub fn summary_stats(set: &DiscontinuitySet) -> SetSummary {
    SetSummary {
        dip_direction: ParamSummary::of(&set.column(Parameter::DipDirection)),
        dip_angle: ParamSummary::of(&set.column(Parameter::DipAngle)),
        trace_length: ParamSummary::of(&set.column(Parameter::TraceLength)),
    }
}
