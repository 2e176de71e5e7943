//! Project datasets: CSV ingestion, schema checks and cleaning.
//!
//! A CSV has a header row and one project per row. Every column other than
//! the effort column and the schema's excluded columns becomes a feature,
//! and therefore a terminal. Blank, `?` and `NA` cells count as missing;
//! they are accepted only in rows the schema flags as incomplete and are
//! removed later by [`drop_incomplete`].
//!
//! Missing cells are stored as NaN until cleaning.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::genome::{FunctionSymbol, PrimitiveSet};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Column layout and known defects of a dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub name: String,
    pub effort_column: String,
    /// Candidate names of the size measure (LOC or function points) used
    /// by the power-law baseline; the first one present wins.
    pub size_columns: Vec<String>,
    /// Identifier columns that are neither features nor targets.
    pub excluded_columns: Vec<String>,
    /// 1-based data rows known to be incomplete.
    pub flagged_rows: Vec<usize>,
    /// Row count of the complete published dataset.
    pub expected_rows: Option<usize>,
    /// Number of projects the reference study reports for this dataset.
    pub reported_points: Option<usize>,
}

/// Names of the six bundled benchmark schemas.
pub const BENCHMARKS: [&str; 6] = [
    "albrecht",
    "bailey_basili",
    "desharnais",
    "heiat",
    "kemerer",
    "miyazaki",
];

impl DatasetSchema {
    /// First of the schema's size columns present in `dataset`.
    pub fn resolve_size_column(&self, dataset: &Dataset) -> Option<String> {
        self.size_columns
            .iter()
            .find_map(|c| dataset.feature_index(&sanitize_name(c)))
            .map(|i| dataset.feature_names()[i].clone())
    }

    /// Schema for an arbitrary CSV: every non-effort column is a feature.
    pub fn custom(name: impl Into<String>, effort_column: impl Into<String>) -> Self {
        DatasetSchema {
            name: name.into(),
            effort_column: effort_column.into(),
            size_columns: Vec::new(),
            excluded_columns: Vec::new(),
            flagged_rows: Vec::new(),
            expected_rows: None,
            reported_points: None,
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let s = |v: &str| v.to_string();
        let schema = match name {
            "albrecht" => DatasetSchema {
                name: s("albrecht"),
                effort_column: s("Effort"),
                size_columns: vec![s("AdjFP")],
                excluded_columns: vec![],
                flagged_rows: vec![3, 6, 7, 22, 24],
                expected_rows: Some(24),
                reported_points: Some(24),
            },
            "bailey_basili" => DatasetSchema {
                name: s("bailey_basili"),
                effort_column: s("Effort"),
                size_columns: vec![s("KLOC"), s("DL")],
                excluded_columns: vec![s("ID")],
                flagged_rows: vec![],
                expected_rows: Some(18),
                reported_points: Some(18),
            },
            "desharnais" => DatasetSchema {
                name: s("desharnais"),
                effort_column: s("Effort"),
                size_columns: vec![s("PointsAjust"), s("PointsAdjust")],
                excluded_columns: vec![s("Project"), s("ID")],
                flagged_rows: vec![38, 44, 66, 75],
                expected_rows: Some(81),
                reported_points: Some(77),
            },
            "heiat" => DatasetSchema {
                name: s("heiat"),
                effort_column: s("Effort"),
                size_columns: vec![s("FP"), s("Size")],
                excluded_columns: vec![s("ID")],
                flagged_rows: vec![],
                expected_rows: Some(35),
                reported_points: Some(35),
            },
            "kemerer" => DatasetSchema {
                name: s("kemerer"),
                effort_column: s("EffortMM"),
                size_columns: vec![s("KSLOC")],
                excluded_columns: vec![s("ID")],
                flagged_rows: vec![],
                expected_rows: Some(15),
                reported_points: Some(15),
            },
            "miyazaki" => DatasetSchema {
                name: s("miyazaki"),
                effort_column: s("MM"),
                size_columns: vec![s("KSLOC")],
                excluded_columns: vec![s("ID")],
                flagged_rows: vec![],
                expected_rows: Some(48),
                reported_points: Some(48),
            },
            other => {
                return Err(Error::input(format!(
                    "unknown schema `{other}` (expected one of {})",
                    BENCHMARKS.join(", ")
                )))
            }
        };
        Ok(schema)
    }
}

/// One project.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case {
    /// 1-based data row in the source file.
    pub source_row: usize,
    pub features: Vec<f64>,
    pub effort: f64,
}

impl Case {
    pub fn is_complete(&self) -> bool {
        !self.effort.is_nan() && !self.features.iter().any(|v| v.is_nan())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    pub loaded_rows: usize,
    /// Source rows removed by cleaning, ascending, each listed once.
    pub dropped_rows: Vec<usize>,
    pub warnings: Vec<String>,
    pub min_max_scaled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    feature_names: Vec<String>,
    effort_name: String,
    cases: Vec<Case>,
    provenance: Provenance,
}

const MISSING: [&str; 4] = ["", "?", "NA", "na"];

/// Turns a header into a terminal-safe identifier.
fn sanitize_name(raw: &str) -> String {
    let mut name: String = raw
        .trim()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
        name.insert(0, '_');
    }
    if FunctionSymbol::from_symbol(&name).is_some() {
        name.push('_');
    }
    name
}

impl Dataset {
    /// Builds a complete dataset directly, e.g. from synthetic data.
    pub fn from_cases(
        name: impl Into<String>,
        feature_names: Vec<String>,
        effort_name: impl Into<String>,
        cases: Vec<Case>,
    ) -> Result<Self> {
        let dataset = Dataset {
            name: name.into(),
            feature_names,
            effort_name: effort_name.into(),
            provenance: Provenance {
                loaded_rows: cases.len(),
                ..Provenance::default()
            },
            cases,
        };
        for case in &dataset.cases {
            if case.features.len() != dataset.feature_names.len() {
                return Err(Error::input(format!(
                    "row {} has {} features, expected {}",
                    case.source_row,
                    case.features.len(),
                    dataset.feature_names.len()
                )));
            }
            if !case.features.iter().all(|v| v.is_finite()) {
                return Err(Error::input(format!("row {} has a non-finite feature", case.source_row)));
            }
            if !(case.effort > 0.0 && case.effort.is_finite()) {
                return Err(Error::input(format!(
                    "row {} effort {} is not a positive number",
                    case.source_row, case.effort
                )));
            }
        }
        Ok(dataset)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn effort_name(&self) -> &str {
        &self.effort_name
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn efforts(&self) -> Vec<f64> {
        self.cases.iter().map(|c| c.effort).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names
            .iter()
            .position(|f| f == name)
            .or_else(|| self.feature_names.iter().position(|f| f.eq_ignore_ascii_case(name)))
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.cases.iter().map(|c| c.features[index]).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.cases.iter().all(Case::is_complete)
    }

    pub fn ensure_complete(&self) -> Result<()> {
        match self.cases.iter().find(|c| !c.is_complete()) {
            None => Ok(()),
            Some(c) => Err(Error::input(format!(
                "dataset `{}` row {} has missing values; run drop_incomplete first",
                self.name, c.source_row
            ))),
        }
    }

    /// Terminal names for evolution: the feature columns, never the effort.
    pub fn to_primitive_terminals(&self) -> Result<Vec<String>> {
        if self.feature_names.is_empty() {
            return Err(Error::input(format!("dataset `{}` has no feature columns", self.name)));
        }
        Ok(self.feature_names.clone())
    }

    /// Features as terminals plus the full function set.
    pub fn primitive_set(&self) -> Result<PrimitiveSet> {
        PrimitiveSet::with_all_functions(self.to_primitive_terminals()?)
    }

    /// Same feature values, names and efforts, ignoring provenance.
    pub fn same_data(&self, other: &Dataset) -> bool {
        self.feature_names == other.feature_names
            && self.effort_name == other.effort_name
            && self.cases.len() == other.cases.len()
            && self
                .cases
                .iter()
                .zip(&other.cases)
                .all(|(a, b)| a.features == b.features && a.effort == b.effort)
    }

    /// Rescales each feature column to [0, 1]; constant columns become 0.
    /// Efforts are untouched.
    pub fn min_max_scaled(&self) -> Dataset {
        let mut out = self.clone();
        for j in 0..self.feature_names.len() {
            let col = self.column(j);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            for case in &mut out.cases {
                case.features[j] = if span > 0.0 { (case.features[j] - lo) / span } else { 0.0 };
            }
        }
        out.provenance.min_max_scaled = true;
        out
    }

    fn subset(&self, indices: &[usize], suffix: &str) -> Dataset {
        Dataset {
            name: format!("{}{suffix}", self.name),
            feature_names: self.feature_names.clone(),
            effort_name: self.effort_name.clone(),
            cases: indices.iter().map(|&i| self.cases[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Splits into `k` (train, test) pairs after a seeded shuffle. Every case
    /// lands in exactly one test fold.
    pub fn k_folds(&self, k: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
        if k < 2 || k > self.cases.len() {
            return Err(Error::input(format!(
                "fold count {k} must be between 2 and the number of cases ({})",
                self.cases.len()
            )));
        }
        let mut order: Vec<usize> = (0..self.cases.len()).collect();
        order.shuffle(&mut rng_from_seed(seed));
        Ok((0..k)
            .map(|fold| {
                let (test, train): (Vec<(usize, usize)>, Vec<(usize, usize)>) =
                    order.iter().copied().enumerate().partition(|(pos, _)| pos % k == fold);
                let test: Vec<usize> = test.into_iter().map(|(_, i)| i).collect();
                let train: Vec<usize> = train.into_iter().map(|(_, i)| i).collect();
                (
                    self.subset(&train, &format!("[train {}/{k}]", fold + 1)),
                    self.subset(&test, &format!("[test {}/{k}]", fold + 1)),
                )
            })
            .collect())
    }

    /// Writes the dataset as CSV: feature columns then the effort column.
    /// Values use the shortest representation that parses back exactly.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_csv_string().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_string(&self) -> String {
        let fmt = |v: f64| if v.is_nan() { String::new() } else { v.to_string() };
        let mut out = self.feature_names.join(",");
        if !out.is_empty() {
            out.push(',');
        }
        out.push_str(&self.effort_name);
        out.push('\n');
        for case in &self.cases {
            for v in &case.features {
                out.push_str(&fmt(*v));
                out.push(',');
            }
            out.push_str(&fmt(case.effort));
            out.push('\n');
        }
        out
    }
}

/// Loads a CSV without dropping any rows.
pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dataset = load_csv_from_reader(file, schema).map_err(|e| match e {
        Error::Load { message, .. } => Error::Load {
            path: path.to_owned(),
            message,
        },
        other => other,
    })?;
    dataset.provenance.source = Some(path.to_owned());
    Ok(dataset)
}

pub fn load_csv_from_reader<R: Read>(reader: R, schema: &DatasetSchema) -> Result<Dataset> {
    let err = |message: String| Error::Load {
        path: PathBuf::from("<reader>"),
        message,
    };
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = csv
        .headers()
        .map_err(|e| err(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.iter().all(String::is_empty) {
        return Err(err("empty file: no header row".into()));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .or_else(|| headers.iter().position(|h| h.eq_ignore_ascii_case(name)))
    };
    let effort_col = find(&schema.effort_column)
        .ok_or_else(|| err(format!("missing effort column `{}`", schema.effort_column)))?;
    let excluded: Vec<usize> = schema.excluded_columns.iter().filter_map(|c| find(c)).collect();
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|i| *i != effort_col && !excluded.contains(i))
        .collect();
    let mut feature_names: Vec<String> = Vec::with_capacity(feature_cols.len());
    for &c in &feature_cols {
        let name = sanitize_name(&headers[c]);
        if feature_names.contains(&name) {
            return Err(err(format!("duplicate feature column `{name}`")));
        }
        feature_names.push(name);
    }

    let mut cases = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| err(format!("row {row}: {e}")))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != headers.len() {
            return Err(err(format!(
                "row {row} has {} cells, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let flagged = schema.flagged_rows.contains(&row);
        let cell = |col: usize| -> Result<f64> {
            let raw = &record[col];
            let parsed = if MISSING.contains(&raw) { None } else { raw.parse::<f64>().ok() };
            match parsed {
                Some(v) if v.is_finite() => Ok(v),
                _ if flagged => Ok(f64::NAN),
                _ if MISSING.contains(&raw) => Err(err(format!(
                    "row {row} column `{}`: missing value in a row not flagged incomplete",
                    headers[col]
                ))),
                _ => Err(err(format!(
                    "row {row} column `{}`: `{raw}` is not a number",
                    headers[col]
                ))),
            }
        };
        let features = feature_cols.iter().map(|&c| cell(c)).collect::<Result<Vec<_>>>()?;
        let mut effort = cell(effort_col)?;
        if effort <= 0.0 {
            if flagged {
                effort = f64::NAN;
            } else {
                return Err(err(format!("row {row}: effort {effort} is not positive")));
            }
        }
        cases.push(Case {
            source_row: row,
            features,
            effort,
        });
    }
    if cases.is_empty() {
        return Err(err("no data rows".into()));
    }

    let mut warnings = Vec::new();
    if !schema.size_columns.is_empty() && !schema.size_columns.iter().any(|c| find(c).is_some()) {
        warnings.push(format!("no size column found (tried {})", schema.size_columns.join(", ")));
    }
    if let Some(expected) = schema.expected_rows {
        if expected != cases.len() {
            warnings.push(format!(
                "schema `{}` expects {expected} rows, file has {}",
                schema.name,
                cases.len()
            ));
        }
    }
    Ok(Dataset {
        name: schema.name.clone(),
        feature_names,
        effort_name: sanitize_name(&headers[effort_col]),
        provenance: Provenance {
            source: None,
            loaded_rows: cases.len(),
            dropped_rows: Vec::new(),
            warnings,
            min_max_scaled: false,
        },
        cases,
    })
}

/// Removes every row with a missing value and records it in the drop log.
pub fn drop_incomplete(dataset: &Dataset, schema: &DatasetSchema) -> Dataset {
    let mut out = dataset.clone();
    let (kept, dropped): (Vec<Case>, Vec<Case>) =
        dataset.cases.iter().cloned().partition(Case::is_complete);
    out.cases = kept;
    if dropped.is_empty() {
        return out;
    }
    out.provenance.dropped_rows.extend(dropped.iter().map(|c| c.source_row));
    out.provenance.dropped_rows.sort_unstable();
    out.provenance.dropped_rows.dedup();
    let unexpected: Vec<usize> = dropped
        .iter()
        .map(|c| c.source_row)
        .filter(|r| !schema.flagged_rows.contains(r))
        .collect();
    if !unexpected.is_empty() {
        out.provenance
            .warnings
            .push(format!("dropped rows not flagged by schema: {unexpected:?}"));
    }
    if let Some(points) = schema.reported_points {
        if points != out.cases.len() {
            out.provenance.warnings.push(format!(
                "{} usable cases after cleaning; reference reports {points}",
                out.cases.len()
            ));
        }
    }
    out
}

/// Loads and cleans in one go.
pub fn load_clean(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    Ok(drop_incomplete(&load_csv(path, schema)?, schema))
}
