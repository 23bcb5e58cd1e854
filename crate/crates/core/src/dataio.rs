//! CSV ingestion, label encoding, feature scaling and the bundled fixtures.
//!
//! A dataset file holds numeric feature columns plus one label column
//! (any string). Labels are re-encoded to `0..K` in order of first
//! appearance. Cells that are empty, `?`, `NA` or `NaN` count as missing
//! and reject their row.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NhcaError, Result};
use crate::multiclass::LabeledDataset;
use crate::numerics::Matrix;
use crate::scalar::Scalar;

const IRIS_CSV: &str = include_str!("../data/iris.csv");
const WINE_CSV: &str = include_str!("../data/wine.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    None,
    #[default]
    MinMax,
    ZScore,
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scaling::None => "none",
            Scaling::MinMax => "minmax",
            Scaling::ZScore => "zscore",
        })
    }
}

impl FromStr for Scaling {
    type Err = NhcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Scaling::None),
            "minmax" => Ok(Scaling::MinMax),
            "zscore" => Ok(Scaling::ZScore),
            other => Err(NhcaError::InvalidParameter(format!("unknown scaling '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelColumn {
    Index(usize),
    Last,
}

impl FromStr for LabelColumn {
    type Err = NhcaError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("last") {
            return Ok(LabelColumn::Last);
        }
        s.parse()
            .map(LabelColumn::Index)
            .map_err(|_| NhcaError::InvalidParameter(format!("bad label column '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub label_column: LabelColumn,
    pub delimiter: u8,
    pub header: bool,
    pub scaling: Scaling,
}

impl DatasetSpec {
    /// Comma-separated, header row, label last, no scaling.
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            label_column: LabelColumn::Last,
            delimiter: b',',
            header: true,
            scaling: Scaling::None,
        }
    }
}

/// A loaded dataset plus the original label strings, indexed by code.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedDataset<T> {
    pub data: LabeledDataset<T>,
    pub class_names: Vec<String>,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "?" | "NA" | "na" | "NaN" | "nan")
}

/// Parses delimited text. Row numbers in errors are 1-based file lines;
/// column numbers are 1-based.
pub fn parse_csv<T: Scalar>(
    text: &str,
    label_column: LabelColumn,
    delimiter: u8,
    header: bool,
) -> Result<NamedDataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut width = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut codes: HashMap<String, usize> = HashMap::new();
    let mut missing = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| NhcaError::ParseError {
            row: line,
            col: 0,
            message: e.to_string(),
        })?;
        if header && i == 0 {
            continue;
        }
        if record.iter().all(str::is_empty) {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(NhcaError::ParseError {
                row: line,
                col: record.len().min(w) + 1,
                message: format!("expected {w} columns, found {}", record.len()),
            });
        }
        let label_idx = match label_column {
            LabelColumn::Last => w - 1,
            LabelColumn::Index(j) if j < w => j,
            LabelColumn::Index(j) => {
                return Err(NhcaError::InvalidParameter(format!(
                    "label column {j} out of range for {w} columns"
                )))
            }
        };
        if w < 2 {
            return Err(NhcaError::ParseError {
                row: line,
                col: 1,
                message: "need at least one feature and one label column".into(),
            });
        }
        if record.iter().any(is_missing) {
            missing.push(line);
            continue;
        }
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| NhcaError::ParseError {
                row: line,
                col: j + 1,
                message: format!("'{cell}' is not a number"),
            })?;
            values.push(T::from_f64(v).ok_or_else(|| NhcaError::ParseError {
                row: line,
                col: j + 1,
                message: format!("'{cell}' is not representable"),
            })?);
        }
        let name = &record[label_idx];
        let next = names.len();
        let code = *codes.entry(name.to_string()).or_insert_with(|| {
            names.push(name.to_string());
            next
        });
        labels.push(code);
    }
    if !missing.is_empty() {
        return Err(NhcaError::MissingValues(missing));
    }
    let Some(w) = width else {
        return Err(NhcaError::Empty("dataset file"));
    };
    if labels.is_empty() {
        return Err(NhcaError::Empty("dataset file"));
    }
    if names.len() < 2 {
        return Err(NhcaError::SingleClass);
    }
    let features = Matrix::from_vec(labels.len(), w - 1, values)?;
    Ok(NamedDataset {
        data: LabeledDataset::new(features, labels, names.len())?,
        class_names: names,
    })
}

/// Reads and parses the file named by `spec`, scaling the whole dataset
/// with `spec.scaling`. Cross-validation scales per fold instead, so
/// benchmark code loads with `Scaling::None`.
pub fn load_csv_named<T: Scalar>(spec: &DatasetSpec) -> Result<NamedDataset<T>> {
    let mut file = File::open(&spec.path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => NhcaError::FileNotFound(spec.path.display().to_string()),
        _ => NhcaError::Io(format!("{}: {e}", spec.path.display())),
    })?;
    let mut text = String::new();
    file.read_to_string(&mut text)?;
    let mut named = parse_csv(&text, spec.label_column, spec.delimiter, spec.header)?;
    if spec.scaling != Scaling::None {
        let state = ScalerState::fit(named.data.features(), spec.scaling);
        named.data = named.data.with_features(state.transform(named.data.features())?)?;
    }
    Ok(named)
}

pub fn load_csv<T: Scalar>(spec: &DatasetSpec) -> Result<LabeledDataset<T>> {
    load_csv_named(spec).map(|n| n.data)
}

/// Writes features followed by the label as the last column, with a
/// header row. Values use the shortest representation that parses back
/// to the same number.
pub fn save_csv<T: Scalar>(
    path: &Path,
    data: &LabeledDataset<T>,
    class_names: Option<&[String]>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| NhcaError::Io(e.to_string()))?;
    let mut header: Vec<String> = (0..data.feature_count()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    writer
        .write_record(&header)
        .map_err(|e| NhcaError::Io(e.to_string()))?;
    for (row, &label) in data.features().row_iter().zip(data.labels()) {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(match class_names {
            Some(names) => names[label].clone(),
            None => label.to_string(),
        });
        writer
            .write_record(&record)
            .map_err(|e| NhcaError::Io(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Per-column affine map `x ↦ (x − offset) · factor` fitted on training
/// rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScalerState<T> {
    pub mode: Scaling,
    pub offset: Vec<T>,
    pub factor: Vec<T>,
}

impl<T: Scalar> ScalerState<T> {
    /// Constant columns (zero range or zero deviation) get factor 0 and
    /// therefore map to 0.
    pub fn fit(train: &Matrix<T>, mode: Scaling) -> Self {
        let n = train.cols();
        let m = T::from_usize(train.rows().max(1)).unwrap();
        let mut offset = vec![T::zero(); n];
        let mut factor = vec![T::one(); n];
        for j in 0..n {
            let col = train.column(j);
            match mode {
                Scaling::None => {}
                Scaling::MinMax => {
                    let lo = col.iter().copied().fold(T::infinity(), T::min);
                    let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
                    offset[j] = lo;
                    factor[j] = if hi > lo { T::one() / (hi - lo) } else { T::zero() };
                }
                Scaling::ZScore => {
                    let mean = col.iter().copied().sum::<T>() / m;
                    let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / m;
                    offset[j] = mean;
                    factor[j] = if var > T::zero() {
                        T::one() / var.sqrt()
                    } else {
                        T::zero()
                    };
                }
            }
        }
        Self { mode, offset, factor }
    }

    pub fn transform(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols() != self.offset.len() {
            return Err(NhcaError::DimensionMismatch(format!(
                "scaler fitted on {} columns, got {}",
                self.offset.len(),
                x.cols()
            )));
        }
        if self.mode == Scaling::None {
            return Ok(x.clone());
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, &o), &f) in out.row_mut(i).iter_mut().zip(&self.offset).zip(&self.factor) {
                *v = (*v - o) * f;
            }
        }
        Ok(out)
    }
}

/// Fits the scaler on `train` and applies it to both matrices.
pub fn scale_fit_transform<T: Scalar>(
    train: &Matrix<T>,
    test: &Matrix<T>,
    mode: Scaling,
) -> Result<(Matrix<T>, Matrix<T>, ScalerState<T>)> {
    if train.cols() != test.cols() {
        return Err(NhcaError::DimensionMismatch(format!(
            "train has {} columns, test has {}",
            train.cols(),
            test.cols()
        )));
    }
    let state = ScalerState::fit(train, mode);
    Ok((state.transform(train)?, state.transform(test)?, state))
}

/// Names of the datasets compiled into the library.
pub const FIXTURES: [&str; 2] = ["iris", "wine"];

/// A bundled dataset by name, unscaled. Iris: 150 × 4, 3 classes, label
/// last. Wine: 178 × 13, 3 classes, label first.
pub fn fixture<T: Scalar>(name: &str) -> Result<NamedDataset<T>> {
    match name.to_ascii_lowercase().as_str() {
        "iris" => parse_csv(IRIS_CSV, LabelColumn::Last, b',', true),
        "wine" => parse_csv(WINE_CSV, LabelColumn::Index(0), b',', true),
        other => Err(NhcaError::FileNotFound(format!("no bundled dataset '{other}'"))),
    }
}

pub fn iris<T: Scalar>() -> LabeledDataset<T> {
    fixture("iris").expect("bundled iris parses").data
}

pub fn wine<T: Scalar>() -> LabeledDataset<T> {
    fixture("wine").expect("bundled wine parses").data
}
