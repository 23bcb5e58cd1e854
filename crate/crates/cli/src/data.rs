use std::path::Path;

use anyhow::{Context, Result};
use clap::Args;

use nhca::dataio::{self, DatasetSpec, LabelColumn, NamedDataset, Scaling};

/// How to read a dataset file. Bundled fixtures (`iris`, `wine`) ignore
/// these flags.
#[derive(Debug, Clone, Args)]
pub struct CsvArgs {
    /// Label column: zero-based index or `last`.
    #[arg(long, default_value = "last", value_parser = parse_label_column)]
    pub label_column: LabelColumn,
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    pub delimiter: u8,
    /// The file has no header row.
    #[arg(long)]
    pub no_header: bool,
}

fn parse_label_column(s: &str) -> Result<LabelColumn, String> {
    s.parse().map_err(|e: nhca::NhcaError| e.to_string())
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!("delimiter must be one ASCII character, got '{s}'")),
    }
}

/// A file path wins over a bundled fixture of the same name.
pub fn load(source: &str, csv: &CsvArgs) -> Result<NamedDataset<f64>> {
    let is_fixture = dataio::FIXTURES.contains(&source.to_ascii_lowercase().as_str());
    if !Path::new(source).exists() && is_fixture {
        return Ok(dataio::fixture(source)?);
    }
    let spec = DatasetSpec {
        path: source.into(),
        label_column: csv.label_column,
        delimiter: csv.delimiter,
        header: !csv.no_header,
        scaling: Scaling::None,
    };
    dataio::load_csv_named(&spec).with_context(|| format!("loading dataset '{source}'"))
}

/// Short name for reports: fixture name or file stem.
pub fn display_name(source: &str) -> String {
    Path::new(source)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| source.to_string())
}
