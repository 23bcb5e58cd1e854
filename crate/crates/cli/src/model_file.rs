//! On-disk model format: versioned JSON holding the scaler, the fitted
//! multiclass model and the original class names.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use nhca::evaluation::ScaledModel;

pub const SCHEMA: u32 = 1;
const FORMAT: &str = "nhca-model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub schema: u32,
    pub class_names: Vec<String>,
    #[serde(flatten)]
    pub fitted: ScaledModel<f64>,
}

impl ModelFile {
    pub fn new(fitted: ScaledModel<f64>, class_names: Vec<String>) -> Self {
        Self {
            format: FORMAT.into(),
            schema: SCHEMA,
            class_names,
            fitted,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json).with_context(|| format!("writing model to {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => {
                anyhow::Error::new(nhca::NhcaError::FileNotFound(path.display().to_string()))
            }
            _ => anyhow::Error::new(e).context(format!("reading {}", path.display())),
        })?;
        let file: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing model file {}", path.display()))?;
        if file.format != FORMAT {
            bail!("{} is not a model file (format '{}')", path.display(), file.format);
        }
        if file.schema != SCHEMA {
            bail!("unsupported model schema {} (expected {SCHEMA})", file.schema);
        }
        file.fitted.model.validate()?;
        if file.class_names.len() != file.fitted.model.class_count {
            bail!("model file lists {} class names for {} classes", file.class_names.len(), file.fitted.model.class_count);
        }
        Ok(file)
    }
}
