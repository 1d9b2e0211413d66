use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Bernoulli,
    Propagate,
    Semiclassical,
    Fringes,
    Scatter,
    Decay,
    Correlate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Bernoulli => "bernoulli",
            Experiment::Propagate => "propagate",
            Experiment::Semiclassical => "semiclassical",
            Experiment::Fringes => "fringes",
            Experiment::Scatter => "scatter",
            Experiment::Decay => "decay",
            Experiment::Correlate => "correlate",
        }
    }
}

/// The JSON envelope shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default = "empty_object")]
    pub parameters: serde_json::Value,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| CliError::validation(format!("{}: {}", path.display(), e.message)))
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::validation(inner.to_string())
        } else {
            CliError::validation(format!("field `{path}`: {inner}"))
        }
    })
}

/// Decodes the `parameters` object, naming the offending field on failure.
pub fn parameters<T: DeserializeOwned>(value: &serde_json::Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::validation(format!("field `parameters`: {inner}"))
        } else {
            CliError::validation(format!("field `parameters.{path}`: {inner}"))
        }
    })
}
