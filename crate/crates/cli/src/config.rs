use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use numeraire::sde::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Price,
    Parity,
    Intl,
    Defect,
    LatticeVerify,
    Physical,
    Convergence,
    Catalog,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Price => "price",
            Command::Parity => "parity",
            Command::Intl => "intl",
            Command::Defect => "defect",
            Command::LatticeVerify => "lattice-verify",
            Command::Physical => "physical",
            Command::Convergence => "convergence",
            Command::Catalog => "catalog",
        };
        f.write_str(s)
    }
}

/// A strike given as a JSON number or as an exact string such as `"1/3"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Strike {
    Number(f64),
    Text(String),
}

impl Strike {
    pub fn text(&self) -> String {
        match self {
            Strike::Number(v) => v.to_string(),
            Strike::Text(s) => s.clone(),
        }
    }
}

/// One experiment, as read from a JSON file or assembled from flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strikes: Vec<Strike>,
    #[serde(default = "default_mc")]
    pub mc: SimConfig,
    /// Grid sizes for the convergence study.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps_list: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub dump_samples: bool,
}

pub fn default_mc() -> SimConfig {
    SimConfig::exact(100_000, 0)
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command,
            model: None,
            x0: None,
            horizon: None,
            tree: None,
            claim: None,
            strikes: Vec::new(),
            mc: default_mc(),
            steps_list: Vec::new(),
            out_dir: None,
            dump_samples: false,
        }
    }
}
