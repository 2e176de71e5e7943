//! Config files for the command line: TOML `key = value` lines mirroring
//! the long flags. Keys may use `-` or `_`. Relative paths are resolved
//! against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::evolution::{CrossoverKind, GenerationUnit};
use crate::fitness::Metric;
use crate::{Error, Result};

/// A single count or a list of counts.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum Counts {
    One(usize),
    Many(Vec<usize>),
}

impl Counts {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            Counts::One(n) => vec![*n],
            Counts::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dataset: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    pub schema: Option<String>,
    pub effort_column: Option<String>,
    pub size_column: Option<String>,
    pub preset: Option<String>,
    pub pop: Option<Counts>,
    pub gens: Option<Counts>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
    pub crossover_kind: Option<CrossoverKind>,
    pub metric: Option<Metric>,
    pub generation_unit: Option<GenerationUnit>,
    pub genes: Option<usize>,
    pub function_probability: Option<f64>,
    pub tournament_size: Option<usize>,
    pub seed: Option<u64>,
    pub seeds: Option<usize>,
    pub folds: Option<usize>,
    pub scale: Option<bool>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let normalized: toml::Table = table.into_iter().map(|(k, v)| (k.replace('-', "_"), v)).collect();
        normalized.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config =
            Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.dataset, &mut config.data_dir, &mut config.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }
}
