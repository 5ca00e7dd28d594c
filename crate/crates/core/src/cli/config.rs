//! The run configuration file and dotted-path overrides.
//!
//! A run is described by one UTF-8 JSON document; every section and field is
//! optional and falls back to its default. Flags override single fields with
//! `--set section.field=value`, where `value` is parsed as JSON when possible
//! and taken as a string otherwise.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{FieldSchema, FieldSpec, PlantedPair, SyntheticSpec};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::numeric::{stream, Rng};
use crate::train::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaPreset {
    /// 13 continuous then 26 categorical fields.
    Criteo,
    /// `fields` categorical fields.
    Categorical,
    /// The explicit `custom` field list.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaConfig {
    pub preset: SchemaPreset,
    /// Field count for the categorical preset.
    pub fields: usize,
    /// Hash buckets per field for the presets.
    pub buckets: usize,
    pub custom: Vec<FieldSpec>,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        Self { preset: SchemaPreset::Criteo, fields: 39, buckets: 10_000, custom: Vec::new() }
    }
}

impl SchemaConfig {
    pub fn build(&self) -> Result<FieldSchema> {
        match self.preset {
            SchemaPreset::Criteo => FieldSchema::criteo(self.buckets),
            SchemaPreset::Categorical => FieldSchema::categorical(self.fields, self.buckets),
            SchemaPreset::Custom => FieldSchema::new(self.custom.clone()),
        }
        .map_err(|e| match e {
            // Schema errors name `schema` or `schema[i]...`; point at the config section.
            Error::Config { field, message } if self.preset == SchemaPreset::Custom => {
                Error::config(field.replacen("schema", "schema.custom", 1), message)
            }
            other => other,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    /// Each row goes to validation independently with `valid_fraction`.
    Random,
    /// The trailing `valid_fraction` of rows is held out.
    Tail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train: Option<PathBuf>,
    /// When absent, validation rows are split off the training file.
    pub valid: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub delimiter: char,
    pub valid_fraction: f64,
    pub split: SplitKind,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { train: None, valid: None, test: None, delimiter: '\t', valid_fraction: 0.1, split: SplitKind::Random }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub checkpoint: PathBuf,
    /// Per-epoch metric CSV.
    pub log: PathBuf,
    pub ablation: PathBuf,
    /// Directory for generated synthetic data.
    pub synth_dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            checkpoint: "model.fibn".into(),
            log: "metrics.csv".into(),
            ablation: "ablation.csv".into(),
            synth_dir: "synth".into(),
        }
    }
}

/// Planted-interaction generator settings; the generator seed comes from the
/// top-level seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub fields: usize,
    pub cardinality: usize,
    pub latent_dim: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub pairs: Vec<PlantedPair>,
    pub bias: f64,
    pub noise_rate: f64,
    pub buckets: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let s = SyntheticSpec::planted(0);
        Self {
            fields: s.fields,
            cardinality: s.cardinality,
            latent_dim: s.latent_dim,
            train_rows: s.train_rows,
            test_rows: s.test_rows,
            pairs: s.pairs,
            bias: s.bias,
            noise_rate: s.noise_rate,
            buckets: s.buckets,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Every random stream (init, split, shuffle, dropout, synthesis, gradient
    /// check) is derived from this one value.
    pub seed: u64,
    pub schema: SchemaConfig,
    pub model: ModelConfig,
    /// `train.seed` is ignored in favor of the top-level seed.
    pub train: TrainConfig,
    pub data: DataConfig,
    pub output: OutputConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            schema: SchemaConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            data: DataConfig::default(),
            output: OutputConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads `path` (or starts from defaults), applies `--set` overrides in
    /// order, then `seed` if given.
    pub fn load(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<Self> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| Error::config("--config", format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let mut cfg: RunConfig =
            serde_json::from_value(value).map_err(|e| Error::config("config", e.to_string()))?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.train.seed = cfg.seed;
        Ok(cfg)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        self.train.validate()?;
        Ok(self.train.clone())
    }

    pub fn split_seed(&self) -> u64 {
        Rng::for_stream(self.seed, stream::SPLIT).next_u64()
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        let s = &self.synth;
        SyntheticSpec {
            fields: s.fields,
            cardinality: s.cardinality,
            latent_dim: s.latent_dim,
            train_rows: s.train_rows,
            test_rows: s.test_rows,
            pairs: s.pairs.clone(),
            bias: s.bias,
            noise_rate: s.noise_rate,
            buckets: s.buckets,
            seed: Rng::for_stream(self.seed, stream::SYNTH).next_u64(),
        }
    }
}

/// Sets `key` (dotted path) in a JSON object tree, creating intermediate
/// objects as needed.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config("--set", format!("expected key=value, got `{assignment}`")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::config("--set", format!("malformed key `{key}`")));
    }
    let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (depth, part) in parts.iter().enumerate() {
        let map = match node {
            Value::Object(map) => map,
            _ => {
                return Err(Error::config(
                    parts[..depth].join("."),
                    format!("cannot set `{key}`: not an object"),
                ))
            }
        };
        if depth + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("key has at least one part")
}
