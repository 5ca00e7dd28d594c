//! Click data with purely second-order signal.
//!
//! Each field draws one of `cardinality` values uniformly. Every (field, value)
//! owns a latent vector with coordinates uniform on `±sqrt(3)`, centered per
//! field so that no single feature carries marginal signal. The true logit is
//!
//! ```text
//! bias + Σ_pairs weight · <u_left, u_right> / sqrt(latent_dim)
//! ```
//!
//! labels are Bernoulli(sigmoid(logit)) and then flipped with probability
//! `noise_rate`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ExampleBatch, FieldSchema};
use crate::error::{Error, Result};
use crate::metrics::{auc, ScoredSet};
use crate::numeric::{sigmoid, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub left: usize,
    pub right: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub fields: usize,
    /// Distinct values per field.
    pub cardinality: usize,
    pub latent_dim: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub pairs: Vec<PlantedPair>,
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub noise_rate: f64,
    /// Hash buckets per field in the emitted schema.
    pub buckets: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Ten fields, 50k train / 10k test rows, with a chain of planted pairs
    /// plus a few long-range ones. No single field carries signal.
    pub fn planted(seed: u64) -> Self {
        let mut pairs: Vec<PlantedPair> =
            (0..9).map(|i| PlantedPair { left: i, right: i + 1, weight: 1.0 }).collect();
        pairs.extend([(0, 5), (2, 7), (4, 9)].map(|(left, right)| PlantedPair { left, right, weight: 1.0 }));
        Self {
            fields: 10,
            cardinality: 20,
            latent_dim: 4,
            train_rows: 50_000,
            test_rows: 10_000,
            pairs,
            bias: 0.0,
            noise_rate: 0.0,
            buckets: 1000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fields < 2 {
            return Err(Error::config("synth.fields", "need at least 2 fields"));
        }
        if self.cardinality == 0 || self.latent_dim == 0 || self.buckets == 0 {
            return Err(Error::config(
                "synth",
                "cardinality, latent_dim and buckets must be >= 1",
            ));
        }
        if !(0.0..0.5).contains(&self.noise_rate) {
            return Err(Error::config("synth.noise_rate", "must lie in [0, 0.5)"));
        }
        for (i, p) in self.pairs.iter().enumerate() {
            if p.left == p.right || p.left >= self.fields || p.right >= self.fields {
                return Err(Error::config(
                    format!("synth.pairs[{i}]"),
                    format!(
                        "pair ({}, {}) must name two distinct fields below {}",
                        p.left, p.right, self.fields
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> Result<FieldSchema> {
        FieldSchema::categorical(self.fields, self.buckets)
    }
}

/// One raw generated row, before hashing.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub label: u8,
    pub tokens: Vec<String>,
    pub logit: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub schema: FieldSchema,
    pub train_rows: Vec<RawRow>,
    pub test_rows: Vec<RawRow>,
    pub train: Dataset,
    pub test: Dataset,
    /// AUC of the generating logit on the test labels.
    pub bayes_auc: f64,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let (f, card, dim) = (spec.fields, spec.cardinality, spec.latent_dim);
    let bound = 3f64.sqrt();

    // latents[field][value * dim + t]
    let mut latents: Vec<Vec<f64>> = Vec::with_capacity(f);
    for _ in 0..f {
        let mut table: Vec<f64> = (0..card * dim).map(|_| rng.uniform(-bound, bound)).collect();
        for t in 0..dim {
            let mean = (0..card).map(|v| table[v * dim + t]).sum::<f64>() / card as f64;
            for v in 0..card {
                table[v * dim + t] -= mean;
            }
        }
        latents.push(table);
    }

    let scale = 1.0 / (dim as f64).sqrt();
    let draw_row = |rng: &mut Rng| -> RawRow {
        let values: Vec<usize> = (0..f).map(|_| rng.below(card as u64) as usize).collect();
        let mut logit = spec.bias;
        for p in &spec.pairs {
            let a = &latents[p.left][values[p.left] * dim..][..dim];
            let b = &latents[p.right][values[p.right] * dim..][..dim];
            logit += p.weight * scale * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        }
        let mut label = rng.bernoulli(sigmoid(logit));
        if rng.bernoulli(spec.noise_rate) {
            label = !label;
        }
        RawRow {
            label: label as u8,
            tokens: values.iter().map(|v| format!("v{v}")).collect(),
            logit,
        }
    };

    let train_rows: Vec<RawRow> = (0..spec.train_rows).map(|_| draw_row(&mut rng)).collect();
    let test_rows: Vec<RawRow> = (0..spec.test_rows).map(|_| draw_row(&mut rng)).collect();

    let schema = spec.schema()?;
    let encode = |rows: &[RawRow]| -> Result<Dataset> {
        let mut d = ExampleBatch::with_capacity(f, rows.len());
        for r in rows {
            let e = schema.encode(r.label, &r.tokens).expect("generated rows match schema");
            d.push(&e)?;
        }
        Ok(d)
    };
    let train = encode(&train_rows)?;
    let test = encode(&test_rows)?;

    let logits: Vec<f64> = test_rows.iter().map(|r| r.logit).collect();
    let bayes_auc = auc(ScoredSet::new(&logits, test.labels())?)?;

    Ok(SyntheticData {
        schema,
        train_rows,
        test_rows,
        train,
        test,
        bayes_auc,
    })
}

/// Writes rows in the ingest dialect: label, then one token per field.
pub fn write_tsv(path: impl AsRef<Path>, rows: &[RawRow], delimiter: char) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for row in rows {
        write!(w, "{}", row.label).map_err(io)?;
        for t in &row.tokens {
            write!(w, "{delimiter}{t}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}
