//! Field schemas, hashed examples, TSV ingest, splitting/batching and the
//! planted-interaction generator.

mod batch;
mod hash;
mod synth;
mod tsv;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use batch::{batches, split_head_tail, split_train_test, Batches};
pub use hash::{discretize_continuous, hash_feature};
pub use synth::{generate_synthetic, write_tsv, PlantedPair, SyntheticData, SyntheticSpec};
pub use tsv::{count_columns, load_tsv, open_tsv, LoadedTsv, TsvReader};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
    pub buckets: usize,
}

/// Ordered input fields. Bucket counts are fixed for the life of a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FieldSpec>", into = "Vec<FieldSpec>")]
pub struct FieldSchema {
    fields: Vec<FieldSpec>,
}

impl TryFrom<Vec<FieldSpec>> for FieldSchema {
    type Error = Error;

    fn try_from(fields: Vec<FieldSpec>) -> Result<Self> {
        Self::new(fields)
    }
}

impl From<FieldSchema> for Vec<FieldSpec> {
    fn from(s: FieldSchema) -> Self {
        s.fields
    }
}

impl FieldSchema {
    pub fn new(fields: Vec<FieldSpec>) -> Result<Self> {
        if fields.len() < 2 {
            return Err(Error::config(
                "schema",
                format!("need at least 2 fields for pairwise interactions, got {}", fields.len()),
            ));
        }
        if let Some((i, f)) = fields.iter().enumerate().find(|(_, f)| f.buckets == 0) {
            return Err(Error::config(
                format!("schema[{i}].buckets"),
                format!("field `{}` must have at least one bucket", f.name),
            ));
        }
        Ok(Self { fields })
    }

    /// `count` categorical fields named `c0, c1, ...`.
    pub fn categorical(count: usize, buckets: usize) -> Result<Self> {
        Self::new(
            (0..count)
                .map(|i| FieldSpec {
                    name: format!("c{i}"),
                    kind: FieldKind::Categorical,
                    buckets,
                })
                .collect(),
        )
    }

    /// Criteo click-log layout: 13 integer fields `I1..I13` then 26
    /// categorical fields `C1..C26`.
    pub fn criteo(buckets: usize) -> Result<Self> {
        let continuous = (1..=13).map(|i| FieldSpec {
            name: format!("I{i}"),
            kind: FieldKind::Continuous,
            buckets,
        });
        let categorical = (1..=26).map(|i| FieldSpec {
            name: format!("C{i}"),
            kind: FieldKind::Categorical,
            buckets,
        });
        Self::new(continuous.chain(categorical).collect())
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[FieldSpec] {
        &self.fields
    }

    pub fn buckets(&self, field: usize) -> usize {
        self.fields[field].buckets
    }

    /// Hashes one raw row. `None` means the row is malformed (wrong column
    /// count or an unparseable continuous value).
    pub fn encode<S: AsRef<str>>(&self, label: u8, tokens: &[S]) -> Option<Example> {
        if tokens.len() != self.len() {
            return None;
        }
        let mut indices = Vec::with_capacity(self.len());
        for (i, (spec, tok)) in self.fields.iter().zip(tokens).enumerate() {
            let tok = tok.as_ref();
            let index = match spec.kind {
                FieldKind::Categorical => hash_feature(i, tok.as_bytes(), spec.buckets),
                FieldKind::Continuous => {
                    let t = tok.trim();
                    let x = if t.is_empty() { None } else { Some(t.parse::<f64>().ok()?) };
                    hash_feature(i, discretize_continuous(x).as_bytes(), spec.buckets)
                }
            };
            indices.push(index as u32);
        }
        Some(Example {
            label,
            values: vec![1.0; indices.len()],
            indices,
        })
    }
}

/// One univalent row: a bucket index and a value per field.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub label: u8,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

/// Columnar rows. Indices and values are row-major `size × fields`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExampleBatch {
    fields: usize,
    labels: Vec<f64>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

/// A whole split is stored the same way as a mini-batch.
pub type Dataset = ExampleBatch;

impl ExampleBatch {
    pub fn new(fields: usize) -> Self {
        Self {
            fields,
            ..Self::default()
        }
    }

    pub fn with_capacity(fields: usize, rows: usize) -> Self {
        Self {
            fields,
            labels: Vec::with_capacity(rows),
            indices: Vec::with_capacity(rows * fields),
            values: Vec::with_capacity(rows * fields),
        }
    }

    pub fn from_examples(fields: usize, examples: &[Example]) -> Result<Self> {
        let mut b = Self::with_capacity(fields, examples.len());
        for e in examples {
            b.push(e)?;
        }
        Ok(b)
    }

    pub fn push(&mut self, e: &Example) -> Result<()> {
        if e.indices.len() != self.fields || e.values.len() != self.fields {
            return Err(Error::shape(
                "ExampleBatch::push",
                format!("{} fields", self.fields),
                format!("{} indices, {} values", e.indices.len(), e.values.len()),
            ));
        }
        self.labels.push(e.label as f64);
        self.indices.extend_from_slice(&e.indices);
        self.values.extend_from_slice(&e.values);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn fields(&self) -> usize {
        self.fields
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn row_indices(&self, r: usize) -> &[u32] {
        &self.indices[r * self.fields..(r + 1) * self.fields]
    }

    pub fn row_values(&self, r: usize) -> &[f64] {
        &self.values[r * self.fields..(r + 1) * self.fields]
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn example(&self, r: usize) -> Example {
        Example {
            label: self.labels[r] as u8,
            indices: self.row_indices(r).to_vec(),
            values: self.row_values(r).to_vec(),
        }
    }

    /// Copies the listed rows, in order.
    pub fn gather(&self, rows: &[usize]) -> Self {
        let mut out = Self::with_capacity(self.fields, rows.len());
        for &r in rows {
            out.labels.push(self.labels[r]);
            out.indices.extend_from_slice(self.row_indices(r));
            out.values.extend_from_slice(self.row_values(r));
        }
        out
    }

    pub fn extend(&mut self, other: &ExampleBatch) {
        debug_assert_eq!(self.fields, other.fields);
        self.labels.extend_from_slice(&other.labels);
        self.indices.extend_from_slice(&other.indices);
        self.values.extend_from_slice(&other.values);
    }

    /// Fails on the first index outside its field's bucket range.
    pub fn check_bounds(&self, schema: &FieldSchema) -> Result<()> {
        if self.fields != schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "schema has {} fields, batch has {}",
                schema.len(),
                self.fields
            )));
        }
        for r in 0..self.len() {
            for (field, &idx) in self.row_indices(r).iter().enumerate() {
                let buckets = schema.buckets(field);
                if idx as usize >= buckets {
                    return Err(Error::Bounds {
                        field,
                        index: idx as usize,
                        buckets,
                    });
                }
            }
        }
        Ok(())
    }
}
