//! Finite-difference verification of the hand-written backward pass.
//!
//! The check runs on a tiny problem (4 fields, `k = 3`, hidden layers `[5, 4]`,
//! 5 buckets per field, 6 rows) with every parameter drawn uniformly from
//! `±0.5` so that no layer sits in a degenerate regime. Blocks the configuration
//! never reads are reported as unused; for those both the analytic and the
//! numeric gradient must be exactly zero.

use std::fmt;

use crate::data::{Example, ExampleBatch, FieldSchema};
use crate::error::Result;
use crate::model::{
    Ablation, BlockInfo, BlockKind, CombinationCode, FiBiNet, FieldType, Layout, Mode, ModelConfig,
};
use crate::numeric::{max_relative_error, stream, Rng};

pub const GRADCHECK_FIELDS: usize = 4;
pub const GRADCHECK_DIM: usize = 3;
pub const GRADCHECK_HIDDEN: [usize; 2] = [5, 4];
pub const GRADCHECK_BUCKETS: usize = 5;
pub const GRADCHECK_ROWS: usize = 6;
/// Central-difference step.
pub const GRADCHECK_STEP: f64 = 1e-5;
/// Denominator floor of the relative error.
pub const GRADCHECK_FLOOR: f64 = 1e-6;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
const PARAM_SCALE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockStatus {
    /// Compared element by element against central differences.
    Checked { max_rel_error: f64 },
    /// Never read by this configuration. `max_abs_grad` is the largest
    /// gradient magnitude seen, analytic or numeric; it must be zero.
    Unused { max_abs_grad: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub name: String,
    pub kind: BlockKind,
    pub status: BlockStatus,
}

impl BlockReport {
    pub fn passed(&self) -> bool {
        match self.status {
            BlockStatus::Checked { max_rel_error } => max_rel_error < GRADCHECK_TOLERANCE,
            BlockStatus::Unused { max_abs_grad } => max_abs_grad == 0.0,
        }
    }

    pub fn checked(&self) -> bool {
        matches!(self.status, BlockStatus::Checked { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// The configuration actually checked (tiny shapes, dropout off).
    pub config: ModelConfig,
    pub blocks: Vec<BlockReport>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.blocks.iter().all(BlockReport::passed)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.blocks
            .iter()
            .filter_map(|b| match b.status {
                BlockStatus::Checked { max_rel_error } => Some(max_rel_error),
                BlockStatus::Unused { .. } => None,
            })
            .fold(0.0, f64::max)
    }

    /// One-line description of the checked configuration.
    pub fn label(&self) -> String {
        describe(&self.config)
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.label())?;
        writeln!(f, "{:<24} {:<8} {:>12}  result", "block", "status", "error")?;
        for b in &self.blocks {
            let (status, value) = match b.status {
                BlockStatus::Checked { max_rel_error } => ("checked", max_rel_error),
                BlockStatus::Unused { max_abs_grad } => ("unused", max_abs_grad),
            };
            let result = if b.passed() { "ok" } else { "FAIL" };
            writeln!(f, "{:<24} {:<8} {:>12.3e}  {result}", b.name, status, value)?;
        }
        Ok(())
    }
}

pub fn describe(config: &ModelConfig) -> String {
    format!(
        "field_type={:?} code={} mode={:?} ablation={} linear={} shared={}",
        config.field_type,
        config.combination,
        config.mode,
        config.ablation,
        config.use_linear,
        config.share_bilinear
    )
}

/// `config` with the gradient-check shapes and dropout disabled; structural
/// choices are kept.
pub fn tiny_config(config: &ModelConfig) -> ModelConfig {
    ModelConfig {
        embedding_dim: GRADCHECK_DIM,
        hidden_units: GRADCHECK_HIDDEN.to_vec(),
        dropout: 0.0,
        ..config.clone()
    }
}

/// Whether the forward pass can read any element of a block.
fn block_is_used(layout: &Layout, info: &BlockInfo, index: usize) -> bool {
    // With one matrix per left field, the last field never appears on the left.
    let bilinear_index_used =
        layout.field_type != FieldType::Each || index + 1 < layout.fields;
    match info.kind {
        BlockKind::Embedding => layout.interactions || layout.deep,
        BlockKind::Linear => layout.use_linear,
        BlockKind::Bias => true,
        BlockKind::SenetReduce | BlockKind::SenetExpand => layout.reweighted_path,
        BlockKind::BilinearOriginal => {
            let shared_use = layout.share_bilinear && layout.reweighted_path && layout.reweighted_bilinear;
            bilinear_index_used && ((layout.interactions && layout.original_bilinear) || shared_use)
        }
        BlockKind::BilinearReweighted => {
            bilinear_index_used && layout.reweighted_path && layout.reweighted_bilinear
        }
        BlockKind::DnnWeight | BlockKind::DnnBias | BlockKind::HeadWeight | BlockKind::HeadBias => layout.deep,
    }
}

fn block_index(name: &str) -> usize {
    name.rsplit('.').next().and_then(|s| s.parse().ok()).unwrap_or(0)
}

fn tiny_batch(rng: &mut Rng) -> Result<ExampleBatch> {
    let examples: Vec<Example> = (0..GRADCHECK_ROWS)
        .map(|r| Example {
            // Both classes present, in a seed-dependent arrangement.
            label: if r < 2 { r as u8 } else { rng.bernoulli(0.5) as u8 },
            indices: (0..GRADCHECK_FIELDS).map(|_| rng.below(GRADCHECK_BUCKETS as u64) as u32).collect(),
            values: (0..GRADCHECK_FIELDS).map(|_| rng.uniform(0.5, 1.5)).collect(),
        })
        .collect();
    ExampleBatch::from_examples(GRADCHECK_FIELDS, &examples)
}

/// Compares every parameter block's analytic gradient with central
/// differences on a tiny random problem.
pub fn grad_check(config: &ModelConfig, seed: u64) -> Result<GradCheckReport> {
    let config = tiny_config(config);
    let schema = FieldSchema::categorical(GRADCHECK_FIELDS, GRADCHECK_BUCKETS)?;
    let mut rng = Rng::for_stream(seed, stream::GRADCHECK);
    let mut model = FiBiNet::new(config.clone(), schema, &mut rng)?;
    for block in model.params.slices_mut() {
        for x in block {
            *x = rng.uniform(-PARAM_SCALE, PARAM_SCALE);
        }
    }
    let batch = tiny_batch(&mut rng)?;
    let labels = batch.labels().to_vec();

    let trace = model.forward(&batch, None)?;
    let tape = model.backward(&trace, &labels)?;
    let analytic: Vec<Vec<f64>> = tape.grads.slices().iter().map(|s| s.to_vec()).collect();
    let infos = model.params.block_infos();

    let mut blocks = Vec::with_capacity(infos.len());
    for (b, info) in infos.iter().enumerate() {
        let len = analytic[b].len();
        let mut numeric = Vec::with_capacity(len);
        for i in 0..len {
            let orig = model.params.slices()[b][i];
            let mut eval = |value: f64| -> Result<f64> {
                model.params.slices_mut()[b][i] = value;
                Ok(model.forward(&batch, None)?.loss(&labels))
            };
            let plus = eval(orig + GRADCHECK_STEP)?;
            let minus = eval(orig - GRADCHECK_STEP)?;
            model.params.slices_mut()[b][i] = orig;
            numeric.push((plus - minus) / (2.0 * GRADCHECK_STEP));
        }

        let status = if block_is_used(model.layout(), info, block_index(&info.name)) {
            BlockStatus::Checked {
                max_rel_error: max_relative_error(&analytic[b], &numeric, GRADCHECK_FLOOR),
            }
        } else {
            let max_abs_grad = analytic[b].iter().chain(&numeric).fold(0.0f64, |m, g| m.max(g.abs()));
            BlockStatus::Unused { max_abs_grad }
        };
        blocks.push(BlockReport { name: info.name.clone(), kind: info.kind, status });
    }
    Ok(GradCheckReport { config, blocks })
}

/// Every field type × combination code × mode × ablation, plus the shared
/// bilinear and linear-free variants of the base model.
pub fn sweep_configs(base: &ModelConfig) -> Vec<ModelConfig> {
    let mut out = Vec::new();
    for field_type in [FieldType::All, FieldType::Each, FieldType::Interaction] {
        for combination in CombinationCode::ALL {
            for mode in [Mode::Shallow, Mode::Deep] {
                for ablation in Ablation::ALL {
                    out.push(ModelConfig { field_type, combination, mode, ablation, ..base.clone() });
                    if ablation == Ablation::None {
                        out.push(ModelConfig {
                            field_type,
                            combination,
                            mode,
                            ablation,
                            share_bilinear: !base.share_bilinear,
                            ..base.clone()
                        });
                    }
                }
            }
        }
    }
    out.push(ModelConfig { use_linear: false, ..base.clone() });
    out
}

pub fn grad_check_sweep(base: &ModelConfig, seed: u64) -> Result<Vec<GradCheckReport>> {
    sweep_configs(base).iter().map(|c| grad_check(c, seed)).collect()
}
