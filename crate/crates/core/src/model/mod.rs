//! The FiBiNET network: embeddings, SENET reweighting, bilinear or Hadamard
//! pair interactions on both embedding sets, combination, optional DNN, linear
//! part and a sigmoid output.

mod checkpoint;
mod config;
pub mod layers;
mod network;
mod params;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC,
};
pub use config::{
    field_pairs, pair_count, senet_hidden, Ablation, CombinationCode, FieldType, Layout, Mode,
    ModelConfig,
};
pub use network::{FiBiNet, ForwardTrace};
pub use params::{BlockInfo, BlockKind, DenseLayer, GradientTape, ModelParams, EMBEDDING_INIT};
