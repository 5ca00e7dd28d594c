//! Self-describing parameter file.
//!
//! ```text
//! "FIBN1"
//! u64 LE  header length, then that many bytes of UTF-8 JSON
//!         {"model": <ModelConfig>, "schema": [<FieldSpec>, ...]}
//! u32 LE  block count
//! per block:
//!   u32 LE name length, name bytes (UTF-8)
//!   u32 LE rank, then rank × u64 LE dims
//!   product(dims) × f64 LE values
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::FieldSchema;
use crate::error::{Error, Result};
use crate::model::{FiBiNet, ModelConfig, ModelParams};

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"FIBN1";

#[derive(Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    schema: FieldSchema,
}

pub fn encode_checkpoint(model: &FiBiNet) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        model: model.config().clone(),
        schema: model.schema().clone(),
    })
    .expect("config serializes");
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    let infos = model.params.block_infos();
    let slices = model.params.slices();
    out.extend_from_slice(&(infos.len() as u32).to_le_bytes());
    for (info, data) in infos.iter().zip(slices) {
        out.extend_from_slice(&(info.name.len() as u32).to_le_bytes());
        out.extend_from_slice(info.name.as_bytes());
        out.extend_from_slice(&(info.dims.len() as u32).to_le_bytes());
        for &d in &info.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for x in data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Checkpoint(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<FiBiNet> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(CHECKPOINT_MAGIC.len()).ok() != Some(CHECKPOINT_MAGIC.as_slice()) {
        return Err(Error::Checkpoint("bad magic bytes, expected FIBN1".into()));
    }
    let header_len = c.u64()? as usize;
    let header: Header = serde_json::from_slice(c.take(header_len)?)
        .map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
    let layout = header.model.layout(header.schema.len())?;
    let mut params = ModelParams::zeros(&layout, &header.schema);
    let infos = params.block_infos();

    let count = c.u32()? as usize;
    if count != infos.len() {
        return Err(Error::Checkpoint(format!("expected {} blocks, file has {count}", infos.len())));
    }
    for (info, dst) in infos.iter().zip(params.slices_mut()) {
        let name_len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(name_len)?)
            .map_err(|_| Error::Checkpoint("block name is not UTF-8".into()))?;
        let rank = c.u32()? as usize;
        let dims = (0..rank).map(|_| c.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if name != info.name || dims != info.dims {
            return Err(Error::Checkpoint(format!(
                "block {name} {dims:?} does not match expected {} {:?}",
                info.name, info.dims
            )));
        }
        let raw = c.take(dst.len() * 8)?;
        for (x, chunk) in dst.iter_mut().zip(raw.chunks_exact(8)) {
            *x = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    }
    if c.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    FiBiNet::with_params(header.model, header.schema, params)
}

pub fn write_checkpoint(path: impl AsRef<Path>, model: &FiBiNet) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<FiBiNet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
