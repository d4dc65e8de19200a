//! Binary parameter checkpoints. Layout (all integers little-endian):
//!
//! ```text
//! magic          8 bytes  "MIXAECK\0"
//! version        u32      1
//! scalar_bytes   u32      4 (f32) or 8 (f64)
//! header_len     u32      length of the JSON header that follows
//! header         UTF-8 JSON {"model": ModelConfig, "epoch": u64 | null}
//! tensor_count   u32
//! per tensor     ndim u32, ndim × u64 dims, product(dims) scalars
//! ```
//!
//! Tensors follow [`MixaeParams::tensors`] order. Values are stored in their
//! native width, so a save/load round trip is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mixae, MixaeParams, ModelConfig};
use crate::numerics::Tensor;
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MIXAECK\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    epoch: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint<T> {
    pub model: Mixae<T>,
    pub epoch: Option<u64>,
}

pub fn write_checkpoint<T: Scalar>(model: &Mixae<T>, epoch: Option<u64>) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header {
        model: model.config().clone(),
        epoch,
    })
    .map_err(|e| Error::Input(format!("cannot encode checkpoint header: {e}")))?;
    let tensors = model.params().tensors();
    let mut out = Vec::with_capacity(32 + header.len() + model.params().num_params() * T::BYTES);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(T::BYTES as u32).to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in t.data() {
            v.write_le(&mut out);
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Input(format!("checkpoint truncated while reading {what} at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

/// Parses a checkpoint, converting stored values to `T` when widths differ.
pub fn read_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<Checkpoint<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Input("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Input(format!("unsupported checkpoint version {version}")));
    }
    let width = r.u32("scalar width")? as usize;
    if width != 4 && width != 8 {
        return Err(Error::Input(format!("unsupported scalar width {width}")));
    }
    let header_len = r.u32("header length")? as usize;
    let header: Header = serde_json::from_slice(r.take(header_len, "header")?)
        .map_err(|e| Error::Input(format!("bad checkpoint header: {e}")))?;
    header.model.validate()?;
    let mut params = MixaeParams::<T>::zeros(&header.model);
    let count = r.u32("tensor count")? as usize;
    let mut slots = params.tensors_mut();
    if count != slots.len() {
        return Err(Error::Input(format!(
            "checkpoint holds {count} tensors, configuration needs {}",
            slots.len()
        )));
    }
    for slot in slots.iter_mut() {
        let ndim = r.u32("tensor rank")? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u64("tensor dim")? as usize);
        }
        if shape != slot.shape() {
            return Err(Error::dim("read_checkpoint", &shape, slot.shape()));
        }
        let raw = r.take(slot.len() * width, "tensor data")?;
        let data: Vec<T> = raw
            .chunks_exact(width)
            .map(|c| if width == 8 { T::of(f64::read_le(c)) } else { T::of(f32::read_le(c) as f64) })
            .collect();
        **slot = Tensor::new(shape, data)?;
    }
    drop(slots);
    if r.pos != bytes.len() {
        return Err(Error::Input(format!("{} trailing bytes after checkpoint", bytes.len() - r.pos)));
    }
    Ok(Checkpoint {
        model: Mixae::from_parts(header.model, params)?,
        epoch: header.epoch,
    })
}

pub fn save_checkpoint<T: Scalar>(model: &Mixae<T>, epoch: Option<u64>, path: &Path) -> Result<()> {
    let bytes = write_checkpoint(model, epoch)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Checkpoint<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes)
}
