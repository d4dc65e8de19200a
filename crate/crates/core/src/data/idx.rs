//! IDX files as published for MNIST: big-endian u32 magic and dimension
//! counts followed by unsigned bytes. Gzip-compressed files are detected by
//! their magic bytes and decompressed transparently.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::scalar::Scalar;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            offset: offset as u64,
            detail: "file ends inside the header".into(),
        })
}

fn payload<'a>(bytes: &'a [u8], header: usize, count: usize, path: &Path) -> Result<&'a [u8]> {
    let need = header + count;
    if bytes.len() < need {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: bytes.len() as u64,
            detail: format!("truncated: header promises {need} bytes, file has {}", bytes.len()),
        });
    }
    if bytes.len() > need {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: need as u64,
            detail: format!("{} unexpected trailing bytes", bytes.len() - need),
        });
    }
    Ok(&bytes[header..])
}

/// Returns `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: 0,
            detail: format!("bad image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        });
    }
    let count = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)? as usize;
    let cols = be_u32(bytes, 12, path)? as usize;
    let data = payload(bytes, 16, count * rows * cols, path)?;
    Ok((count, rows, cols, data.to_vec()))
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: 0,
            detail: format!("bad label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        });
    }
    let count = be_u32(bytes, 4, path)? as usize;
    Ok(payload(bytes, 8, count, path)?.to_vec())
}

/// Images flattened to `rows·cols` features scaled to [0, 1], with labels.
pub fn load_idx<T: Scalar>(images: &Path, labels: &Path) -> Result<Dataset<T>> {
    let (count, rows, cols, pixels) = parse_idx_images(&read_maybe_gz(images)?, images)?;
    let label_bytes = parse_idx_labels(&read_maybe_gz(labels)?, labels)?;
    if label_bytes.len() != count {
        return Err(Error::Input(format!(
            "{} images but {} labels ({} vs {})",
            count,
            label_bytes.len(),
            images.display(),
            labels.display()
        )));
    }
    let scale = T::one() / T::of(255.0);
    let features = Tensor::new(vec![count, rows * cols], pixels.iter().map(|&b| T::of(b as f64) * scale).collect())?;
    let labels: Vec<usize> = label_bytes.iter().map(|&b| b as usize).collect();
    let name = images
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".into());
    Dataset::new(name, features, Some(labels))
}
