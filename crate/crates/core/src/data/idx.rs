//! IDX container (the MNIST distribution format).
//!
//! Big-endian. Images: magic `0x00000803`, dims `[count, rows, cols]`;
//! labels: magic `0x00000801`, dims `[count]`; unsigned byte payload.
//! Files ending in `.gz` are decompressed transparently.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;

use super::Image;
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(BufReader::new(file)))
    } else {
        Box::new(BufReader::new(file))
    };
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

fn be_u32(bytes: &[u8], at: usize, kind: &'static str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::Truncated(kind))
}

fn check_magic(bytes: &[u8], expected: u32, kind: &'static str) -> Result<()> {
    let found = be_u32(bytes, 0, kind)?;
    if found != expected {
        return Err(Error::BadMagic {
            kind,
            expected,
            found,
        });
    }
    Ok(())
}

/// Decodes an image file held in memory; pixels are scaled by `1/255`.
pub fn decode_images(bytes: &[u8]) -> Result<Vec<Image>> {
    const KIND: &str = "image";
    check_magic(bytes, IMAGE_MAGIC, KIND)?;
    let count = be_u32(bytes, 4, KIND)? as usize;
    let rows = be_u32(bytes, 8, KIND)? as usize;
    let cols = be_u32(bytes, 12, KIND)? as usize;
    let per_image = rows.checked_mul(cols).ok_or(Error::DimensionOverflow)?;
    let total = count
        .checked_mul(per_image)
        .and_then(|t| t.checked_add(16))
        .ok_or(Error::DimensionOverflow)?;
    if bytes.len() < total {
        return Err(Error::Truncated(KIND));
    }
    bytes[16..total]
        .chunks_exact(per_image.max(1))
        .take(count)
        .map(|px| Image::new(cols, rows, px.iter().map(|&b| b as f64 / 255.0).collect()))
        .collect()
}

pub fn decode_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    const KIND: &str = "label";
    check_magic(bytes, LABEL_MAGIC, KIND)?;
    let count = be_u32(bytes, 4, KIND)? as usize;
    let end = count.checked_add(8).ok_or(Error::DimensionOverflow)?;
    bytes
        .get(8..end)
        .map(<[u8]>::to_vec)
        .ok_or(Error::Truncated(KIND))
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Vec<Image>> {
    decode_images(&read_file(path.as_ref())?)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    decode_labels(&read_file(path.as_ref())?)
}

/// Encodes images as an IDX image file; pixels are quantized to
/// `round(255·p)`. All images must share dimensions.
pub fn encode_images(images: &[Image]) -> Result<Vec<u8>> {
    let (w, h) = images
        .first()
        .map_or((0, 0), |i| (i.width(), i.height()));
    let mut out = Vec::with_capacity(16 + images.len() * w * h);
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(h as u32).to_be_bytes());
    out.extend_from_slice(&(w as u32).to_be_bytes());
    for img in images {
        if (img.width(), img.height()) != (w, h) {
            return Err(Error::InvalidArgument(
                "images in one idx file must share dimensions".into(),
            ));
        }
        out.extend(img.pixels().iter().map(|&p| (p * 255.0).round() as u8));
    }
    Ok(out)
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
