//! IDX files as distributed for MNIST (optionally gzip-compressed).

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::net::{FeatureVector, Shape};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::malformed(path, format!("gzip: {e}")))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::malformed(path, "truncated header"))
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Raw images as `(height, width, pixels)`, one byte per pixel.
pub fn read_idx_images(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<Vec<u8>>)> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    check_magic(&bytes, IMAGES_MAGIC, path)?;
    let count = be_u32(&bytes, 4, path)? as usize;
    let rows = be_u32(&bytes, 8, path)? as usize;
    let cols = be_u32(&bytes, 12, path)? as usize;
    let size = rows * cols;
    let payload = &bytes[16..];
    if payload.len() < count * size {
        return Err(Error::malformed(
            path,
            format!("truncated payload: {} of {} pixel bytes", payload.len(), count * size),
        ));
    }
    let images = payload[..count * size].chunks(size.max(1)).take(count).map(<[u8]>::to_vec).collect();
    Ok((rows, cols, images))
}

pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    check_magic(&bytes, LABELS_MAGIC, path)?;
    let count = be_u32(&bytes, 4, path)? as usize;
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(Error::malformed(
            path,
            format!("truncated payload: {} of {count} labels", payload.len()),
        ));
    }
    Ok(payload[..count].to_vec())
}

/// Images scaled to `[0, 1]` by `/255`, shaped `Image(rows, cols)`.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>, split: Split) -> Result<Dataset> {
    let (rows, cols, images) = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    if images.len() != labels.len() {
        return Err(Error::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    let shape = Shape::Image {
        height: rows,
        width: cols,
    };
    let instances = images
        .into_iter()
        .map(|px| FeatureVector::with_shape(px.into_iter().map(|p| p as f64 / 255.0).collect(), shape))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(instances, labels.into_iter().map(usize::from).collect(), split)
}

/// Pixel value in `[0, 1]` to its display byte (clamped, rounded).
pub fn to_byte(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Uncompressed IDX writer, mainly for debugging and tests.
pub fn write_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let (rows, cols) = match ds.shape() {
        Some(Shape::Image { height, width }) => (height, width),
        Some(Shape::Flat(_)) => return Err(Error::NotImage),
        None => (0, 0),
    };
    let mut img = Vec::with_capacity(16 + ds.len() * rows * cols);
    for v in [IMAGES_MAGIC, ds.len() as u32, rows as u32, cols as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    for x in ds.instances() {
        img.extend(x.values().iter().map(|&v| to_byte(v)));
    }
    let mut lab = Vec::with_capacity(8 + ds.len());
    for v in [LABELS_MAGIC, ds.len() as u32] {
        lab.extend_from_slice(&v.to_be_bytes());
    }
    for &y in ds.labels() {
        lab.push(u8::try_from(y).map_err(|_| Error::InvalidClass { class: y, classes: 256 })?);
    }
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    fs::write(ip, img).map_err(|e| Error::io(ip, e))?;
    fs::write(lp, lab).map_err(|e| Error::io(lp, e))
}
