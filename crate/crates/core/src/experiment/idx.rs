//! IDX (MNIST-style binary) to CSV conversion: flattened pixels scaled to
//! [0,1] with the label appended as the last column.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::IdxFormat(format!("truncated {what}")))
}

/// Converts an IDX image/label file pair into one CSV.
///
/// Returns `(rows, pixels_per_row)`.
pub fn convert_idx_to_csv(
    images_path: &Path,
    labels_path: &Path,
    out_csv: &Path,
    header: bool,
) -> Result<(usize, usize)> {
    let images = std::fs::read(images_path)?;
    let labels = std::fs::read(labels_path)?;

    let magic = read_u32(&images, 0, "image header")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::IdxFormat(format!(
            "bad image magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}"
        )));
    }
    let n = read_u32(&images, 4, "image count")? as usize;
    let rows = read_u32(&images, 8, "image rows")? as usize;
    let cols = read_u32(&images, 12, "image cols")? as usize;
    let pixels = rows * cols;
    if images.len() != 16 + n * pixels {
        return Err(Error::IdxFormat(format!(
            "image payload is {} bytes, expected {}",
            images.len() - 16.min(images.len()),
            n * pixels
        )));
    }

    let label_magic = read_u32(&labels, 0, "label header")?;
    if label_magic != LABELS_MAGIC {
        return Err(Error::IdxFormat(format!(
            "bad label magic 0x{label_magic:08x}, expected 0x{LABELS_MAGIC:08x}"
        )));
    }
    let n_labels = read_u32(&labels, 4, "label count")? as usize;
    if n_labels != n {
        return Err(Error::IdxFormat(format!(
            "{n} images but {n_labels} labels"
        )));
    }
    if labels.len() != 8 + n {
        return Err(Error::IdxFormat("truncated label payload".into()));
    }

    let mut out = std::io::BufWriter::new(std::fs::File::create(out_csv)?);
    if header {
        for p in 0..pixels {
            write!(out, "px{p},")?;
        }
        writeln!(out, "label")?;
    }
    for i in 0..n {
        let start = 16 + i * pixels;
        for &byte in &images[start..start + pixels] {
            // exact dyadic scaling keeps the CSV short and lossless
            write!(out, "{},", byte as f64 / 255.0)?;
        }
        writeln!(out, "{}", labels[8 + i])?;
    }
    Ok((n, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_csv, CsvOptions};

    fn idx_pair(n: usize, side: usize, pixel: impl Fn(usize, usize) -> u8) -> (Vec<u8>, Vec<u8>) {
        let mut images = Vec::new();
        images.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
        images.extend_from_slice(&(n as u32).to_be_bytes());
        images.extend_from_slice(&(side as u32).to_be_bytes());
        images.extend_from_slice(&(side as u32).to_be_bytes());
        for i in 0..n {
            for p in 0..side * side {
                images.push(pixel(i, p));
            }
        }
        let mut labels = Vec::new();
        labels.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        labels.extend_from_slice(&(n as u32).to_be_bytes());
        for i in 0..n {
            labels.push((i % 10) as u8);
        }
        (images, labels)
    }

    #[test]
    fn converts_and_scales() {
        let dir = tempfile::tempdir().unwrap();
        let (images, labels) = idx_pair(3, 2, |i, p| if p == 0 { 255 } else { i as u8 });
        let images_path = dir.path().join("img.idx");
        let labels_path = dir.path().join("lab.idx");
        let csv_path = dir.path().join("out.csv");
        std::fs::write(&images_path, images).unwrap();
        std::fs::write(&labels_path, labels).unwrap();
        let (n, pixels) =
            convert_idx_to_csv(&images_path, &labels_path, &csv_path, false).unwrap();
        assert_eq!((n, pixels), (3, 4));
        let (data, _) = load_csv(&csv_path, &CsvOptions::label_index(4, false)).unwrap();
        assert_eq!(data.n_samples(), 3);
        assert_eq!(data.dim(), 4);
        assert_eq!(data.features()[[0, 0]], 1.0); // 255 scales to exactly 1
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let (mut images, labels) = idx_pair(2, 2, |_, _| 7);
        images[0] = 0xFF;
        let a = dir.path().join("a.idx");
        let b = dir.path().join("b.idx");
        let out = dir.path().join("o.csv");
        std::fs::write(&a, &images).unwrap();
        std::fs::write(&b, &labels).unwrap();
        assert!(matches!(
            convert_idx_to_csv(&a, &b, &out, false),
            Err(Error::IdxFormat(_))
        ));

        let (images, labels) = idx_pair(2, 2, |_, _| 7);
        std::fs::write(&a, &images[..images.len() - 1]).unwrap();
        std::fs::write(&b, &labels).unwrap();
        assert!(matches!(
            convert_idx_to_csv(&a, &b, &out, false),
            Err(Error::IdxFormat(_))
        ));
    }
}
