//! Minimal PNG writer: 8-bit RGB, zlib stream with stored (uncompressed)
//! deflate blocks. No compression stack; the grid CSV is the primary
//! artifact and the image is a convenience rendering.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

fn crc32(data: &[u8]) -> u32 {
    // IEEE polynomial, bitwise
    let mut crc = 0xFFFF_FFFFu32;
    for &byte in data {
        crc ^= byte as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

fn adler32(data: &[u8]) -> u32 {
    const MOD: u32 = 65_521;
    let mut a = 1u32;
    let mut b = 0u32;
    for chunk in data.chunks(5550) {
        for &byte in chunk {
            a += byte as u32;
            b += a;
        }
        a %= MOD;
        b %= MOD;
    }
    (b << 16) | a
}

fn write_chunk(out: &mut impl Write, kind: &[u8; 4], data: &[u8]) -> std::io::Result<()> {
    out.write_all(&(data.len() as u32).to_be_bytes())?;
    out.write_all(kind)?;
    out.write_all(data)?;
    let mut crc_input = kind.to_vec();
    crc_input.extend_from_slice(data);
    out.write_all(&crc32(&crc_input).to_be_bytes())
}

/// Writes row-major RGB pixels (`3 * width * height` bytes) as a PNG.
pub fn write_rgb_png(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("resolution", "zero-sized image"));
    }
    if pixels.len() != 3 * width * height {
        return Err(Error::invalid(
            "pixels",
            format!(
                "expected {} bytes, got {}",
                3 * width * height,
                pixels.len()
            ),
        ));
    }

    // raw stream: one filter byte (0 = None) before each scanline
    let stride = 3 * width;
    let mut raw = Vec::with_capacity(height * (stride + 1));
    for row in 0..height {
        raw.push(0u8);
        raw.extend_from_slice(&pixels[row * stride..(row + 1) * stride]);
    }

    // zlib wrapper with stored deflate blocks
    let mut zlib = vec![0x78u8, 0x01];
    let mut chunks = raw.chunks(0xFFFF).peekable();
    while let Some(block) = chunks.next() {
        let last = chunks.peek().is_none();
        zlib.push(u8::from(last));
        let len = block.len() as u16;
        zlib.extend_from_slice(&len.to_le_bytes());
        zlib.extend_from_slice(&(!len).to_le_bytes());
        zlib.extend_from_slice(block);
    }
    zlib.extend_from_slice(&adler32(&raw).to_be_bytes());

    let mut ihdr = Vec::with_capacity(13);
    ihdr.extend_from_slice(&(width as u32).to_be_bytes());
    ihdr.extend_from_slice(&(height as u32).to_be_bytes());
    ihdr.extend_from_slice(&[8, 2, 0, 0, 0]); // depth 8, RGB, default flags

    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(&PNG_SIGNATURE)?;
    write_chunk(&mut out, b"IHDR", &ihdr)?;
    write_chunk(&mut out, b"IDAT", &zlib)?;
    write_chunk(&mut out, b"IEND", &[])?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crc32_known_vector() {
        // CRC-32 of "123456789"
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn adler32_known_vector() {
        // Adler-32 of "Wikipedia"
        assert_eq!(adler32(b"Wikipedia"), 0x11E6_0398);
    }

    #[test]
    fn writes_a_wellformed_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.png");
        let pixels = vec![255u8, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30];
        write_rgb_png(&path, 2, 2, &pixels).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], &PNG_SIGNATURE);
        assert_eq!(&bytes[12..16], b"IHDR");
        assert!(bytes.windows(4).any(|w| w == b"IDAT"));
        assert_eq!(&bytes[bytes.len() - 8..bytes.len() - 4], b"IEND");
    }

    #[test]
    fn rejects_bad_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.png");
        assert!(write_rgb_png(&path, 2, 2, &[0u8; 5]).is_err());
        assert!(write_rgb_png(&path, 0, 2, &[]).is_err());
    }

    #[test]
    fn large_image_splits_deflate_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wide.png");
        let width = 300;
        let height = 100; // raw stream > 64 KiB forces multiple blocks
        let pixels = vec![128u8; 3 * width * height];
        write_rgb_png(&path, width, height, &pixels).unwrap();
        assert!(std::fs::metadata(&path).unwrap().len() > 64 * 1024);
    }
}
