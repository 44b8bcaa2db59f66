//! Binary grayscale PGM (P5) with maxval 255.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    if pixels.len() != width * height || width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "{} pixels for a {width}x{height} image",
            pixels.len()
        )));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    Ok(out)
}

/// Parses the P5 files written by [`encode_pgm`] (no comments, maxval 255).
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = |m: &str| Error::Format(format!("pgm: {m}"));
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad("only P5 with maxval 255 is supported"));
    }
    let width: usize = fields[1].parse().map_err(|_| bad("width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("height"))?;
    let pixels = &bytes[(pos + 1).min(bytes.len())..];
    if pixels.len() != width * height {
        return Err(bad("payload size does not match header"));
    }
    Ok((width, height, pixels.to_vec()))
}

pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    fs::write(path, encode_pgm(width, height, pixels)?)?;
    Ok(())
}
