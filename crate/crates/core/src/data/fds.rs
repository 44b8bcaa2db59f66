//! FDS file format, little-endian, no padding:
//!
//! ```text
//! "FDS1"
//! u32 N, H, W, C, K
//! K x (u32 cardinality, u8 name length, name bytes)
//! N*K x u16 factor values (row-major)
//! N*H*W*C x u8 pixels
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::FactorDataset;
use crate::error::{Error, Result};

pub const FDS_MAGIC: &[u8; 4] = b"FDS1";

pub fn write_fds<W: Write>(ds: &FactorDataset, mut out: W) -> Result<()> {
    ds.validate()?;
    let u32_of = |v: usize, what: &str| u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} exceeds u32")));
    let mut buf = Vec::with_capacity(24 + ds.factors.len() * 2 + ds.images.len());
    buf.extend_from_slice(FDS_MAGIC);
    for (v, what) in [
        (ds.len(), "N"),
        (ds.height, "H"),
        (ds.width, "W"),
        (ds.channels, "C"),
        (ds.num_factors(), "K"),
    ] {
        buf.extend_from_slice(&u32_of(v, what)?.to_le_bytes());
    }
    for (card, name) in ds.cardinalities.iter().zip(&ds.names) {
        buf.extend_from_slice(&u32_of(*card, "cardinality")?.to_le_bytes());
        let bytes = name.as_bytes();
        let len = u8::try_from(bytes.len())
            .map_err(|_| Error::Format(format!("factor name `{name}` longer than 255 bytes")))?;
        buf.push(len);
        buf.extend_from_slice(bytes);
    }
    for v in &ds.factors {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&ds.images);
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated while reading {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }
}

pub fn read_fds<R: Read>(mut input: R) -> Result<FactorDataset> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let mut cur = Cursor { buf: &buf, pos: 0 };
    if cur.take(4, "magic")? != FDS_MAGIC {
        return Err(Error::Format("bad magic, not an FDS1 file".into()));
    }
    let n = cur.u32("N")?;
    let height = cur.u32("H")?;
    let width = cur.u32("W")?;
    let channels = cur.u32("C")?;
    let k = cur.u32("K")?;
    let mut cardinalities = Vec::with_capacity(k.min(1024));
    let mut names = Vec::with_capacity(k.min(1024));
    for _ in 0..k {
        cardinalities.push(cur.u32("cardinality")?);
        let len = cur.take(1, "name length")?[0] as usize;
        let name = cur.take(len, "factor name")?;
        names.push(String::from_utf8(name.to_vec()).map_err(|_| Error::Format("factor name is not UTF-8".into()))?);
    }
    let product = cardinalities.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
    if product != Some(n) {
        return Err(Error::Format(format!(
            "header declares N={n} but cardinalities {cardinalities:?} give {product:?}"
        )));
    }
    let n_factor = n
        .checked_mul(k)
        .and_then(|v| v.checked_mul(2))
        .ok_or_else(|| Error::Format("factor table size overflows".into()))?;
    let factors = cur
        .take(n_factor, "factor table")?
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    let n_pix = [height, width, channels]
        .iter()
        .try_fold(n, |acc, &v| acc.checked_mul(v))
        .ok_or_else(|| Error::Format("pixel payload size overflows".into()))?;
    let images = cur.take(n_pix, "pixels")?.to_vec();
    if cur.pos != buf.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            buf.len() - cur.pos
        )));
    }
    let ds = FactorDataset {
        height,
        width,
        channels,
        images,
        factors,
        cardinalities,
        names,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn save_fds(ds: &FactorDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::new();
    write_fds(ds, &mut bytes)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_fds(path: impl AsRef<Path>) -> Result<FactorDataset> {
    read_fds(fs::File::open(path)?)
}
