//! Binary weight files.
//!
//! Little-endian, no padding:
//!
//! ```text
//! magic       6 bytes  "ECAMW1"
//! version     u32
//! layers      u32
//! per layer:  name_len u32, name (UTF-8), rank u32, dims u32[rank], f64[product(dims)]
//! ```
//!
//! The layer table must match [`SmallCnn::param_specs`] exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::SmallCnn;
use crate::error::{Error, Result};

pub const WEIGHT_MAGIC: &[u8; 6] = b"ECAMW1";
pub const WEIGHT_VERSION: u32 = 1;

pub fn write_weights(model: &SmallCnn, mut out: impl Write) -> Result<()> {
    let specs = SmallCnn::param_specs();
    let mut buf = Vec::with_capacity(64 + 8 * model.param_count());
    buf.extend_from_slice(WEIGHT_MAGIC);
    buf.extend_from_slice(&WEIGHT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(specs.len() as u32).to_le_bytes());
    for (spec, values) in specs.iter().zip(model.params()) {
        buf.extend_from_slice(&(spec.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(spec.name.as_bytes());
        buf.extend_from_slice(&(spec.dims.len() as u32).to_le_bytes());
        for &d in &spec.dims {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn save_weights(model: &SmallCnn, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::new();
    write_weights(model, &mut bytes)?;
    fs::write(path, bytes)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::WeightFormat(format!(
                "truncated while reading {what} at byte {}",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }
}

pub fn read_weights(mut input: impl Read) -> Result<SmallCnn> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };

    if cur.take(WEIGHT_MAGIC.len(), "magic")? != WEIGHT_MAGIC {
        return Err(Error::WeightFormat("bad magic, expected \"ECAMW1\"".into()));
    }
    let version = cur.u32("version")?;
    if version != WEIGHT_VERSION {
        return Err(Error::WeightFormat(format!("unsupported version {version}")));
    }
    let specs = SmallCnn::param_specs();
    let count = cur.u32("layer count")? as usize;
    if count != specs.len() {
        return Err(Error::WeightFormat(format!(
            "expected {} layers, file declares {count}",
            specs.len()
        )));
    }

    let mut model = SmallCnn::zeros();
    for (spec, dst) in specs.iter().zip(model.params_mut()) {
        let name_len = cur.u32("name length")? as usize;
        let name = std::str::from_utf8(cur.take(name_len, "layer name")?)
            .map_err(|_| Error::WeightFormat("layer name is not UTF-8".into()))?;
        if name != spec.name {
            return Err(Error::WeightFormat(format!("expected layer {:?}, found {name:?}", spec.name)));
        }
        let rank = cur.u32("rank")? as usize;
        let mut dims = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            dims.push(cur.u32("dims")? as usize);
        }
        if dims != spec.dims {
            return Err(Error::WeightFormat(format!(
                "layer {name}: expected dims {:?}, found {dims:?}",
                spec.dims
            )));
        }
        let payload = cur.take(8 * spec.len(), "payload")?;
        for (d, chunk) in dst.iter_mut().zip(payload.chunks_exact(8)) {
            *d = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    }
    if cur.pos != bytes.len() {
        return Err(Error::WeightFormat(format!(
            "{} trailing bytes after last layer",
            bytes.len() - cur.pos
        )));
    }
    if !model.is_finite() {
        return Err(Error::WeightFormat("non-finite weight value".into()));
    }
    Ok(model)
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<SmallCnn> {
    read_weights(fs::File::open(path)?)
}
