//! Little-endian binary formats shared with external tools.
//!
//! Mask file (`CMSK`):
//!
//! ```text
//! magic   [u8; 4] = "CMSK"
//! version u32     = 1
//! kind    u8      0 = complex, 1 = real
//! frames  u32     T
//! bins    u32     F
//! payload f32     row-major [t][f]; complex values as interleaved (re, im)
//! ```
//!
//! WPE filter sidecar (`WPEF`) uses the same layout with `frames` replaced by
//! the bin count F and `bins` by the tap count L; the payload is complex.
//!
//! Feature tensor (`FEAT`):
//!
//! ```text
//! magic   [u8; 4] = "FEAT"
//! version u32     = 1
//! ndim    u32
//! dims    u32 * ndim
//! payload f32     row-major
//! ```

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayD, IxDyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::masking::{ComplexMask, RealMask, CLIP_MAGNITUDE, REAL_MASK_MAX};
use crate::wpe::WpeFilter;

pub const MASK_MAGIC: &[u8; 4] = b"CMSK";
pub const FILTER_MAGIC: &[u8; 4] = b"WPEF";
pub const FEATURE_MAGIC: &[u8; 4] = b"FEAT";
pub const FORMAT_VERSION: u32 = 1;

const KIND_COMPLEX: u8 = 0;
const KIND_REAL: u8 = 1;

/// Decoded contents of a mask file.
#[derive(Clone, Debug, PartialEq)]
pub enum MaskFile {
    Complex(Array2<Complex64>),
    Real(Array2<f64>),
}

impl MaskFile {
    pub fn into_complex(self, path: &Path) -> Result<ComplexMask> {
        match self {
            MaskFile::Complex(v) => ComplexMask::new(v, CLIP_MAGNITUDE),
            MaskFile::Real(_) => Err(format_error(path, "expected a complex mask, found a real mask")),
        }
    }

    pub fn into_real(self, path: &Path) -> Result<RealMask> {
        match self {
            MaskFile::Real(v) => RealMask::new(v, REAL_MASK_MAX),
            MaskFile::Complex(_) => Err(format_error(path, "expected a real mask, found a complex mask")),
        }
    }
}

fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f32(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&(v as f32).to_le_bytes());
}

fn dim_u32(v: usize) -> u32 {
    u32::try_from(v).expect("tensor dimension exceeds u32")
}

fn encode_2d_header(magic: &[u8; 4], kind: u8, rows: usize, cols: usize) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(magic);
    push_u32(&mut buf, FORMAT_VERSION);
    buf.push(kind);
    push_u32(&mut buf, dim_u32(rows));
    push_u32(&mut buf, dim_u32(cols));
    buf
}

pub fn encode_complex_mask(mask: &ComplexMask) -> Vec<u8> {
    let (t, f) = mask.shape();
    let mut buf = encode_2d_header(MASK_MAGIC, KIND_COMPLEX, t, f);
    for v in mask.values().iter() {
        push_f32(&mut buf, v.re);
        push_f32(&mut buf, v.im);
    }
    buf
}

pub fn encode_real_mask(mask: &RealMask) -> Vec<u8> {
    let (t, f) = mask.shape();
    let mut buf = encode_2d_header(MASK_MAGIC, KIND_REAL, t, f);
    for &v in mask.values().iter() {
        push_f32(&mut buf, v);
    }
    buf
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        match end {
            Some(end) => {
                let s = &self.data[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(format_error(self.path, "truncated file")),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f64> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()) as f64)
    }

    fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4)? != magic {
            return Err(format_error(
                self.path,
                format!("bad magic, expected {:?}", String::from_utf8_lossy(magic)),
            ));
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(format_error(self.path, format!("unsupported version {version}")));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(format_error(self.path, "trailing bytes after payload"));
        }
        Ok(())
    }
}

fn decode_complex_2d(cur: &mut Cursor<'_>, rows: usize, cols: usize) -> Result<Array2<Complex64>> {
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re = cur.f32()?;
        let im = cur.f32()?;
        values.push(Complex64::new(re, im));
    }
    Ok(Array2::from_shape_vec((rows, cols), values).unwrap())
}

pub fn decode_mask(data: &[u8], path: &Path) -> Result<MaskFile> {
    let mut cur = Cursor { data, pos: 0, path };
    cur.expect_magic(MASK_MAGIC)?;
    let kind = cur.u8()?;
    let t = cur.u32()? as usize;
    let f = cur.u32()? as usize;
    let mask = match kind {
        KIND_COMPLEX => MaskFile::Complex(decode_complex_2d(&mut cur, t, f)?),
        KIND_REAL => {
            let mut values = Vec::with_capacity(t * f);
            for _ in 0..t * f {
                values.push(cur.f32()?);
            }
            MaskFile::Real(Array2::from_shape_vec((t, f), values).unwrap())
        }
        other => return Err(format_error(path, format!("unknown mask kind {other}"))),
    };
    cur.finish()?;
    Ok(mask)
}

pub fn write_complex_mask(path: impl AsRef<Path>, mask: &ComplexMask) -> Result<()> {
    Ok(fs::write(path, encode_complex_mask(mask))?)
}

pub fn write_real_mask(path: impl AsRef<Path>, mask: &RealMask) -> Result<()> {
    Ok(fs::write(path, encode_real_mask(mask))?)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<MaskFile> {
    let path = path.as_ref();
    decode_mask(&fs::read(path)?, path)
}

pub fn encode_filter(filter: &WpeFilter) -> Vec<u8> {
    let (f, l) = filter.weights.dim();
    let mut buf = encode_2d_header(FILTER_MAGIC, KIND_COMPLEX, f, l);
    for v in filter.weights.iter() {
        push_f32(&mut buf, v.re);
        push_f32(&mut buf, v.im);
    }
    buf
}

/// Reads a filter sidecar back as `[bin, tap]` weights.
pub fn decode_filter(data: &[u8], path: &Path) -> Result<Array2<Complex64>> {
    let mut cur = Cursor { data, pos: 0, path };
    cur.expect_magic(FILTER_MAGIC)?;
    if cur.u8()? != KIND_COMPLEX {
        return Err(format_error(path, "filter payload must be complex"));
    }
    let f = cur.u32()? as usize;
    let l = cur.u32()? as usize;
    let w = decode_complex_2d(&mut cur, f, l)?;
    cur.finish()?;
    Ok(w)
}

pub fn write_filter(path: impl AsRef<Path>, filter: &WpeFilter) -> Result<()> {
    Ok(fs::write(path, encode_filter(filter))?)
}

pub fn encode_feature(tensor: &ArrayD<f64>) -> Vec<u8> {
    let mut buf = Vec::with_capacity(12 + 4 * tensor.ndim() + 4 * tensor.len());
    buf.extend_from_slice(FEATURE_MAGIC);
    push_u32(&mut buf, FORMAT_VERSION);
    push_u32(&mut buf, dim_u32(tensor.ndim()));
    for &d in tensor.shape() {
        push_u32(&mut buf, dim_u32(d));
    }
    // Iteration over an ArrayD follows logical row-major order.
    for &v in tensor.iter() {
        push_f32(&mut buf, v);
    }
    buf
}

pub fn decode_feature(data: &[u8], path: &Path) -> Result<ArrayD<f64>> {
    let mut cur = Cursor { data, pos: 0, path };
    cur.expect_magic(FEATURE_MAGIC)?;
    let ndim = cur.u32()? as usize;
    let dims = (0..ndim)
        .map(|_| cur.u32().map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let len: usize = dims.iter().product();
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        values.push(cur.f32()?);
    }
    cur.finish()?;
    Ok(ArrayD::from_shape_vec(IxDyn(&dims), values).unwrap())
}

pub fn write_feature(path: impl AsRef<Path>, tensor: &ArrayD<f64>) -> Result<()> {
    Ok(fs::write(path, encode_feature(tensor))?)
}

pub fn read_feature(path: impl AsRef<Path>) -> Result<ArrayD<f64>> {
    let path = path.as_ref();
    decode_feature(&fs::read(path)?, path)
}
