//! Binary container for named f64 arrays.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "TSRP"  u16 version  u32 meta_len  meta (UTF-8 JSON)
//! u32 count
//! count × { u16 name_len  name  u8 dtype(0 = f64le)  u8 ndim  ndim × u64 dim }
//! raw array data in header order
//! ```
//!
//! Arrays are stored as 2-D; vectors are `1 × n`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const MAGIC: &[u8; 4] = b"TSRP";
pub const VERSION: u16 = 1;
const DTYPE_F64_LE: u8 = 0;

#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub meta: String,
    pub arrays: Vec<(String, Matrix)>,
}

impl Container {
    pub fn new(meta: impl Into<String>) -> Self {
        Container {
            meta: meta.into(),
            arrays: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, m: Matrix) {
        self.arrays.push((name.into(), m));
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.arrays.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    /// The named array, checked against an expected shape.
    pub fn expect(&self, name: &str, shape: (usize, usize)) -> Result<Matrix> {
        let m = self
            .get(name)
            .ok_or_else(|| Error::format(format!("missing array '{name}'")))?;
        if m.shape() != shape {
            return Err(Error::format(format!(
                "array '{name}' has shape {}x{}, expected {}x{}",
                m.rows(),
                m.cols(),
                shape.0,
                shape.1
            )));
        }
        Ok(m.clone())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let meta_len = u32::try_from(self.meta.len()).map_err(|_| Error::format("metadata too large"))?;
        out.extend_from_slice(&meta_len.to_le_bytes());
        out.extend_from_slice(self.meta.as_bytes());
        let count = u32::try_from(self.arrays.len()).map_err(|_| Error::format("too many arrays"))?;
        out.extend_from_slice(&count.to_le_bytes());
        for (name, m) in &self.arrays {
            let len = u16::try_from(name.len()).map_err(|_| Error::format(format!("array name too long: {name}")))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(DTYPE_F64_LE);
            out.push(2);
            out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
        }
        for (_, m) in &self.arrays {
            out.extend_from_slice(&m.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::format("bad magic, not a TSRP container"));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::format(format!("unsupported container version {version}")));
        }
        let meta_len = r.u32()? as usize;
        let meta = std::str::from_utf8(r.take(meta_len)?)
            .map_err(|_| Error::format("metadata is not UTF-8"))?
            .to_string();
        let count = r.u32()? as usize;
        let mut headers = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::format("array name is not UTF-8"))?
                .to_string();
            let dtype = r.u8()?;
            if dtype != DTYPE_F64_LE {
                return Err(Error::format(format!("array '{name}': unsupported dtype {dtype}")));
            }
            let ndim = r.u8()? as usize;
            let mut dims = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                dims.push(usize::try_from(r.u64()?).map_err(|_| Error::format("dimension overflow"))?);
            }
            let (rows, cols) = match dims.as_slice() {
                [n] => (1, *n),
                [a, b] => (*a, *b),
                _ => return Err(Error::format(format!("array '{name}': {ndim}-D arrays are not supported"))),
            };
            headers.push((name, rows, cols));
        }
        let mut arrays = Vec::with_capacity(headers.len());
        for (name, rows, cols) in headers {
            let n = rows
                .checked_mul(cols)
                .and_then(|n| n.checked_mul(8))
                .ok_or_else(|| Error::format("array size overflow"))?;
            let raw = r
                .take(n)
                .map_err(|_| Error::format(format!("truncated data for array '{name}'")))?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            arrays.push((name, Matrix::from_vec(rows, cols, data)?));
        }
        if r.pos != bytes.len() {
            return Err(Error::format("trailing bytes after container data"));
        }
        Ok(Container { meta, arrays })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("truncated container"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Container {
        let mut c = Container::new("{\"k\":1}");
        c.push("a", Matrix::from_vec(2, 2, vec![1.0, -2.0, 3.5, 0.0]).unwrap());
        c.push("b.bias", Matrix::row_vector(&[f64::MIN_POSITIVE, 7.0, 8.0]));
        c
    }

    #[test]
    fn round_trip() {
        let c = sample();
        let back = Container::from_bytes(&c.to_bytes().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn truncation_is_a_format_error() {
        let bytes = sample().to_bytes().unwrap();
        for cut in [0, 3, 10, bytes.len() - 1] {
            assert!(matches!(Container::from_bytes(&bytes[..cut]), Err(Error::Format(_))), "cut {cut}");
        }
    }

    #[test]
    fn expect_checks_name_and_shape() {
        let c = sample();
        assert!(c.expect("a", (2, 2)).is_ok());
        let err = c.expect("a", (1, 4)).unwrap_err().to_string();
        assert!(err.contains("expected 1x4"));
        assert!(c.expect("zzz", (1, 1)).unwrap_err().to_string().contains("zzz"));
    }
}
