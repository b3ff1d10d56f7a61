//! Template container. All integers and floats are little-endian:
//!
//! ```text
//! magic  b"RLGK"
//! u32    version (1)
//! u64    M, number of points
//! u32    payload stride in bytes
//! u32    N, number of body names
//! N ×    u32 byte length + UTF-8 name
//! M × 3  f64 p_local
//! M × 4  f64 q_local (w, x, y, z)
//! M ×    u32 body index into the name table
//! M × stride payload bytes
//! ```

use std::io::{Read, Write};

use super::{GaussianTemplate, RlgkError};
use crate::linalg::{Quat, Vec3};

pub const MAGIC: [u8; 4] = *b"RLGK";
pub const VERSION: u32 = 1;

pub fn write_template<W: Write>(tmpl: &GaussianTemplate, mut w: W) -> Result<(), RlgkError> {
    tmpl.check()?;
    let mut buf = Vec::with_capacity(32 + tmpl.len() * (60 + tmpl.stride));
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(tmpl.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(tmpl.stride as u32).to_le_bytes());
    buf.extend_from_slice(&(tmpl.body_names.len() as u32).to_le_bytes());
    for n in &tmpl.body_names {
        buf.extend_from_slice(&(n.len() as u32).to_le_bytes());
        buf.extend_from_slice(n.as_bytes());
    }
    for p in &tmpl.p_local {
        for x in p.to_array() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    for q in &tmpl.q_local {
        for x in q.to_array() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    for &k in &tmpl.index_map {
        buf.extend_from_slice(&(k as u32).to_le_bytes());
    }
    buf.extend_from_slice(&tmpl.payload);
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RlgkError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| RlgkError::Format(format!("truncated at byte {}", self.at)))?;
        let s = &self.data[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, RlgkError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, RlgkError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s<const N: usize>(&mut self) -> Result<[f64; N], RlgkError> {
        let b = self.take(8 * N)?;
        Ok(std::array::from_fn(|i| f64::from_le_bytes(b[8 * i..8 * i + 8].try_into().unwrap())))
    }
}

/// Reads a template. Body indices refer to the stored name table; use
/// [`GaussianTemplate::retarget`] to attach it to a model.
pub fn read_template<R: Read>(mut r: R) -> Result<GaussianTemplate, RlgkError> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut c = Cursor { data: &data, at: 0 };
    if c.take(4)? != MAGIC {
        return Err(RlgkError::Format("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(RlgkError::Format(format!("unsupported version {version}")));
    }
    let m = usize::try_from(c.u64()?).map_err(|_| RlgkError::Format("point count overflows".into()))?;
    let stride = c.u32()? as usize;
    let nnames = c.u32()? as usize;
    // every point needs at least 60 bytes, so reject absurd counts early
    if m.checked_mul(60 + stride).is_none_or(|n| n > data.len()) {
        return Err(RlgkError::Format(format!("{m} points do not fit in {} bytes", data.len())));
    }
    let mut body_names = Vec::with_capacity(nnames.min(data.len()));
    for _ in 0..nnames {
        let len = c.u32()? as usize;
        let s = std::str::from_utf8(c.take(len)?).map_err(|e| RlgkError::Format(e.to_string()))?;
        body_names.push(s.to_string());
    }
    let mut p_local = Vec::with_capacity(m);
    for _ in 0..m {
        p_local.push(Vec3::from_array(c.f64s::<3>()?));
    }
    let mut q_local = Vec::with_capacity(m);
    for _ in 0..m {
        q_local.push(Quat::from_array(c.f64s::<4>()?));
    }
    let mut index_map = Vec::with_capacity(m);
    for _ in 0..m {
        index_map.push(c.u32()? as usize);
    }
    let payload = c.take(m * stride)?.to_vec();
    if c.at != data.len() {
        return Err(RlgkError::Format(format!("{} trailing bytes", data.len() - c.at)));
    }
    let t = GaussianTemplate {
        p_local,
        q_local,
        index_map,
        body_names,
        stride,
        payload,
    };
    t.check()?;
    Ok(t)
}
