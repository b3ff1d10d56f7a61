//! PLY point import, ASCII and binary little-endian.
//!
//! Only the `vertex` element is read. `x`, `y`, `z` become positions with
//! identity orientation; every other vertex property is kept as payload,
//! encoded little-endian in its declared type, so both encodings give
//! identical payload bytes.

use super::{PointCloud, RlgkError};
use crate::linalg::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlyType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn parse(s: &str) -> Option<PlyType> {
        Some(match s {
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            _ => return None,
        })
    }

    pub fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            PlyType::I8 => b[0] as i8 as f64,
            PlyType::U8 => b[0] as f64,
            PlyType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyType::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyType::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyType::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }

    fn encode(self, tok: &str, out: &mut Vec<u8>) -> Result<(), RlgkError> {
        let bad = || RlgkError::Format(format!("bad {self:?} value {tok:?}"));
        macro_rules! num {
            ($t:ty) => {
                out.extend_from_slice(&tok.parse::<$t>().map_err(|_| bad())?.to_le_bytes())
            };
        }
        match self {
            PlyType::I8 => num!(i8),
            PlyType::U8 => num!(u8),
            PlyType::I16 => num!(i16),
            PlyType::U16 => num!(u16),
            PlyType::I32 => num!(i32),
            PlyType::U32 => num!(u32),
            PlyType::F32 => num!(f32),
            PlyType::F64 => num!(f64),
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlyProperty {
    pub name: String,
    pub ty: PlyType,
}

struct Element {
    name: String,
    count: usize,
    props: Vec<PlyProperty>,
    has_list: bool,
}

/// Reads the vertices of a PLY file. Returns the cloud and the payload
/// layout (the non-position properties in order).
pub fn read_ply(data: &[u8]) -> Result<(PointCloud, Vec<PlyProperty>), RlgkError> {
    let fmt = |m: String| RlgkError::Format(m);
    let end = data
        .windows(11)
        .position(|w| w == b"end_header\n" || w.starts_with(b"end_header\r"))
        .ok_or_else(|| fmt("missing end_header".into()))?;
    let header = std::str::from_utf8(&data[..end]).map_err(|e| fmt(e.to_string()))?;
    let mut body = &data[end + 10..];
    if body.first() == Some(&b'\r') {
        body = &body[1..];
    }
    if body.first() == Some(&b'\n') {
        body = &body[1..];
    }
    let mut lines = header.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(fmt("not a PLY file".into()));
    }
    let mut binary = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            ["format", "ascii", _] => binary = Some(false),
            ["format", "binary_little_endian", _] => binary = Some(true),
            ["format", other, _] => return Err(fmt(format!("unsupported PLY format {other}"))),
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| fmt(format!("bad element count {count:?}")))?,
                props: Vec::new(),
                has_list: false,
            }),
            ["property", "list", ..] => {
                elements.last_mut().ok_or_else(|| fmt("property before element".into()))?.has_list = true;
            }
            ["property", ty, name] => {
                let ty = PlyType::parse(ty).ok_or_else(|| fmt(format!("unknown property type {ty}")))?;
                let e = elements.last_mut().ok_or_else(|| fmt("property before element".into()))?;
                e.props.push(PlyProperty {
                    name: name.to_string(),
                    ty,
                });
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            _ => return Err(fmt(format!("unrecognized header line {line:?}"))),
        }
    }
    let binary = binary.ok_or_else(|| fmt("missing format line".into()))?;
    let vi = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| fmt("no vertex element".into()))?;
    let v = &elements[vi];
    if v.has_list {
        return Err(fmt("list properties on vertices are not supported".into()));
    }
    let find = |n: &str| {
        v.props
            .iter()
            .position(|p| p.name == n)
            .ok_or_else(|| fmt(format!("vertex property {n} missing")))
    };
    let xyz = [find("x")?, find("y")?, find("z")?];
    let extra: Vec<PlyProperty> = v
        .props
        .iter()
        .enumerate()
        .filter(|(i, _)| !xyz.contains(i))
        .map(|(_, p)| p.clone())
        .collect();
    let stride: usize = extra.iter().map(|p| p.ty.size()).sum();
    let mut cloud = PointCloud {
        positions: Vec::with_capacity(v.count.min(data.len())),
        orientations: Vec::new(),
        stride,
        payload: Vec::new(),
    };

    if binary {
        let mut at = 0;
        for e in &elements[..vi] {
            if e.has_list {
                return Err(fmt(format!("cannot skip list element {} before vertices", e.name)));
            }
            at += e.count * e.props.iter().map(|p| p.ty.size()).sum::<usize>();
        }
        let rec: usize = v.props.iter().map(|p| p.ty.size()).sum();
        let need = v.count.checked_mul(rec).and_then(|n| n.checked_add(at));
        if need.is_none_or(|n| n > body.len()) {
            return Err(fmt("vertex data truncated".into()));
        }
        for r in body[at..at + v.count * rec].chunks_exact(rec) {
            let mut xs = [0.0; 3];
            let mut off = 0;
            for (i, p) in v.props.iter().enumerate() {
                let b = &r[off..off + p.ty.size()];
                match xyz.iter().position(|&k| k == i) {
                    Some(a) => xs[a] = p.ty.decode(b),
                    None => cloud.payload.extend_from_slice(b),
                }
                off += p.ty.size();
            }
            cloud.positions.push(Vec3::from_array(xs));
        }
    } else {
        let text = std::str::from_utf8(body).map_err(|e| fmt(e.to_string()))?;
        let mut rows = text.lines().filter(|l| !l.trim().is_empty());
        for e in &elements[..vi] {
            for _ in 0..e.count {
                rows.next().ok_or_else(|| fmt(format!("element {} truncated", e.name)))?;
            }
        }
        for n in 0..v.count {
            let row = rows.next().ok_or_else(|| fmt(format!("vertex {n} missing")))?;
            let toks: Vec<&str> = row.split_whitespace().collect();
            if toks.len() != v.props.len() {
                return Err(fmt(format!("vertex {n} has {} values, expected {}", toks.len(), v.props.len())));
            }
            let mut xs = [0.0; 3];
            for (i, (p, tok)) in v.props.iter().zip(&toks).enumerate() {
                match xyz.iter().position(|&k| k == i) {
                    Some(a) => xs[a] = tok.parse().map_err(|_| fmt(format!("bad coordinate {tok:?}")))?,
                    None => p.ty.encode(tok, &mut cloud.payload)?,
                }
            }
            cloud.positions.push(Vec3::from_array(xs));
        }
    }
    cloud.orientations = vec![crate::linalg::Quat::IDENTITY; cloud.positions.len()];
    Ok((cloud, extra))
}
