//! `.cfield` / `.rfield` dumps: `key: value` text header terminated by an
//! `end_header` line, then little-endian f64 samples in row-major order
//! (re, im pairs for complex fields).

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use super::grid::{Axis, Boundary, SpatialGrid};
use super::values::{ComplexField, RealField};
use crate::error::{Error, Result};
use crate::io::{atomic_write, fmt_f64, unix_timestamp, FORMAT_VERSION};

const END_HEADER: &str = "end_header\n";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DumpKind {
    Complex,
    Real,
}

impl DumpKind {
    pub fn extension(self) -> &'static str {
        match self {
            DumpKind::Complex => "cfield",
            DumpKind::Real => "rfield",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DumpHeader {
    pub kind: DumpKind,
    pub name: String,
    pub grid: SpatialGrid,
    pub hbar: f64,
    pub time: f64,
    pub config_hash: String,
    pub timestamp: u64,
}

/// Metadata attached to a dump besides the grid.
#[derive(Clone, Debug, Default)]
pub struct DumpMeta<'a> {
    pub name: &'a str,
    pub hbar: f64,
    pub time: f64,
    pub config_hash: &'a str,
}

fn list<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn header_text(kind: DumpKind, grid: &SpatialGrid, meta: &DumpMeta) -> String {
    let axes = grid.axes();
    format!(
        "format: bohmflow-field\nversion: {FORMAT_VERSION}\nkind: {}\nfield: {}\ndims: {}\nlower: {}\nupper: {}\nboundary: {}\nhbar: {}\ntime: {}\nconfig_hash: {}\ntimestamp: {}\n{END_HEADER}",
        match kind {
            DumpKind::Complex => "complex",
            DumpKind::Real => "real",
        },
        meta.name,
        list(axes.iter().map(|a| a.points)),
        list(axes.iter().map(|a| fmt_f64(a.lower))),
        list(axes.iter().map(|a| fmt_f64(a.upper))),
        grid.boundary(),
        fmt_f64(meta.hbar),
        fmt_f64(meta.time),
        meta.config_hash,
        unix_timestamp(),
    )
}

pub fn encode_complex(field: &ComplexField, meta: &DumpMeta) -> Vec<u8> {
    let mut out = header_text(DumpKind::Complex, field.grid(), meta).into_bytes();
    out.reserve(field.len() * 16);
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn encode_real(field: &RealField, meta: &DumpMeta) -> Vec<u8> {
    let mut out = header_text(DumpKind::Real, field.grid(), meta).into_bytes();
    out.reserve(field.len() * 8);
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_complex(path: &Path, field: &ComplexField, meta: &DumpMeta) -> Result<()> {
    atomic_write(path, &encode_complex(field, meta))
}

pub fn write_real(path: &Path, field: &RealField, meta: &DumpMeta) -> Result<()> {
    atomic_write(path, &encode_real(field, meta))
}

fn split_header<'a>(bytes: &'a [u8], path: &Path) -> Result<(&'a str, &'a [u8])> {
    let marker = END_HEADER.as_bytes();
    let pos = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| format_err(path, "missing end_header line"))?;
    let text = std::str::from_utf8(&bytes[..pos]).map_err(|_| format_err(path, "header is not UTF-8"))?;
    Ok((text, &bytes[pos + marker.len()..]))
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn parse_header(text: &str, path: &Path) -> Result<DumpHeader> {
    let get = |key: &str| -> Result<String> {
        text.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(':')))
            .map(|v| v.trim().to_string())
            .ok_or_else(|| format_err(path, format!("missing header key `{key}`")))
    };
    if get("format")? != "bohmflow-field" {
        return Err(format_err(path, "not a bohmflow field dump"));
    }
    let kind = match get("kind")?.as_str() {
        "complex" => DumpKind::Complex,
        "real" => DumpKind::Real,
        other => return Err(format_err(path, format!("unknown kind `{other}`"))),
    };
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| format_err(path, format!("bad number `{s}`"))) };
    let dims: Vec<usize> = get("dims")?
        .split(',')
        .map(|s| s.parse().map_err(|_| format_err(path, format!("bad dimension `{s}`"))))
        .collect::<Result<_>>()?;
    let lower: Vec<f64> = get("lower")?.split(',').map(num).collect::<Result<_>>()?;
    let upper: Vec<f64> = get("upper")?.split(',').map(num).collect::<Result<_>>()?;
    if dims.len() != lower.len() || dims.len() != upper.len() {
        return Err(format_err(path, "dims/lower/upper lengths differ"));
    }
    let boundary: Boundary = get("boundary")?.parse().map_err(|_| format_err(path, "bad boundary"))?;
    let axes = dims
        .iter()
        .zip(lower.iter().zip(&upper))
        .map(|(&points, (&lower, &upper))| Axis { points, lower, upper })
        .collect();
    let grid = SpatialGrid::new(axes, boundary).map_err(|e| format_err(path, e.to_string()))?;
    Ok(DumpHeader {
        kind,
        name: get("field")?,
        grid,
        hbar: num(&get("hbar")?)?,
        time: num(&get("time")?)?,
        config_hash: get("config_hash")?,
        timestamp: get("timestamp")?.parse().unwrap_or(0),
    })
}

/// A decoded dump of either kind.
#[derive(Clone, Debug)]
pub enum Dump {
    Complex(DumpHeader, ComplexField),
    Real(DumpHeader, RealField),
}

impl Dump {
    pub fn header(&self) -> &DumpHeader {
        match self {
            Dump::Complex(h, _) | Dump::Real(h, _) => h,
        }
    }
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<Dump> {
    let (text, body) = split_header(bytes, path)?;
    let header = parse_header(text, path)?;
    let n = header.grid.len();
    let grid = Arc::new(header.grid.clone());
    let f = |chunk: &[u8]| f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
    match header.kind {
        DumpKind::Complex => {
            if body.len() != n * 16 {
                return Err(format_err(path, format!("expected {} bytes of samples, found {}", n * 16, body.len())));
            }
            let values = body
                .chunks_exact(16)
                .map(|c| Complex64::new(f(&c[..8]), f(&c[8..])))
                .collect();
            let field = ComplexField::new(grid, values).map_err(|e| format_err(path, e.to_string()))?;
            Ok(Dump::Complex(header, field))
        }
        DumpKind::Real => {
            if body.len() != n * 8 {
                return Err(format_err(path, format!("expected {} bytes of samples, found {}", n * 8, body.len())));
            }
            let values = body.chunks_exact(8).map(f).collect();
            let field = RealField::new(grid, values).map_err(|e| format_err(path, e.to_string()))?;
            Ok(Dump::Real(header, field))
        }
    }
}

pub fn read(path: &Path) -> Result<Dump> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ops::norm;

    #[test]
    fn complex_dump_round_trips_bitwise() {
        let grid = Arc::new(
            SpatialGrid::new(
                vec![
                    Axis { points: 5, lower: -1.0, upper: 1.0 },
                    Axis { points: 3, lower: 0.0, upper: 0.3 },
                ],
                Boundary::Dirichlet,
            )
            .unwrap(),
        );
        let f = ComplexField::from_fn(grid, |x| Complex64::new(x[0].sin(), x[1] * 0.1 + 1e-300)).unwrap();
        let meta = DumpMeta {
            name: "psi",
            hbar: 1.0,
            time: 0.25,
            config_hash: "abc",
        };
        let bytes = encode_complex(&f, &meta);
        let Dump::Complex(h, back) = decode(&bytes, Path::new("mem")).unwrap() else {
            panic!("wrong kind")
        };
        assert_eq!(back, f);
        assert_eq!(h.name, "psi");
        assert_eq!(h.time, 0.25);
        assert_eq!(norm(&back), norm(&f));
    }

    #[test]
    fn truncated_body_is_rejected() {
        let grid = Arc::new(SpatialGrid::cube(1, 4, 0.0, 1.0, Boundary::Periodic).unwrap());
        let f = RealField::from_fn(grid, |x| x[0]).unwrap();
        let mut bytes = encode_real(&f, &DumpMeta { name: "v", hbar: 1.0, ..Default::default() });
        bytes.pop();
        assert!(matches!(decode(&bytes, Path::new("mem")), Err(Error::Format { .. })));
    }
}
