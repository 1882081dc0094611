//! Field snapshot files.
//!
//! Layout: one line of JSON header terminated by `\n`, followed by the raw
//! field data as little-endian `f64`. The data is component-major: all sites
//! of component 0, then component 1, and so on, with components in
//! lexicographic multi-index order and sites in row-major order over the
//! active axes (axis 0 slowest). The header records
//! `{m, n, L, degree, component_order: "lex", layout: "component_major",
//! dtype: "f64le", scheme}`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DerivativeScheme, Field, Grid};
use crate::error::{Error, Result};
use crate::exterior7::kernels::BINOM7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub degree: usize,
    pub component_order: String,
    pub layout: String,
    pub dtype: String,
    #[serde(default)]
    pub scheme: DerivativeScheme,
}

impl SnapshotHeader {
    pub fn for_field(f: &Field) -> Self {
        let g = f.grid();
        SnapshotHeader {
            m: g.m(),
            n: g.n(),
            length: g.length(),
            degree: f.degree(),
            component_order: "lex".into(),
            layout: "component_major".into(),
            dtype: "f64le".into(),
            scheme: g.scheme(),
        }
    }
}

pub fn write_field<W: Write>(mut w: W, f: &Field) -> Result<()> {
    let header = serde_json::to_string(&SnapshotHeader::for_field(f))
        .map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(header.as_bytes())?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(f.data().len() * 8);
    for x in f.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_field<R: Read>(r: R) -> Result<Field> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let h: SnapshotHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("header: {e}")))?;
    if h.component_order != "lex" || h.layout != "component_major" || h.dtype != "f64le" {
        return Err(Error::Format(format!(
            "unsupported layout {}/{}/{}",
            h.component_order, h.layout, h.dtype
        )));
    }
    if h.degree > 7 {
        return Err(Error::InvalidDegree(h.degree));
    }
    let grid = Grid::new(h.m, h.n, h.length)?.with_scheme(h.scheme);
    let len = BINOM7[h.degree] * grid.n_sites();
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(Error::LengthMismatch {
            expected: len * 8,
            found: bytes.len(),
        });
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("snapshot data".into()));
    }
    Field::from_data(grid, h.degree, data)
}

pub fn save(path: impl AsRef<Path>, f: &Field) -> Result<()> {
    write_field(std::fs::File::create(path)?, f)
}

pub fn load(path: impl AsRef<Path>) -> Result<Field> {
    read_field(std::fs::File::open(path)?)
}
