//! The QPOTFLD1 binary field format and CSV export.
//!
//! Layout: a 64-byte header whose first 8 bytes are the ASCII magic
//! `QPOTFLD1` (the remainder is zero padding), then little-endian `u32 nx`,
//! `u32 ny`, `f64 xmin, xmax, ymin, ymax`, a `u8` payload tag (1 scalar,
//! 2 vector), and the row-major payload of `f64` values (pairs for vectors).
//! Non-finite values round-trip bit-exactly; `+inf` is the convention for
//! nodes the solver never computed.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Domain, Grid};
use crate::math::Vec2;

const MAGIC: &[u8; 8] = b"QPOTFLD1";
const HEADER_LEN: usize = 64;
const TAG_SCALAR: u8 = 1;
const TAG_VECTOR: u8 = 2;

/// The payload of a field file.
#[derive(Debug, Clone)]
pub enum FieldData {
    Scalar(ScalarField),
    Vector(VectorField),
}

fn write_preamble<W: Write>(w: &mut W, grid: &Grid, tag: u8) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[..8].copy_from_slice(MAGIC);
    w.write_all(&header)?;
    w.write_all(&(grid.nx as u32).to_le_bytes())?;
    w.write_all(&(grid.ny as u32).to_le_bytes())?;
    for v in [grid.domain.xmin, grid.domain.xmax, grid.domain.ymin, grid.domain.ymax] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&[tag])?;
    Ok(())
}

pub fn write_scalar<W: Write>(w: &mut W, field: &ScalarField) -> Result<()> {
    write_preamble(w, &field.grid, TAG_SCALAR)?;
    for &v in &field.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_vector<W: Write>(w: &mut W, field: &VectorField) -> Result<()> {
    write_preamble(w, &field.grid, TAG_VECTOR)?;
    for v in &field.data {
        w.write_all(&v.x.to_le_bytes())?;
        w.write_all(&v.y.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact_or_format<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::FieldFormat(format!("truncated file while reading {what}")))
}

fn read_f64<R: Read>(r: &mut R, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact_or_format(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_field<R: Read>(r: &mut R) -> Result<FieldData> {
    let mut header = [0u8; HEADER_LEN];
    read_exact_or_format(r, &mut header, "header")?;
    if &header[..8] != MAGIC {
        return Err(Error::FieldFormat("bad magic; not a QPOTFLD1 file".into()));
    }
    let mut b4 = [0u8; 4];
    read_exact_or_format(r, &mut b4, "nx")?;
    let nx = u32::from_le_bytes(b4) as usize;
    read_exact_or_format(r, &mut b4, "ny")?;
    let ny = u32::from_le_bytes(b4) as usize;
    let xmin = read_f64(r, "xmin")?;
    let xmax = read_f64(r, "xmax")?;
    let ymin = read_f64(r, "ymin")?;
    let ymax = read_f64(r, "ymax")?;
    let mut tag = [0u8; 1];
    read_exact_or_format(r, &mut tag, "payload tag")?;

    let domain = Domain::new(xmin, xmax, ymin, ymax)
        .map_err(|e| Error::FieldFormat(format!("bad bounds: {e}")))?;
    let grid =
        Grid::new(nx, ny, domain).map_err(|e| Error::FieldFormat(format!("bad shape: {e}")))?;
    let n = grid.n_nodes();
    match tag[0] {
        TAG_SCALAR => {
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                data.push(read_f64(r, "scalar payload")?);
            }
            Ok(FieldData::Scalar(ScalarField { grid, data }))
        }
        TAG_VECTOR => {
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                let x = read_f64(r, "vector payload")?;
                let y = read_f64(r, "vector payload")?;
                data.push(Vec2::new(x, y));
            }
            Ok(FieldData::Vector(VectorField { grid, data }))
        }
        t => Err(Error::FieldFormat(format!("unknown payload tag {t}"))),
    }
}

/// Write a field under `path` atomically: a temp file in the same directory
/// is fully written, flushed, then renamed over the target.
pub fn write_field_atomic(path: &Path, data: &FieldData) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        match data {
            FieldData::Scalar(f) => write_scalar(&mut w, f)?,
            FieldData::Vector(f) => write_vector(&mut w, f)?,
        }
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn read_field_from(path: &Path) -> Result<FieldData> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    read_field(&mut r)
}

/// One `x,y,u` row per finite node; numbers use the shortest representation
/// that round-trips exactly.
pub fn write_scalar_csv<W: Write>(w: &mut W, field: &ScalarField) -> Result<()> {
    writeln!(w, "x,y,u")?;
    for (node, &u) in field.data.iter().enumerate() {
        if !u.is_finite() {
            continue;
        }
        let p = field.grid.position(node);
        writeln!(w, "{},{},{}", p.x, p.y, u)?;
    }
    Ok(())
}
