//! `F2D <N> <t>\n` header followed by `N*N` little-endian f64, row-major.

use super::Field2D;
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

pub fn write_snapshot<W: Write>(mut w: W, field: &Field2D, t: f64) -> Result<()> {
    writeln!(w, "F2D {} {}", field.n(), t)?;
    let mut bytes = Vec::with_capacity(field.data().len() * 8);
    for v in field.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_snapshot<R: BufRead>(mut r: R) -> Result<(Field2D, f64)> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let mut parts = header.trim_end_matches('\n').split(' ');
    if parts.next() != Some("F2D") {
        return Err(Error::Snapshot(format!("bad magic in header {header:?}")));
    }
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Snapshot("missing grid size".into()))?;
    let t: f64 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Snapshot("missing time".into()))?;
    if parts.next().is_some() {
        return Err(Error::Snapshot("trailing header tokens".into()));
    }
    super::check_grid(n)?;
    let mut bytes = vec![0u8; n * n * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::Snapshot(format!("payload: {e}")))?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((Field2D::from_vec(n, data)?, t))
}
