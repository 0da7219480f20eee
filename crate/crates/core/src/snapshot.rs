//! Binary field snapshots.
//!
//! Layout (little-endian): `NLNS`, version `u16`, dim `u8`, points per axis
//! `u32`, half length `f64`, field count `u16`, then for each field a `u8`
//! name length, the UTF-8 name and `n^dim` values as `f64` in row-major
//! order with axis 0 slowest.

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"NLNS";
pub const VERSION: u16 = 1;

/// Named fields on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: TorusGrid,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    pub fn new(grid: TorusGrid) -> Self {
        Self {
            grid,
            fields: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if name.is_empty() || name.len() > u8::MAX as usize {
            return Err(Error::Snapshot(format!(
                "field name length {} out of range",
                name.len()
            )));
        }
        if values.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "field '{name}' has {} values, grid has {}",
                values.len(),
                self.grid.len()
            )));
        }
        if self.fields.len() == u16::MAX as usize {
            return Err(Error::Snapshot("too many fields".into()));
        }
        self.fields.push((name.to_string(), values));
        Ok(())
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(24 + self.fields.len() * (g.len() * 8 + 16));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(g.dim() as u8);
        out.extend_from_slice(&(g.points_per_axis() as u32).to_le_bytes());
        out.extend_from_slice(&g.half_length().to_le_bytes());
        out.extend_from_slice(&(self.fields.len() as u16).to_le_bytes());
        for (name, values) in &self.fields {
            out.push(name.len() as u8);
            out.extend_from_slice(name.as_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut take = |k: usize| -> Result<&[u8]> {
            if r.len() < k {
                return Err(Error::Snapshot("truncated file".into()));
            }
            let (head, tail) = r.split_at(k);
            r = tail;
            Ok(head)
        };
        if take(4)? != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let dim = take(1)?[0] as usize;
        let n = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let l = f64::from_le_bytes(take(8)?.try_into().unwrap());
        let grid = TorusGrid::new(dim, l, n).map_err(|e| Error::Snapshot(format!("bad grid header: {e}")))?;
        let count = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        let mut snap = Snapshot::new(grid);
        for _ in 0..count {
            let len = take(1)?[0] as usize;
            let name = std::str::from_utf8(take(len)?)
                .map_err(|_| Error::Snapshot("field name is not UTF-8".into()))?
                .to_string();
            let raw = take(8 * grid.len())?;
            let values = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            snap.fields.push((name, values));
        }
        if !take(0)?.is_empty() || !r.is_empty() {
            return Err(Error::Snapshot("trailing bytes".into()));
        }
        Ok(snap)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = TorusGrid::new(2, 1.5, 4).unwrap();
        let mut s = Snapshot::new(g);
        s.push("rho", (0..16).map(|i| i as f64 * 0.1).collect()).unwrap();
        s.push("u_0", vec![-1.0; 16]).unwrap();
        let bytes = s.to_bytes();
        assert_eq!(&bytes[..4], b"NLNS");
        assert_eq!(bytes.len(), 4 + 2 + 1 + 4 + 8 + 2 + (1 + 3 + 128) * 2);
        assert_eq!(Snapshot::from_bytes(&bytes).unwrap(), s);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Snapshot::from_bytes(b"NOPE").is_err());
        let g = TorusGrid::new(1, 1.0, 2).unwrap();
        let mut s = Snapshot::new(g);
        s.push("rho", vec![1.0, 2.0]).unwrap();
        let mut b = s.to_bytes();
        b.pop();
        assert!(Snapshot::from_bytes(&b).is_err());
        assert!(s.push("bad", vec![1.0]).is_err());
    }
}
