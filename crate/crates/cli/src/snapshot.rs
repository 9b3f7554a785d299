//! Binary field snapshots (`.cnsf`).
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic  b"CNSF"
//!      4     4  version u32 (currently 1)
//!      8     8  Nr      u64  radial node count (walls included)
//!     16     8  Nz      u64  axial point count
//!     24     8  r0      f64  inner radius
//!     32     8  R0      f64  outer radius
//!     40     8  L3      f64  axial half-period
//!     48     8  t       f64  simulation time
//!     56   ...  payload Nr*Nz f64, x3-major with r fastest
//! ```
//!
//! The payload order matches `ScalarField::values`, so write/read round-trips
//! are bit-exact: the bytes on disk are the in-memory doubles, untouched.

use crate::errors::CliError;
use cns_core::{build_grid, CylGrid, ScalarField};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

const MAGIC: [u8; 4] = *b"CNSF";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 56;

/// A field restored from disk together with the time it was saved at.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub field: ScalarField,
    pub t: f64,
}

pub fn write_snapshot(path: &Path, field: &ScalarField, t: f64) -> Result<(), CliError> {
    let g = &field.grid;
    let mut buf = Vec::with_capacity(HEADER_LEN + field.values.len() * 8);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.nr as u64).to_le_bytes());
    buf.extend_from_slice(&(g.nz as u64).to_le_bytes());
    for v in [g.r0, g.r1, g.l3, t] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in &field.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    file.write_all(&buf).map_err(|e| CliError::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, CliError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CliError::io(path, e))?;
    let name = path.display().to_string();
    if bytes.len() < 8 || bytes[0..4] != MAGIC {
        return Err(CliError::BadMagic { path: name });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CliError::VersionMismatch {
            path: name,
            found: version,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(CliError::TruncatedPayload {
            path: name,
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let nr = u64_at(8) as usize;
    let nz = u64_at(16) as usize;
    let (r0, r1, l3, t) = (f64_at(24), f64_at(32), f64_at(40), f64_at(48));
    let expected = HEADER_LEN + nr * nz * 8;
    if bytes.len() != expected {
        return Err(CliError::TruncatedPayload {
            path: name,
            expected,
            actual: bytes.len(),
        });
    }
    let grid: Arc<CylGrid> = Arc::new(build_grid(r0, r1, l3, nr, nz)?);
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Snapshot {
        field: ScalarField::from_values(&grid, values),
        t,
    })
}
