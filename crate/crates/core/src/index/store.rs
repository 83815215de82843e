//! Binary persistence. Layout, all little-endian:
//! magic `HTMI`, u32 version, u64 row count, then per row
//! u64 htmid, f64 lat, lon, x, y, z, u8 type code, i64 objid.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::mesh::HtmId;

use super::{IndexError, ObjectType, SpatialIndex, SpatialIndexRow};

pub const MAGIC: &[u8; 4] = b"HTMI";
pub const FORMAT_VERSION: u32 = 1;
const ROW_BYTES: usize = 57;

fn encode(row: &SpatialIndexRow, buf: &mut [u8; ROW_BYTES]) {
    buf[0..8].copy_from_slice(&row.htm_id.raw().to_le_bytes());
    let floats = [row.lat, row.lon, row.x, row.y, row.z];
    for (k, f) in floats.iter().enumerate() {
        buf[8 + 8 * k..16 + 8 * k].copy_from_slice(&f.to_le_bytes());
    }
    buf[48] = row.obj_type.code() as u8;
    buf[49..57].copy_from_slice(&row.obj_id.to_le_bytes());
}

fn decode(buf: &[u8; ROW_BYTES], n: u64) -> Result<SpatialIndexRow, IndexError> {
    let u = |at: usize| u64::from_le_bytes(buf[at..at + 8].try_into().expect("8 bytes"));
    let f = |at: usize| f64::from_bits(u(at));
    let htm_id = HtmId::new(u(0)).map_err(|e| IndexError::Format(format!("row {n}: {e}")))?;
    let obj_type = ObjectType::from_code(buf[48] as char)
        .ok_or_else(|| IndexError::Format(format!("row {n}: unknown type byte {}", buf[48])))?;
    Ok(SpatialIndexRow {
        htm_id,
        lat: f(8),
        lon: f(16),
        x: f(24),
        y: f(32),
        z: f(40),
        obj_type,
        obj_id: u(49) as i64,
    })
}

impl SpatialIndex {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), IndexError> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.rows.len() as u64).to_le_bytes())?;
        let mut buf = [0u8; ROW_BYTES];
        for row in &self.rows {
            encode(row, &mut buf);
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an index and re-checks every row invariant.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self, IndexError> {
        let mut head = [0u8; 16];
        r.read_exact(&mut head)
            .map_err(|_| IndexError::Format("truncated header".into()))?;
        if &head[0..4] != MAGIC {
            return Err(IndexError::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(IndexError::Format(format!("unsupported version {version}")));
        }
        let count = u64::from_le_bytes(head[8..16].try_into().expect("8 bytes"));
        let mut rows = Vec::new();
        let mut buf = [0u8; ROW_BYTES];
        for n in 0..count {
            r.read_exact(&mut buf)
                .map_err(|_| IndexError::Format(format!("truncated at row {n} of {count}")))?;
            rows.push(decode(&buf, n)?);
        }
        if r.read(&mut [0u8; 1])? != 0 {
            return Err(IndexError::Format("trailing bytes after last row".into()));
        }
        if rows.windows(2).any(|w| w[0].key() >= w[1].key()) {
            return Err(IndexError::InvariantViolation("rows are not in key order".into()));
        }
        Self::build(rows)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
