//! Versioned binary snapshots: magic, format version, a JSON header and the
//! per-site occupancy words in little-endian order.

use super::{Lattice, LatticeState};
use crate::model::VelocitySet;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::sync::Arc;

pub const SNAPSHOT_MAGIC: [u8; 8] = *b"LGASNAP\0";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub half_width: usize,
    pub dim: usize,
    pub nvel: usize,
    pub varpi: f64,
    pub time: f64,
    pub seed: Option<u64>,
    /// Free-form run metadata (parameters, config hash).
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn write_snapshot<W: Write>(mut w: W, state: &LatticeState, header: &SnapshotHeader) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    w.write_all(&SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    w.write_all(&(state.occupancy().len() as u64).to_le_bytes())?;
    for &o in state.occupancy() {
        w.write_all(&o.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_snapshot<R: Read>(mut r: R, vs: &VelocitySet) -> Result<(SnapshotHeader, LatticeState)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut vb = [0u8; 4];
    r.read_exact(&mut vb)?;
    let version = u32::from_le_bytes(vb);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let hlen = read_u64(&mut r)? as usize;
    let mut json = vec![0u8; hlen];
    r.read_exact(&mut json)?;
    let header: SnapshotHeader = serde_json::from_slice(&json)?;
    if header.nvel != vs.len() || header.varpi != vs.varpi() {
        return Err(Error::Snapshot("velocity set does not match the snapshot".into()));
    }
    let lattice = Arc::new(Lattice::new(header.half_width, header.dim)?);
    let n = read_u64(&mut r)? as usize;
    if n != lattice.nsites() {
        return Err(Error::Snapshot(format!("{n} sites recorded, lattice has {}", lattice.nsites())));
    }
    let mut occ = Vec::with_capacity(n);
    for _ in 0..n {
        occ.push(read_u64(&mut r)?);
    }
    let mut state = LatticeState::from_occupancy(lattice, occ, vs)?;
    state.time = header.time;
    Ok((header, state))
}
