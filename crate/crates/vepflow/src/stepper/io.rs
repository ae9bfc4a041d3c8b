//! Binary field checkpoints.
//!
//! Layout, little-endian: magic (8 bytes), version u32, nx u32, ny u32,
//! step u64, τ f64, then the node arrays of v (2 per node), 𝔼 (6 per
//! node) and Ξ (6 per node) as f64.

use std::path::Path;

use crate::discretization::{TensorField, VectorField};
use crate::error::{Error, Result};
use crate::functionals::State;

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"VEPCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER: usize = 8 + 4 + 4 + 4 + 8 + 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub nx: usize,
    pub ny: usize,
    pub step: usize,
    pub tau: f64,
    pub state: State,
    pub xi: TensorField,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(HEADER + 8 * (self.state.v.data.len() + 12 * self.state.e.nodes()));
        b.extend_from_slice(&CHECKPOINT_MAGIC);
        b.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        b.extend_from_slice(&(self.nx as u32).to_le_bytes());
        b.extend_from_slice(&(self.ny as u32).to_le_bytes());
        b.extend_from_slice(&(self.step as u64).to_le_bytes());
        b.extend_from_slice(&self.tau.to_le_bytes());
        for x in self.state.v.data.iter().chain(&self.state.e.data).chain(&self.xi.data) {
            b.extend_from_slice(&x.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < HEADER {
            return Err(Error::Corrupt(format!("file has {} bytes, header needs {HEADER}", b.len())));
        }
        if b[..8] != CHECKPOINT_MAGIC {
            return Err(Error::Corrupt("bad magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
        let version = u32_at(8);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Corrupt(format!("version {version} is not supported (expected {CHECKPOINT_VERSION})")));
        }
        let nx = u32_at(12) as usize;
        let ny = u32_at(16) as usize;
        let step = u64::from_le_bytes(b[20..28].try_into().unwrap()) as usize;
        let tau = f64::from_le_bytes(b[28..36].try_into().unwrap());
        let nodes = (nx + 1) * (ny + 1);
        let expected = HEADER + 8 * 14 * nodes;
        if b.len() != expected {
            return Err(Error::Corrupt(format!("expected {expected} bytes for a {nx}x{ny} mesh, found {}", b.len())));
        }
        let vals: Vec<f64> = b[HEADER..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let v = VectorField { data: vals[..2 * nodes].to_vec() };
        let e = TensorField { data: vals[2 * nodes..8 * nodes].to_vec() };
        let xi = TensorField { data: vals[8 * nodes..].to_vec() };
        Ok(Checkpoint { nx, ny, step, tau, state: State::new(v, e), xi })
    }
}

pub fn write_checkpoint(path: &Path, c: &Checkpoint) -> Result<()> {
    std::fs::write(path, c.to_bytes())?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let b = std::fs::read(path)?;
    Checkpoint::from_bytes(&b).map_err(|e| match e {
        Error::Corrupt(m) => Error::Corrupt(format!("{}: {m}", path.display())),
        other => other,
    })
}
