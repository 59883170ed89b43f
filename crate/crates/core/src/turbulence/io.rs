//! Binary screen files.
//!
//! Layout, little-endian:
//!
//! | offset | size | field                      |
//! |--------|------|----------------------------|
//! | 0      | 8    | magic `OAMPHS01`           |
//! | 8      | 4    | `n_samples` (u32)          |
//! | 12     | 1    | pair index (u8)            |
//! | 13     | 3    | zero padding               |
//! | 16     | 8    | pitch, meters (f64)        |
//! | 24     | 8    | Fried parameter, m (f64)   |
//! | 32     | 8    | seed (u64)                 |
//! | 40     | 4·n² | θ in radians, row-major f32 |

use std::io::{Read, Write};

use super::PhaseScreen;
use crate::error::{OamError, Result};
use crate::grid::GridSpec;
use crate::scalar::Real;

pub const SCREEN_MAGIC: &[u8; 8] = b"OAMPHS01";

pub fn write_screen<T: Real, W: Write>(mut w: W, screen: &PhaseScreen<T>) -> Result<()> {
    let grid = screen.grid();
    let mut header = Vec::with_capacity(40);
    header.extend_from_slice(SCREEN_MAGIC);
    header.extend_from_slice(&(grid.n_samples() as u32).to_le_bytes());
    header.extend_from_slice(&[screen.pair_index(), 0, 0, 0]);
    header.extend_from_slice(&grid.pitch().to_le_bytes());
    header.extend_from_slice(&screen.r0().to_le_bytes());
    header.extend_from_slice(&screen.seed().to_le_bytes());
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(4 * grid.len());
    for v in screen.theta() {
        body.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

pub fn read_screen<T: Real, R: Read>(mut r: R) -> Result<PhaseScreen<T>> {
    let mut header = [0u8; 40];
    r.read_exact(&mut header)?;
    if &header[..8] != SCREEN_MAGIC {
        return Err(OamError::Format("not a phase-screen file (bad magic)".into()));
    }
    let word = |at: usize| -> [u8; 8] { header[at..at + 8].try_into().unwrap() };
    let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let pair_index = header[12];
    let pitch = f64::from_le_bytes(word(16));
    let r0 = f64::from_le_bytes(word(24));
    let seed = u64::from_le_bytes(word(32));
    let grid = GridSpec::new(n, pitch)?;
    let mut body = vec![0u8; 4 * grid.len()];
    r.read_exact(&mut body)?;
    let theta = body.chunks_exact(4).map(|c| T::lit(f32::from_le_bytes(c.try_into().unwrap()) as f64)).collect();
    PhaseScreen::from_theta(grid, theta, r0, seed, pair_index)
}
