//! Binary checkpoints of a simulation state.
//!
//! Layout, all little-endian: the magic `GMHD2D1\0`; `u32 n`, `f64 length`,
//! `f64 alpha`; the weight as `u32` kind tag (0 constant, 1 iterated log),
//! `u32 k`, `f64 sigma`, `f64 ctilde`, `f64 exponent`; `f64 t`; then `ω̂`
//! and `ĵ` as `n × n` row-major `(re, im)` pairs of `f64`.
//!
//! A constant weight is stored with `k = 0`, `sigma = 0`, `exponent = 0` and
//! its value in `ctilde`. Step counters and term switches are not stored; a
//! restored state starts at step 0 with every term active.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, SpectralField2D};
use crate::solver::{PhysicsParams, SimState};
use crate::symbols::{GFunction, GKind};

pub const MAGIC: &[u8; 8] = b"GMHD2D1\0";

const HEADER: usize = 8 + 4 + 8 + 8 + 4 + 4 + 8 + 8 + 8 + 8;

pub fn encode_checkpoint(state: &SimState) -> Vec<u8> {
    let grid = state.grid();
    let n = grid.n();
    let g = state.params.g;
    let mut out = Vec::with_capacity(HEADER + 32 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&grid.length().to_le_bytes());
    out.extend_from_slice(&state.params.alpha.to_le_bytes());
    let (tag, k, sigma, exponent) = match g.kind() {
        GKind::Constant => (0u32, 0u32, 0.0, 0.0),
        GKind::IteratedLog { depth } => (1, depth, g.sigma(), g.exponent()),
    };
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&k.to_le_bytes());
    out.extend_from_slice(&sigma.to_le_bytes());
    out.extend_from_slice(&g.ctilde().to_le_bytes());
    out.extend_from_slice(&exponent.to_le_bytes());
    out.extend_from_slice(&state.t.to_le_bytes());
    for c in state.omega.coeffs().iter().chain(state.current.coeffs()) {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(slice.try_into().expect("slice has length N"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<SimState> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take::<8>()? != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let n = r.u32()? as usize;
    let length = r.f64()?;
    let alpha = r.f64()?;
    let tag = r.u32()?;
    let k = r.u32()?;
    let sigma = r.f64()?;
    let ctilde = r.f64()?;
    let exponent = r.f64()?;
    let t = r.f64()?;
    let expected = HEADER + 32 * n * n;
    if bytes.len() != expected {
        return Err(Error::Checkpoint(format!(
            "expected {expected} bytes for n = {n}, found {}",
            bytes.len()
        )));
    }
    let bad = |e: Error| Error::Checkpoint(e.to_string());
    let grid = Grid2D::new(n, length).map_err(bad)?;
    let g = match tag {
        0 => GFunction::constant(ctilde),
        1 => GFunction::iterated_log(k, sigma, ctilde, exponent),
        other => return Err(Error::Checkpoint(format!("unknown weight tag {other}"))),
    }
    .map_err(bad)?;
    let params = PhysicsParams::new(alpha, g).map_err(bad)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Checkpoint(format!("invalid time {t}")));
    }
    let mut read_field = || -> Result<SpectralField2D> {
        let mut coeffs = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            let re = r.f64()?;
            let im = r.f64()?;
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::Checkpoint("non-finite coefficient".into()));
            }
            coeffs.push(Complex64::new(re, im));
        }
        SpectralField2D::from_coeffs(&grid, coeffs)
    };
    let omega = read_field()?;
    let current = read_field()?;
    Ok(SimState {
        t,
        omega,
        current,
        params,
        step_count: 0,
    })
}

pub fn write_checkpoint(path: &Path, state: &SimState) -> Result<()> {
    fs::write(path, encode_checkpoint(state))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<SimState> {
    decode_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{orszag_tang, random_state};

    #[test]
    fn round_trip_iterated_log() {
        let grid = Grid2D::torus(16).unwrap();
        let params = PhysicsParams::new(0.5, GFunction::log_half()).unwrap();
        let mut s = random_state(&grid, params, 3, 2.0, 1.5).unwrap();
        s.t = 0.75;
        let back = decode_checkpoint(&encode_checkpoint(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn round_trip_constant() {
        let grid = Grid2D::new(12, 3.0).unwrap();
        let params = PhysicsParams::new(1.0, GFunction::constant(2.5).unwrap()).unwrap();
        let s = orszag_tang(&grid, params, 0.8).unwrap();
        let bytes = encode_checkpoint(&s);
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(bytes.len(), HEADER + 32 * 144);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 12);
        assert_eq!(decode_checkpoint(&bytes).unwrap(), s);
    }

    #[test]
    fn rejects_corruption() {
        let grid = Grid2D::torus(8).unwrap();
        let params = PhysicsParams::new(1.0, GFunction::constant(1.0).unwrap()).unwrap();
        let s = SimState::zero(&grid, params);
        let bytes = encode_checkpoint(&s);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_checkpoint(&bad), Err(Error::Checkpoint(_))));
        assert!(matches!(
            decode_checkpoint(&bytes[..bytes.len() - 1]),
            Err(Error::Checkpoint(_))
        ));
        let mut bad = bytes.clone();
        bad[28..32].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(decode_checkpoint(&bad), Err(Error::Checkpoint(_))));
    }
}
