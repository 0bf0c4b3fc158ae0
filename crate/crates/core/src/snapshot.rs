//! Binary field snapshots: "NSTF" magic, u32 version, u32 n, f64 L, f64 time,
//! 32-byte ASCII name, then each component as little-endian f64, x fastest.
//! The component count follows from the file length.

use crate::error::{Error, Result};
use crate::band::BandField;
use crate::grid::GridSpec;
use crate::solver::{Frame, Trajectory};
use crate::spectral::C;
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"NSTF";
pub const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 4 + 8 + 8 + 32;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: GridSpec,
    pub time: f64,
    pub name: String,
    pub comps: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if !self.name.is_ascii() || self.name.len() > 32 {
            return Err(Error::input(format!("snapshot name must be ASCII and at most 32 bytes: {:?}", self.name)));
        }
        let mut out = Vec::with_capacity(HEADER + 8 * self.grid.len() * self.comps.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.grid.n as u32).to_le_bytes());
        out.extend_from_slice(&self.grid.l.to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        let mut name = [0u8; 32];
        name[..self.name.len()].copy_from_slice(self.name.as_bytes());
        out.extend_from_slice(&name);
        for c in &self.comps {
            if c.len() != self.grid.len() {
                return Err(Error::input("component length does not match grid"));
            }
            for v in c {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |m: &str| Error::Format { path: path.to_path_buf(), message: m.to_string() };
        if bytes.len() < HEADER || &bytes[..4] != MAGIC {
            return Err(bad("missing NSTF header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        if u32_at(4) != VERSION {
            return Err(bad("unsupported version"));
        }
        let n = u32_at(8) as usize;
        let grid = GridSpec::new(n, f64_at(12)).map_err(|e| bad(&e.to_string()))?;
        let time = f64_at(20);
        let name_raw = &bytes[28..60];
        let end = name_raw.iter().position(|&b| b == 0).unwrap_or(32);
        let name = std::str::from_utf8(&name_raw[..end]).map_err(|_| bad("name is not ASCII"))?.to_string();
        let body = bytes.len() - HEADER;
        let per = 8 * grid.len();
        if body % per != 0 {
            return Err(bad("payload is not a whole number of components"));
        }
        let comps = (0..body / per)
            .map(|c| {
                let base = HEADER + c * per;
                (0..grid.len()).map(|q| f64_at(base + 8 * q)).collect()
            })
            .collect();
        Ok(Snapshot { grid, time, name, comps })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&self.to_bytes()?)?;
        f.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .map_err(|_| Error::MissingArtifact(path.to_path_buf()))?
            .read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes, path)
    }
}

pub const TRAJECTORY_MAGIC: &[u8; 4] = b"NSTB";

/// Trajectory files: "NSTB", u32 version, u32 n, u32 band, u32 frames,
/// u64 steps, f64 L, ν, dt, max divergence, then per frame f64 t and the
/// band coefficients of the three components as (re, im) f64 pairs.
pub fn write_trajectory(traj: &Trajectory<f64>, path: &Path) -> Result<()> {
    let band = traj.frames.first().map(|f| f.u[0].band).unwrap_or(0);
    let mut out = Vec::new();
    out.extend_from_slice(TRAJECTORY_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [traj.grid.n as u32, band as u32, traj.frames.len() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(traj.steps as u64).to_le_bytes());
    for v in [traj.grid.l, traj.nu, traj.dt, traj.max_divergence] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for f in &traj.frames {
        out.extend_from_slice(&f.t.to_le_bytes());
        for c in &f.u {
            for z in &c.coeffs {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&out)?;
    f.flush()?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory<f64>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path).map_err(|_| Error::MissingArtifact(path.to_path_buf()))?.read_to_end(&mut bytes)?;
    let bad = |m: &str| Error::Format { path: path.to_path_buf(), message: m.to_string() };
    let head = 4 + 4 * 4 + 8 + 4 * 8;
    if bytes.len() < head || &bytes[..4] != TRAJECTORY_MAGIC {
        return Err(bad("missing NSTB header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(4) as u32 != VERSION {
        return Err(bad("unsupported version"));
    }
    let (n, band, nframes) = (u32_at(8), u32_at(12), u32_at(16));
    let steps = u64::from_le_bytes(bytes[20..28].try_into().unwrap()) as usize;
    let grid = GridSpec::new(n, f64_at(28)).map_err(|e| bad(&e.to_string()))?;
    let (nu, dt, max_divergence) = (f64_at(36), f64_at(44), f64_at(52));
    let w = 2 * band + 1;
    let per = w * w * w;
    if 2 * band >= n || bytes.len() != head + nframes * (8 + 3 * 16 * per) {
        return Err(bad("length does not match the header"));
    }
    let mut o = head;
    let mut frames = Vec::with_capacity(nframes);
    for _ in 0..nframes {
        let t = f64_at(o);
        o += 8;
        let u = std::array::from_fn(|_| {
            let coeffs = (0..per).map(|i| C::new(f64_at(o + 16 * i), f64_at(o + 16 * i + 8))).collect();
            o += 16 * per;
            BandField { grid, band, coeffs }
        });
        frames.push(Frame { t, u });
    }
    Ok(Trajectory { grid, nu, dt, steps, frames, max_divergence })
}
