//! On-disk formats: measurement files, raw and PGM images.
//!
//! Measurement file, all little-endian:
//!
//! ```text
//! offset size
//!      0    4  magic "DRME"
//!      4    4  u32 format version (1)
//!      8    4  u32 sensor id
//!     12    8  u64 fast-time samples K
//!     20    8  u64 receivers M
//!     28    8  f64 SNR in dB (+inf for noiseless)
//!     36    8  u64 noise seed
//!     44       K*M complex samples as (re, im) f64 pairs, row m*K + k
//! ```
//!
//! Raw images are `nx * ny` little-endian f64 in pixel-index order
//! (`n = iy * nx + ix`), with no header.

use std::fs;
use std::path::Path;

use dradar_core::scene::Measurement;
use dradar_core::C64;

use crate::error::{CliError, CliResult};

const MAGIC: &[u8; 4] = b"DRME";
const VERSION: u32 = 1;
pub const MEASUREMENT_HEADER_BYTES: usize = 44;

/// Dynamic range of rendered images, dB below the peak.
pub const DYNAMIC_RANGE_DB: f64 = 30.0;

pub fn encode_measurement(m: &Measurement, samples: usize, receivers: usize) -> CliResult<Vec<u8>> {
    if samples * receivers != m.y.len() {
        return Err(CliError::Usage(format!(
            "measurement has {} samples, header claims {samples} x {receivers}",
            m.y.len()
        )));
    }
    let mut out = Vec::with_capacity(MEASUREMENT_HEADER_BYTES + 16 * m.y.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.sensor as u32).to_le_bytes());
    out.extend_from_slice(&(samples as u64).to_le_bytes());
    out.extend_from_slice(&(receivers as u64).to_le_bytes());
    out.extend_from_slice(&m.snr_db.to_le_bytes());
    out.extend_from_slice(&m.seed.to_le_bytes());
    for z in &m.y {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    Ok(out)
}

/// Decoded measurement plus its `(K, M)` shape.
pub fn decode_measurement(bytes: &[u8]) -> Result<(Measurement, usize, usize), String> {
    if bytes.len() < MEASUREMENT_HEADER_BYTES {
        return Err("measurement header truncated".into());
    }
    if &bytes[..4] != MAGIC {
        return Err("not a measurement file (bad magic)".into());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(format!("unsupported measurement format version {version}"));
    }
    let sensor = u32_at(8) as usize;
    let (k, m) = (u64_at(12) as usize, u64_at(20) as usize);
    let snr_db = f64_at(28);
    let seed = u64_at(36);
    let count = k.checked_mul(m).ok_or("measurement shape overflows")?;
    if bytes.len() != MEASUREMENT_HEADER_BYTES + 16 * count {
        return Err(format!("measurement body holds {} bytes, header implies {}", bytes.len() - MEASUREMENT_HEADER_BYTES, 16 * count));
    }
    let y = (0..count)
        .map(|i| {
            let o = MEASUREMENT_HEADER_BYTES + 16 * i;
            C64::new(f64_at(o), f64_at(o + 8))
        })
        .collect();
    Ok((Measurement { sensor, y, snr_db, seed }, k, m))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_measurement(path: &Path, m: &Measurement, samples: usize, receivers: usize) -> CliResult<()> {
    write(path, &encode_measurement(m, samples, receivers)?)
}

pub fn read_measurement(path: &Path) -> CliResult<(Measurement, usize, usize)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_measurement(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write_raw_image(path: &Path, img: &[f64]) -> CliResult<()> {
    let bytes: Vec<u8> = img.iter().flat_map(|v| v.to_le_bytes()).collect();
    write(path, &bytes)
}

pub fn read_raw_image(path: &Path) -> CliResult<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::Config(format!("{}: length is not a multiple of 8", path.display())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Maps magnitudes to 16-bit gray levels: `20 log10(|x| / peak)` clipped to
/// `[-range_db, 0]`, then scaled linearly onto `[0, 65535]`.
pub fn db_gray_levels(img: &[f64], range_db: f64) -> Vec<u16> {
    let peak = img.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return vec![0; img.len()];
    }
    img.iter()
        .map(|v| {
            let db = (20.0 * (v.abs() / peak).log10()).clamp(-range_db, 0.0);
            ((db + range_db) / range_db * 65535.0).round() as u16
        })
        .collect()
}

/// Binary 16-bit PGM (P5, big-endian samples). The first PGM row is the
/// top of the scene (`iy = ny - 1`).
pub fn encode_pgm(img: &[f64], nx: usize, ny: usize, range_db: f64) -> CliResult<Vec<u8>> {
    if img.len() != nx * ny {
        return Err(CliError::Usage(format!("image has {} pixels, expected {nx} x {ny}", img.len())));
    }
    let levels = db_gray_levels(img, range_db);
    let mut out = format!("P5\n{nx} {ny}\n65535\n").into_bytes();
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            out.extend_from_slice(&levels[iy * nx + ix].to_be_bytes());
        }
    }
    Ok(out)
}

pub fn write_pgm(path: &Path, img: &[f64], nx: usize, ny: usize) -> CliResult<()> {
    write(path, &encode_pgm(img, nx, ny, DYNAMIC_RANGE_DB)?)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    write(path, text.as_bytes())
}
