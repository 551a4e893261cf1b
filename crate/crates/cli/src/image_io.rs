//! Image files: binary PGM (`P5`), PFM (`Pf`) and the raw `SNR1` format.
//!
//! Two-dimensional grids map axis 0 to rows (top to bottom in PGM) and axis 1
//! to columns. `SNR1` stores any rank from 1 to 3:
//!
//! ```text
//! "SNR1"  u8 rank  u8 dtype (0 = f64 LE)  u16 padding
//! rank × u32 LE extents
//! row-major f64 LE samples
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use stripefree::{Dims, Grid};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Pgm,
    Pfm,
    Raw,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Pfm => "pfm",
            ImageFormat::Raw => "snr",
        }
    }

    /// PFM for 2-D grids, `SNR1` otherwise.
    pub fn default_for(dims: Dims) -> Self {
        if dims.rank() == 2 {
            ImageFormat::Pfm
        } else {
            ImageFormat::Raw
        }
    }
}

impl FromStr for ImageFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pgm" => Ok(ImageFormat::Pgm),
            "pfm" => Ok(ImageFormat::Pfm),
            "raw" | "snr" => Ok(ImageFormat::Raw),
            _ => Err(format!("expected pgm, pfm or raw, got `{s}`")),
        }
    }
}

impl fmt::Display for ImageFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

const RAW_MAGIC: &[u8; 4] = b"SNR1";

pub fn read_image(path: &Path) -> CliResult<Grid<f64>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|m| CliError::format(path, m))
}

pub fn write_image(path: &Path, grid: &Grid<f64>, format: ImageFormat) -> CliResult<()> {
    let bytes = encode(grid, format).map_err(|m| CliError::format(path, m))?;
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Reads any supported format, recognized by its magic bytes.
pub fn decode(bytes: &[u8]) -> Result<Grid<f64>, String> {
    match bytes.get(..2) {
        Some(b"P5") => decode_pgm(bytes),
        Some(b"Pf") => decode_pfm(bytes),
        _ if bytes.starts_with(RAW_MAGIC) => decode_raw(bytes),
        _ => Err("unrecognized image format (expected P5, Pf or SNR1)".into()),
    }
}

pub fn encode(grid: &Grid<f64>, format: ImageFormat) -> Result<Vec<u8>, String> {
    match format {
        ImageFormat::Pgm => encode_pgm(grid),
        ImageFormat::Pfm => encode_pfm(grid),
        ImageFormat::Raw => Ok(encode_raw(grid)),
    }
}

/// Whitespace-separated header tokens of a netpbm-style file, with `#`
/// comments skipped. Returns the tokens and the offset just past the single
/// whitespace byte that ends the header.
fn header_tokens(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize), String> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err("truncated header".into());
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    if i >= bytes.len() {
        return Err("missing image data".into());
    }
    Ok((tokens, i + 1))
}

fn parse_token<T: FromStr>(token: &str, what: &str) -> Result<T, String> {
    token.parse().map_err(|_| format!("bad {what} `{token}`"))
}

fn plane_dims(width: usize, height: usize) -> Result<Dims, String> {
    Dims::d2(height, width).map_err(|e| e.to_string())
}

fn decode_pgm(bytes: &[u8]) -> Result<Grid<f64>, String> {
    let (t, offset) = header_tokens(bytes, 4)?;
    let width: usize = parse_token(&t[1], "width")?;
    let height: usize = parse_token(&t[2], "height")?;
    let maxval: u32 = parse_token(&t[3], "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    let dims = plane_dims(width, height)?;
    let wide = maxval > 255;
    let need = dims.len() * if wide { 2 } else { 1 };
    let body = bytes.get(offset..offset + need).ok_or("truncated pixel data")?;
    let data = if wide {
        body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
    } else {
        body.iter().map(|&v| v as f64).collect()
    };
    Grid::new(dims, data).map_err(|e| e.to_string())
}

/// Rounds and clamps to `0..=65535`; 8-bit output when every value fits.
fn encode_pgm(grid: &Grid<f64>) -> Result<Vec<u8>, String> {
    let dims = grid.dims();
    if dims.rank() != 2 {
        return Err(format!("PGM holds 2-D images, got {dims}"));
    }
    let levels: Vec<u16> = grid.data().iter().map(|&v| v.round().clamp(0.0, 65535.0) as u16).collect();
    let maxval = if levels.iter().all(|&v| v <= 255) { 255 } else { 65535 };
    let mut out = format!("P5\n{} {}\n{}\n", dims.extent(1), dims.extent(0), maxval).into_bytes();
    if maxval == 255 {
        out.extend(levels.iter().map(|&v| v as u8));
    } else {
        out.extend(levels.iter().flat_map(|v| v.to_be_bytes()));
    }
    Ok(out)
}

/// PFM stores rows bottom to top; a positive scale means big-endian samples.
fn decode_pfm(bytes: &[u8]) -> Result<Grid<f64>, String> {
    let (t, offset) = header_tokens(bytes, 4)?;
    let width: usize = parse_token(&t[1], "width")?;
    let height: usize = parse_token(&t[2], "height")?;
    let scale: f64 = parse_token(&t[3], "scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(format!("bad scale `{}`", t[3]));
    }
    let dims = plane_dims(width, height)?;
    let body = bytes.get(offset..offset + 4 * dims.len()).ok_or("truncated pixel data")?;
    let samples: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if scale < 0.0 {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    let data = samples.chunks_exact(width).rev().flatten().map(|&v| v as f64).collect();
    Grid::new(dims, data).map_err(|e| e.to_string())
}

fn encode_pfm(grid: &Grid<f64>) -> Result<Vec<u8>, String> {
    let dims = grid.dims();
    if dims.rank() != 2 {
        return Err(format!("PFM holds 2-D images, got {dims}"));
    }
    let width = dims.extent(1);
    let mut out = format!("Pf\n{} {}\n-1.0\n", width, dims.extent(0)).into_bytes();
    for row in grid.data().chunks_exact(width).rev() {
        out.extend(row.iter().flat_map(|&v| (v as f32).to_le_bytes()));
    }
    Ok(out)
}

fn decode_raw(bytes: &[u8]) -> Result<Grid<f64>, String> {
    let head = bytes.get(..8).ok_or("truncated header")?;
    let rank = head[4] as usize;
    if head[5] != 0 {
        return Err(format!("unsupported sample type {}", head[5]));
    }
    let ext_bytes = bytes.get(8..8 + 4 * rank).ok_or("truncated extents")?;
    let extents: Vec<usize> = ext_bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let dims = Dims::new(&extents).map_err(|e| e.to_string())?;
    let start = 8 + 4 * rank;
    let body = &bytes[start..];
    if body.len() != 8 * dims.len() {
        return Err(format!("expected {} sample bytes, found {}", 8 * dims.len(), body.len()));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Grid::new(dims, data).map_err(|e| e.to_string())
}

fn encode_raw(grid: &Grid<f64>) -> Vec<u8> {
    let dims = grid.dims();
    let mut out = Vec::with_capacity(8 + 4 * dims.rank() + 8 * dims.len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&[dims.rank() as u8, 0, 0, 0]);
    for &n in dims.extents() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &v in grid.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
