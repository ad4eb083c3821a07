//! Greyscale bitmap input (binary PGM or PNG).

use super::DiscreteDomain;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Placement of a bitmap in the plane. The lower-left pixel covers
/// `origin .. origin + spacing`; image rows run top to bottom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitmapSidecar {
    pub origin: [f64; 2],
    pub spacing: f64,
}

impl BitmapSidecar {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

/// Pixels with value >= 128 are inside.
pub const THRESHOLD: u8 = 128;

fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut pos = 0usize;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).to_string());
    }
    if fields[0] != "P5" {
        return Err(Error::Parse(format!("unsupported PGM magic {}", fields[0])));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("PGM header: {e}")));
    let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parse("only 8-bit PGM is supported".into()));
    }
    pos += 1;
    let data = bytes
        .get(pos..pos + w * h)
        .ok_or_else(|| Error::Parse("truncated PGM data".into()))?;
    let scale = |v: u8| ((v as usize * 255) / maxval) as u8;
    Ok((w, h, data.iter().map(|&v| scale(v)).collect()))
}

fn read_pixels(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(b"P5") {
        return parse_pgm(&bytes);
    }
    let img = image::load_from_memory(&bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let g = img.to_luma8();
    Ok((g.width() as usize, g.height() as usize, g.into_raw()))
}

/// Loads a bitmap domain.
pub fn load_bitmap(path: &Path, side: &BitmapSidecar, prune: bool) -> Result<DiscreteDomain> {
    let (w, h, px) = read_pixels(path)?;
    let mut mask = vec![false; w * h];
    for r in 0..h {
        let j = h - 1 - r;
        for i in 0..w {
            mask[i + w * j] = px[i + w * r] >= THRESHOLD;
        }
    }
    DiscreteDomain::from_mask(
        2,
        [w, h, 1],
        [side.origin[0], side.origin[1], 0.0],
        side.spacing,
        &mask,
        prune,
    )
}


/// Writes an 8-bit binary PGM of a per-cell field over the whole grid of a
/// planar domain, rows top to bottom. Values are scaled by `255 / max` and
/// clamped; unoccupied cells are black.
pub fn write_pgm<W: std::io::Write>(mut w: W, dom: &DiscreteDomain, values: &[f64], max: f64) -> Result<()> {
    if dom.dim() != 2 {
        return Err(Error::InvalidParameter("PGM export needs a planar domain".into()));
    }
    let [nx, ny, _] = dom.grid().shape;
    write!(w, "P5\n{nx} {ny}\n255\n")?;
    let mut row = vec![0u8; nx];
    for j in (0..ny).rev() {
        for (i, px) in row.iter_mut().enumerate() {
            let c = i + nx * j;
            *px = if dom.is_occupied(c) && max > 0.0 {
                (values[c] / max * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            };
        }
        w.write_all(&row)?;
    }
    Ok(())
}
