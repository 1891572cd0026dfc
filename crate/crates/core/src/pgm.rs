//! Binary PGM (P5) slice I/O plus PPM (P6) overlays. The formats are
//! byte-exact, which keeps end-to-end runs reproducible and diffable.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayImage};

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Pulls the next whitespace-separated token, skipping `#` comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;
    let magic = next_token(&bytes, &mut pos).ok_or_else(|| format_err(path, "empty file"))?;
    if magic != "P5" {
        return Err(format_err(path, format!("expected P5, got {magic}")));
    }
    let mut dim = |name: &str| -> Result<usize> {
        next_token(&bytes, &mut pos)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format_err(path, format!("bad {name}")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let maxval = dim("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(format_err(path, format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = width * height;
    if bytes.len() < pos + need {
        return Err(format_err(path, "truncated raster"));
    }
    GrayImage::new(width, height, bytes[pos..pos + need].to_vec())
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut out = Vec::with_capacity(img.len() + 32);
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    out.extend_from_slice(img.data());
    fs::write(path, out)?;
    Ok(())
}

/// Masks are stored as PGM with 0 = background and 255 = detection.
pub fn write_mask_pgm(path: &Path, mask: &BinaryMask) -> Result<()> {
    let mut out = Vec::with_capacity(mask.data().len() + 32);
    write!(out, "P5\n{} {}\n255\n", mask.width(), mask.height())?;
    out.extend(mask.data().iter().map(|&v| if v { 255u8 } else { 0 }));
    fs::write(path, out)?;
    Ok(())
}

/// Reads a mask PGM; any value above 127 counts as foreground.
pub fn read_mask_pgm(path: &Path) -> Result<BinaryMask> {
    let img = read_pgm(path)?;
    BinaryMask::new(
        img.width(),
        img.height(),
        img.data().iter().map(|&v| v > 127).collect(),
    )
}

/// Grayscale slice with detections painted pure red.
pub fn write_overlay_ppm(path: &Path, img: &GrayImage, detections: &BinaryMask) -> Result<()> {
    let mut out = Vec::with_capacity(img.len() * 3 + 32);
    write!(out, "P6\n{} {}\n255\n", img.width(), img.height())?;
    for (i, &v) in img.data().iter().enumerate() {
        if detections.data()[i] {
            out.extend_from_slice(&[255, 0, 0]);
        } else {
            out.extend_from_slice(&[v, v, v]);
        }
    }
    fs::write(path, out)?;
    Ok(())
}
