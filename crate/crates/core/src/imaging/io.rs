//! Image file ingest and export.
//!
//! Ingest accepts binary PGM (P5, 8-bit or 16-bit big-endian) and 8/16-bit
//! grayscale PNG. Values are normalized by the sample type maximum (255 or
//! 65535) so downstream code always sees `[0, 1]`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::ThermalImage;

/// Read a PGM or PNG image, dispatching on the file's magic bytes.
pub fn read_image(path: &Path) -> Result<ThermalImage> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes, path)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(&bytes, path)
    } else {
        Err(Error::UnsupportedFormat(format!(
            "{}: expected binary PGM (P5) or grayscale PNG",
            path.display()
        )))
    }
}

fn decode_pgm(bytes: &[u8], path: &Path) -> Result<ThermalImage> {
    let mut pos = 2usize; // after "P5"
    let mut fields = [0usize; 3]; // width, height, maxval
    for field in &mut fields {
        // Skip whitespace and '#' comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::malformed(path, "truncated PGM header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(Error::malformed(path, "expected integer in PGM header"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        *field = text
            .parse()
            .map_err(|_| Error::malformed(path, "bad integer in PGM header"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::malformed(path, "missing raster separator")),
    }
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if width == 0 || height == 0 {
        return Err(Error::malformed(path, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::malformed(path, format!("bad maxval {maxval}")));
    }
    let n = width * height;
    let data: Vec<f64> = if maxval <= 255 {
        let raster = bytes
            .get(pos..pos + n)
            .ok_or_else(|| Error::malformed(path, "truncated 8-bit raster"))?;
        raster.iter().map(|&b| b as f64 / 255.0).collect()
    } else {
        let raster = bytes
            .get(pos..pos + 2 * n)
            .ok_or_else(|| Error::malformed(path, "truncated 16-bit raster"))?;
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
            .collect()
    };
    ThermalImage::new(width, height, data)
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<ThermalImage> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    match img {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            let data = g.into_raw().iter().map(|&b| b as f64 / 255.0).collect();
            ThermalImage::new(w, h, data)
        }
        image::DynamicImage::ImageLuma16(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            let data = g.into_raw().iter().map(|&b| b as f64 / 65535.0).collect();
            ThermalImage::new(w, h, data)
        }
        other => Err(Error::UnsupportedFormat(format!(
            "{}: {:?} PNG is not grayscale",
            path.display(),
            other.color()
        ))),
    }
}

/// Write values clamped to `[0, 1]` as a 16-bit grayscale PNG.
pub fn write_png_gray16(path: &Path, img: &ThermalImage) -> Result<()> {
    let buf: Vec<u16> = img
        .data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
        .collect();
    let out = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(
        img.width() as u32,
        img.height() as u32,
        buf,
    )
    .expect("buffer matches dimensions");
    out.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::malformed(path, e.to_string()))
}

/// Write an arbitrary raster rescaled to its own min/max as 8-bit PNG.
pub fn write_png_rescaled(path: &Path, data: &[f64], width: usize, height: usize) -> Result<()> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in data {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };
    let buf: Vec<u8> = data
        .iter()
        .map(|&v| (((v - lo) / span) * 255.0).round() as u8)
        .collect();
    let out =
        image::ImageBuffer::<image::Luma<u8>, _>::from_raw(width as u32, height as u32, buf)
            .expect("buffer matches dimensions");
    out.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::malformed(path, e.to_string()))
}

/// Dump a raster as headerless row-major little-endian f32.
pub fn write_f32_raw(path: &Path, data: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for &v in data {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}
