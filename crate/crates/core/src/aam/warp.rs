//! Piecewise-affine warping between image coordinates and the canonical
//! frame, plus the inverse rendering used by synthetic-query tests.

use crate::aam::mesh::{CanonicalFrame, Point};
use crate::error::{Error, Result};
use crate::imaging::ThermalImage;

/// Warp an image into the canonical frame. For every support pixel the
/// containing triangle's affine map (equivalently, its barycentric
/// combination of the target landmarks) locates the source position, which
/// is sampled bilinearly. Samples outside the image are masked invalid.
///
/// Returns `(texture, coverage)` in support order.
pub fn warp_to_canonical(
    img: &ThermalImage,
    shape: &[Point],
    frame: &CanonicalFrame,
) -> Result<(Vec<f64>, Vec<bool>)> {
    if shape.len() != frame.verts.len() {
        return Err(Error::InvalidArgument(format!(
            "shape has {} landmarks, frame expects {}",
            shape.len(),
            frame.verts.len()
        )));
    }
    let n = frame.support.len();
    let mut texture = vec![0.0; n];
    let mut coverage = vec![false; n];
    for (i, sp) in frame.support.iter().enumerate() {
        let mut x = 0.0;
        let mut y = 0.0;
        for k in 0..3 {
            let v = &shape[sp.verts[k] as usize];
            x += sp.bary[k] * v.x;
            y += sp.bary[k] * v.y;
        }
        if let Some(v) = img.sample_bilinear(x, y) {
            texture[i] = v;
            coverage[i] = true;
        }
    }
    Ok((texture, coverage))
}

/// Render a canonical-frame texture at given landmark positions into an
/// image canvas (the inverse of `warp_to_canonical`). Pixels outside the
/// mesh, or whose canonical sample touches unsupported pixels, get
/// `background`.
pub fn render_texture(
    frame: &CanonicalFrame,
    texture: &[f64],
    shape: &[Point],
    width: usize,
    height: usize,
    background: f64,
) -> Result<ThermalImage> {
    if texture.len() != frame.support.len() {
        return Err(Error::InvalidArgument(format!(
            "texture has {} values, frame support is {}",
            texture.len(),
            frame.support.len()
        )));
    }
    if shape.len() != frame.verts.len() {
        return Err(Error::InvalidArgument(
            "shape landmark count mismatch".into(),
        ));
    }

    // Canonical raster with validity.
    let raster = frame.to_raster(texture, 0.0);
    let valid: Vec<bool> = frame.pixel_index.iter().map(|&i| i != u32::MAX).collect();
    let sample_canonical = |x: f64, y: f64| -> Option<f64> {
        if !(x >= 0.0 && y >= 0.0 && x <= (frame.width - 1) as f64 && y <= (frame.height - 1) as f64)
        {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(frame.width - 1);
        let y1 = (y0 + 1).min(frame.height - 1);
        for &(xx, yy) in &[(x0, y0), (x1, y0), (x0, y1), (x1, y1)] {
            if !valid[yy * frame.width + xx] {
                return None;
            }
        }
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let at = |xx: usize, yy: usize| raster[yy * frame.width + xx];
        Some(
            (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x1, y0))
                + fy * ((1.0 - fx) * at(x0, y1) + fx * at(x1, y1)),
        )
    };

    // Per-triangle inverse affine maps over the *target* shape.
    struct Tri {
        v: [usize; 3],
        a: Point,
        inv: [f64; 4],
        bbox: (f64, f64, f64, f64),
        degenerate: bool,
    }
    let tri_set: std::collections::BTreeSet<[u32; 3]> =
        frame.support.iter().map(|sp| sp.verts).collect();
    let tris: Vec<Tri> = tri_set
        .iter()
        .map(|v| {
            let (a, b, c) = (
                shape[v[0] as usize],
                shape[v[1] as usize],
                shape[v[2] as usize],
            );
            let m00 = b.x - a.x;
            let m01 = c.x - a.x;
            let m10 = b.y - a.y;
            let m11 = c.y - a.y;
            let det = m00 * m11 - m01 * m10;
            let degenerate = det.abs() < 1e-12;
            let inv = if degenerate {
                [0.0; 4]
            } else {
                [m11 / det, -m01 / det, -m10 / det, m00 / det]
            };
            Tri {
                v: [v[0] as usize, v[1] as usize, v[2] as usize],
                a,
                inv,
                bbox: (
                    a.x.min(b.x).min(c.x),
                    a.y.min(b.y).min(c.y),
                    a.x.max(b.x).max(c.x),
                    a.y.max(b.y).max(c.y),
                ),
                degenerate,
            }
        })
        .collect();

    let mut out = vec![background; width * height];
    for y in 0..height {
        for x in 0..width {
            let px = x as f64;
            let py = y as f64;
            for t in &tris {
                if t.degenerate
                    || px < t.bbox.0
                    || py < t.bbox.1
                    || px > t.bbox.2
                    || py > t.bbox.3
                {
                    continue;
                }
                let dx = px - t.a.x;
                let dy = py - t.a.y;
                let b1 = t.inv[0] * dx + t.inv[1] * dy;
                let b2 = t.inv[2] * dx + t.inv[3] * dy;
                let b0 = 1.0 - b1 - b2;
                if b0 >= -1e-9 && b1 >= -1e-9 && b2 >= -1e-9 {
                    let cx = b0 * frame.verts[t.v[0]].x
                        + b1 * frame.verts[t.v[1]].x
                        + b2 * frame.verts[t.v[2]].x;
                    let cy = b0 * frame.verts[t.v[0]].y
                        + b1 * frame.verts[t.v[1]].y
                        + b2 * frame.verts[t.v[2]].y;
                    if let Some(v) = sample_canonical(cx, cy) {
                        out[y * width + x] = v;
                    }
                    break;
                }
            }
        }
    }
    Ok(ThermalImage::from_raw(width, height, out))
}
