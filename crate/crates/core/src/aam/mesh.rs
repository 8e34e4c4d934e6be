//! Landmark mesh topology: Delaunay triangulation over the mean shape,
//! occlusion-region triangle tags, and the canonical-frame rasterization
//! shared by warping, appearance modeling and fitting.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

pub fn centroid(points: &[Point]) -> Point {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point::new(sx / n, sy / n)
}

/// Root-mean-square distance of the points from their centroid.
pub fn rms_radius(points: &[Point]) -> f64 {
    let c = centroid(points);
    let ms = points
        .iter()
        .map(|p| {
            let dx = p.x - c.x;
            let dy = p.y - c.y;
            dx * dx + dy * dy
        })
        .sum::<f64>()
        / points.len() as f64;
    ms.sqrt()
}

/// Occlusion-region label of a mesh triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionTag {
    Other,
    EyeRegion,
    LowerFace,
}

// Proportional bands on the mean-shape bounding box used to tag triangles,
// mirroring manual region construction: the eye band sits just above the
// vertical middle of the face, the lower-face band covers mouth and chin.
const EYE_BAND_Y: (f64, f64) = (0.26, 0.50);
const EYE_BAND_X: (f64, f64) = (0.08, 0.92);
const LOWER_BAND_Y_MIN: f64 = 0.64;

/// Triangulated landmark connectivity plus per-triangle region tags.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshTopology {
    pub n_landmarks: usize,
    pub triangles: Vec<[usize; 3]>,
    pub tags: Vec<RegionTag>,
}

impl MeshTopology {
    /// Delaunay-triangulate a landmark set and tag occlusion regions from
    /// proportional position over the shape's bounding box.
    pub fn from_shape(points: &[Point]) -> Result<Self> {
        let triangles = delaunay(points)?;
        let tags = tag_regions(points, &triangles);
        let topo = Self {
            n_landmarks: points.len(),
            triangles,
            tags,
        };
        topo.validate()?;
        Ok(topo)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tags.len() != self.triangles.len() {
            return Err(Error::InvalidArgument(
                "triangle tags must cover all triangles".into(),
            ));
        }
        let mut used = vec![false; self.n_landmarks];
        for t in &self.triangles {
            for &v in t {
                if v >= self.n_landmarks {
                    return Err(Error::InvalidArgument(format!(
                        "triangle index {v} out of range"
                    )));
                }
                used[v] = true;
            }
        }
        if !used.iter().all(|&u| u) {
            return Err(Error::InvalidArgument(
                "every landmark must appear in at least one triangle".into(),
            ));
        }
        Ok(())
    }

    /// Triangles adjacent to each vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n_landmarks];
        for (ti, t) in self.triangles.iter().enumerate() {
            for &v in t {
                adj[v].push(ti as u32);
            }
        }
        adj
    }
}

fn tag_regions(points: &[Point], triangles: &[[usize; 3]]) -> Vec<RegionTag> {
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let w = (x1 - x0).max(1e-12);
    let h = (y1 - y0).max(1e-12);
    triangles
        .iter()
        .map(|t| {
            let cx = (points[t[0]].x + points[t[1]].x + points[t[2]].x) / 3.0;
            let cy = (points[t[0]].y + points[t[1]].y + points[t[2]].y) / 3.0;
            let tx = (cx - x0) / w;
            let ty = (cy - y0) / h;
            if ty >= EYE_BAND_Y.0 && ty <= EYE_BAND_Y.1 && tx >= EYE_BAND_X.0 && tx <= EYE_BAND_X.1
            {
                RegionTag::EyeRegion
            } else if ty >= LOWER_BAND_Y_MIN {
                RegionTag::LowerFace
            } else {
                RegionTag::Other
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Delaunay triangulation (Bowyer-Watson)
// ---------------------------------------------------------------------------

/// Delaunay triangulation by incremental insertion. Points receive a tiny
/// deterministic index-dependent jitter so that cocircular landmark rows
/// (common in face annotation schemes) do not produce degenerate cavities.
pub fn delaunay(points: &[Point]) -> Result<Vec<[usize; 3]>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "triangulation requires at least 3 landmarks, got {n}"
        )));
    }
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let jitter = span * 1e-9;
    let pts: Vec<Point> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let a = ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5;
            let b = ((i * 40503 + 7) % 1000) as f64 / 1000.0 - 0.5;
            Point::new(p.x + jitter * a, p.y + jitter * b)
        })
        .collect();

    // Super-triangle comfortably containing everything.
    let cx = 0.5 * (x0 + x1);
    let cy = 0.5 * (y0 + y1);
    let big = 20.0 * span;
    let mut all = pts.clone();
    all.push(Point::new(cx - big, cy - big));
    all.push(Point::new(cx + big, cy - big));
    all.push(Point::new(cx, cy + big));
    let (s0, s1, s2) = (n, n + 1, n + 2);

    let mut tris: Vec<[usize; 3]> = vec![[s0, s1, s2]];
    for pi in 0..n {
        let p = all[pi];
        let mut bad = Vec::new();
        for (ti, t) in tris.iter().enumerate() {
            if in_circumcircle(all[t[0]], all[t[1]], all[t[2]], p) {
                bad.push(ti);
            }
        }
        // Boundary of the cavity: edges belonging to exactly one bad triangle.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &ti in &bad {
            let t = tris[ti];
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let key = (a.min(b), a.max(b));
                if let Some(pos) = edges.iter().position(|&e| e == key) {
                    edges.remove(pos);
                } else {
                    edges.push(key);
                }
            }
        }
        for &ti in bad.iter().rev() {
            tris.remove(ti);
        }
        for (a, b) in edges {
            tris.push([a, b, pi]);
        }
    }

    let mut out: Vec<[usize; 3]> = tris
        .into_iter()
        .filter(|t| t.iter().all(|&v| v < n))
        .map(|mut t| {
            t.sort_unstable();
            t
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(Error::InvalidArgument(
            "landmark set is degenerate (collinear points?)".into(),
        ));
    }
    Ok(out)
}

fn in_circumcircle(a: Point, b: Point, c: Point, p: Point) -> bool {
    // Orientation-normalized incircle determinant.
    let orient = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let (b, c) = if orient < 0.0 { (c, b) } else { (b, c) };
    let ax = a.x - p.x;
    let ay = a.y - p.y;
    let bx = b.x - p.x;
    let by = b.y - p.y;
    let cx = c.x - p.x;
    let cy = c.y - p.y;
    let det = (ax * ax + ay * ay) * (bx * cy - cx * by)
        - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay);
    det > 0.0
}

// ---------------------------------------------------------------------------
// Canonical frame
// ---------------------------------------------------------------------------

/// One interior pixel of the canonical raster: its integer position, the
/// triangle containing it and the barycentric coordinates with respect to
/// that triangle's mean-shape vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportPixel {
    pub x: u32,
    pub y: u32,
    pub tri: u32,
    pub verts: [u32; 3],
    pub bary: [f64; 3],
}

/// Pixel grid of the mean shape's mesh: the frame all faces are warped into.
#[derive(Debug, Clone)]
pub struct CanonicalFrame {
    pub width: usize,
    pub height: usize,
    /// Mean shape in canonical pixel coordinates.
    pub verts: Vec<Point>,
    pub support: Vec<SupportPixel>,
    /// Full-raster lookup: support index or `u32::MAX`.
    pub pixel_index: Vec<u32>,
}

const FRAME_MARGIN: f64 = 2.0;

impl CanonicalFrame {
    /// Rasterize the mesh interior over the mean shape. The mean is shifted
    /// so its bounding box starts at (FRAME_MARGIN, FRAME_MARGIN).
    pub fn build(mean: &[Point], topo: &MeshTopology) -> Result<Self> {
        if mean.len() != topo.n_landmarks {
            return Err(Error::InvalidArgument(format!(
                "mean shape has {} landmarks, topology expects {}",
                mean.len(),
                topo.n_landmarks
            )));
        }
        let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
        let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in mean {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let verts: Vec<Point> = mean
            .iter()
            .map(|p| Point::new(p.x - x0 + FRAME_MARGIN, p.y - y0 + FRAME_MARGIN))
            .collect();
        let width = (x1 - x0 + 2.0 * FRAME_MARGIN).ceil() as usize + 1;
        let height = (y1 - y0 + 2.0 * FRAME_MARGIN).ceil() as usize + 1;

        // Inverse barycentric matrices per triangle.
        struct TriInv {
            v: [u32; 3],
            a: Point,
            inv: [f64; 4],
            bbox: (f64, f64, f64, f64),
        }
        let mut inv_tris = Vec::with_capacity(topo.triangles.len());
        for (ti, t) in topo.triangles.iter().enumerate() {
            let (a, b, c) = (verts[t[0]], verts[t[1]], verts[t[2]]);
            let m00 = b.x - a.x;
            let m01 = c.x - a.x;
            let m10 = b.y - a.y;
            let m11 = c.y - a.y;
            let det = m00 * m11 - m01 * m10;
            if det.abs() < 1e-9 {
                return Err(Error::DegenerateMesh { triangle: ti });
            }
            inv_tris.push(TriInv {
                v: [t[0] as u32, t[1] as u32, t[2] as u32],
                a,
                inv: [m11 / det, -m01 / det, -m10 / det, m00 / det],
                bbox: (
                    a.x.min(b.x).min(c.x),
                    a.y.min(b.y).min(c.y),
                    a.x.max(b.x).max(c.x),
                    a.y.max(b.y).max(c.y),
                ),
            });
        }

        let mut support = Vec::new();
        let mut pixel_index = vec![u32::MAX; width * height];
        const BARY_TOL: f64 = -1e-9;
        for y in 0..height {
            for x in 0..width {
                let px = x as f64;
                let py = y as f64;
                for (ti, t) in inv_tris.iter().enumerate() {
                    if px < t.bbox.0 - 1e-9
                        || py < t.bbox.1 - 1e-9
                        || px > t.bbox.2 + 1e-9
                        || py > t.bbox.3 + 1e-9
                    {
                        continue;
                    }
                    let dx = px - t.a.x;
                    let dy = py - t.a.y;
                    let b1 = t.inv[0] * dx + t.inv[1] * dy;
                    let b2 = t.inv[2] * dx + t.inv[3] * dy;
                    let b0 = 1.0 - b1 - b2;
                    if b0 >= BARY_TOL && b1 >= BARY_TOL && b2 >= BARY_TOL {
                        let sum = b0.max(0.0) + b1.max(0.0) + b2.max(0.0);
                        pixel_index[y * width + x] = support.len() as u32;
                        support.push(SupportPixel {
                            x: x as u32,
                            y: y as u32,
                            tri: ti as u32,
                            verts: t.v,
                            bary: [b0.max(0.0) / sum, b1.max(0.0) / sum, b2.max(0.0) / sum],
                        });
                        break;
                    }
                }
            }
        }
        if support.is_empty() {
            return Err(Error::InvalidArgument(
                "mean shape mesh encloses no pixels".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            verts,
            support,
            pixel_index,
        })
    }

    /// True at support pixels whose triangle carries one of `regions`.
    pub fn region_pixels(&self, topo: &MeshTopology, regions: &[RegionTag]) -> Vec<bool> {
        self.support
            .iter()
            .map(|sp| regions.contains(&topo.tags[sp.tri as usize]))
            .collect()
    }

    /// Expand a support-order vector into a full raster, `fill` elsewhere.
    pub fn to_raster(&self, values: &[f64], fill: f64) -> Vec<f64> {
        let mut out = vec![fill; self.width * self.height];
        for (sp, &v) in self.support.iter().zip(values) {
            out[sp.y as usize * self.width + sp.x as usize] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_grid(n: usize) -> Vec<Point> {
        let mut pts = Vec::new();
        for y in 0..n {
            for x in 0..n {
                pts.push(Point::new(x as f64 * 10.0, y as f64 * 10.0));
            }
        }
        pts
    }

    #[test]
    fn delaunay_square() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(0.0, 10.0),
            Point::new(10.0, 10.0),
        ];
        let tris = delaunay(&pts).unwrap();
        assert_eq!(tris.len(), 2);
        let mut used = [false; 4];
        for t in &tris {
            for &v in t {
                used[v] = true;
            }
        }
        assert!(used.iter().all(|&u| u));
    }

    #[test]
    fn delaunay_grid_covers_all_points() {
        let pts = square_grid(5);
        let topo = MeshTopology::from_shape(&pts).unwrap();
        topo.validate().unwrap();
        // Euler: for a triangulated convex n-point grid, 2*(n-1)^2 triangles.
        assert_eq!(topo.triangles.len(), 32);
    }

    #[test]
    fn delaunay_rejects_collinear() {
        let pts: Vec<Point> = (0..5).map(|i| Point::new(i as f64, 2.0 * i as f64)).collect();
        assert!(delaunay(&pts).is_err());
    }

    #[test]
    fn delaunay_is_deterministic() {
        let pts = square_grid(4);
        let a = delaunay(&pts).unwrap();
        let b = delaunay(&pts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn canonical_frame_covers_mesh_interior() {
        let pts = square_grid(3); // 20x20 square
        let topo = MeshTopology::from_shape(&pts).unwrap();
        let frame = CanonicalFrame::build(&pts, &topo).unwrap();
        // Interior of a 20x20 square: roughly 21*21 pixel centers.
        assert!(frame.support.len() >= 20 * 20);
        assert!(frame.support.len() <= 22 * 22);
        for sp in &frame.support {
            let s: f64 = sp.bary.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            // Barycentric reconstruction lands on the pixel.
            let t = topo.triangles[sp.tri as usize];
            let px: f64 = (0..3).map(|i| sp.bary[i] * frame.verts[t[i]].x).sum();
            let py: f64 = (0..3).map(|i| sp.bary[i] * frame.verts[t[i]].y).sum();
            assert!((px - sp.x as f64).abs() < 1e-9);
            assert!((py - sp.y as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(20.0, 0.0),
        ];
        let topo = MeshTopology {
            n_landmarks: 3,
            triangles: vec![[0, 1, 2]],
            tags: vec![RegionTag::Other],
        };
        assert!(matches!(
            CanonicalFrame::build(&pts, &topo),
            Err(Error::DegenerateMesh { triangle: 0 })
        ));
    }

    #[test]
    fn region_tags_follow_bands() {
        // Tall shape: triangles near the top in no band, mid-upper in the eye
        // band, bottom in the lower-face band.
        let pts = square_grid(5); // y in 0..40
        let topo = MeshTopology::from_shape(&pts).unwrap();
        let mut saw = (false, false, false);
        for (t, tag) in topo.triangles.iter().zip(&topo.tags) {
            let cy = (pts[t[0]].y + pts[t[1]].y + pts[t[2]].y) / 3.0 / 40.0;
            match tag {
                RegionTag::EyeRegion => {
                    saw.0 = true;
                    assert!(cy >= EYE_BAND_Y.0 && cy <= EYE_BAND_Y.1);
                }
                RegionTag::LowerFace => {
                    saw.1 = true;
                    assert!(cy >= LOWER_BAND_Y_MIN);
                }
                RegionTag::Other => saw.2 = true,
            }
        }
        assert!(saw.0 && saw.1 && saw.2);
    }
}
