//! Core raster type and scale-space primitives: Gaussian smoothing, analytic
//! Gaussian derivatives, histogram equalization and threshold-based face
//! localization.

pub mod io;

use crate::error::{Error, Result};

/// Single-channel intensity raster with floating values.
///
/// The radiometric scale is arbitrary; file ingest normalizes to `[0, 1]`.
/// All values are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ThermalImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "image contains non-finite values".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Build from a per-pixel function. The function must return finite values.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Bilinear sample at a subpixel position. Returns `None` outside
    /// `[0, w-1] x [0, h-1]`.
    #[inline]
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<f64> {
        if !(x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64)
        {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let v00 = self.get(x0, y0);
        let v10 = self.get(x1, y0);
        let v01 = self.get(x0, y1);
        let v11 = self.get(x1, y1);
        Some((1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11))
    }
}

/// First spatial derivatives of an image.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub width: usize,
    pub height: usize,
}

/// Second Gaussian derivatives at one analysis scale.
#[derive(Debug, Clone)]
pub struct HessianField {
    pub lxx: Vec<f64>,
    pub lxy: Vec<f64>,
    pub lyy: Vec<f64>,
    pub scale: f64,
    pub width: usize,
    pub height: usize,
}

/// Integer pixel rectangle, inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

/// Detected face position: component centroid, equivalent-disc radius and
/// bounding box of the largest foreground component.
#[derive(Debug, Clone, Copy)]
pub struct FaceLocus {
    pub centroid: (f64, f64),
    pub scale: f64,
    pub bbox: Rect,
}

// ---------------------------------------------------------------------------
// Convolution machinery
// ---------------------------------------------------------------------------

/// Sampled unit-sum Gaussian kernel, radius ceil(3 sigma).
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Sampled first-derivative kernel: correlation with it approximates the
/// first derivative of the Gaussian-smoothed signal. Moments are corrected
/// so that sum(k) = 0 and sum(i * k[i]) = 1 hold exactly.
fn gaussian_d1_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let s2 = sigma * sigma;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| {
            let t = i as f64;
            t / s2 * (-(t * t) / (2.0 * s2)).exp()
        })
        .collect();
    // Odd symmetry gives sum(k) = 0 already; normalize the first moment.
    let m1: f64 = k
        .iter()
        .enumerate()
        .map(|(idx, &v)| (idx as i64 - radius) as f64 * v)
        .sum();
    for v in &mut k {
        *v /= m1;
    }
    k
}

/// Sampled second-derivative kernel: correlation with it approximates the
/// second derivative of the Gaussian-smoothed signal. Moments are corrected
/// so that sum(k) = 0 and sum(i^2 * k[i]) = 2 hold exactly.
fn gaussian_d2_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let s2 = sigma * sigma;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| {
            let t = i as f64;
            (t * t - s2) / (s2 * s2) * (-(t * t) / (2.0 * s2)).exp()
        })
        .collect();
    let n = k.len() as f64;
    let mean: f64 = k.iter().sum::<f64>() / n;
    for v in &mut k {
        *v -= mean;
    }
    let m2: f64 = k
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let t = (idx as i64 - radius) as f64;
            t * t * v
        })
        .sum();
    for v in &mut k {
        *v *= 2.0 / m2;
    }
    k
}

/// Horizontal correlation with edge replication.
fn correlate_rows(data: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let mut out = vec![0.0; data.len()];
    for y in 0..height {
        let row = &data[y * width..(y + 1) * width];
        let out_row = &mut out[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                let sx = (x as i64 + ki as i64 - radius).clamp(0, width as i64 - 1) as usize;
                acc += kv * row[sx];
            }
            out_row[x] = acc;
        }
    }
    out
}

/// Vertical correlation with edge replication.
fn correlate_cols(data: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let mut out = vec![0.0; data.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                let sy = (y as i64 + ki as i64 - radius).clamp(0, height as i64 - 1) as usize;
                acc += kv * data[sy * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

fn separable(
    img: &ThermalImage,
    row_kernel: &[f64],
    col_kernel: &[f64],
) -> Vec<f64> {
    let tmp = correlate_rows(img.data(), img.width, img.height, row_kernel);
    correlate_cols(&tmp, img.width, img.height, col_kernel)
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Separable Gaussian smoothing, kernel radius ceil(3 sigma), edge
/// replication. `sigma = 0` returns the input unchanged.
pub fn gaussian_smooth(img: &ThermalImage, sigma: f64) -> Result<ThermalImage> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let k = gaussian_kernel(sigma);
    Ok(ThermalImage::from_raw(
        img.width,
        img.height,
        separable(img, &k, &k),
    ))
}

/// Central differences in the interior, one-sided at the borders.
pub fn gradient(img: &ThermalImage) -> Result<GradientField> {
    let (w, h) = (img.width, img.height);
    if w < 2 || h < 2 {
        return Err(Error::InvalidArgument(format!(
            "gradient requires at least 2x2 pixels, got {w}x{h}"
        )));
    }
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let mut magnitude = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let dx = if x == 0 {
                img.get(1, y) - img.get(0, y)
            } else if x == w - 1 {
                img.get(w - 1, y) - img.get(w - 2, y)
            } else {
                0.5 * (img.get(x + 1, y) - img.get(x - 1, y))
            };
            let dy = if y == 0 {
                img.get(x, 1) - img.get(x, 0)
            } else if y == h - 1 {
                img.get(x, h - 1) - img.get(x, h - 2)
            } else {
                0.5 * (img.get(x, y + 1) - img.get(x, y - 1))
            };
            let i = y * w + x;
            gx[i] = dx;
            gy[i] = dy;
            magnitude[i] = dx.hypot(dy);
        }
    }
    Ok(GradientField {
        gx,
        gy,
        magnitude,
        width: w,
        height: h,
    })
}

/// Second Gaussian derivatives at scale `s`, computed by correlation with
/// sampled analytic derivative-of-Gaussian kernels (separable).
pub fn hessian_at_scale(img: &ThermalImage, s: f64) -> Result<HessianField> {
    if !s.is_finite() || s <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "scale must be finite and positive, got {s}"
        )));
    }
    let g = gaussian_kernel(s);
    let d1 = gaussian_d1_kernel(s);
    let d2 = gaussian_d2_kernel(s);
    let lxx = separable(img, &d2, &g);
    let lyy = separable(img, &g, &d2);
    let lxy = separable(img, &d1, &d1);
    Ok(HessianField {
        lxx,
        lxy,
        lyy,
        scale: s,
        width: img.width,
        height: img.height,
    })
}

const HIST_BINS: usize = 256;

#[inline]
fn hist_bin(v: f64) -> usize {
    ((v * HIST_BINS as f64) as i64).clamp(0, HIST_BINS as i64 - 1) as usize
}

/// 256-bin CDF remapping to `[0, 1]`. Expects values in `[0, 1]`
/// (out-of-range values are clamped into the edge bins). A constant image
/// is returned unchanged.
pub fn hist_equalize(img: &ThermalImage) -> ThermalImage {
    let (lo, hi) = img.min_max();
    if hi - lo < 1e-12 {
        return img.clone();
    }
    let mut hist = [0u64; HIST_BINS];
    for &v in img.data() {
        hist[hist_bin(v)] += 1;
    }
    let total = img.data().len() as f64;
    let mut cdf = [0.0f64; HIST_BINS];
    let mut cum = 0u64;
    for (i, &c) in hist.iter().enumerate() {
        cum += c;
        cdf[i] = cum as f64 / total;
    }
    let data = img.data().iter().map(|&v| cdf[hist_bin(v)]).collect();
    ThermalImage::from_raw(img.width, img.height, data)
}

/// Otsu threshold over a 256-bin histogram spanning `[min, max]`.
/// Returns the threshold value (upper edge of the selected bin's start),
/// or `None` when the image has no dynamic range.
pub fn otsu_threshold(data: &[f64]) -> Option<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in data {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi - lo > 1e-12) {
        return None;
    }
    let bin_width = (hi - lo) / HIST_BINS as f64;
    let mut hist = [0u64; HIST_BINS];
    for &v in data {
        let b = (((v - lo) / bin_width) as i64).clamp(0, HIST_BINS as i64 - 1) as usize;
        hist[b] += 1;
    }
    let total = data.len() as f64;
    let sum_total: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum();
    let mut w_bg = 0.0;
    let mut sum_bg = 0.0;
    let mut best_var = -1.0;
    let mut best_bin = 0usize;
    for (t, &c) in hist.iter().enumerate() {
        w_bg += c as f64;
        if w_bg == 0.0 {
            continue;
        }
        let w_fg = total - w_bg;
        if w_fg == 0.0 {
            break;
        }
        sum_bg += t as f64 * c as f64;
        let mean_bg = sum_bg / w_bg;
        let mean_fg = (sum_total - sum_bg) / w_fg;
        let var = w_bg * w_fg * (mean_bg - mean_fg) * (mean_bg - mean_fg);
        if var > best_var {
            best_var = var;
            best_bin = t;
        }
    }
    Some(lo + (best_bin as f64 + 1.0) * bin_width)
}

/// Otsu threshold, largest 8-connected foreground component, centroid +
/// equivalent-disc radius + bounding box.
pub fn localize_face(img: &ThermalImage) -> Result<FaceLocus> {
    let threshold = otsu_threshold(img.data()).ok_or(Error::FaceNotFound)?;
    let (w, h) = (img.width, img.height);
    let fg: Vec<bool> = img.data().iter().map(|&v| v > threshold).collect();
    if !fg.iter().any(|&b| b) {
        return Err(Error::FaceNotFound);
    }

    // Largest 8-connected component by pixel count; first in scan order on tie.
    let mut labels = vec![u32::MAX; w * h];
    let mut best: Option<(usize, u32)> = None; // (size, label)
    let mut next_label = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !fg[start] || labels[start] != u32::MAX {
            continue;
        }
        let label = next_label;
        next_label += 1;
        let mut size = 0usize;
        stack.push(start);
        labels[start] = label;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let x_lo = x.saturating_sub(1);
            let y_lo = y.saturating_sub(1);
            for ny in y_lo..=(y + 1).min(h - 1) {
                for nx in x_lo..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if fg[j] && labels[j] == u32::MAX {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        if best.map_or(true, |(s, _)| size > s) {
            best = Some((size, label));
        }
    }
    let (area, label) = best.ok_or(Error::FaceNotFound)?;

    let mut sx = 0.0;
    let mut sy = 0.0;
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0usize, 0usize);
    for i in 0..w * h {
        if labels[i] == label {
            let (x, y) = (i % w, i / w);
            sx += x as f64;
            sy += y as f64;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
    }
    let n = area as f64;
    Ok(FaceLocus {
        centroid: (sx / n, sy / n),
        scale: (n / std::f64::consts::PI).sqrt(),
        bbox: Rect { x0, y0, x1, y1 },
    })
}
