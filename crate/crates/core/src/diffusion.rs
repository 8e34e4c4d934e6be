//! Anisotropic diffusion and the detail-enhancement transform that AAM
//! fitting consumes.
//!
//! The diffusion is the classic explicit 4-neighbor scheme with an
//! exponential conductance `exp(-|g|/kappa)` and zero-flux boundaries.
//! Detail enhancement subtracts the diffused image from the original,
//! rescales the difference to `[0, 1]` and histogram-equalizes it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{hist_equalize, ThermalImage};

/// Explicit-scheme diffusion parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionConfig {
    /// Conductance denominator.
    pub kappa: f64,
    /// Time step; the 4-neighbor explicit scheme is stable for dt <= 0.25.
    pub dt: f64,
    /// Iteration count.
    pub steps: usize,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            kappa: 400.0,
            dt: 0.2,
            steps: 20,
        }
    }
}

impl DiffusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= 0.25) {
            return Err(Error::InvalidArgument(format!(
                "dt must be in (0, 0.25], got {}",
                self.dt
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Detail-enhanced image; values in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct DetailImage {
    image: ThermalImage,
}

impl DetailImage {
    /// Wrap an existing `[0, 1]` raster as a detail image.
    pub fn from_image(image: ThermalImage) -> Result<Self> {
        let (lo, hi) = image.min_max();
        if lo < 0.0 || hi > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "detail image values must lie in [0, 1], got [{lo}, {hi}]"
            )));
        }
        Ok(Self { image })
    }

    pub fn as_image(&self) -> &ThermalImage {
        &self.image
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn data(&self) -> &[f64] {
        self.image.data()
    }
}

/// Exponential edge-stopping function `exp(-gmag/kappa)`.
pub fn conductance(gmag: f64, kappa: f64) -> Result<f64> {
    if !(gmag.is_finite() && gmag >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gradient magnitude must be finite and non-negative, got {gmag}"
        )));
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    Ok(conductance_unchecked(gmag, kappa))
}

#[inline]
fn conductance_unchecked(gmag: f64, kappa: f64) -> f64 {
    (-gmag / kappa).exp()
}

/// Explicit Euler anisotropic diffusion with 4-neighbor flux and zero-flux
/// boundaries. Each step reads only the previous iterate.
pub fn diffuse(img: &ThermalImage, cfg: &DiffusionConfig) -> Result<ThermalImage> {
    cfg.validate()?;
    let (w, h) = (img.width(), img.height());
    let mut cur = img.data().to_vec();
    let mut next = vec![0.0f64; w * h];
    for _ in 0..cfg.steps {
        {
            let cur_ref = &cur;
            next.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
                for x in 0..w {
                    let i = y * w + x;
                    let c = cur_ref[i];
                    let mut flux = 0.0;
                    if x > 0 {
                        let d = cur_ref[i - 1] - c;
                        flux += conductance_unchecked(d.abs(), cfg.kappa) * d;
                    }
                    if x + 1 < w {
                        let d = cur_ref[i + 1] - c;
                        flux += conductance_unchecked(d.abs(), cfg.kappa) * d;
                    }
                    if y > 0 {
                        let d = cur_ref[i - w] - c;
                        flux += conductance_unchecked(d.abs(), cfg.kappa) * d;
                    }
                    if y + 1 < h {
                        let d = cur_ref[i + w] - c;
                        flux += conductance_unchecked(d.abs(), cfg.kappa) * d;
                    }
                    row[x] = c + cfg.dt * flux;
                }
            });
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(ThermalImage::from_raw(w, h, cur))
}

/// Subtract the diffused image from the original, rescale the difference to
/// `[0, 1]` (rank-preserving) and histogram-equalize.
pub fn enhance_detail(img: &ThermalImage, cfg: &DiffusionConfig) -> Result<DetailImage> {
    let diffused = diffuse(img, cfg)?;
    let residual: Vec<f64> = img
        .data()
        .iter()
        .zip(diffused.data())
        .map(|(a, b)| a - b)
        .collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in &residual {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let rescaled: Vec<f64> = if hi - lo > 1e-15 {
        residual.iter().map(|&v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; residual.len()]
    };
    let eq = hist_equalize(&ThermalImage::from_raw(img.width(), img.height(), rescaled));
    Ok(DetailImage { image: eq })
}
