//! Tubular-structure likelihood from multi-scale Hessian eigen-analysis.
//!
//! Two formulas are available. `PaperVerbatim` evaluates
//! `(1 - exp(-Ra / 2 beta^2)) * (1 - exp(-S / 2 c^2))` exactly as printed in
//! the source publication; note that this expression grows with the
//! eigenvalue ratio, so ideal tubes (Ra = 0) score zero. `FrangiClassic`
//! evaluates the original Frangi form
//! `exp(-Ra^2 / 2 beta^2) * (1 - exp(-S^2 / 2 c^2))` with scale-normalized
//! (s^2) second derivatives, which is what the recognition pipeline uses.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{hessian_at_scale, HessianField, ThermalImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VesselMode {
    PaperVerbatim,
    FrangiClassic,
}

/// Sign convention for ridge detection: bright vessels on a darker
/// background have lambda2 < 0, dark vessels lambda2 > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    BrightVessels,
    DarkVessels,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VesselnessParams {
    /// Sensitivity to the eigenvalue-ratio statistic.
    pub beta: f64,
    /// Sensitivity to the structureness statistic; `None` selects half the
    /// maximum Hessian Frobenius norm, computed per image and scale.
    pub cparam: Option<f64>,
    /// Analysis scales in pixels, strictly increasing.
    pub scales: Vec<f64>,
    pub mode: VesselMode,
    pub polarity: Polarity,
}

impl Default for VesselnessParams {
    fn default() -> Self {
        Self {
            beta: 0.5,
            cparam: None,
            scales: vec![1.0, 1.4, 2.0, 2.8, 4.0, 5.7, 8.0],
            mode: VesselMode::FrangiClassic,
            polarity: Polarity::BrightVessels,
        }
    }
}

impl VesselnessParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if let Some(c) = self.cparam {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "cparam must be positive, got {c}"
                )));
            }
        }
        if self.scales.is_empty() {
            return Err(Error::InvalidArgument("scales must be nonempty".into()));
        }
        for w in self.scales.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidArgument(
                    "scales must be strictly increasing".into(),
                ));
            }
        }
        if self.scales.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidArgument("scales must be positive".into()));
        }
        Ok(())
    }
}

/// Eigenvalues of a symmetric 2x2 matrix ordered by absolute value,
/// `|lambda1| <= |lambda2|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Closed-form symmetric 2x2 eigenvalues ordered by absolute value; on an
/// absolute-value tie the smaller signed value comes first.
pub fn eig_sym_2x2(lxx: f64, lxy: f64, lyy: f64) -> EigenPair {
    let half_trace = 0.5 * (lxx + lyy);
    let disc = (0.5 * (lxx - lyy)).hypot(lxy);
    let a = half_trace + disc;
    let b = half_trace - disc;
    let (lambda1, lambda2) = if a.abs() < b.abs() {
        (a, b)
    } else if b.abs() < a.abs() {
        (b, a)
    } else {
        (a.min(b), a.max(b))
    };
    EigenPair { lambda1, lambda2 }
}

/// Per-pixel maximal vesselness across scales plus the maximizing scale.
#[derive(Debug, Clone)]
pub struct VesselnessMap {
    pub v0: Vec<f64>,
    pub argmax_scale: Vec<f64>,
    pub width: usize,
    pub height: usize,
}

#[inline]
fn vesselness_pixel(
    lxx: f64,
    lxy: f64,
    lyy: f64,
    beta: f64,
    c: f64,
    mode: VesselMode,
    polarity: Polarity,
) -> f64 {
    let eig = eig_sym_2x2(lxx, lxy, lyy);
    let gate = match polarity {
        Polarity::BrightVessels => eig.lambda2 < 0.0,
        Polarity::DarkVessels => eig.lambda2 > 0.0,
    };
    if !gate {
        return 0.0;
    }
    let ratio = eig.lambda1.abs() / eig.lambda2.abs();
    let structureness = eig.lambda1.hypot(eig.lambda2);
    match mode {
        VesselMode::PaperVerbatim => {
            (1.0 - (-ratio / (2.0 * beta * beta)).exp())
                * (1.0 - (-structureness / (2.0 * c * c)).exp())
        }
        VesselMode::FrangiClassic => {
            (-(ratio * ratio) / (2.0 * beta * beta)).exp()
                * (1.0 - (-(structureness * structureness) / (2.0 * c * c)).exp())
        }
    }
}

/// Single-scale vesselness of a precomputed Hessian field.
///
/// In `FrangiClassic` mode the second derivatives are scale-normalized by
/// `s^2` before eigen-analysis.
pub fn vesselness_at_scale(h: &HessianField, p: &VesselnessParams) -> Result<Vec<f64>> {
    p.validate()?;
    let gamma = match p.mode {
        VesselMode::FrangiClassic => h.scale * h.scale,
        VesselMode::PaperVerbatim => 1.0,
    };
    let n = h.lxx.len();
    let c = match p.cparam {
        Some(c) => c,
        None => {
            // Half the maximum Hessian Frobenius norm over the image.
            let mut max_norm = 0.0f64;
            for i in 0..n {
                let s = (gamma * h.lxx[i]).hypot(gamma * h.lyy[i]);
                let s = s.hypot(std::f64::consts::SQRT_2 * gamma * h.lxy[i]);
                max_norm = max_norm.max(s);
            }
            if max_norm == 0.0 {
                return Ok(vec![0.0; n]);
            }
            0.5 * max_norm
        }
    };
    let out = (0..n)
        .map(|i| {
            vesselness_pixel(
                gamma * h.lxx[i],
                gamma * h.lxy[i],
                gamma * h.lyy[i],
                p.beta,
                c,
                p.mode,
                p.polarity,
            )
        })
        .collect();
    Ok(out)
}

/// Maximal vesselness across `p.scales`; ties keep the smaller scale.
pub fn vesselness_multiscale(img: &ThermalImage, p: &VesselnessParams) -> Result<VesselnessMap> {
    p.validate()?;
    let n = img.width() * img.height();
    let per_scale: Vec<(f64, Vec<f64>)> = p
        .scales
        .par_iter()
        .map(|&s| {
            let h = hessian_at_scale(img, s)?;
            Ok((s, vesselness_at_scale(&h, p)?))
        })
        .collect::<Result<_>>()?;
    let mut v0 = vec![0.0f64; n];
    let mut argmax = vec![p.scales[0]; n];
    let mut first = true;
    for (s, v) in per_scale {
        if first {
            v0.copy_from_slice(&v);
            argmax.iter_mut().for_each(|a| *a = s);
            first = false;
            continue;
        }
        for i in 0..n {
            if v[i] > v0[i] {
                v0[i] = v[i];
                argmax[i] = s;
            }
        }
    }
    Ok(VesselnessMap {
        v0,
        argmax_scale: argmax,
        width: img.width(),
        height: img.height(),
    })
}
