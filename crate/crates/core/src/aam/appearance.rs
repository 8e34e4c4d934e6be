//! Canonical-frame appearance model: photometrically normalized template
//! and orthonormal texture modes over the mesh support.

use crate::aam::mesh::CanonicalFrame;
use crate::aam::mesh::Point;
use crate::aam::warp::warp_to_canonical;
use crate::diffusion::DetailImage;
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize_against, pca_retained};

/// Appearance template and modes in support order. Modes are orthonormal and
/// zero-mean over the visible support; `mask` marks the visible pixels
/// (all true for untruncated models).
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceModel {
    pub template: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
}

impl AppearanceModel {
    pub fn n_visible(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Zero-mean, unit-variance normalization over the support. Constant
/// textures normalize to zero.
pub(crate) fn photometric_normalize(texture: &mut [f64]) {
    let n = texture.len() as f64;
    let mean = texture.iter().sum::<f64>() / n;
    for v in texture.iter_mut() {
        *v -= mean;
    }
    let var = texture.iter().map(|v| v * v).sum::<f64>() / n;
    let std = var.sqrt();
    if std > 1e-12 {
        for v in texture.iter_mut() {
            *v /= std;
        }
    } else {
        texture.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Warp detail-enhanced training images to the canonical frame, normalize
/// photometrically, and PCA the result retaining `retain` of the variance.
pub fn train_appearance_model(
    images: &[&DetailImage],
    shapes: &[Vec<Point>],
    frame: &CanonicalFrame,
    retain: f64,
) -> Result<AppearanceModel> {
    if images.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "appearance training requires at least 2 samples, got {}",
            images.len()
        )));
    }
    if images.len() != shapes.len() {
        return Err(Error::InvalidArgument(
            "images and shapes must have equal length".into(),
        ));
    }
    let n_pix = frame.support.len();
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(images.len());
    for (img, shape) in images.iter().zip(shapes) {
        let (mut tex, cov) = warp_to_canonical(img.as_image(), shape, frame)?;
        // Out-of-image samples (rare in training) take the covered mean.
        let covered: Vec<f64> = tex
            .iter()
            .zip(&cov)
            .filter(|(_, &c)| c)
            .map(|(&v, _)| v)
            .collect();
        if covered.is_empty() {
            return Err(Error::InvalidArgument(
                "a training shape lies entirely outside its image".into(),
            ));
        }
        let fill = covered.iter().sum::<f64>() / covered.len() as f64;
        for (v, &c) in tex.iter_mut().zip(&cov) {
            if !c {
                *v = fill;
            }
        }
        photometric_normalize(&mut tex);
        samples.push(tex);
    }

    let mut template = vec![0.0f64; n_pix];
    for s in &samples {
        for (t, &v) in template.iter_mut().zip(s) {
            *t += v / samples.len() as f64;
        }
    }
    let deviations: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.iter().zip(&template).map(|(a, b)| a - b).collect())
        .collect();
    let (raw_modes, _) = pca_retained(&deviations, retain);
    let (modes, _) = orthonormalize_against(&[], &raw_modes, 1e-8);

    Ok(AppearanceModel {
        template,
        modes,
        mask: vec![true; n_pix],
    })
}
