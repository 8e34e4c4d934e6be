//! Statistical shape + appearance models: training, piecewise-affine
//! warping, inverse-compositional fitting and geometric truncation for
//! occlusion handling.

pub mod appearance;
pub mod fit;
pub mod io;
pub mod mesh;
pub mod shape;
pub mod warp;

pub use appearance::{train_appearance_model, AppearanceModel};
pub use fit::{fit_icaam, init_fit, init_from_locus, FitConfig, FitResult, Fitter};
pub use mesh::{CanonicalFrame, MeshTopology, Point, RegionTag};
pub use shape::{train_shape_model, ShapeModel};
pub use warp::{render_texture, warp_to_canonical};

use crate::error::{Error, Result};
use crate::linalg::orthonormalize_against;

/// Which occlusion-prone region(s) a model's appearance support excludes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationKind {
    None,
    FacialHair,
    EyeWear,
    Both,
}

impl TruncationKind {
    pub fn regions(&self) -> &'static [RegionTag] {
        match self {
            TruncationKind::None => &[],
            TruncationKind::FacialHair => &[RegionTag::LowerFace],
            TruncationKind::EyeWear => &[RegionTag::EyeRegion],
            TruncationKind::Both => &[RegionTag::EyeRegion, RegionTag::LowerFace],
        }
    }

    pub fn file_token(&self) -> &'static str {
        match self {
            TruncationKind::None => "none",
            TruncationKind::FacialHair => "hair",
            TruncationKind::EyeWear => "eyes",
            TruncationKind::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub pose_bin: u32,
    pub cluster: u32,
    pub truncation: TruncationKind,
    /// Yaw interval this model was trained on, degrees.
    pub yaw_range: (f64, f64),
}

/// A trained model: mesh topology, shape model, appearance model and the
/// derived canonical frame rasterization.
#[derive(Debug, Clone)]
pub struct AamModel {
    pub topology: MeshTopology,
    pub shape: ShapeModel,
    pub appearance: AppearanceModel,
    pub meta: ModelMeta,
    frame: CanonicalFrame,
}

impl AamModel {
    pub fn new(
        topology: MeshTopology,
        shape: ShapeModel,
        appearance: AppearanceModel,
        meta: ModelMeta,
    ) -> Result<Self> {
        topology.validate()?;
        if shape.n_points() != topology.n_landmarks {
            return Err(Error::InvalidArgument(format!(
                "shape model has {} landmarks, topology expects {}",
                shape.n_points(),
                topology.n_landmarks
            )));
        }
        let frame = CanonicalFrame::build(&shape.mean, &topology)?;
        let n_pix = frame.support.len();
        if appearance.template.len() != n_pix || appearance.mask.len() != n_pix {
            return Err(Error::InvalidArgument(format!(
                "appearance support {} does not match frame support {n_pix}",
                appearance.template.len()
            )));
        }
        if appearance.modes.iter().any(|m| m.len() != n_pix) {
            return Err(Error::InvalidArgument(
                "appearance mode length mismatch".into(),
            ));
        }
        if meta.truncation == TruncationKind::None && !appearance.mask.iter().all(|&b| b) {
            return Err(Error::InvalidArgument(
                "untruncated model must have an all-true visibility mask".into(),
            ));
        }
        Ok(Self {
            topology,
            shape,
            appearance,
            meta,
            frame,
        })
    }

    pub fn frame(&self) -> &CanonicalFrame {
        &self.frame
    }
}

/// Zero the visibility mask on canonical pixels of the region's triangles
/// and re-orthonormalize the appearance modes on the reduced support. Shape
/// model and topology are untouched; nothing is retrained from images.
pub fn truncate_model(model: &AamModel, kind: TruncationKind) -> Result<AamModel> {
    let frame = model.frame();
    let region = frame.region_pixels(&model.topology, kind.regions());
    let new_mask: Vec<bool> = model
        .appearance
        .mask
        .iter()
        .zip(&region)
        .map(|(&m, &r)| m && !r)
        .collect();

    let mut meta = model.meta.clone();
    meta.truncation = kind;

    if new_mask == model.appearance.mask {
        // Nothing to remove (e.g. no tagged triangles): model is unchanged
        // apart from its label.
        let mut out = model.clone();
        out.meta = meta;
        return Ok(out);
    }

    let total = new_mask.len();
    let remaining = new_mask.iter().filter(|&&b| b).count();
    if remaining * 2 < total {
        return Err(Error::OverTruncation { remaining, total });
    }

    // Restrict template and modes to the surviving support: re-center on the
    // reduced support, re-orthonormalize, zero everything outside.
    let vis: Vec<usize> = (0..total).filter(|&i| new_mask[i]).collect();
    let center = |v: &[f64]| -> Vec<f64> {
        let mean = vis.iter().map(|&i| v[i]).sum::<f64>() / vis.len() as f64;
        vis.iter().map(|&i| v[i] - mean).collect()
    };
    let template_vis = center(&model.appearance.template);
    let modes_vis: Vec<Vec<f64>> = model.appearance.modes.iter().map(|m| center(m)).collect();
    let (ortho, _) = orthonormalize_against(&[], &modes_vis, 1e-8);

    let expand = |v: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; total];
        for (slot, &i) in vis.iter().enumerate() {
            full[i] = v[slot];
        }
        full
    };
    let appearance = AppearanceModel {
        template: expand(&template_vis),
        modes: ortho.iter().map(|m| expand(m)).collect(),
        mask: new_mask,
    };

    AamModel::new(
        model.topology.clone(),
        model.shape.clone(),
        appearance,
        meta,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    /// A face-like landmark layout: outline ellipse plus feature rows, so
    /// the proportional tagging yields all three regions.
    pub(crate) fn face_like_shape(cx: f64, cy: f64, s: f64) -> Vec<Point> {
        let mut pts = Vec::new();
        for i in 0..12 {
            let a = i as f64 / 12.0 * std::f64::consts::TAU;
            pts.push(Point::new(cx + s * a.cos(), cy + 1.3 * s * a.sin()));
        }
        // Brow row, eye row, cheek row, nose, mouth.
        for &x in &[-0.62, -0.25, 0.25, 0.62] {
            pts.push(Point::new(cx + s * x, cy - 0.55 * s));
        }
        for &x in &[-0.68, -0.42, -0.18, 0.18, 0.42, 0.68] {
            pts.push(Point::new(cx + s * x, cy - 0.30 * s));
        }
        for &x in &[-0.55, 0.0, 0.55] {
            pts.push(Point::new(cx + s * x, cy - 0.02 * s));
        }
        pts.push(Point::new(cx, cy + 0.30 * s));
        for &x in &[-0.20, 0.20] {
            pts.push(Point::new(cx + s * x, cy + 0.38 * s));
        }
        for &x in &[-0.30, 0.0, 0.30] {
            pts.push(Point::new(cx + s * x, cy + 0.62 * s));
        }
        pts
    }

    pub(crate) fn toy_model() -> AamModel {
        let shape_pts = face_like_shape(0.0, 0.0, 40.0);
        let shapes: Vec<Vec<Point>> = (0..4)
            .map(|i| {
                shape_pts
                    .iter()
                    .enumerate()
                    .map(|(j, p)| {
                        let w = ((i * 11 + j * 3) % 7) as f64 / 7.0 - 0.5;
                        Point::new(p.x + 0.8 * w, p.y - 0.8 * w)
                    })
                    .collect()
            })
            .collect();
        let shape = train_shape_model(&shapes, 0.95, 40.0).unwrap();
        let topo = MeshTopology::from_shape(&shape.mean).unwrap();
        let frame = CanonicalFrame::build(&shape.mean, &topo).unwrap();
        let n = frame.support.len();
        let mut template: Vec<f64> = frame
            .support
            .iter()
            .map(|sp| 0.3 * ((sp.x as f64 * 0.3).sin() + (sp.y as f64 * 0.2).cos()))
            .collect();
        crate::aam::appearance::photometric_normalize(&mut template);
        let mut mode: Vec<f64> = frame
            .support
            .iter()
            .map(|sp| ((sp.x as f64 * 0.5).cos() * (sp.y as f64 * 0.4).sin()))
            .collect();
        let mean = mode.iter().sum::<f64>() / n as f64;
        mode.iter_mut().for_each(|v| *v -= mean);
        let norm = dot(&mode, &mode).sqrt();
        mode.iter_mut().for_each(|v| *v /= norm);
        let appearance = AppearanceModel {
            template,
            modes: vec![mode],
            mask: vec![true; n],
        };
        AamModel::new(
            topo,
            shape,
            appearance,
            ModelMeta {
                pose_bin: 0,
                cluster: 0,
                truncation: TruncationKind::None,
                yaw_range: (-90.0, 90.0),
            },
        )
        .unwrap()
    }

    #[test]
    fn truncation_masks_exactly_the_region_pixels() {
        let model = toy_model();
        let frame = model.frame();
        let region = frame.region_pixels(&model.topology, TruncationKind::EyeWear.regions());
        assert!(region.iter().any(|&r| r), "toy mesh has no eye region");
        let t = truncate_model(&model, TruncationKind::EyeWear).unwrap();
        for i in 0..region.len() {
            assert_eq!(t.appearance.mask[i], !region[i]);
        }
        assert_eq!(t.meta.truncation, TruncationKind::EyeWear);
    }

    #[test]
    fn truncation_with_empty_region_keeps_model_identical() {
        let mut model = toy_model();
        // Remove all tags so every region set is empty.
        model.topology.tags = vec![RegionTag::Other; model.topology.triangles.len()];
        let t = truncate_model(&model, TruncationKind::EyeWear).unwrap();
        assert_eq!(t.appearance, model.appearance);
        assert_eq!(t.meta.truncation, TruncationKind::EyeWear);
    }

    #[test]
    fn both_is_union_of_regions() {
        let model = toy_model();
        let frame = model.frame();
        let eye = frame.region_pixels(&model.topology, TruncationKind::EyeWear.regions());
        let hair = frame.region_pixels(&model.topology, TruncationKind::FacialHair.regions());
        let both = truncate_model(&model, TruncationKind::Both).unwrap();
        for i in 0..eye.len() {
            assert_eq!(both.appearance.mask[i], !(eye[i] || hair[i]));
        }
    }

    #[test]
    fn truncated_modes_orthonormal_on_support() {
        let model = toy_model();
        let t = truncate_model(&model, TruncationKind::FacialHair).unwrap();
        for m in &t.appearance.modes {
            // Zero outside the mask.
            for (i, &v) in m.iter().enumerate() {
                if !t.appearance.mask[i] {
                    assert_eq!(v, 0.0);
                }
            }
            assert!((dot(m, m) - 1.0).abs() < 1e-9);
            let mean_vis: f64 = m
                .iter()
                .zip(&t.appearance.mask)
                .filter(|(_, &b)| b)
                .map(|(&v, _)| v)
                .sum::<f64>()
                / t.appearance.n_visible() as f64;
            assert!(mean_vis.abs() < 1e-9);
        }
    }

    #[test]
    fn over_truncation_rejected() {
        let mut model = toy_model();
        // Tag every triangle as eye region: truncation would leave nothing.
        model.topology.tags = vec![RegionTag::EyeRegion; model.topology.triangles.len()];
        assert!(matches!(
            truncate_model(&model, TruncationKind::EyeWear),
            Err(Error::OverTruncation { .. })
        ));
    }
}
