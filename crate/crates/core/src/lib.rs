//! Thermal-infrared face recognition pipeline.
//!
//! The crate provides, end to end:
//!
//! - detail-enhancing preprocessing (anisotropic diffusion + equalization)
//!   that makes active appearance models fittable on thermal imagery,
//! - statistical shape/appearance models with inverse-compositional fitting
//!   and geometrically truncated variants for eye-wear and facial-hair
//!   occlusion,
//! - a pose- and appearance-partitioned model ensemble with size-normalized
//!   model selection,
//! - vesselness-based identity signatures that depend on temperature
//!   gradients rather than absolute intensity,
//! - a single-image gallery/probe evaluation harness (CMC + ROC), and
//! - a deterministic synthetic phantom generator for benchmarks.

pub mod diffusion;
pub mod error;
pub mod imaging;
pub mod vesselness;

pub use error::{Error, Result};
