//! Two-step attention MIL for identifying treatment responders from
//! DAB-stained IHC slides.
//!
//! Step one learns tumor vs non-tumor from tile-level labels; step two
//! learns responder status from predicted tumor tiles only. Around that
//! sit slide tiling, stain features, a synthetic cohort generator, and the
//! evaluation kit used to compare against the tumor proportion score.

pub mod annotation;
pub mod error;
pub mod eval;
pub mod mil;
pub mod pipeline;
pub mod raster;
pub mod rng;
pub mod slide;
pub mod stain;
pub mod synth;

pub use error::{Error, Result};
pub use mil::{Bag, MilDims, MilParams, TrainConfig};
pub use raster::{Dihedral, Mask, Raster};
pub use slide::{CohortManifest, Response, SlideImage, TileRecord, TumorLabel};
pub use stain::{FeatureMatrix, StainVectors, FEATURE_DIM};
