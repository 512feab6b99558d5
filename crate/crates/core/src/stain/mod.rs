//! Stain separation and instance features.

mod featfile;
mod features;
mod od;

pub use featfile::{
    decode_features, encode_features, index_path, read_features, write_features, FeatureMatrix, RowIndex,
};
pub use features::{
    extract_handcrafted, FeatureConfig, FeatureExtractor, DEFAULT_DAB_THRESHOLD, FEATURE_DIM, HIST_BINS,
    TISSUE_OD_SUM,
};
pub use od::{deconvolve_hdab, od_to_rgb, rgb_to_od, StainPlanes, StainVectors, Unmixer, Vec3};
