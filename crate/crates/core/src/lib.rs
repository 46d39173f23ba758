//! Fusion and evaluation of bounding boxes from two object detectors.
//!
//! Detector A's boxes are kept only when they contain the center of one of
//! detector B's boxes; when either detector predicts nothing for an image,
//! the other's boxes are used as-is. The crate also scores detections under a
//! center-in-ground-truth protocol, aggregates per-box labels into image
//! labels, and simulates detector outputs from a seed.

pub mod cli;
pub mod error;
pub mod formats;
pub mod fusion;
pub mod geometry;
pub mod metrics;
pub mod overlay;
pub mod pipeline;
pub mod simulator;

pub use error::{Error, Result};
pub use formats::{
    BoxKey, BoxSource, DatasetManifest, Detection, DetectionSet, ImageRecord, Label, LabelTable,
};
pub use fusion::{
    fuse_dataset, fuse_image, Branch, EmptyFusionPolicy, FusedBox, FusedImage, FusedResult,
    Provenance,
};
pub use geometry::{BBox, Point};
