//! Center-containment fusion of two detectors.
//!
//! Detector A supplies the boxes (tight boundaries); detector B votes on
//! which of them are correctly positioned. When both detectors predict for
//! an image, an A-box is kept only if it contains the center of at least one
//! B-box. When only one detector predicts, its boxes are used unchanged.
//! Scores are never consulted.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{BoxKey, BoxSource, DatasetManifest, Detection, DetectionSet};
use crate::geometry::BBox;

pub const FUSION_DETECTOR_ID: &str = "fusion";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    /// A-box kept because it contains a B-box center.
    ARetained,
    /// B-box used because A had nothing usable.
    BFallback,
    /// A-box used because B predicted nothing.
    AAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Branch {
    Both,
    OnlyA,
    OnlyB,
    Neither,
}

/// What to do when both detectors predicted but every A-box was discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyFusionPolicy {
    /// Keep the empty result.
    #[default]
    Literal,
    /// Substitute the B-boxes.
    BFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedBox {
    pub detection: Detection,
    pub provenance: Provenance,
    /// Smallest B-index whose center lies in this box (`ARetained` only).
    pub witness_index: Option<usize>,
    /// Position of the box in its source detector's list for the image.
    pub source_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedImage {
    pub boxes: Vec<FusedBox>,
    pub branch: Branch,
    /// Set when the `b-fallback` policy replaced an all-discarded `Both` result.
    pub fallback_applied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedResult {
    pub detector_a: String,
    pub detector_b: String,
    pub policy: EmptyFusionPolicy,
    pub per_image: BTreeMap<String, FusedImage>,
}

fn tag_all(dets: &[Detection], provenance: Provenance) -> Vec<FusedBox> {
    dets.iter()
        .enumerate()
        .map(|(i, d)| FusedBox {
            detection: d.clone(),
            provenance,
            witness_index: None,
            source_index: i,
        })
        .collect()
}

/// Applies the selection rules to one image.
pub fn fuse_image(a_boxes: &[Detection], b_boxes: &[Detection]) -> FusedImage {
    let (boxes, branch) = match (a_boxes.is_empty(), b_boxes.is_empty()) {
        (true, true) => (Vec::new(), Branch::Neither),
        (true, false) => (tag_all(b_boxes, Provenance::BFallback), Branch::OnlyB),
        (false, true) => (tag_all(a_boxes, Provenance::AAll), Branch::OnlyA),
        (false, false) => {
            let centers: Vec<_> = b_boxes.iter().map(|d| d.bbox.center()).collect();
            let kept = a_boxes
                .iter()
                .enumerate()
                .filter_map(|(i, a)| {
                    centers.iter().position(|&c| a.bbox.contains(c)).map(|j| FusedBox {
                        detection: a.clone(),
                        provenance: Provenance::ARetained,
                        witness_index: Some(j),
                        source_index: i,
                    })
                })
                .collect();
            (kept, Branch::Both)
        }
    };
    FusedImage {
        boxes,
        branch,
        fallback_applied: false,
    }
}

/// Fuses every manifest image. Images missing from a set count as empty.
pub fn fuse_dataset(
    a: &DetectionSet,
    b: &DetectionSet,
    manifest: &DatasetManifest,
    policy: EmptyFusionPolicy,
) -> Result<FusedResult> {
    if a.detector_id == b.detector_id {
        return Err(Error::DetectorIdCollision(a.detector_id.clone()));
    }
    a.check_against(manifest)?;
    b.check_against(manifest)?;

    let per_image = manifest
        .images()
        .par_iter()
        .map(|rec| {
            let id = rec.image_id.as_str();
            let (a_dets, b_dets) = (a.detections(id), b.detections(id));
            let mut fused = fuse_image(a_dets, b_dets);
            if fused.branch == Branch::Both
                && fused.boxes.is_empty()
                && policy == EmptyFusionPolicy::BFallback
            {
                fused.boxes = tag_all(b_dets, Provenance::BFallback);
                fused.fallback_applied = true;
            }
            (id.to_string(), fused)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    Ok(FusedResult {
        detector_a: a.detector_id.clone(),
        detector_b: b.detector_id.clone(),
        policy,
        per_image,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub provenance: Provenance,
    pub witness_index: Option<usize>,
    pub branch: Branch,
    pub source_index: usize,
}

pub type ProvenanceSidecar = BTreeMap<String, Vec<ProvenanceEntry>>;

impl FusedResult {
    pub fn image(&self, image_id: &str) -> Option<&FusedImage> {
        self.per_image.get(image_id)
    }

    pub fn to_detection_set(&self) -> DetectionSet {
        DetectionSet {
            detector_id: FUSION_DETECTOR_ID.to_string(),
            per_image: self
                .per_image
                .iter()
                .map(|(id, img)| (id.clone(), img.boxes.iter().map(|f| f.detection.clone()).collect()))
                .collect(),
        }
    }

    pub fn provenance_sidecar(&self) -> ProvenanceSidecar {
        self.per_image
            .iter()
            .map(|(id, img)| {
                let entries = img
                    .boxes
                    .iter()
                    .map(|f| ProvenanceEntry {
                        provenance: f.provenance,
                        witness_index: f.witness_index,
                        branch: img.branch,
                        source_index: f.source_index,
                    })
                    .collect();
                (id.clone(), entries)
            })
            .collect()
    }

    pub fn branch_counts(&self) -> BTreeMap<Branch, usize> {
        let mut counts = BTreeMap::new();
        for img in self.per_image.values() {
            *counts.entry(img.branch).or_insert(0) += 1;
        }
        counts
    }
}

pub fn serialize_provenance(sidecar: &ProvenanceSidecar) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(sidecar).expect("sidecar serializes");
    out.push(b'\n');
    out
}

pub fn parse_provenance(text: &[u8]) -> Result<ProvenanceSidecar> {
    serde_json::from_slice(text).map_err(|e| Error::from_json("provenance", e))
}

impl BoxSource for FusedResult {
    fn image_ids(&self) -> Vec<&str> {
        self.per_image.keys().map(String::as_str).collect()
    }

    fn boxes(&self, image_id: &str) -> Vec<BBox> {
        self.image(image_id)
            .map(|img| img.boxes.iter().map(|f| f.detection.bbox).collect())
            .unwrap_or_default()
    }

    fn box_keys(&self, image_id: &str) -> Vec<BoxKey<'_>> {
        self.image(image_id)
            .map(|img| {
                img.boxes
                    .iter()
                    .map(|f| BoxKey {
                        detector_id: match f.provenance {
                            Provenance::ARetained | Provenance::AAll => &self.detector_a,
                            Provenance::BFallback => &self.detector_b,
                        },
                        index: f.source_index,
                    })
                    .collect()
            })
            .unwrap_or_default()
    }
}
