//! Domain records and their file formats.
//!
//! Manifests and detection sets are JSON documents; YOLO-style text files,
//! detection CSVs and per-box label CSVs are also accepted. Report rendering
//! lives in [`report`].

mod detections;
mod labels;
mod manifest;
pub mod report;
mod yolo;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;

pub use detections::{parse_detections_csv, parse_detections_json, serialize_detections};
pub use labels::{parse_labels, serialize_labels, LabelTable};
pub use manifest::{parse_manifest, serialize_manifest};
pub use report::{percent_f64, percent_ratio, serialize_report, ReportFormat, Tabular};
pub use yolo::{parse_yolo_txt, to_yolo_line, yolo_coords};

/// Image-level diagnosis, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Benign,
    Malignant,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Normal, Label::Benign, Label::Malignant];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Benign => "benign",
            Label::Malignant => "malignant",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "normal" => Ok(Label::Normal),
            "benign" => Ok(Label::Benign),
            "malignant" => Ok(Label::Malignant),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    #[serde(rename = "label")]
    pub true_label: Label,
    pub gt_boxes: Vec<BBox>,
}

impl ImageRecord {
    pub fn new(
        image_id: impl Into<String>,
        width: u32,
        height: u32,
        true_label: Label,
        gt_boxes: Vec<BBox>,
    ) -> Result<Self> {
        let image_id = image_id.into();
        if image_id.is_empty() {
            return Err(Error::invariant("image record", "empty image_id"));
        }
        if width == 0 || height == 0 {
            return Err(Error::invariant(
                format!("image `{image_id}`"),
                format!("image size must be positive, got {width}x{height}"),
            ));
        }
        for (i, b) in gt_boxes.iter().enumerate() {
            if !b.within(width as f64, height as f64) {
                return Err(Error::invariant(
                    format!("image `{image_id}` gt_boxes[{i}]"),
                    format!("box {:?} lies outside the {width}x{height} image", b.to_array()),
                ));
            }
        }
        Ok(Self {
            image_id,
            width,
            height,
            true_label,
            gt_boxes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DatasetManifest {
    images: Vec<ImageRecord>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl DatasetManifest {
    pub fn new(images: Vec<ImageRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(images.len());
        for (i, rec) in images.iter().enumerate() {
            if index.insert(rec.image_id.clone(), i).is_some() {
                return Err(Error::invariant(
                    format!("manifest images[{i}]"),
                    format!("duplicate image_id `{}`", rec.image_id),
                ));
            }
        }
        Ok(Self { images, index })
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&ImageRecord> {
        self.index.get(image_id).map(|&i| &self.images[i])
    }

    pub fn contains(&self, image_id: &str) -> bool {
        self.index.contains_key(image_id)
    }

    /// Image ids in ascending order.
    pub fn sorted_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.images.iter().map(|r| r.image_id.as_str()).collect();
        ids.sort_unstable();
        ids
    }

    pub fn gt_box_count(&self) -> usize {
        self.images.iter().map(|r| r.gt_boxes.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub score: f64,
    #[serde(rename = "label", default, skip_serializing_if = "Option::is_none")]
    pub predicted_label: Option<Label>,
}

impl Detection {
    pub fn new(bbox: BBox, score: f64, predicted_label: Option<Label>) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::invariant("detection", format!("score {score} outside [0, 1]")));
        }
        Ok(Self {
            bbox,
            score,
            predicted_label,
        })
    }
}

/// One detector's predictions. Images without an entry have no predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionSet {
    pub detector_id: String,
    #[serde(rename = "images")]
    pub per_image: BTreeMap<String, Vec<Detection>>,
}

impl DetectionSet {
    pub fn new(detector_id: impl Into<String>) -> Result<Self> {
        let detector_id = detector_id.into();
        if detector_id.is_empty() {
            return Err(Error::invariant("detection set", "empty detector_id"));
        }
        Ok(Self {
            detector_id,
            per_image: BTreeMap::new(),
        })
    }

    pub fn detections(&self, image_id: &str) -> &[Detection] {
        self.per_image.get(image_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn total(&self) -> usize {
        self.per_image.values().map(Vec::len).sum()
    }

    /// Fails with `UnknownImage` for the first image id absent from `manifest`.
    pub fn check_against(&self, manifest: &DatasetManifest) -> Result<()> {
        match self.per_image.keys().find(|id| !manifest.contains(id)) {
            Some(id) => Err(Error::UnknownImage(id.clone())),
            None => Ok(()),
        }
    }
}

/// Identifies the box a label belongs to: detector plus position in that
/// detector's per-image list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxKey<'a> {
    pub detector_id: &'a str,
    pub index: usize,
}

/// Anything that yields per-image predicted boxes.
pub trait BoxSource: Sync {
    /// Image ids that carry an entry, in ascending order.
    fn image_ids(&self) -> Vec<&str>;
    fn boxes(&self, image_id: &str) -> Vec<BBox>;
    /// Label lookup keys for each box returned by [`BoxSource::boxes`], same order.
    fn box_keys(&self, image_id: &str) -> Vec<BoxKey<'_>>;
}

impl BoxSource for DetectionSet {
    fn image_ids(&self) -> Vec<&str> {
        self.per_image.keys().map(String::as_str).collect()
    }

    fn boxes(&self, image_id: &str) -> Vec<BBox> {
        self.detections(image_id).iter().map(|d| d.bbox).collect()
    }

    fn box_keys(&self, image_id: &str) -> Vec<BoxKey<'_>> {
        (0..self.detections(image_id).len())
            .map(|index| BoxKey {
                detector_id: &self.detector_id,
                index,
            })
            .collect()
    }
}
