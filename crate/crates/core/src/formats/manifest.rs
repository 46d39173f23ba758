use serde::Deserialize;

use super::{DatasetManifest, ImageRecord, Label};
use crate::error::{Error, Result};
use crate::geometry::BBox;

const CONTEXT: &str = "manifest";

#[derive(Deserialize)]
struct RawManifest {
    images: Vec<RawImage>,
}

#[derive(Deserialize)]
struct RawImage {
    image_id: String,
    width: u32,
    height: u32,
    label: String,
    #[serde(default)]
    gt_boxes: Vec<[f64; 4]>,
}

pub fn parse_manifest(text: &[u8]) -> Result<DatasetManifest> {
    let raw: RawManifest =
        serde_json::from_slice(text).map_err(|e| Error::from_json(CONTEXT, e))?;

    let mut images = Vec::with_capacity(raw.images.len());
    for (i, img) in raw.images.into_iter().enumerate() {
        let at = || format!("{CONTEXT}: images[{i}] (`{}`)", img.image_id);
        let true_label: Label = img
            .label
            .parse()
            .map_err(|v| Error::invariant(at(), format!("unknown label `{v}`")))?;
        let gt_boxes = img
            .gt_boxes
            .iter()
            .enumerate()
            .map(|(j, c)| {
                BBox::try_from(*c).map_err(|e| Error::invariant(format!("{} gt_boxes[{j}]", at()), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let record = ImageRecord::new(img.image_id.clone(), img.width, img.height, true_label, gt_boxes)
            .map_err(|e| Error::invariant(at(), e.to_string()))?;
        images.push(record);
    }
    DatasetManifest::new(images)
}

pub fn serialize_manifest(manifest: &DatasetManifest) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    out.push(b'\n');
    out
}
