use std::collections::BTreeMap;

use serde::Deserialize;

use super::{Detection, DetectionSet, Label};
use crate::error::{Error, Result};
use crate::geometry::BBox;

#[derive(Deserialize)]
struct RawSet {
    detector_id: String,
    #[serde(default)]
    images: BTreeMap<String, Vec<RawDetection>>,
}

#[derive(Deserialize)]
struct RawDetection {
    #[serde(rename = "box")]
    bbox: [f64; 4],
    score: f64,
    #[serde(default)]
    label: Option<String>,
}

fn build_detection(ctx: &str, bbox: [f64; 4], score: f64, label: Option<&str>) -> Result<Detection> {
    let bbox = BBox::try_from(bbox).map_err(|e| Error::invariant(ctx, e.to_string()))?;
    let predicted_label = label
        .map(|l| l.parse::<Label>())
        .transpose()
        .map_err(|v| Error::invariant(ctx, format!("unknown label `{v}`")))?;
    Detection::new(bbox, score, predicted_label).map_err(|e| Error::invariant(ctx, e.to_string()))
}

pub fn parse_detections_json(text: &[u8]) -> Result<DetectionSet> {
    let raw: RawSet =
        serde_json::from_slice(text).map_err(|e| Error::from_json("detections", e))?;
    let mut set = DetectionSet::new(raw.detector_id)?;
    for (image_id, dets) in raw.images {
        let parsed = dets
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                let ctx = format!("detections `{}`: images[`{image_id}`][{i}]", set.detector_id);
                build_detection(&ctx, d.bbox, d.score, d.label.as_deref())
            })
            .collect::<Result<Vec<_>>>()?;
        set.per_image.insert(image_id, parsed);
    }
    Ok(set)
}

/// Reads `image_id,x_min,y_min,x_max,y_max,score[,label]` rows (header required).
pub fn parse_detections_csv(detector_id: &str, text: &[u8]) -> Result<DetectionSet> {
    let mut set = DetectionSet::new(detector_id)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text);
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::malformed("detections csv", line, 0, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if !(6..=7).contains(&record.len()) {
            return Err(Error::malformed(
                "detections csv",
                line,
                0,
                format!("expected 6 or 7 fields, found {}", record.len()),
            ));
        }
        let mut nums = [0.0f64; 5];
        for (k, slot) in nums.iter_mut().enumerate() {
            *slot = record[k + 1].parse().map_err(|_| {
                Error::malformed("detections csv", line, k + 2, format!("non-numeric field `{}`", &record[k + 1]))
            })?;
        }
        let label = record.get(6).filter(|s| !s.is_empty());
        let ctx = format!("detections csv line {line}");
        let det = build_detection(&ctx, [nums[0], nums[1], nums[2], nums[3]], nums[4], label)?;
        set.per_image.entry(record[0].to_string()).or_default().push(det);
    }
    Ok(set)
}

pub fn serialize_detections(set: &DetectionSet) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(set).expect("detection set serializes");
    out.push(b'\n');
    out
}
