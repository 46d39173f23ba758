//! YOLO-style text predictions: one file per image, each line
//! `cls cx cy w h [conf]` with coordinates normalized to the image size.

use std::collections::BTreeMap;

use super::{DatasetManifest, Detection, DetectionSet};
use crate::error::{Error, Result};
use crate::geometry::BBox;

pub fn parse_yolo_txt<T: AsRef<[u8]>>(
    detector_id: &str,
    per_image_texts: &BTreeMap<String, T>,
    manifest: &DatasetManifest,
) -> Result<DetectionSet> {
    let mut set = DetectionSet::new(detector_id)?;
    for (image_id, bytes) in per_image_texts {
        let record = manifest
            .get(image_id)
            .ok_or_else(|| Error::UnknownImage(image_id.clone()))?;
        let ctx = format!("yolo `{image_id}`");
        let text = std::str::from_utf8(bytes.as_ref())
            .map_err(|e| Error::malformed(&ctx, 0, 0, e.to_string()))?;
        let (w, h) = (record.width as f64, record.height as f64);

        let mut dets = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if !(5..=6).contains(&fields.len()) {
                return Err(Error::malformed(
                    &ctx,
                    line_no,
                    0,
                    format!("expected 5 or 6 fields, found {}", fields.len()),
                ));
            }
            fields[0].parse::<u32>().map_err(|_| {
                Error::malformed(&ctx, line_no, 1, format!("class `{}` is not a non-negative integer", fields[0]))
            })?;
            let mut vals = [1.0f64; 5];
            for (k, f) in fields[1..].iter().enumerate() {
                let v: f64 = f.parse().map_err(|_| {
                    Error::malformed(&ctx, line_no, k + 2, format!("non-numeric field `{f}`"))
                })?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invariant(
                        format!("{ctx} line {line_no}"),
                        format!("normalized value {v} outside [0, 1]"),
                    ));
                }
                vals[k] = v;
            }
            let [cx, cy, bw, bh, conf] = vals;
            let bbox = BBox::new(
                ((cx - bw / 2.0) * w).clamp(0.0, w),
                ((cy - bh / 2.0) * h).clamp(0.0, h),
                ((cx + bw / 2.0) * w).clamp(0.0, w),
                ((cy + bh / 2.0) * h).clamp(0.0, h),
            )
            .map_err(|e| Error::invariant(format!("{ctx} line {line_no}"), e.to_string()))?;
            dets.push(Detection::new(bbox, conf, None)?);
        }
        set.per_image.insert(image_id.clone(), dets);
    }
    Ok(set)
}

/// Normalized `(cx, cy, w, h)` of a pixel box.
pub fn yolo_coords(bbox: &BBox, width: u32, height: u32) -> [f64; 4] {
    let (w, h) = (width as f64, height as f64);
    let c = bbox.center();
    [c.x / w, c.y / h, bbox.width() / w, bbox.height() / h]
}

pub fn to_yolo_line(det: &Detection, class: u32, width: u32, height: u32) -> String {
    let [cx, cy, w, h] = yolo_coords(&det.bbox, width, height);
    format!("{class} {cx} {cy} {w} {h} {}", det.score)
}
