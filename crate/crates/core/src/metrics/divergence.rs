use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats::{percent_ratio, BoxSource, DatasetManifest, Tabular};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    Aligned,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub iou_threshold: f64,
    pub aligned: u64,
    pub diverged: u64,
    pub aligned_fraction: f64,
    pub per_image: BTreeMap<String, Alignment>,
}

/// An image is aligned when it has at least one box and every box reaches
/// `iou_threshold` against some ground-truth box.
pub fn divergence_report<S: BoxSource + ?Sized>(
    fused: &S,
    manifest: &DatasetManifest,
    iou_threshold: f64,
) -> Result<DivergenceReport> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "divergence IoU threshold {iou_threshold} outside (0, 1]"
        )));
    }
    let mut per_image = BTreeMap::new();
    let (mut aligned, mut diverged) = (0u64, 0u64);
    for id in manifest.sorted_ids() {
        let gt = &manifest.get(id).expect("id from manifest").gt_boxes;
        let boxes = fused.boxes(id);
        let ok = !boxes.is_empty() && boxes.iter().all(|b| b.max_iou(gt) >= iou_threshold);
        let a = if ok {
            aligned += 1;
            Alignment::Aligned
        } else {
            diverged += 1;
            Alignment::Diverged
        };
        per_image.insert(id.to_string(), a);
    }
    let total = aligned + diverged;
    Ok(DivergenceReport {
        iou_threshold,
        aligned,
        diverged,
        aligned_fraction: if total == 0 { 0.0 } else { aligned as f64 / total as f64 },
        per_image,
    })
}

impl Tabular for DivergenceReport {
    fn columns() -> &'static [&'static str] {
        &["Aligned", "Diverged", "Aligned%", "Diverged%"]
    }

    fn cells(&self) -> Vec<String> {
        let total = self.aligned + self.diverged;
        vec![
            self.aligned.to_string(),
            self.diverged.to_string(),
            percent_ratio(self.aligned, total),
            percent_ratio(self.diverged, total),
        ]
    }
}
