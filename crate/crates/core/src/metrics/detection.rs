//! Detection scoring under the center-in-ground-truth protocol.
//!
//! Every predicted box is judged: it is a true positive when its center lies
//! inside some ground-truth box of its image, otherwise a false positive.
//! False negatives arise only from images with no predictions at all, one
//! per ground-truth box.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{percent_f64, percent_ratio, BoxSource, DatasetManifest, Tabular};
use crate::geometry::BBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl DetectionCounts {
    /// `tp / (tp + fp)`, or `None` when nothing was predicted.
    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `tp / (tp + fn)`, or `None` when the denominator is zero.
    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }
}

pub(crate) fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "TP")]
    TruePositive,
    #[serde(rename = "FP")]
    FalsePositive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgement {
    pub verdicts: Vec<Verdict>,
    pub false_negatives: u64,
}

pub fn judge_boxes(predictions: &[BBox], gt_boxes: &[BBox]) -> Judgement {
    let verdicts = predictions
        .iter()
        .map(|p| {
            let c = p.center();
            if gt_boxes.iter().any(|g| g.contains(c)) {
                Verdict::TruePositive
            } else {
                Verdict::FalsePositive
            }
        })
        .collect();
    let false_negatives = if predictions.is_empty() {
        gt_boxes.len() as u64
    } else {
        0
    };
    Judgement {
        verdicts,
        false_negatives,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MiouMode {
    /// Mean over all predicted boxes of each box's best IoU against its image's GT.
    #[default]
    PerBox,
    /// Mean over evaluated images of the best single-box IoU; images without
    /// predictions contribute 0.
    PerImage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxOutcome {
    pub verdict: Verdict,
    pub best_iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageOutcome {
    pub boxes: Vec<BoxOutcome>,
    pub false_negatives: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub counts: DetectionCounts,
    pub precision: f64,
    pub recall: f64,
    pub miou: f64,
    pub miou_mode: MiouMode,
    /// Metrics whose denominator was zero and were reported as 0.
    pub undefined: Vec<String>,
    /// Images skipped for having no ground-truth boxes.
    pub skipped_images: Vec<String>,
    pub per_image: BTreeMap<String, ImageOutcome>,
}

pub fn detection_report<S: BoxSource + ?Sized>(
    source: &S,
    manifest: &DatasetManifest,
    miou_mode: MiouMode,
) -> Result<DetectionReport> {
    if let Some(id) = source.image_ids().into_iter().find(|id| !manifest.contains(id)) {
        return Err(Error::UnknownImage(id.to_string()));
    }

    let ids = manifest.sorted_ids();
    let outcomes: Vec<(&str, Option<ImageOutcome>)> = ids
        .par_iter()
        .map(|&id| {
            let gt = &manifest.get(id).expect("id from manifest").gt_boxes;
            if gt.is_empty() {
                return (id, None);
            }
            let preds = source.boxes(id);
            let judged = judge_boxes(&preds, gt);
            let boxes = preds
                .iter()
                .zip(judged.verdicts)
                .map(|(p, verdict)| BoxOutcome {
                    verdict,
                    best_iou: p.max_iou(gt),
                })
                .collect();
            (
                id,
                Some(ImageOutcome {
                    boxes,
                    false_negatives: judged.false_negatives,
                }),
            )
        })
        .collect();

    let mut counts = DetectionCounts::default();
    let mut skipped_images = Vec::new();
    let mut per_image = BTreeMap::new();
    let (mut iou_sum, mut iou_terms) = (0.0f64, 0u64);
    for (id, outcome) in outcomes {
        let Some(outcome) = outcome else {
            log::warn!("image `{id}` has no ground-truth boxes; skipped");
            skipped_images.push(id.to_string());
            continue;
        };
        for b in &outcome.boxes {
            match b.verdict {
                Verdict::TruePositive => counts.tp += 1,
                Verdict::FalsePositive => counts.fp += 1,
            }
        }
        counts.fn_ += outcome.false_negatives;
        match miou_mode {
            MiouMode::PerBox => {
                for b in &outcome.boxes {
                    iou_sum += b.best_iou;
                    iou_terms += 1;
                }
            }
            MiouMode::PerImage => {
                iou_sum += outcome.boxes.iter().map(|b| b.best_iou).fold(0.0, f64::max);
                iou_terms += 1;
            }
        }
        per_image.insert(id.to_string(), outcome);
    }

    let mut undefined = Vec::new();
    let mut or_flag = |name: &str, v: Option<f64>| {
        v.unwrap_or_else(|| {
            undefined.push(name.to_string());
            0.0
        })
    };
    let precision = or_flag("precision", counts.precision());
    let recall = or_flag("recall", counts.recall());
    let miou = or_flag("miou", (iou_terms > 0).then(|| iou_sum / iou_terms as f64));

    Ok(DetectionReport {
        counts,
        precision,
        recall,
        miou,
        miou_mode,
        undefined,
        skipped_images,
        per_image,
    })
}

impl Tabular for DetectionReport {
    fn columns() -> &'static [&'static str] {
        &["mIoU", "Precision", "Recall", "TP", "FP", "FN"]
    }

    fn cells(&self) -> Vec<String> {
        let c = &self.counts;
        vec![
            percent_f64(self.miou),
            percent_ratio(c.tp, c.tp + c.fp),
            percent_ratio(c.tp, c.tp + c.fn_),
            c.tp.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
        ]
    }
}
