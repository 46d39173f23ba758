//! Detection, classification and divergence evaluation.

mod classification;
mod detection;
mod divergence;

pub use classification::{
    aggregate_image_label, aggregate_labels, classification_report, predict_image_labels,
    ClassificationReport, ConfusionMatrix3,
};
pub use detection::{
    detection_report, judge_boxes, BoxOutcome, DetectionCounts, DetectionReport, ImageOutcome,
    Judgement, MiouMode, Verdict,
};
pub use divergence::{divergence_report, Alignment, DivergenceReport};
