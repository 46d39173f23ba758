//! Three-arm comparison: detector A alone, detector B alone, and their fusion,
//! each scored for detection and for image classification.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::formats::report::ReportDocument;
use crate::formats::{BoxSource, DatasetManifest, DetectionSet, LabelTable};
use crate::fusion::{fuse_dataset, EmptyFusionPolicy, FusedResult};
use crate::metrics::{
    classification_report, detection_report, divergence_report, predict_image_labels,
    ClassificationReport, DetectionReport, DivergenceReport, MiouMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    #[serde(default)]
    pub empty_fusion_policy: EmptyFusionPolicy,
    #[serde(default)]
    pub miou_mode: MiouMode,
    #[serde(default = "default_divergence_iou")]
    pub divergence_iou: f64,
}

fn default_divergence_iou() -> f64 {
    0.5
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            empty_fusion_policy: EmptyFusionPolicy::default(),
            miou_mode: MiouMode::default(),
            divergence_iou: default_divergence_iou(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmReport {
    pub name: String,
    pub detection: DetectionReport,
    pub classification: ClassificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub arms: Vec<ArmReport>,
    pub divergence: DivergenceReport,
}

impl ComparisonReport {
    pub fn arm(&self, name: &str) -> Option<&ArmReport> {
        self.arms.iter().find(|a| a.name == name)
    }

    /// Appends the detection, classification and divergence tables to `doc`.
    pub fn to_document(&self, doc: ReportDocument) -> ReportDocument {
        let det: Vec<_> = self.arms.iter().map(|a| (a.name.as_str(), &a.detection)).collect();
        let cls: Vec<_> = self.arms.iter().map(|a| (a.name.as_str(), &a.classification)).collect();
        doc.section("detection", &det)
            .section("classification", &cls)
            .section("divergence", &[(ARM_FUSION, &self.divergence)])
            .note(format!("divergence IoU threshold: {}", self.divergence.iou_threshold))
    }
}

pub const ARM_A: &str = "A_only";
pub const ARM_B: &str = "B_only";
pub const ARM_FUSION: &str = "fusion";

fn evaluate_arm<S: BoxSource + ?Sized>(
    name: &str,
    source: &S,
    labels: &LabelTable,
    manifest: &DatasetManifest,
    miou_mode: MiouMode,
) -> Result<ArmReport> {
    let detection = detection_report(source, manifest, miou_mode)?;
    let predicted = predict_image_labels(source, labels, manifest)?;
    let classification = classification_report(&predicted, manifest)?;
    Ok(ArmReport {
        name: name.to_string(),
        detection,
        classification,
    })
}

pub fn compare_arms(
    manifest: &DatasetManifest,
    a: &DetectionSet,
    b: &DetectionSet,
    labels: &LabelTable,
    settings: &PipelineSettings,
) -> Result<(FusedResult, ComparisonReport)> {
    let fused = fuse_dataset(a, b, manifest, settings.empty_fusion_policy)?;
    let arms = vec![
        evaluate_arm(ARM_A, a, labels, manifest, settings.miou_mode)?,
        evaluate_arm(ARM_B, b, labels, manifest, settings.miou_mode)?,
        evaluate_arm(ARM_FUSION, &fused, labels, manifest, settings.miou_mode)?,
    ];
    let divergence = divergence_report(&fused, manifest, settings.divergence_iou)?;
    Ok((fused, ComparisonReport { arms, divergence }))
}
