//! Image-level classification from per-box labels.
//!
//! An image is malignant if any of its boxes is, otherwise benign if any box
//! is benign, otherwise normal. Images without boxes take their whole-image
//! label.

use std::collections::BTreeMap;

use serde::Serialize;

use super::detection::ratio;
use crate::error::{Error, Result};
use crate::formats::{percent_ratio, BoxSource, DatasetManifest, Label, LabelTable, Tabular};

/// The most severe box label, or `whole_image_label` when there are no boxes.
pub fn aggregate_labels(box_labels: &[Label], whole_image_label: Option<Label>) -> Option<Label> {
    box_labels.iter().copied().max().or(whole_image_label)
}

pub fn aggregate_image_label(
    image_id: &str,
    box_labels: &[Label],
    whole_image_label: Option<Label>,
) -> Result<Label> {
    aggregate_labels(box_labels, whole_image_label)
        .ok_or_else(|| Error::MissingWholeImageLabel(image_id.to_string()))
}

/// Looks up each box's label and aggregates per manifest image.
pub fn predict_image_labels<S: BoxSource + ?Sized>(
    source: &S,
    labels: &LabelTable,
    manifest: &DatasetManifest,
) -> Result<BTreeMap<String, Label>> {
    if let Some(id) = source.image_ids().into_iter().find(|id| !manifest.contains(id)) {
        return Err(Error::UnknownImage(id.to_string()));
    }
    manifest
        .sorted_ids()
        .into_iter()
        .map(|id| {
            let box_labels = source
                .box_keys(id)
                .into_iter()
                .map(|key| {
                    labels.box_label(id, key).ok_or_else(|| Error::MissingBoxLabel {
                        detector_id: key.detector_id.to_string(),
                        image_id: id.to_string(),
                        box_index: key.index,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let label = aggregate_image_label(id, &box_labels, labels.whole_image_label(id))?;
            Ok((id.to_string(), label))
        })
        .collect()
}

/// Counts indexed `[true][predicted]` in normal, benign, malignant order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix3 {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix3 {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    fn cell(&self, truth: Label, predicted: Label) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    fn row(&self, truth: Label) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    /// Images whose truth and prediction agree on malignant vs. non-malignant.
    pub fn binary_correct(&self) -> u64 {
        self.true_malignant_hits() + self.true_benign_or_normal_hits()
    }

    fn true_malignant_hits(&self) -> u64 {
        self.cell(Label::Malignant, Label::Malignant)
    }

    fn true_benign_or_normal_hits(&self) -> u64 {
        [Label::Normal, Label::Benign]
            .iter()
            .flat_map(|&t| [Label::Normal, Label::Benign].map(|p| self.cell(t, p)))
            .sum()
    }

    fn malignant_total(&self) -> u64 {
        self.row(Label::Malignant)
    }

    fn non_malignant_total(&self) -> u64 {
        self.row(Label::Normal) + self.row(Label::Benign)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub confusion: ConfusionMatrix3,
    pub acc: f64,
    pub acc2: f64,
    pub sens: f64,
    pub spec: f64,
    pub undefined: Vec<String>,
}

impl ClassificationReport {
    pub fn from_confusion(confusion: ConfusionMatrix3) -> Self {
        let c = &confusion;
        let mut undefined = Vec::new();
        let mut metric = |name: &str, num: u64, den: u64| {
            ratio(num, den).unwrap_or_else(|| {
                undefined.push(name.to_string());
                0.0
            })
        };
        let acc = metric("acc", c.trace(), c.total());
        let acc2 = metric("acc2", c.binary_correct(), c.total());
        let sens = metric("sens", c.true_malignant_hits(), c.malignant_total());
        let spec = metric("spec", c.true_benign_or_normal_hits(), c.non_malignant_total());
        Self {
            confusion,
            acc,
            acc2,
            sens,
            spec,
            undefined,
        }
    }
}

pub fn classification_report(
    predicted: &BTreeMap<String, Label>,
    manifest: &DatasetManifest,
) -> Result<ClassificationReport> {
    if let Some(id) = predicted.keys().find(|id| !manifest.contains(id)) {
        return Err(Error::UnknownImage(id.clone()));
    }
    let mut confusion = ConfusionMatrix3::default();
    for rec in manifest.images() {
        let p = predicted
            .get(&rec.image_id)
            .ok_or_else(|| Error::MissingPrediction(rec.image_id.clone()))?;
        confusion.record(rec.true_label, *p);
    }
    Ok(ClassificationReport::from_confusion(confusion))
}

impl Tabular for ClassificationReport {
    fn columns() -> &'static [&'static str] {
        &["Acc", "2-Acc", "Sens", "Spec"]
    }

    fn cells(&self) -> Vec<String> {
        let c = &self.confusion;
        vec![
            percent_ratio(c.trace(), c.total()),
            percent_ratio(c.binary_correct(), c.total()),
            percent_ratio(c.true_malignant_hits(), c.malignant_total()),
            percent_ratio(c.true_benign_or_normal_hits(), c.non_malignant_total()),
        ]
    }
}
