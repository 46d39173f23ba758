//! Per-box and whole-image classifier labels.
//!
//! Rows are `image_id,box_index,label`, where a box index of `-` marks the
//! whole-image label. A four-column form `detector_id,image_id,box_index,label`
//! scopes a box label to one detector's box list; unscoped rows apply to any
//! detector.

use std::collections::BTreeMap;

use super::{BoxKey, Label};
use crate::error::{Error, Result};

const CONTEXT: &str = "labels";
const WHOLE_IMAGE: &str = "-";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelTable {
    /// Keyed by (detector scope, image_id, box index); `None` scope is unscoped.
    boxes: BTreeMap<(Option<String>, String, usize), Label>,
    whole: BTreeMap<String, Label>,
}

impl LabelTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_box(&mut self, detector_id: Option<&str>, image_id: &str, index: usize, label: Label) {
        self.boxes
            .insert((detector_id.map(str::to_string), image_id.to_string(), index), label);
    }

    pub fn insert_whole(&mut self, image_id: &str, label: Label) {
        self.whole.insert(image_id.to_string(), label);
    }

    /// Scoped label first, then the unscoped one.
    pub fn box_label(&self, image_id: &str, key: BoxKey<'_>) -> Option<Label> {
        let scoped = (Some(key.detector_id.to_string()), image_id.to_string(), key.index);
        self.boxes.get(&scoped).copied().or_else(|| {
            self.boxes
                .get(&(None, image_id.to_string(), key.index))
                .copied()
        })
    }

    pub fn whole_image_label(&self, image_id: &str) -> Option<Label> {
        self.whole.get(image_id).copied()
    }

    /// Adds every row of `other`, overwriting on key collisions.
    pub fn extend(&mut self, other: LabelTable) {
        self.boxes.extend(other.boxes);
        self.whole.extend(other.whole);
    }

    pub fn box_label_count(&self) -> usize {
        self.boxes.len()
    }

    pub fn whole_label_count(&self) -> usize {
        self.whole.len()
    }
}

pub fn parse_labels(text: &[u8]) -> Result<LabelTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text);

    let mut table = LabelTable::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::malformed(CONTEXT, line, 0, e.to_string())
        })?;
        let line = record.position().map_or(n + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let (scope, image_id, index, label) = match record.len() {
            3 => (None, &record[0], &record[1], &record[2]),
            4 => (Some(&record[0]).filter(|s| !s.is_empty()), &record[1], &record[2], &record[3]),
            k => {
                return Err(Error::malformed(
                    CONTEXT,
                    line,
                    0,
                    format!("expected 3 or 4 fields, found {k}"),
                ))
            }
        };
        if n == 0 && (image_id == "image_id" || index == "box_index") {
            continue;
        }
        if image_id.is_empty() {
            return Err(Error::malformed(CONTEXT, line, 1, "empty image_id"));
        }
        let label: Label = label.parse().map_err(|value| Error::UnknownLabel { line, value })?;

        let duplicate = if index == WHOLE_IMAGE {
            table.whole.insert(image_id.to_string(), label).is_some()
        } else {
            let idx: usize = index.parse().map_err(|_| {
                Error::malformed(CONTEXT, line, 2, format!("box_index `{index}` is neither an integer nor `-`"))
            })?;
            table
                .boxes
                .insert((scope.map(str::to_string), image_id.to_string(), idx), label)
                .is_some()
        };
        if duplicate {
            return Err(Error::invariant(
                format!("{CONTEXT} line {line}"),
                format!("duplicate label row for image `{image_id}` index `{index}`"),
            ));
        }
    }
    Ok(table)
}

/// Writes scoped rows for scoped labels and three-column rows otherwise.
pub fn serialize_labels(table: &LabelTable) -> Vec<u8> {
    let mut out = String::from("detector_id,image_id,box_index,label\n");
    for image_id in table.whole.keys() {
        out.push_str(&format!(",{image_id},{WHOLE_IMAGE},{}\n", table.whole[image_id]));
    }
    for ((scope, image_id, idx), label) in &table.boxes {
        out.push_str(&format!("{},{image_id},{idx},{label}\n", scope.as_deref().unwrap_or("")));
    }
    out.into_bytes()
}
