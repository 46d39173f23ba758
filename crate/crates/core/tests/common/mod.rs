#![allow(dead_code)]

use std::collections::BTreeMap;

use boxfusion::{BBox, DatasetManifest, Detection, DetectionSet, ImageRecord, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Box with both corners uniform in `[0, 256]`; redraws degenerate samples.
pub fn random_box(rng: &mut ChaCha8Rng) -> BBox {
    loop {
        let (a, b): (f64, f64) = (rng.random_range(0.0..=256.0), rng.random_range(0.0..=256.0));
        let (c, d): (f64, f64) = (rng.random_range(0.0..=256.0), rng.random_range(0.0..=256.0));
        if let Ok(bx) = BBox::new(a.min(b), c.min(d), a.max(b), c.max(d)) {
            return bx;
        }
    }
}

pub fn random_detections(rng: &mut ChaCha8Rng, max: usize) -> Vec<Detection> {
    let n = rng.random_range(0..=max);
    (0..n)
        .map(|_| {
            let b = random_box(rng);
            Detection::new(b, rng.random_range(0.0..=1.0), None).unwrap()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OracleTag {
    Retained,
    Fallback,
    All,
}

/// Direct restatement of the two selection rules, written without the
/// geometry module: returns (branch name, [(geometry, tag)]).
pub fn fusion_oracle(a: &[Detection], b: &[Detection]) -> (&'static str, Vec<([f64; 4], OracleTag)>) {
    let coords = |d: &Detection| d.bbox.to_array();
    if !a.is_empty() && !b.is_empty() {
        let mut kept = Vec::new();
        for fa in a {
            let [ax0, ay0, ax1, ay1] = coords(fa);
            let mut any = false;
            for fb in b {
                let [bx0, by0, bx1, by1] = coords(fb);
                let (cx, cy) = ((bx0 + bx1) * 0.5, (by0 + by1) * 0.5);
                if cx >= ax0 && cx <= ax1 && cy >= ay0 && cy <= ay1 {
                    any = true;
                }
            }
            if any {
                kept.push((coords(fa), OracleTag::Retained));
            }
        }
        ("BOTH", kept)
    } else if a.is_empty() && !b.is_empty() {
        ("ONLY_B", b.iter().map(|d| (coords(d), OracleTag::Fallback)).collect())
    } else if !a.is_empty() {
        ("ONLY_A", a.iter().map(|d| (coords(d), OracleTag::All)).collect())
    } else {
        ("NEITHER", Vec::new())
    }
}

pub fn random_label(rng: &mut ChaCha8Rng) -> Label {
    Label::ALL[rng.random_range(0..3)]
}

pub fn random_manifest(rng: &mut ChaCha8Rng, n: usize) -> DatasetManifest {
    let images = (0..n)
        .map(|i| {
            let (w, h) = (rng.random_range(1..=4096u32), rng.random_range(1..=4096u32));
            let k = rng.random_range(0..=3);
            let boxes = (0..k)
                .map(|_| {
                    let x0 = rng.random_range(0.0..(w as f64) * 0.9);
                    let y0 = rng.random_range(0.0..(h as f64) * 0.9);
                    let x1 = rng.random_range(x0..=w as f64);
                    let y1 = rng.random_range(y0..=h as f64);
                    BBox::new(x0, y0, x1, y1)
                })
                .filter_map(Result::ok)
                .collect();
            ImageRecord::new(format!("image-{i}-{}", rng.random::<u32>()), w, h, random_label(rng), boxes).unwrap()
        })
        .collect();
    DatasetManifest::new(images).unwrap()
}

pub fn random_detection_set(rng: &mut ChaCha8Rng, n_images: usize) -> DetectionSet {
    let mut set = DetectionSet::new(format!("det{}", rng.random::<u16>())).unwrap();
    set.per_image = (0..n_images)
        .map(|i| {
            let mut dets = random_detections(rng, 5);
            for d in &mut dets {
                if rng.random_bool(0.3) {
                    d.predicted_label = Some(random_label(rng));
                }
                // scale some coordinates far from the unit range
                if rng.random_bool(0.2) {
                    let [a, b, c, e] = d.bbox.to_array();
                    let s = 1e-3 * rng.random_range(1.0..1e6);
                    d.bbox = BBox::new(a * s, b * s, c * s, e * s).unwrap();
                }
            }
            (format!("img{i}"), dets)
        })
        .collect::<BTreeMap<_, _>>();
    set
}

/// Single-image manifest with one GT box per `gt` entry.
pub fn manifest_with(images: &[(&str, Label, Vec<[f64; 4]>)]) -> DatasetManifest {
    DatasetManifest::new(
        images
            .iter()
            .map(|(id, label, boxes)| {
                let boxes = boxes.iter().map(|c| BBox::try_from(*c).unwrap()).collect();
                ImageRecord::new(*id, 1000, 1000, *label, boxes).unwrap()
            })
            .collect(),
    )
    .unwrap()
}

pub fn det(c: [f64; 4]) -> Detection {
    Detection::new(BBox::try_from(c).unwrap(), 0.9, None).unwrap()
}
