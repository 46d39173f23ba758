use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use super::config::{ClassifierProfile, DetectorProfile, SimConfig, SpuriousPlacement};
use super::rng::{categorical, stream_rng};
use crate::error::{Error, Result};
use crate::formats::{BoxSource, DatasetManifest, Detection, DetectionSet, ImageRecord, Label, LabelTable};
use crate::geometry::BBox;

const PLACEMENT_ATTEMPTS: usize = 100;

pub fn image_id(index: usize) -> String {
    format!("img{index:05}")
}

/// One square GT box per image, placed uniformly, label drawn from the prior.
pub fn generate_dataset(cfg: &SimConfig) -> Result<DatasetManifest> {
    cfg.validate()?;
    let [w, h] = cfg.image_size;
    let side = cfg.gt_box_scale * w.min(h) as f64;
    let images = (0..cfg.n_images)
        .into_par_iter()
        .map(|i| {
            let id = image_id(i);
            let mut rng = stream_rng(cfg.seed, &["gt", &id]);
            let label = Label::ALL[categorical(&mut rng, &cfg.label_prior)];
            let x0 = rng.random_range(0.0..=(w as f64 - side));
            let y0 = rng.random_range(0.0..=(h as f64 - side));
            let gt = BBox::new(x0, y0, x0 + side, y0 + side)?;
            ImageRecord::new(id, w, h, label, vec![gt])
        })
        .collect::<Result<Vec<_>>>()?;
    DatasetManifest::new(images)
}

/// Sorts each axis, enforces a 1 px minimum side and clamps into the image.
fn repair(mut xs: [f64; 2], mut ys: [f64; 2], w: f64, h: f64) -> Result<BBox> {
    fn axis(v: &mut [f64; 2], limit: f64) {
        if v[0] > v[1] {
            v.swap(0, 1);
        }
        v[0] = v[0].clamp(0.0, limit);
        v[1] = v[1].clamp(0.0, limit);
        let min_side = 1.0f64.min(limit);
        if v[1] - v[0] < min_side {
            let mid = ((v[0] + v[1]) / 2.0).clamp(min_side / 2.0, limit - min_side / 2.0);
            *v = [mid - min_side / 2.0, mid + min_side / 2.0];
        }
    }
    axis(&mut xs, w);
    axis(&mut ys, h);
    BBox::new(xs[0], ys[0], xs[1], ys[1])
}

fn jittered(gt: &BBox, sigma: f64, w: f64, h: f64, rng: &mut ChaCha8Rng) -> Result<BBox> {
    if sigma == 0.0 {
        return Ok(*gt);
    }
    let noise = Normal::new(0.0, sigma).expect("sigma validated");
    let mut n = || noise.sample(rng);
    let xs = [gt.x_min() + n(), gt.x_max() + n()];
    let ys = [gt.y_min() + n(), gt.y_max() + n()];
    repair(xs, ys, w, h)
}

fn spurious_box(
    rec: &ImageRecord,
    placement: SpuriousPlacement,
    rng: &mut ChaCha8Rng,
) -> Result<BBox> {
    let (w, h) = (rec.width as f64, rec.height as f64);
    let (ref_w, ref_h) = rec
        .gt_boxes
        .first()
        .map(|g| (g.width(), g.height()))
        .unwrap_or((0.25 * w.min(h), 0.25 * w.min(h)));
    let bw = (ref_w * rng.random_range(0.5..=1.0)).min(w);
    let bh = (ref_h * rng.random_range(0.5..=1.0)).min(h);

    match placement {
        SpuriousPlacement::UniformBackground => {
            for _ in 0..PLACEMENT_ATTEMPTS {
                let x0 = rng.random_range(0.0..=(w - bw));
                let y0 = rng.random_range(0.0..=(h - bh));
                let b = BBox::new(x0, y0, x0 + bw, y0 + bh)?;
                if !rec.gt_boxes.iter().any(|g| g.contains(b.center())) {
                    return Ok(b);
                }
            }
            Err(Error::PlacementExhausted {
                image_id: rec.image_id.clone(),
                attempts: PLACEMENT_ATTEMPTS,
            })
        }
        SpuriousPlacement::NearGt => {
            let anchor = if rec.gt_boxes.is_empty() {
                BBox::new(0.0, 0.0, w, h)?
            } else {
                rec.gt_boxes[rng.random_range(0..rec.gt_boxes.len())]
            };
            let c = anchor.center();
            let cx = c.x + anchor.width() * rng.random_range(-0.5..=0.5);
            let cy = c.y + anchor.height() * rng.random_range(-0.5..=0.5);
            let x0 = (cx - bw / 2.0).clamp(0.0, w - bw);
            let y0 = (cy - bh / 2.0).clamp(0.0, h - bh);
            BBox::new(x0, y0, x0 + bw, y0 + bh)
        }
    }
}

fn simulate_image(
    profile: &DetectorProfile,
    rec: &ImageRecord,
    stream_tag: &str,
    seed: u64,
) -> Result<Vec<Detection>> {
    let mut rng = stream_rng(seed, &["detector", stream_tag, &rec.image_id]);
    let (w, h) = (rec.width as f64, rec.height as f64);
    let mut out = Vec::new();
    for gt in &rec.gt_boxes {
        let missed = rng.random::<f64>() < profile.miss_rate;
        if !missed {
            let b = jittered(gt, profile.jitter_sigma, w, h, &mut rng)?;
            out.push(Detection::new(b, rng.random_range(0.5..=1.0), None)?);
        }
    }
    let n_spurious = if profile.spurious_rate > 0.0 {
        Poisson::new(profile.spurious_rate)
            .expect("rate validated")
            .sample(&mut rng) as usize
    } else {
        0
    };
    for _ in 0..n_spurious {
        let b = spurious_box(rec, profile.spurious_placement, &mut rng)?;
        out.push(Detection::new(b, rng.random_range(0.5..=1.0), None)?);
    }
    Ok(out)
}

/// Simulated predictions of one detector. Images with no output are omitted.
pub fn simulate_detector(
    profile: &DetectorProfile,
    manifest: &DatasetManifest,
    stream_tag: &str,
    seed: u64,
) -> Result<DetectionSet> {
    profile.validate(stream_tag)?;
    let mut set = DetectionSet::new(stream_tag)?;
    let per_image = manifest
        .images()
        .par_iter()
        .map(|rec| Ok((rec.image_id.clone(), simulate_image(profile, rec, stream_tag, seed)?)))
        .collect::<Result<Vec<_>>>()?;
    set.per_image = per_image.into_iter().filter(|(_, d)| !d.is_empty()).collect();
    Ok(set)
}

/// Draws a label for every box of `boxes` plus a whole-image label for every
/// image. Box labels are scoped by the box's source detector, so a box
/// carried into a fused set gets the same label it had in its source set.
pub fn simulate_labels<S: BoxSource + ?Sized>(
    classifier: &ClassifierProfile,
    manifest: &DatasetManifest,
    boxes: &S,
    seed: u64,
) -> Result<LabelTable> {
    classifier.validate()?;
    let mut table = LabelTable::new();
    for rec in manifest.images() {
        let id = rec.image_id.as_str();
        let on_target_row = &classifier.on_target_confusion[rec.true_label.index()];
        for (bbox, key) in boxes.boxes(id).iter().zip(boxes.box_keys(id)) {
            let idx = key.index.to_string();
            let mut rng = stream_rng(seed, &["label", key.detector_id, id, &idx]);
            let probs = if rec.gt_boxes.iter().any(|g| g.contains(bbox.center())) {
                on_target_row
            } else {
                &classifier.background_label_distribution
            };
            table.insert_box(Some(key.detector_id), id, key.index, Label::ALL[categorical(&mut rng, probs)]);
        }
        let mut rng = stream_rng(seed, &["whole", id]);
        table.insert_whole(id, Label::ALL[categorical(&mut rng, on_target_row)]);
    }
    Ok(table)
}
