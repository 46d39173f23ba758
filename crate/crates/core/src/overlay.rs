//! SVG overlays of ground truth and predicted boxes in the image pixel frame.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::formats::{DatasetManifest, DetectionSet};
use crate::fusion::FUSION_DETECTOR_ID;

pub const GT_COLOR: &str = "yellow";
pub const FUSION_COLOR: &str = "green";
const PALETTE: [&str; 6] = ["red", "blue", "magenta", "cyan", "orange", "purple"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Color for each set: the fusion set is green, others cycle through a palette.
pub fn set_colors(sets: &[&DetectionSet]) -> Vec<&'static str> {
    let mut next = 0;
    sets.iter()
        .map(|s| {
            if s.detector_id == FUSION_DETECTOR_ID {
                FUSION_COLOR
            } else {
                let c = PALETTE[next % PALETTE.len()];
                next += 1;
                c
            }
        })
        .collect()
}

pub fn emit_overlay(manifest: &DatasetManifest, sets: &[&DetectionSet], image_id: &str) -> Result<String> {
    let rec = manifest
        .get(image_id)
        .ok_or_else(|| Error::UnknownImage(image_id.to_string()))?;
    let (w, h) = (rec.width, rec.height);
    let stroke = (w.max(h) as f64 / 200.0).max(1.0);
    let font = (w.max(h) as f64 / 40.0).max(8.0);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(svg, r#"  <title>{}</title>"#, escape(image_id)).unwrap();
    writeln!(svg, r#"  <rect x="0" y="0" width="{w}" height="{h}" fill="black"/>"#).unwrap();

    let rect = |svg: &mut String, class: &str, color: &str, b: &crate::geometry::BBox| {
        writeln!(
            svg,
            r#"  <rect class="{class}" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="{color}" stroke-width="{stroke}"/>"#,
            b.x_min(),
            b.y_min(),
            b.width(),
            b.height()
        )
        .unwrap();
    };

    writeln!(svg, r#"  <g id="ground-truth">"#).unwrap();
    for b in &rec.gt_boxes {
        rect(&mut svg, "gt", GT_COLOR, b);
    }
    writeln!(svg, "  </g>").unwrap();

    let colors = set_colors(sets);
    for (set, color) in sets.iter().zip(&colors) {
        writeln!(svg, r#"  <g id="set-{}">"#, escape(&set.detector_id)).unwrap();
        for d in set.detections(image_id) {
            rect(&mut svg, "det", color, &d.bbox);
        }
        writeln!(svg, "  </g>").unwrap();
    }

    writeln!(svg, r#"  <g id="legend" font-family="sans-serif" font-size="{font}">"#).unwrap();
    let entries = std::iter::once(("ground truth".to_string(), GT_COLOR))
        .chain(sets.iter().zip(&colors).map(|(s, c)| (s.detector_id.clone(), *c)));
    for (i, (name, color)) in entries.enumerate() {
        let y = font * (i as f64 + 1.2);
        writeln!(
            svg,
            r#"    <text x="{}" y="{y}" fill="{color}">{}</text>"#,
            font / 2.0,
            escape(&name)
        )
        .unwrap();
    }
    writeln!(svg, "  </g>\n</svg>").unwrap();
    Ok(svg)
}
