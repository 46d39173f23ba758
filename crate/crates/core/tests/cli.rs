mod common;

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use boxfusion::formats::{parse_detections_json, parse_labels, parse_manifest, serialize_detections, serialize_manifest};
use boxfusion::{DatasetManifest, Detection, DetectionSet, Label};
use common::{det, manifest_with};
use tempfile::TempDir;

fn boxfusion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boxfusion"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> String {
        let p = self.path(name);
        fs::write(&p, bytes).unwrap();
        p.to_str().unwrap().to_string()
    }

    fn manifest(&self, m: &DatasetManifest) -> String {
        self.write("manifest.json", serialize_manifest(m))
    }

    fn detections(&self, name: &str, id: &str, images: Vec<(&str, Vec<Detection>)>) -> String {
        let mut set = DetectionSet::new(id).unwrap();
        for (img, dets) in images {
            set.per_image.insert(img.to_string(), dets);
        }
        self.write(name, serialize_detections(&set))
    }
}

/// The table row for `method`, split on whitespace.
fn row(out: &str, method: &str) -> Vec<String> {
    out.lines()
        .map(|l| l.split_whitespace().map(String::from).collect::<Vec<_>>())
        .find(|cells| cells.first().map(String::as_str) == Some(method))
        .unwrap_or_else(|| panic!("no row {method} in\n{out}"))[1..]
        .to_vec()
}

/// All rows named `method` (one per section).
fn rows(out: &str, method: &str) -> Vec<Vec<String>> {
    out.lines()
        .map(|l| l.split_whitespace().map(String::from).collect::<Vec<_>>())
        .filter(|cells| cells.first().map(String::as_str) == Some(method))
        .map(|c| c[1..].to_vec())
        .collect()
}

fn two_image_manifest() -> DatasetManifest {
    manifest_with(&[
        ("a", Label::Malignant, vec![[100.0, 100.0, 200.0, 200.0]]),
        ("b", Label::Benign, vec![[500.0, 500.0, 700.0, 600.0]]),
    ])
}

#[test]
fn fuse_writes_detections_and_sidecar() {
    let fx = Fixture::new();
    let m = fx.manifest(&two_image_manifest());
    let a = fx.detections(
        "a.json",
        "yolo",
        vec![("a", vec![det([90.0, 90.0, 210.0, 210.0]), det([800.0, 800.0, 900.0, 900.0])]), ("b", vec![])],
    );
    let b = fx.detections("b.json", "faster", vec![("a", vec![det([110.0, 110.0, 190.0, 190.0])]), ("b", vec![det([500.0, 500.0, 700.0, 600.0])])]);
    let out = fx.path("fused.json");
    let o = boxfusion(&["fuse", "--manifest", &m, "--det-a", &a, "--det-b", &b, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let fused = parse_detections_json(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(fused.detector_id, "fusion");
    assert_eq!(fused.detections("a"), &[det([90.0, 90.0, 210.0, 210.0])]);
    assert_eq!(fused.detections("b"), &[det([500.0, 500.0, 700.0, 600.0])]);

    let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(fx.path("fused.provenance.json")).unwrap()).unwrap();
    let text = sidecar.to_string();
    assert!(text.contains("A_RETAINED") && text.contains("B_FALLBACK"), "{text}");
}

#[test]
fn fuse_missing_file_is_io_error() {
    let fx = Fixture::new();
    let m = fx.manifest(&two_image_manifest());
    let b = fx.detections("b.json", "faster", vec![]);
    let missing = fx.path("nope.json");
    let o = boxfusion(&[
        "fuse", "--manifest", &m, "--det-a", missing.to_str().unwrap(), "--det-b", &b, "--out",
        fx.path("f.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.json"), "{}", stderr(&o));
}

#[test]
fn fuse_same_detector_id_is_rejected() {
    let fx = Fixture::new();
    let m = fx.manifest(&two_image_manifest());
    let a = fx.detections("a.json", "same", vec![("a", vec![det([90.0, 90.0, 210.0, 210.0])])]);
    let b = fx.detections("b.json", "same", vec![("a", vec![det([90.0, 90.0, 210.0, 210.0])])]);
    let o = boxfusion(&["fuse", "--manifest", &m, "--det-a", &a, "--det-b", &b, "--out", fx.path("f.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("same"), "{}", stderr(&o));
}

#[test]
fn eval_det_noiseless() {
    let fx = Fixture::new();
    let manifest = two_image_manifest();
    let m = fx.manifest(&manifest);
    let gt: Vec<_> = manifest
        .images()
        .iter()
        .map(|r| (r.image_id.as_str(), r.gt_boxes.iter().map(|b| Detection::new(*b, 1.0, None).unwrap()).collect()))
        .collect();
    let d = fx.detections("gt.json", "oracle", gt);
    let o = boxfusion(&["eval-det", "--manifest", &m, "--det", &d]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(row(&stdout(&o), "oracle"), ["100.00", "100.00", "100.00", "2", "0", "0"]);
}

#[test]
fn eval_det_unknown_image_is_validation_error() {
    let fx = Fixture::new();
    let m = fx.manifest(&two_image_manifest());
    let d = fx.detections("d.json", "x", vec![("ghost", vec![det([0.0, 0.0, 5.0, 5.0])])]);
    let o = boxfusion(&["eval-det", "--manifest", &m, "--det", &d]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ghost"), "{}", stderr(&o));
}

#[test]
fn eval_det_reproduces_first_table_row() {
    // 122 images with one GT box each: 120 hit once, 17 of those carry an extra
    // miss, 2 have no prediction at all.
    let fx = Fixture::new();
    let ids: Vec<String> = (0..122).map(|i| format!("im{i:03}")).collect();
    let gt = [100.0, 100.0, 200.0, 200.0];
    let images: Vec<_> = ids.iter().map(|id| (id.as_str(), Label::Normal, vec![gt])).collect();
    let m = fx.manifest(&manifest_with(&images));
    let dets = ids[..120]
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let mut v = vec![det([105.0, 105.0, 195.0, 195.0])];
            if i < 17 {
                v.push(det([600.0, 600.0, 700.0, 700.0]));
            }
            (id.as_str(), v)
        })
        .collect();
    let d = fx.detections("d.json", "yolo", dets);
    let o = boxfusion(&["eval-det", "--manifest", &m, "--det", &d, "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("yolo,")).unwrap();
    let cells: Vec<_> = line.split(',').collect();
    assert_eq!(&cells[2..], ["87.59", "98.36", "120", "17", "2"], "{out}");
}

fn cls_fixture(fx: &Fixture) -> (String, String) {
    let m = fx.manifest(&manifest_with(&[
        ("p1", Label::Malignant, vec![]),
        ("p2", Label::Malignant, vec![]),
        ("p3", Label::Benign, vec![]),
        ("p4", Label::Normal, vec![]),
    ]));
    let d = fx.detections(
        "d.json",
        "yolo",
        vec![
            ("p1", vec![det([0.0, 0.0, 10.0, 10.0]), det([20.0, 20.0, 30.0, 30.0])]),
            ("p2", vec![det([0.0, 0.0, 10.0, 10.0])]),
            ("p3", vec![det([0.0, 0.0, 10.0, 10.0])]),
        ],
    );
    (m, d)
}

#[test]
fn eval_cls_hand_fixture() {
    let fx = Fixture::new();
    let (m, d) = cls_fixture(&fx);
    let l = fx.write("labels.csv", "image_id,box_index,label\np1,0,benign\np1,1,malignant\np2,0,benign\np3,0,benign\np4,-,normal\n");
    let o = boxfusion(&["eval-cls", "--manifest", &m, "--boxes", &d, "--labels", &l]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(row(&stdout(&o), "yolo"), ["75.00", "75.00", "50.00", "100.00"]);

    let o = boxfusion(&["eval-cls", "--manifest", &m, "--boxes", &d, "--labels", &l, "--format", "json"]);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["predicted_labels"]["p2"], "benign");
}

#[test]
fn eval_cls_identity_labels() {
    let fx = Fixture::new();
    let (m, d) = cls_fixture(&fx);
    let l = fx.write("labels.csv", "p1,0,normal\np1,1,malignant\np2,0,malignant\np3,0,benign\np4,-,normal\n");
    let o = boxfusion(&["eval-cls", "--manifest", &m, "--boxes", &d, "--labels", &l]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(row(&stdout(&o), "yolo"), ["100.00"; 4]);
}

#[test]
fn eval_cls_missing_whole_image_label() {
    let fx = Fixture::new();
    let (m, d) = cls_fixture(&fx);
    let l = fx.write("labels.csv", "p1,0,benign\np1,1,malignant\np2,0,benign\np3,0,benign\n");
    let o = boxfusion(&["eval-cls", "--manifest", &m, "--boxes", &d, "--labels", &l]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p4"), "{}", stderr(&o));
}

#[test]
fn eval_cls_unknown_label_reports_line() {
    let fx = Fixture::new();
    let (m, d) = cls_fixture(&fx);
    let l = fx.write("labels.csv", "p1,0,benign\np1,1,cancer\n");
    let o = boxfusion(&["eval-cls", "--manifest", &m, "--boxes", &d, "--labels", &l]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("cancer") && err.contains('2'), "{err}");
}

fn pipeline(m: &str, a: &str, b: &str, labels: &str) -> String {
    let o = boxfusion(&["pipeline", "--manifest", m, "--det-a", a, "--det-b", b, "--labels", labels]);
    assert!(o.status.success(), "{}", stderr(&o));
    stdout(&o)
}

#[test]
fn pipeline_a_empty_equals_b() {
    let fx = Fixture::new();
    let m = fx.manifest(&two_image_manifest());
    let a = fx.detections("a.json", "yolo", vec![]);
    let b = fx.detections(
        "b.json",
        "faster",
        vec![("a", vec![det([110.0, 110.0, 190.0, 190.0]), det([0.0, 0.0, 50.0, 50.0])]), ("b", vec![det([550.0, 520.0, 650.0, 580.0])])],
    );
    let l = fx.write("l.csv", "a,-,normal\nb,-,normal\na,0,malignant\na,1,benign\nb,0,benign\n");
    let out = pipeline(&m, &a, &b, &l);
    assert_eq!(rows(&out, "fusion")[..2], rows(&out, "B_only")[..2], "{out}");
}

#[test]
fn pipeline_both_empty_counts_every_gt_as_missed() {
    let fx = Fixture::new();
    let m = fx.manifest(&two_image_manifest());
    let a = fx.detections("a.json", "yolo", vec![]);
    let b = fx.detections("b.json", "faster", vec![]);
    let l = fx.write("l.csv", "a,-,malignant\nb,-,benign\n");
    let out = pipeline(&m, &a, &b, &l);
    let det = &rows(&out, "fusion")[0];
    assert_eq!(det[..], ["0.00", "0.00", "0.00", "0", "0", "2"], "{out}");
}

#[test]
fn pipeline_self_fusion_matches_a() {
    let fx = Fixture::new();
    let m = fx.manifest(&two_image_manifest());
    let boxes = vec![
        ("a", vec![det([90.0, 90.0, 210.0, 210.0]), det([800.0, 800.0, 900.0, 900.0])]),
        ("b", vec![det([520.0, 510.0, 690.0, 590.0])]),
    ];
    let a = fx.detections("a.json", "yolo", boxes.clone());
    let b = fx.detections("b.json", "yolo_copy", boxes);
    let l = fx.write("l.csv", "yolo,a,0,malignant\nyolo,a,1,normal\nyolo,b,0,benign\nyolo_copy,a,0,benign\nyolo_copy,a,1,normal\nyolo_copy,b,0,benign\n");
    let out = pipeline(&m, &a, &b, &l);
    assert_eq!(rows(&out, "fusion")[..2], rows(&out, "A_only")[..2], "{out}");
    assert_eq!(rows(&out, "fusion")[1], ["100.00"; 4], "{out}");
}

fn write_sim_config(fx: &Fixture, n_images: usize) -> String {
    let toml = format!(
        r#"n_images = {n_images}
image_size = [128, 96]
gt_box_scale = 0.3
label_prior = [0.3, 0.4, 0.3]
seed = 11

[profile_a]
jitter_sigma = 1.0
miss_rate = 0.1
spurious_rate = 0.5
spurious_placement = "uniform_background"

[profile_b]
jitter_sigma = 3.0
miss_rate = 0.1
spurious_rate = 0.0
spurious_placement = "near_gt"

[classifier]
on_target_confusion = [[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.05, 0.15, 0.8]]
background_label_distribution = [0.2, 0.4, 0.4]
"#
    );
    fx.write("sim.toml", toml)
}

#[test]
fn simulate_writes_parseable_outputs() {
    let fx = Fixture::new();
    let cfg = write_sim_config(&fx, 40);
    let out = fx.path("sim");
    let o = boxfusion(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let manifest = parse_manifest(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.len(), 40);
    for f in ["detections_a.json", "detections_b.json"] {
        let set = parse_detections_json(&fs::read(out.join(f)).unwrap()).unwrap();
        set.check_against(&manifest).unwrap();
    }
    parse_labels(&fs::read(out.join("labels.csv")).unwrap()).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 11);
    assert!(report["detection"]["fusion"]["precision"].is_number());

    let again = fx.path("sim2");
    let o = boxfusion(&["simulate", "--config", &cfg, "--out", again.to_str().unwrap(), "--seed", "12"]);
    assert!(o.status.success());
    assert_ne!(fs::read(out.join("detections_a.json")).unwrap(), fs::read(again.join("detections_a.json")).unwrap());
}

#[test]
fn simulate_zero_images() {
    let fx = Fixture::new();
    let cfg = write_sim_config(&fx, 0);
    let out = fx.path("sim");
    let o = boxfusion(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(parse_manifest(&fs::read(out.join("manifest.json")).unwrap()).unwrap().len(), 0);
}

#[test]
fn simulate_invalid_config() {
    let fx = Fixture::new();
    let cfg = fx.write("bad.toml", "n_images = 3\nimage_size = [10, 10]\n");
    let o = boxfusion(&["simulate", "--config", &cfg, "--out", fx.path("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn overlay_svg() {
    let fx = Fixture::new();
    let m = fx.manifest(&two_image_manifest());
    let a = fx.detections("a.json", "yolo", vec![("a", vec![det([90.0, 90.0, 210.0, 210.0])])]);
    let b = fx.detections("b.json", "faster", vec![("a", vec![det([110.0, 110.0, 190.0, 190.0])])]);
    let svg = fx.path("a.svg");
    let o = boxfusion(&["overlay", "--manifest", &m, "--det", &a, "--det", &b, "--image-id", "a", "--out", svg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    assert_eq!(text.matches("class=\"det\"").count(), 2, "{text}");
    assert_eq!(text.matches("class=\"gt\"").count(), 1, "{text}");

    let o = boxfusion(&["overlay", "--manifest", &m, "--det", &a, "--image-id", "zzz", "--out", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn yolo_directory_input() {
    let fx = Fixture::new();
    let m = fx.manifest(&two_image_manifest());
    let dir = fx.path("yolo_txt");
    fs::create_dir(&dir).unwrap();
    // GT box of image a is [100,100,200,200] on a 1000x1000 image
    fs::write(dir.join("a.txt"), "0 0.15 0.15 0.1 0.1\n").unwrap();
    let o = boxfusion(&["eval-det", "--manifest", &m, "--det", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(row(&stdout(&o), "yolo_txt"), ["100.00", "100.00", "50.00", "1", "0", "1"]);
}

#[test]
fn bad_arguments_use_clap_exit_code() {
    let o = boxfusion(&["fuse"]);
    assert_eq!(o.status.code(), Some(2));
    let o = boxfusion(&["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("pipeline"));
}
