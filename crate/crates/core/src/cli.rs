//! Command-line front end. Exit codes: 0 success, 1 I/O failure, 2 validation error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::formats::report::ReportDocument;
use crate::formats::{
    parse_detections_csv, parse_detections_json, parse_labels, parse_manifest, parse_yolo_txt,
    serialize_detections, serialize_labels, serialize_manifest, DatasetManifest, DetectionSet,
    LabelTable, ReportFormat,
};
use crate::fusion::{fuse_dataset, serialize_provenance, EmptyFusionPolicy};
use crate::metrics::{classification_report, detection_report, predict_image_labels, MiouMode};
use crate::overlay::emit_overlay;
use crate::pipeline::{compare_arms, PipelineSettings};
use crate::simulator::{run_experiment, SimConfig};

#[derive(Debug, Parser)]
#[command(name = "boxfusion", version, about = "Fuse and evaluate bounding boxes from two object detectors")]
pub struct Cli {
    /// Worker threads for per-image work (0 uses every core). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fuse two detection files into one, plus a provenance sidecar.
    Fuse(FuseArgs),
    /// Detection metrics (mIoU, precision, recall, TP/FP/FN).
    EvalDet(EvalDetArgs),
    /// Image classification metrics from per-box labels.
    EvalCls(EvalClsArgs),
    /// Compare A-only, B-only and fused boxes end to end.
    Pipeline(PipelineArgs),
    /// Generate a synthetic dataset, detections, labels and report.
    Simulate(SimulateArgs),
    /// Draw ground truth and detections for one image as SVG.
    Overlay(OverlayArgs),
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub det_a: PathBuf,
    #[arg(long)]
    pub det_b: PathBuf,
    #[arg(long, value_enum, default_value_t = EmptyFusionPolicy::Literal)]
    pub empty_fusion: EmptyFusionPolicy,
    /// Fused detection file.
    #[arg(long)]
    pub out: PathBuf,
    /// Provenance sidecar (default: `<out stem>.provenance.json` next to `--out`).
    #[arg(long)]
    pub provenance: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalDetArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Detection file: JSON, CSV, or a directory of YOLO text files.
    #[arg(long)]
    pub det: PathBuf,
    #[arg(long, value_enum, default_value_t = MiouMode::PerBox)]
    pub miou_mode: MiouMode,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalClsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Boxes whose labels are listed in `--labels`.
    #[arg(long)]
    pub boxes: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub det_a: PathBuf,
    #[arg(long)]
    pub det_b: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum, default_value_t = EmptyFusionPolicy::Literal)]
    pub empty_fusion: EmptyFusionPolicy,
    #[arg(long, value_enum, default_value_t = MiouMode::PerBox)]
    pub miou_mode: MiouMode,
    #[arg(long, default_value_t = 0.5)]
    pub divergence_iou: f64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config (`.toml`, otherwise JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Detection files to draw (repeatable).
    #[arg(long)]
    pub det: Vec<PathBuf>,
    #[arg(long)]
    pub image_id: String,
    #[arg(long)]
    pub out: PathBuf,
}

pub const SIM_MANIFEST: &str = "manifest.json";
pub const SIM_DETECTIONS_A: &str = "detections_a.json";
pub const SIM_DETECTIONS_B: &str = "detections_b.json";
pub const SIM_LABELS: &str = "labels.csv";
pub const SIM_REPORT: &str = "report.json";

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => write(p, bytes),
        None => stdout
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    parse_manifest(&read(path)?)
}

/// Loads a detection set from JSON, CSV (`.csv`, detector id = file stem) or a
/// directory of YOLO `<image_id>.txt` files (detector id = directory name).
pub fn load_detections(path: &Path, manifest: &DatasetManifest) -> Result<DetectionSet> {
    let stem = || {
        path.file_stem()
            .or_else(|| path.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "detections".into())
    };
    if path.is_dir() {
        let mut texts = BTreeMap::new();
        let entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
        for entry in entries {
            let p = entry.map_err(|e| Error::io(path, e))?.path();
            if p.extension().is_some_and(|e| e == "txt") {
                let id = p.file_stem().unwrap().to_string_lossy().into_owned();
                texts.insert(id, read(&p)?);
            }
        }
        return parse_yolo_txt(&stem(), &texts, manifest);
    }
    let bytes = read(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        parse_detections_csv(&stem(), &bytes)
    } else {
        parse_detections_json(&bytes)
    }
}

fn load_labels(path: &Path) -> Result<LabelTable> {
    parse_labels(&read(path)?)
}

fn provenance_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.provenance.json"))
}

pub fn cmd_fuse(args: &FuseArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let a = load_detections(&args.det_a, &manifest)?;
    let b = load_detections(&args.det_b, &manifest)?;
    let fused = fuse_dataset(&a, &b, &manifest, args.empty_fusion)?;
    write(&args.out, &serialize_detections(&fused.to_detection_set()))?;
    let sidecar = args.provenance.clone().unwrap_or_else(|| provenance_path(&args.out));
    write(&sidecar, &serialize_provenance(&fused.provenance_sidecar()))
}

pub fn cmd_eval_det(args: &EvalDetArgs, stdout: &mut dyn Write) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let set = load_detections(&args.det, &manifest)?;
    let report = detection_report(&set, &manifest, args.miou_mode)?;
    let doc = ReportDocument::new()
        .config("command", "eval-det")
        .config("manifest", path_str(&args.manifest))
        .config("detections", path_str(&args.det))
        .config("miou_mode", args.miou_mode)
        .section("detection", &[(set.detector_id.as_str(), &report)]);
    emit(args.out.as_deref(), &doc.render(args.format), stdout)
}

pub fn cmd_eval_cls(args: &EvalClsArgs, stdout: &mut dyn Write) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let set = load_detections(&args.boxes, &manifest)?;
    let labels = load_labels(&args.labels)?;
    let predicted = predict_image_labels(&set, &labels, &manifest)?;
    let report = classification_report(&predicted, &manifest)?;
    let doc = ReportDocument::new()
        .config("command", "eval-cls")
        .config("manifest", path_str(&args.manifest))
        .config("boxes", path_str(&args.boxes))
        .config("labels", path_str(&args.labels))
        .section("classification", &[(set.detector_id.as_str(), &report)])
        .json_member("predicted_labels", &predicted);
    emit(args.out.as_deref(), &doc.render(args.format), stdout)
}

pub fn cmd_pipeline(args: &PipelineArgs, stdout: &mut dyn Write) -> Result<()> {
    if !(args.divergence_iou > 0.0 && args.divergence_iou <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "--divergence-iou {} outside (0, 1]",
            args.divergence_iou
        )));
    }
    let manifest = load_manifest(&args.manifest)?;
    let a = load_detections(&args.det_a, &manifest)?;
    let b = load_detections(&args.det_b, &manifest)?;
    let labels = load_labels(&args.labels)?;
    let settings = PipelineSettings {
        empty_fusion_policy: args.empty_fusion,
        miou_mode: args.miou_mode,
        divergence_iou: args.divergence_iou,
    };
    let (fused, report) = compare_arms(&manifest, &a, &b, &labels, &settings)?;
    let doc = ReportDocument::new()
        .config("command", "pipeline")
        .config("manifest", path_str(&args.manifest))
        .config("det_a", path_str(&args.det_a))
        .config("det_b", path_str(&args.det_b))
        .config("detector_a", &a.detector_id)
        .config("detector_b", &b.detector_id)
        .config("labels", path_str(&args.labels))
        .config("empty_fusion", args.empty_fusion)
        .config("miou_mode", args.miou_mode)
        .config("divergence_iou", args.divergence_iou);
    let doc = report
        .to_document(doc)
        .json_member("fusion_branches", fused.branch_counts());
    emit(args.out.as_deref(), &doc.render(args.format), stdout)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let text = String::from_utf8(read(&args.config)?)
        .map_err(|e| Error::malformed("sim config", 0, 0, e.to_string()))?;
    let is_toml = args.config.extension().is_some_and(|e| e == "toml");
    let mut cfg = SimConfig::parse(&text, is_toml)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let exp = run_experiment(&cfg)?;

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write(&args.out.join(SIM_MANIFEST), &serialize_manifest(&exp.manifest))?;
    write(&args.out.join(SIM_DETECTIONS_A), &serialize_detections(&exp.detections_a))?;
    write(&args.out.join(SIM_DETECTIONS_B), &serialize_detections(&exp.detections_b))?;
    write(&args.out.join(SIM_LABELS), &serialize_labels(&exp.labels))?;
    write(&args.out.join(SIM_REPORT), &exp.report_document().render(ReportFormat::Json))
}

pub fn cmd_overlay(args: &OverlayArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let sets = args
        .det
        .iter()
        .map(|p| load_detections(p, &manifest))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&DetectionSet> = sets.iter().collect();
    let svg = emit_overlay(&manifest, &refs, &args.image_id)?;
    write(&args.out, svg.as_bytes())
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Fuse(a) => cmd_fuse(a),
        Command::EvalDet(a) => cmd_eval_det(a, stdout),
        Command::EvalCls(a) => cmd_eval_cls(a, stdout),
        Command::Pipeline(a) => cmd_pipeline(a, stdout),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Overlay(a) => cmd_overlay(a),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: cannot start worker pool: {e}");
            return 1;
        }
    };
    let mut buffered = Vec::new();
    let result = pool.install(|| dispatch(&cli, &mut buffered));
    if let Err(e) = stdout.write_all(&buffered).and_then(|_| stdout.flush()) {
        let _ = writeln!(stderr, "error: <stdout>: {e}");
        return 1;
    }
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
