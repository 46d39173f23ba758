use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::PipelineSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpuriousPlacement {
    /// Anywhere in the image with the center outside every GT box.
    #[default]
    UniformBackground,
    /// Overlapping the neighbourhood of a GT box.
    NearGt,
}

/// Error behaviour of one simulated detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorProfile {
    /// Std. dev. in pixels of the independent per-corner Gaussian noise.
    pub jitter_sigma: f64,
    /// Probability that a GT box is not detected.
    pub miss_rate: f64,
    /// Expected spurious boxes per image (Poisson mean).
    pub spurious_rate: f64,
    #[serde(default)]
    pub spurious_placement: SpuriousPlacement,
}

impl DetectorProfile {
    pub const NOISELESS: DetectorProfile = DetectorProfile {
        jitter_sigma: 0.0,
        miss_rate: 0.0,
        spurious_rate: 0.0,
        spurious_placement: SpuriousPlacement::UniformBackground,
    };

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.jitter_sigma.is_finite() && self.jitter_sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!("{name}.jitter_sigma must be finite and >= 0")));
        }
        if !(0.0..=1.0).contains(&self.miss_rate) {
            return Err(Error::InvalidConfig(format!("{name}.miss_rate must lie in [0, 1]")));
        }
        if !(self.spurious_rate.is_finite() && self.spurious_rate >= 0.0) {
            return Err(Error::InvalidConfig(format!("{name}.spurious_rate must be finite and >= 0")));
        }
        Ok(())
    }
}

/// Per-box label source: on-target boxes follow the confusion row of the
/// image's true label, background boxes follow a fixed distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierProfile {
    /// Row-stochastic, indexed `[true][predicted]` in normal, benign, malignant order.
    pub on_target_confusion: [[f64; 3]; 3],
    pub background_label_distribution: [f64; 3],
}

impl ClassifierProfile {
    pub fn identity(background_label_distribution: [f64; 3]) -> Self {
        Self {
            on_target_confusion: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            background_label_distribution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.on_target_confusion.iter().enumerate() {
            check_distribution(row, &format!("classifier.on_target_confusion[{i}]"))?;
        }
        check_distribution(&self.background_label_distribution, "classifier.background_label_distribution")
    }
}

pub(crate) fn check_distribution(p: &[f64; 3], name: &str) -> Result<()> {
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidConfig(format!("{name} has a negative or non-finite entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("{name} sums to {sum}, expected 1")));
    }
    Ok(())
}

fn default_id_a() -> String {
    "detector_a".into()
}

fn default_id_b() -> String {
    "detector_b".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_images: usize,
    /// `[width, height]` in pixels.
    pub image_size: [u32; 2],
    /// GT box side as a fraction of the shorter image side.
    pub gt_box_scale: f64,
    /// Prior over normal, benign, malignant.
    pub label_prior: [f64; 3],
    pub profile_a: DetectorProfile,
    pub profile_b: DetectorProfile,
    pub classifier: ClassifierProfile,
    pub seed: u64,
    #[serde(default = "default_id_a")]
    pub detector_a_id: String,
    #[serde(default = "default_id_b")]
    pub detector_b_id: String,
    #[serde(default)]
    pub pipeline: PipelineSettings,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.image_size.contains(&0) {
            return Err(Error::InvalidConfig("image_size entries must be positive".into()));
        }
        if !(self.gt_box_scale > 0.0 && self.gt_box_scale < 1.0) {
            return Err(Error::InvalidConfig("gt_box_scale must lie in (0, 1)".into()));
        }
        check_distribution(&self.label_prior, "label_prior")?;
        self.profile_a.validate("profile_a")?;
        self.profile_b.validate("profile_b")?;
        self.classifier.validate()?;
        if self.detector_a_id.is_empty() || self.detector_b_id.is_empty() {
            return Err(Error::InvalidConfig("detector ids must be non-empty".into()));
        }
        if self.detector_a_id == self.detector_b_id {
            return Err(Error::DetectorIdCollision(self.detector_a_id.clone()));
        }
        let t = self.pipeline.divergence_iou;
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidConfig("pipeline.divergence_iou must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Parses TOML when `toml` is true, JSON otherwise, then validates.
    pub fn parse(text: &str, toml: bool) -> Result<Self> {
        let cfg: SimConfig = if toml {
            toml::from_str(text).map_err(|e| {
                let (line, column) = e
                    .span()
                    .map(|s| line_col(text, s.start))
                    .unwrap_or((0, 0));
                Error::malformed("sim config", line, column, e.message().to_string())
            })?
        } else {
            serde_json::from_str(text).map_err(|e| Error::from_json("sim config", e))?
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
