//! Composable preprocessing pipeline: config parsing, stage-order
//! validation and deterministic execution with inspectable
//! intermediates.
//!
//! Config format: `key = value` lines under bracketed stage headers,
//! applied in file order. Unknown stages and keys are rejected.

use thiserror::Error;

use crate::binarize::{
    adaptive_threshold, apply_threshold, eliminate_border, erode, otsu_threshold,
    remove_small_components, AdaptiveParams, BinarizeError, BinaryImage, Connectivity, Weighting,
};
use crate::deskew::{estimate_skew, rotate_binary, DeskewError, SkewSearchParams};
use crate::enhance::{
    bilateral_filter, box_blur, equalize_histogram, median_blur, BilateralParams, FilterError,
};
use crate::raster::{intensity_histogram, resize, rotate, to_grayscale, GrayImage, RgbImage};

pub const DEFAULT_CONFIG_TEXT: &str = include_str!("../assets/default_pipeline.conf");

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown stage {name:?}")]
    UnknownStage { line: usize, name: String },
    #[error("line {line}: unknown key {key:?} for stage {stage:?}")]
    UnknownKey {
        line: usize,
        stage: String,
        key: String,
    },
    #[error("line {line}: bad value for {key:?}: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: key/value outside any stage header")]
    KeyOutsideStage { line: usize },
    #[error("line {line}: second thresholding stage; at most one is allowed")]
    SecondThreshold { line: usize },
    #[error("line {line}: stage {stage:?} operates on a binary image and must come after a thresholding stage")]
    BinaryStageBeforeThreshold { line: usize, stage: String },
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {index} ({stage}): input is RGB; insert a grayscale stage first")]
    NeedsGrayscale { index: usize, stage: &'static str },
    #[error("stage {index} ({stage}): filter error: {source}")]
    Filter {
        index: usize,
        stage: &'static str,
        #[source]
        source: FilterError,
    },
    #[error("stage {index} ({stage}): {source}")]
    Binarize {
        index: usize,
        stage: &'static str,
        #[source]
        source: BinarizeError,
    },
    #[error("stage {index} ({stage}): {source}")]
    Deskew {
        index: usize,
        stage: &'static str,
        #[source]
        source: DeskewError,
    },
}

/// One preprocessing stage with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    Grayscale,
    Resize { max_dim: u32 },
    Equalize,
    MedianBlur { k: usize },
    BoxBlur { k: usize },
    Bilateral(BilateralParams),
    AdaptiveThreshold(AdaptiveParams),
    OtsuThreshold,
    Deskew(SkewSearchParams),
    Erode { k: usize },
    RemoveSmall { min_area: usize, connectivity: Connectivity },
    EliminateBorder { band: u32 },
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Grayscale => "grayscale",
            Stage::Resize { .. } => "resize",
            Stage::Equalize => "equalize",
            Stage::MedianBlur { .. } => "median_blur",
            Stage::BoxBlur { .. } => "box_blur",
            Stage::Bilateral(_) => "bilateral",
            Stage::AdaptiveThreshold(_) => "adaptive_threshold",
            Stage::OtsuThreshold => "otsu_threshold",
            Stage::Deskew(_) => "deskew",
            Stage::Erode { .. } => "erode",
            Stage::RemoveSmall { .. } => "remove_small",
            Stage::EliminateBorder { .. } => "eliminate_border",
        }
    }

    fn is_threshold(&self) -> bool {
        matches!(self, Stage::AdaptiveThreshold(_) | Stage::OtsuThreshold)
    }

    fn needs_binary(&self) -> bool {
        matches!(
            self,
            Stage::Deskew(_)
                | Stage::Erode { .. }
                | Stage::RemoveSmall { .. }
                | Stage::EliminateBorder { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    stages: Vec<Stage>,
}

impl PipelineConfig {
    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn from_stages(stages: Vec<Stage>) -> Self {
        Self { stages }
    }

    /// Parse and validate a config document; fails closed on anything
    /// it does not recognize. Ordering rules are enforced here, never
    /// at run time.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw: Vec<(String, usize, Vec<(String, String, usize)>)> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            if let Some(header) = content.strip_prefix('[') {
                let Some(name) = header.strip_suffix(']') else {
                    return Err(ConfigError::Syntax {
                        line,
                        reason: "unterminated stage header".into(),
                    });
                };
                raw.push((name.trim().to_string(), line, Vec::new()));
            } else if let Some((key, value)) = content.split_once('=') {
                let Some((_, _, params)) = raw.last_mut() else {
                    return Err(ConfigError::KeyOutsideStage { line });
                };
                params.push((key.trim().to_string(), value.trim().to_string(), line));
            } else {
                return Err(ConfigError::Syntax {
                    line,
                    reason: format!("expected `[stage]` or `key = value`, got {content:?}"),
                });
            }
        }

        let mut stages = Vec::with_capacity(raw.len());
        let mut saw_threshold = false;
        for (name, header_line, params) in raw {
            let stage = build_stage(&name, header_line, &params)?;
            if stage.is_threshold() {
                if saw_threshold {
                    return Err(ConfigError::SecondThreshold { line: header_line });
                }
                saw_threshold = true;
            }
            if stage.needs_binary() && !saw_threshold {
                return Err(ConfigError::BinaryStageBeforeThreshold {
                    line: header_line,
                    stage: name,
                });
            }
            stages.push(stage);
        }
        Ok(Self { stages })
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::parse(DEFAULT_CONFIG_TEXT).expect("shipped default config parses")
    }
}

struct Params<'a> {
    stage: &'a str,
    entries: &'a [(String, String, usize)],
}

impl<'a> Params<'a> {
    fn check_known(&self, known: &[&str]) -> Result<(), ConfigError> {
        for (key, _, line) in self.entries {
            if !known.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey {
                    line: *line,
                    stage: self.stage.to_string(),
                    key: key.clone(),
                });
            }
        }
        Ok(())
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        for (k, v, line) in self.entries {
            if k == key {
                return v.parse().map_err(|_| ConfigError::BadValue {
                    line: *line,
                    key: key.to_string(),
                    reason: format!("cannot parse {v:?}"),
                });
            }
        }
        Ok(default)
    }

    fn line_of(&self, key: &str, header_line: usize) -> usize {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, _, l)| *l)
            .unwrap_or(header_line)
    }
}

fn build_stage(
    name: &str,
    header_line: usize,
    entries: &[(String, String, usize)],
) -> Result<Stage, ConfigError> {
    let p = Params { stage: name, entries };
    let bad = |key: &str, reason: String| ConfigError::BadValue {
        line: p.line_of(key, header_line),
        key: key.to_string(),
        reason,
    };
    match name {
        "grayscale" => {
            p.check_known(&[])?;
            Ok(Stage::Grayscale)
        }
        "resize" => {
            p.check_known(&["max_dim"])?;
            let max_dim: u32 = p.get("max_dim", 1600)?;
            if max_dim == 0 {
                return Err(bad("max_dim", "must be at least 1".into()));
            }
            Ok(Stage::Resize { max_dim })
        }
        "equalize" => {
            p.check_known(&[])?;
            Ok(Stage::Equalize)
        }
        "median_blur" | "box_blur" => {
            p.check_known(&["k"])?;
            let k: usize = p.get("k", 3)?;
            if k < 3 || k % 2 == 0 {
                return Err(bad("k", format!("kernel {k} must be odd and >= 3")));
            }
            Ok(if name == "median_blur" {
                Stage::MedianBlur { k }
            } else {
                Stage::BoxBlur { k }
            })
        }
        "bilateral" => {
            p.check_known(&["d", "sigma_color", "sigma_space"])?;
            let d: usize = p.get("d", 9)?;
            let sigma_color: f64 = p.get("sigma_color", 75.0)?;
            let sigma_space: f64 = p.get("sigma_space", 75.0)?;
            let params = BilateralParams::new(d, sigma_color, sigma_space)
                .map_err(|e| bad("d", e.to_string()))?;
            Ok(Stage::Bilateral(params))
        }
        "adaptive_threshold" => {
            p.check_known(&["window", "constant_c", "weighting"])?;
            let window: usize = p.get("window", 31)?;
            let constant_c: f64 = p.get("constant_c", 10.0)?;
            let weighting_raw: String = p.get("weighting", "gaussian".to_string())?;
            let weighting = match weighting_raw.as_str() {
                "mean" => Weighting::Mean,
                "gaussian" => Weighting::Gaussian,
                other => {
                    return Err(bad(
                        "weighting",
                        format!("expected mean or gaussian, got {other:?}"),
                    ))
                }
            };
            let params = AdaptiveParams::new(window, constant_c, weighting)
                .map_err(|e| bad("window", e.to_string()))?;
            Ok(Stage::AdaptiveThreshold(params))
        }
        "otsu_threshold" => {
            p.check_known(&[])?;
            Ok(Stage::OtsuThreshold)
        }
        "deskew" => {
            p.check_known(&["max_angle", "coarse_step", "fine_step"])?;
            let max_angle: f64 = p.get("max_angle", 15.0)?;
            let coarse_step: f64 = p.get("coarse_step", 1.0)?;
            let fine_step: f64 = p.get("fine_step", 0.1)?;
            let params = SkewSearchParams::new(max_angle, coarse_step, fine_step)
                .map_err(|e| bad("max_angle", e.to_string()))?;
            Ok(Stage::Deskew(params))
        }
        "erode" => {
            p.check_known(&["k"])?;
            let k: usize = p.get("k", 3)?;
            if k < 3 || k % 2 == 0 {
                return Err(bad("k", format!("kernel {k} must be odd and >= 3")));
            }
            Ok(Stage::Erode { k })
        }
        "remove_small" => {
            p.check_known(&["min_area", "connectivity"])?;
            let min_area: usize = p.get("min_area", 12)?;
            let connectivity: u32 = p.get("connectivity", 8)?;
            let connectivity = match connectivity {
                4 => Connectivity::Four,
                8 => Connectivity::Eight,
                other => return Err(bad("connectivity", format!("expected 4 or 8, got {other}"))),
            };
            Ok(Stage::RemoveSmall { min_area, connectivity })
        }
        "eliminate_border" => {
            p.check_known(&["band"])?;
            let band: u32 = p.get("band", 2)?;
            Ok(Stage::EliminateBorder { band })
        }
        _ => Err(ConfigError::UnknownStage {
            line: header_line,
            name: name.to_string(),
        }),
    }
}

/// Pipeline input: a decoded color photo or an already-gray image.
#[derive(Debug, Clone)]
pub enum PipelineInput {
    Rgb(RgbImage),
    Gray(GrayImage),
}

impl From<RgbImage> for PipelineInput {
    fn from(img: RgbImage) -> Self {
        PipelineInput::Rgb(img)
    }
}

impl From<GrayImage> for PipelineInput {
    fn from(img: GrayImage) -> Self {
        PipelineInput::Gray(img)
    }
}

/// A stage's inspectable output.
#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Rgb(RgbImage),
    Gray(GrayImage),
    Binary(BinaryImage),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageOutput {
    /// `<index>_<stage>`, e.g. `5_adaptive_threshold`.
    pub name: String,
    pub artifact: Artifact,
}

/// Result of a pipeline run: the final artifact, the last grayscale
/// and binary carriers, and every per-stage intermediate.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub stages: Vec<StageOutput>,
    pub gray: Option<GrayImage>,
    pub binary: Option<BinaryImage>,
    final_input: Option<Artifact>,
}

impl PipelineRun {
    /// The end product: the binary image when a threshold stage ran,
    /// otherwise the processed grayscale (or the untouched input for
    /// an empty config).
    pub fn final_artifact(&self) -> Artifact {
        if let Some(bin) = &self.binary {
            return Artifact::Binary(bin.clone());
        }
        if let Some(gray) = &self.gray {
            return Artifact::Gray(gray.clone());
        }
        self.final_input.clone().expect("one carrier always present")
    }
}

/// Run the stages in order. Deterministic: identical input and config
/// produce bit-identical outputs.
pub fn run_pipeline(input: PipelineInput, cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    let (mut rgb, mut gray): (Option<RgbImage>, Option<GrayImage>) = match input {
        PipelineInput::Rgb(img) => (Some(img), None),
        PipelineInput::Gray(img) => (None, Some(img)),
    };
    let mut binary: Option<BinaryImage> = None;
    let mut stages = Vec::with_capacity(cfg.stages.len());

    for (index, stage) in cfg.stages.iter().enumerate() {
        let name = stage.name();
        let require_gray = |gray: &Option<GrayImage>| -> Result<GrayImage, PipelineError> {
            gray.clone()
                .ok_or(PipelineError::NeedsGrayscale { index, stage: name })
        };
        match stage {
            Stage::Grayscale => {
                if let Some(color) = rgb.take() {
                    gray = Some(to_grayscale(&color));
                }
                // Already gray: identity.
            }
            Stage::Resize { max_dim } => {
                gray = Some(resize(&require_gray(&gray)?, *max_dim));
            }
            Stage::Equalize => {
                gray = Some(equalize_histogram(&require_gray(&gray)?));
            }
            Stage::MedianBlur { k } => {
                gray = Some(
                    median_blur(&require_gray(&gray)?, *k)
                        .map_err(|source| PipelineError::Filter { index, stage: name, source })?,
                );
            }
            Stage::BoxBlur { k } => {
                gray = Some(
                    box_blur(&require_gray(&gray)?, *k)
                        .map_err(|source| PipelineError::Filter { index, stage: name, source })?,
                );
            }
            Stage::Bilateral(params) => {
                gray = Some(bilateral_filter(&require_gray(&gray)?, params));
            }
            Stage::AdaptiveThreshold(params) => {
                binary = Some(adaptive_threshold(&require_gray(&gray)?, params));
            }
            Stage::OtsuThreshold => {
                let g = require_gray(&gray)?;
                let stats = otsu_threshold(&intensity_histogram(&g))
                    .map_err(|source| PipelineError::Binarize { index, stage: name, source })?;
                binary = Some(apply_threshold(&g, stats.threshold));
            }
            Stage::Deskew(params) => {
                let bin = binary.as_ref().expect("parse-time order validation");
                let g = require_gray(&gray)?;
                if g.width() != bin.width() || g.height() != bin.height() {
                    return Err(PipelineError::Deskew {
                        index,
                        stage: name,
                        source: DeskewError::DimensionMismatch {
                            img_w: g.width(),
                            img_h: g.height(),
                            bin_w: bin.width(),
                            bin_h: bin.height(),
                        },
                    });
                }
                let est = estimate_skew(bin, params);
                // Rotate both carriers so later stages stay aligned.
                gray = Some(rotate(&g, est.angle, 255));
                binary = Some(rotate_binary(bin, est.angle));
            }
            Stage::Erode { k } => {
                let bin = binary.as_ref().expect("parse-time order validation");
                binary = Some(
                    erode(bin, *k)
                        .map_err(|source| PipelineError::Binarize { index, stage: name, source })?,
                );
            }
            Stage::RemoveSmall { min_area, connectivity } => {
                let bin = binary.as_ref().expect("parse-time order validation");
                binary = Some(remove_small_components(bin, *min_area, *connectivity));
            }
            Stage::EliminateBorder { band } => {
                let bin = binary.as_ref().expect("parse-time order validation");
                binary = Some(eliminate_border(bin, *band, Connectivity::Eight));
            }
        }

        let artifact = if stage.needs_binary() || stage.is_threshold() {
            Artifact::Binary(binary.clone().expect("binary stage just ran"))
        } else if let Some(g) = &gray {
            Artifact::Gray(g.clone())
        } else {
            Artifact::Rgb(rgb.clone().expect("one carrier always present"))
        };
        stages.push(StageOutput {
            name: format!("{index}_{name}"),
            artifact,
        });
    }

    let final_input = match (&gray, &rgb) {
        (None, Some(color)) => Some(Artifact::Rgb(color.clone())),
        _ => None,
    };
    Ok(PipelineRun {
        stages,
        gray,
        binary,
        final_input,
    })
}
