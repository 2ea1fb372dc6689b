//! Batch orchestration behind the command-line entry point: manifest
//! ingestion and the end-to-end preprocess / recognize / word-break /
//! score loop.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::evalkit::{aggregate, render_table, score_image_with, EvalReport, ScoreOptions};
use crate::ocrgate::{OcrEngine, OcrImage, OcrRequest};
use crate::pipeline::{run_pipeline, Artifact, PipelineConfig, PipelineInput, PipelineRun};
use crate::raster::io as imgio;
use crate::segment::{render_spaced, split_graphemes, word_break, Lexicon};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("line {line}: expected two tab-separated fields, got {got}")]
    WrongFieldCount { line: usize, got: usize },
    #[error("line {line}: empty {what} path")]
    EmptyField { line: usize, what: &'static str },
    #[error("line {line}: duplicate image path {path:?}")]
    DuplicateImage { line: usize, path: String },
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot create output directory {path}: {source}")]
    OutDir {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub image: PathBuf,
    pub ground_truth: PathBuf,
}

/// The test-set manifest: image path and ground-truth path per line,
/// tab-separated, `#` comments allowed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub fn parse_manifest(text: &str) -> Result<Manifest, ManifestError> {
    let mut entries = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 2 {
            return Err(ManifestError::WrongFieldCount { line, got: fields.len() });
        }
        let image = fields[0].trim();
        let ground_truth = fields[1].trim();
        if image.is_empty() {
            return Err(ManifestError::EmptyField { line, what: "image" });
        }
        if ground_truth.is_empty() {
            return Err(ManifestError::EmptyField { line, what: "ground truth" });
        }
        if !seen.insert(image.to_string()) {
            return Err(ManifestError::DuplicateImage { line, path: image.to_string() });
        }
        entries.push(ManifestEntry {
            image: PathBuf::from(image),
            ground_truth: PathBuf::from(ground_truth),
        });
    }
    Ok(Manifest { entries })
}

impl Manifest {
    /// Read a manifest file; relative entry paths resolve against the
    /// manifest's own directory.
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut manifest = parse_manifest(&text)?;
        if let Some(base) = path.parent() {
            for entry in &mut manifest.entries {
                if entry.image.is_relative() {
                    entry.image = base.join(&entry.image);
                }
                if entry.ground_truth.is_relative() {
                    entry.ground_truth = base.join(&entry.ground_truth);
                }
            }
        }
        Ok(manifest)
    }
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub config: PipelineConfig,
    pub model: String,
    pub psm: u8,
    pub lexicon: Option<std::sync::Arc<Lexicon>>,
    pub score: ScoreOptions,
    pub jobs: usize,
    /// Where per-image text and the reports are written; dry run when
    /// absent.
    pub out_dir: Option<PathBuf>,
    /// Directory for per-stage images, one subdirectory per entry.
    pub dump_intermediates: Option<PathBuf>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            config: PipelineConfig::default(),
            model: "atam".into(),
            psm: 6,
            lexicon: None,
            score: ScoreOptions::default(),
            jobs: 1,
            out_dir: None,
            dump_intermediates: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryOutcome {
    pub image_id: String,
    /// Recognized (and word-broken) text; absent when the entry failed.
    pub text: Option<String>,
    pub score: Option<crate::evalkit::ImageScore>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub outcomes: Vec<EntryOutcome>,
    pub eval: Option<EvalReport>,
}

impl BatchReport {
    pub fn failed_count(&self) -> usize {
        self.outcomes.iter().filter(|o| o.error.is_some()).count()
    }

    /// Line-oriented report: the score table, then one `failed` line
    /// per failed entry in manifest order.
    pub fn render(&self) -> String {
        let mut out = match &self.eval {
            Some(eval) => render_table(eval),
            None => String::from("image_id\tgt_len\tdistance\taccuracy\n"),
        };
        for o in self.outcomes.iter().filter(|o| o.error.is_some()) {
            out.push_str(&format!(
                "failed\t{}\t{}\n",
                o.image_id,
                o.error.as_deref().unwrap_or("unknown error")
            ));
        }
        out
    }
}

/// Derive unique output identifiers from image paths (file stem, with
/// a numeric suffix on collision).
fn entry_ids(manifest: &Manifest) -> Vec<String> {
    let mut used: HashSet<String> = HashSet::new();
    manifest
        .entries
        .iter()
        .map(|e| {
            let stem = e
                .image
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "image".into());
            let mut id = stem.clone();
            let mut n = 1;
            while !used.insert(id.clone()) {
                n += 1;
                id = format!("{stem}_{n}");
            }
            id
        })
        .collect()
}

/// Segment each line of recognized text against the lexicon.
pub fn segment_text(text: &str, lexicon: &Lexicon) -> String {
    text.lines()
        .map(|line| {
            if line.trim().is_empty() {
                line.to_string()
            } else {
                let seq = split_graphemes(line);
                let seg = word_break(&seq, lexicon);
                render_spaced(&seg, &seq)
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn save_artifact(path: &Path, artifact: &Artifact) -> Result<(), String> {
    let res = match artifact {
        Artifact::Gray(g) => imgio::save_gray(path, g),
        Artifact::Binary(b) => imgio::save_binary(path, b),
        Artifact::Rgb(_) => return Err("rgb intermediates are not dumped".into()),
    };
    res.map_err(|e| e.to_string())
}

fn dump_run(dir: &Path, run: &PipelineRun) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    for stage in &run.stages {
        if matches!(stage.artifact, Artifact::Rgb(_)) {
            continue;
        }
        save_artifact(&dir.join(format!("{}.pgm", stage.name)), &stage.artifact)?;
    }
    Ok(())
}

fn process_entry(
    entry: &ManifestEntry,
    id: &str,
    opts: &BatchOptions,
    engine: &dyn OcrEngine,
) -> Result<(String, crate::evalkit::ImageScore), String> {
    let gt = std::fs::read_to_string(&entry.ground_truth)
        .map_err(|e| format!("ground truth {}: {e}", entry.ground_truth.display()))?;
    let decoded = imgio::load_image(&entry.image).map_err(|e| e.to_string())?;
    let input = match decoded {
        imgio::DecodedImage::Gray(g) => PipelineInput::Gray(g),
        imgio::DecodedImage::Rgb(c) => PipelineInput::Rgb(c),
    };
    let run = run_pipeline(input, &opts.config).map_err(|e| e.to_string())?;
    if let Some(dump_root) = &opts.dump_intermediates {
        dump_run(&dump_root.join(id), &run)?;
    }
    let binary = run
        .binary
        .ok_or_else(|| "pipeline produced no binary image (no threshold stage)".to_string())?;

    let req = OcrRequest::new(OcrImage::Binary(binary), opts.model.clone(), opts.psm)
        .map_err(|e| e.to_string())?;
    let result = engine.recognize(&req).map_err(|e| e.to_string())?;

    let text = match &opts.lexicon {
        Some(lex) => segment_text(result.text.trim_end(), lex),
        None => result.text.trim_end().to_string(),
    };

    let score = score_image_with(&text, &gt, opts.score)
        .map_err(|e| e.to_string())?
        .named(id);
    Ok((text, score))
}

/// Run the full pipeline over a manifest. Entry failures are recorded
/// and do not stop the batch; outcomes keep manifest order regardless
/// of `jobs`.
pub fn cmd_pipeline(
    manifest: &Manifest,
    opts: &BatchOptions,
    engine: &dyn OcrEngine,
) -> Result<BatchReport, RunError> {
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir).map_err(|source| RunError::OutDir {
            path: dir.display().to_string(),
            source,
        })?;
    }

    let ids = entry_ids(manifest);
    let jobs = opts.jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    let results: Vec<Result<(String, crate::evalkit::ImageScore), String>> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .zip(ids.par_iter())
            .map(|(entry, id)| process_entry(entry, id, opts, engine))
            .collect()
    });

    let mut outcomes = Vec::with_capacity(results.len());
    let mut scores = Vec::new();
    for (id, result) in ids.iter().zip(results) {
        match result {
            Ok((text, score)) => {
                if let Some(dir) = &opts.out_dir {
                    let path = dir.join(format!("{id}.txt"));
                    std::fs::write(&path, &text).map_err(|source| RunError::Write {
                        path: path.display().to_string(),
                        source,
                    })?;
                }
                scores.push(score.clone());
                outcomes.push(EntryOutcome {
                    image_id: id.clone(),
                    text: Some(text),
                    score: Some(score),
                    error: None,
                });
            }
            Err(error) => outcomes.push(EntryOutcome {
                image_id: id.clone(),
                text: None,
                score: None,
                error: Some(error),
            }),
        }
    }

    let eval = if scores.is_empty() {
        None
    } else {
        Some(aggregate(scores).expect("non-empty scores"))
    };
    let report = BatchReport { outcomes, eval };

    if let Some(dir) = &opts.out_dir {
        let txt_path = dir.join("report.txt");
        std::fs::write(&txt_path, report.render()).map_err(|source| RunError::Write {
            path: txt_path.display().to_string(),
            source,
        })?;
        let json_path = dir.join("report.json");
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(&json_path, json).map_err(|source| RunError::Write {
            path: json_path.display().to_string(),
            source,
        })?;
    }
    Ok(report)
}
