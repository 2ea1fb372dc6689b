//! `epig` — inscription OCR command line.
//!
//! Exit codes: 0 success, 1 configuration/usage error, 2 partial
//! failure in a batch run.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use epigraph::cli::{cmd_pipeline, BatchOptions, Manifest};
use epigraph::evalkit::{aggregate, render_table, score_image_with, ScoreOptions};
use epigraph::ocrgate::{
    execute_plan, merge_compound_boxes, parse_box_file, plan_training, resolve_overlaps,
    write_box_file, ExternalEngine, MockEngine, OcrEngine, OcrImage, OcrRequest,
};
use epigraph::pipeline::{run_pipeline, Artifact, PipelineConfig, PipelineInput, DEFAULT_CONFIG_TEXT};
use epigraph::raster::io as imgio;
use epigraph::segment::Lexicon;

#[derive(Parser)]
#[command(name = "epig", version, about = "Inscription OCR toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct EngineOpts {
    /// OCR engine: `external` (subprocess; EPIG_ENGINE_BIN,
    /// EPIG_MODEL_DIR) or `mock:<fixtures.tsv>`.
    #[arg(long, default_value = "external")]
    engine: String,
    /// Trained model identifier passed to the engine.
    #[arg(long, default_value = "atam")]
    model: String,
    /// Page segmentation mode.
    #[arg(long, default_value_t = 6)]
    psm: u8,
    /// Engine timeout in seconds.
    #[arg(long, default_value_t = 120)]
    timeout: u64,
}

impl EngineOpts {
    fn build(&self) -> Result<Box<dyn OcrEngine>, String> {
        if self.engine == "external" {
            Ok(Box::new(ExternalEngine::from_env(Duration::from_secs(
                self.timeout,
            ))))
        } else if let Some(path) = self.engine.strip_prefix("mock:") {
            let engine = MockEngine::from_fixture_file(Path::new(path)).map_err(|e| e.to_string())?;
            Ok(Box::new(engine))
        } else {
            Err(format!(
                "--engine must be `external` or `mock:<path>`, got {:?}",
                self.engine
            ))
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the preprocessing pipeline on one image.
    Preprocess {
        image: PathBuf,
        /// Pipeline config file; the built-in default when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output image (.pgm or .png).
        #[arg(short, long)]
        output: PathBuf,
        /// Write each stage output as `<index>_<stage>.pgm` here.
        #[arg(long)]
        dump_intermediates: Option<PathBuf>,
    },
    /// Print the built-in default pipeline config.
    DefaultConfig,
    /// Recognize text in an image with the OCR engine (no
    /// preprocessing).
    Ocr {
        image: PathBuf,
        #[command(flatten)]
        engine: EngineOpts,
    },
    /// Insert word breaks into space-less text.
    Segment {
        /// Input text file; standard input when omitted.
        input: Option<PathBuf>,
        /// Lexicon file: one word per line, `#` comments.
        #[arg(long)]
        lexicon: PathBuf,
    },
    /// Score predicted text against ground truth.
    Eval {
        /// Prediction text file.
        #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
        pred: Option<PathBuf>,
        /// Ground-truth text file.
        #[arg(long, requires = "pred")]
        gt: Option<PathBuf>,
        /// Manifest of image/ground-truth pairs; predictions are
        /// looked up as `<pred_dir>/<image stem>.txt`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, requires = "manifest")]
        pred_dir: Option<PathBuf>,
        /// Compare raw clusters instead of base characters.
        #[arg(long)]
        no_normalize: bool,
        /// Keep whitespace instead of stripping it before comparison.
        #[arg(long)]
        keep_spaces: bool,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Full batch: preprocess, recognize, word-break and score every
    /// manifest entry.
    Pipeline {
        /// Manifest file: `<image>\t<ground truth>` per line.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Output directory for per-image text and reports.
        #[arg(long)]
        out_dir: PathBuf,
        /// Parallel batch entries.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        dump_intermediates: Option<PathBuf>,
        #[arg(long)]
        no_normalize: bool,
        #[arg(long)]
        keep_spaces: bool,
        #[command(flatten)]
        engine: EngineOpts,
    },
    /// Plan (and optionally run) the engine training tool sequence.
    TrainPlan {
        /// Directory of matched image/box pairs.
        #[arg(long)]
        box_dir: PathBuf,
        /// Language / model identifier for the combined output.
        #[arg(long, default_value = "atam")]
        lang: String,
        /// Font properties file.
        #[arg(long)]
        font_props: PathBuf,
        /// Execute the planned steps inside the box directory.
        #[arg(long)]
        execute: bool,
    },
    /// Box-file tooling.
    #[command(subcommand)]
    Boxes(BoxesCommand),
}

#[derive(Subcommand)]
enum BoxesCommand {
    /// Validate a box file and print its canonical form.
    Parse {
        file: PathBuf,
        /// Validate vertical coordinates against this image height.
        #[arg(long)]
        image_height: Option<u32>,
    },
    /// Merge split compound-letter boxes by horizontal overlap.
    Merge {
        file: PathBuf,
        /// Minimum overlap as a fraction of the narrower box width.
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Shrink overlapping boxes to the overlap midline.
    Resolve {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn read_input(path: Option<&Path>) -> Result<String, String> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| format!("stdin: {e}"))?;
            Ok(buf)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, String> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => DEFAULT_CONFIG_TEXT.to_string(),
    };
    PipelineConfig::parse(&text).map_err(|e| e.to_string())
}

fn write_or_print(output: Option<&Path>, text: &str) -> Result<(), String> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_decoded(image: &Path) -> Result<PipelineInput, String> {
    let decoded = imgio::load_image(image).map_err(|e| e.to_string())?;
    Ok(match decoded {
        imgio::DecodedImage::Gray(g) => PipelineInput::Gray(g),
        imgio::DecodedImage::Rgb(c) => PipelineInput::Rgb(c),
    })
}

fn run() -> Result<ExitCode, String> {
    match Cli::parse().command {
        Command::Preprocess {
            image,
            config,
            output,
            dump_intermediates,
        } => {
            let cfg = load_config(config.as_deref())?;
            let input = load_decoded(&image)?;
            let run = run_pipeline(input, &cfg).map_err(|e| e.to_string())?;
            if let Some(dir) = dump_intermediates {
                std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
                for stage in &run.stages {
                    let path = dir.join(format!("{}.pgm", stage.name));
                    match &stage.artifact {
                        Artifact::Gray(g) => imgio::save_gray(&path, g).map_err(|e| e.to_string())?,
                        Artifact::Binary(b) => {
                            imgio::save_binary(&path, b).map_err(|e| e.to_string())?
                        }
                        Artifact::Rgb(_) => {}
                    }
                }
            }
            match run.final_artifact() {
                Artifact::Binary(b) => imgio::save_binary(&output, &b).map_err(|e| e.to_string())?,
                Artifact::Gray(g) => imgio::save_gray(&output, &g).map_err(|e| e.to_string())?,
                Artifact::Rgb(_) => return Err("pipeline output is still RGB; nothing to save".into()),
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::DefaultConfig => {
            print!("{DEFAULT_CONFIG_TEXT}");
            Ok(ExitCode::SUCCESS)
        }

        Command::Ocr { image, engine } => {
            let eng = engine.build()?;
            let req = OcrRequest::new(OcrImage::Path(image), engine.model.clone(), engine.psm)
                .map_err(|e| e.to_string())?;
            let result = eng.recognize(&req).map_err(|e| e.to_string())?;
            print!("{}", result.text);
            Ok(ExitCode::SUCCESS)
        }

        Command::Segment { input, lexicon } => {
            let lex_text = std::fs::read_to_string(&lexicon)
                .map_err(|e| format!("{}: {e}", lexicon.display()))?;
            let lex = Lexicon::from_text(&lex_text);
            let text = read_input(input.as_deref())?;
            let segmented = epigraph::cli::segment_text(text.trim_end(), &lex);
            println!("{segmented}");
            Ok(ExitCode::SUCCESS)
        }

        Command::Eval {
            pred,
            gt,
            manifest,
            pred_dir,
            no_normalize,
            keep_spaces,
            json,
        } => {
            let opts = ScoreOptions {
                normalize: !no_normalize,
                keep_spaces,
            };
            let mut scores = Vec::new();
            if let Some(pred) = pred {
                let gt = gt.ok_or("--gt is required with --pred")?;
                let pred_text = std::fs::read_to_string(&pred)
                    .map_err(|e| format!("{}: {e}", pred.display()))?;
                let gt_text =
                    std::fs::read_to_string(&gt).map_err(|e| format!("{}: {e}", gt.display()))?;
                let id = pred
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                scores.push(
                    score_image_with(&pred_text, &gt_text, opts)
                        .map_err(|e| e.to_string())?
                        .named(id),
                );
            } else {
                let manifest_path = manifest.ok_or("either --pred or --manifest is required")?;
                let pred_dir = pred_dir.ok_or("--pred-dir is required with --manifest")?;
                let manifest = Manifest::load(&manifest_path).map_err(|e| e.to_string())?;
                for entry in &manifest.entries {
                    let id = entry
                        .image
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    let pred_path = pred_dir.join(format!("{id}.txt"));
                    let pred_text = std::fs::read_to_string(&pred_path)
                        .map_err(|e| format!("{}: {e}", pred_path.display()))?;
                    let gt_text = std::fs::read_to_string(&entry.ground_truth)
                        .map_err(|e| format!("{}: {e}", entry.ground_truth.display()))?;
                    scores.push(
                        score_image_with(&pred_text, &gt_text, opts)
                            .map_err(|e| format!("{id}: {e}"))?
                            .named(id),
                    );
                }
            }
            let report = aggregate(scores).map_err(|e| e.to_string())?;
            print!("{}", render_table(&report));
            if let Some(json_path) = json {
                let body = serde_json::to_string_pretty(&report).expect("report serializes");
                std::fs::write(&json_path, body)
                    .map_err(|e| format!("{}: {e}", json_path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Pipeline {
            manifest,
            config,
            lexicon,
            out_dir,
            jobs,
            dump_intermediates,
            no_normalize,
            keep_spaces,
            engine,
        } => {
            let manifest = Manifest::load(&manifest).map_err(|e| e.to_string())?;
            let lexicon = match lexicon {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| format!("{}: {e}", path.display()))?;
                    Some(Arc::new(Lexicon::from_text(&text)))
                }
                None => None,
            };
            let opts = BatchOptions {
                config: load_config(config.as_deref())?,
                model: engine.model.clone(),
                psm: engine.psm,
                lexicon,
                score: ScoreOptions {
                    normalize: !no_normalize,
                    keep_spaces,
                },
                jobs,
                out_dir: Some(out_dir),
                dump_intermediates,
            };
            let eng = engine.build()?;
            let report = cmd_pipeline(&manifest, &opts, eng.as_ref()).map_err(|e| e.to_string())?;
            print!("{}", report.render());
            if report.failed_count() > 0 {
                Ok(ExitCode::from(2))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }

        Command::TrainPlan {
            box_dir,
            lang,
            font_props,
            execute,
        } => {
            let plan = plan_training(&box_dir, &lang, &font_props).map_err(|e| e.to_string())?;
            print!("{}", plan.render());
            if execute {
                execute_plan(&plan, &box_dir).map_err(|e| e.to_string())?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Boxes(cmd) => {
            match cmd {
                BoxesCommand::Parse { file, image_height } => {
                    let text = std::fs::read_to_string(&file)
                        .map_err(|e| format!("{}: {e}", file.display()))?;
                    let boxes = parse_box_file(&text, image_height).map_err(|e| e.to_string())?;
                    print!("{}", write_box_file(&boxes));
                }
                BoxesCommand::Merge { file, ratio, output } => {
                    if !(0.0..=1.0).contains(&ratio) {
                        return Err(format!("--ratio must be in [0,1], got {ratio}"));
                    }
                    let text = std::fs::read_to_string(&file)
                        .map_err(|e| format!("{}: {e}", file.display()))?;
                    let boxes = parse_box_file(&text, None).map_err(|e| e.to_string())?;
                    let merged = merge_compound_boxes(&boxes, ratio);
                    write_or_print(output.as_deref(), &write_box_file(&merged))?;
                }
                BoxesCommand::Resolve { file, output } => {
                    let text = std::fs::read_to_string(&file)
                        .map_err(|e| format!("{}: {e}", file.display()))?;
                    let boxes = parse_box_file(&text, None).map_err(|e| e.to_string())?;
                    let outcome = resolve_overlaps(&boxes);
                    for dropped in &outcome.dropped {
                        eprintln!(
                            "dropped {} [{} {} {} {}]: {}",
                            dropped.record.glyph,
                            dropped.record.left,
                            dropped.record.bottom,
                            dropped.record.right,
                            dropped.record.top,
                            dropped.reason
                        );
                    }
                    write_or_print(output.as_deref(), &write_box_file(&outcome.boxes))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(message) => {
            eprintln!("epig: {message}");
            ExitCode::from(1)
        }
    }
}
