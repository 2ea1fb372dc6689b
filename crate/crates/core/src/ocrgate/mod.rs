//! Abstraction over the external OCR engine: recognition with model
//! and page-segmentation control, box-file tooling, and the training
//! invocation planner.

mod boxfile;
mod engine;
mod training;

pub use boxfile::{
    merge_compound_boxes, parse_box_file, resolve_overlaps, write_box_file, BoxFileError,
    BoxRecord, DroppedBox, ResolveOutcome,
};
pub use engine::{
    engine_args, escape_fixture_text, fingerprint, recognize, unescape_fixture_text, EngineError,
    ExternalEngine, MockEngine, MockInvocation, OcrEngine, OcrImage, OcrRequest, OcrResult,
    DEFAULT_TIMEOUT, ENGINE_BIN_ENV, MODEL_DIR_ENV,
};
pub use training::{execute_plan, plan_training, PlanError, PlanStep, TrainingPlan};
