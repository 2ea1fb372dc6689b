//! The external OCR engine boundary: a trait with two implementations,
//! a subprocess wrapper around the real engine binary and an in-memory
//! mock keyed by image fingerprint. The whole test suite runs on the
//! mock.

use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::binarize::BinaryImage;
use crate::raster::{io as imgio, GrayImage};

use super::boxfile::BoxRecord;

/// Environment variable naming the engine binary (default `tesseract`).
pub const ENGINE_BIN_ENV: &str = "EPIG_ENGINE_BIN";
/// Environment variable naming the trained-model directory.
pub const MODEL_DIR_ENV: &str = "EPIG_MODEL_DIR";

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("psm {0} out of range 0..=13")]
    BadPsm(u8),
    #[error("model identifier must be non-empty")]
    EmptyModel,
    #[error("engine binary {program:?} not found")]
    EngineNotFound { program: String },
    #[error("model {model:?} not found by engine: {stderr}")]
    ModelNotFound { model: String, stderr: String },
    #[error("engine exited with {status}: {stderr}")]
    EngineFailed { status: i32, stderr: String },
    #[error("engine timed out after {0:?}")]
    Timeout(Duration),
    #[error("no mock fixture for fingerprint {fingerprint}")]
    MissingFixture { fingerprint: String },
    #[error("bad mock fixture file {path}: {reason}")]
    BadFixtureFile { path: String, reason: String },
    #[error("image error: {0}")]
    Image(#[from] imgio::ImageIoError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Image handed to the engine: a file on disk or an in-memory raster.
#[derive(Debug, Clone)]
pub enum OcrImage {
    Path(PathBuf),
    Gray(GrayImage),
    Binary(BinaryImage),
}

#[derive(Debug, Clone)]
pub struct OcrRequest {
    pub image: OcrImage,
    pub model: String,
    pub psm: u8,
}

impl OcrRequest {
    pub fn new(image: OcrImage, model: impl Into<String>, psm: u8) -> Result<Self, EngineError> {
        let model = model.into();
        if model.is_empty() {
            return Err(EngineError::EmptyModel);
        }
        if psm > 13 {
            return Err(EngineError::BadPsm(psm));
        }
        Ok(Self { image, model, psm })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcrResult {
    pub text: String,
    pub boxes: Option<Vec<BoxRecord>>,
    pub engine_diagnostics: Vec<String>,
}

/// Stable content fingerprint of an OCR input, used to key mock
/// fixtures. In-memory images hash their canonical serialization,
/// paths hash the file bytes.
pub fn fingerprint(image: &OcrImage) -> Result<String, EngineError> {
    let mut hasher = Sha256::new();
    match image {
        OcrImage::Gray(img) => {
            hasher.update(format!("G:{}:{}:", img.width(), img.height()).as_bytes());
            hasher.update(img.data());
        }
        OcrImage::Binary(img) => {
            hasher.update(format!("B:{}:{}:", img.width(), img.height()).as_bytes());
            let bytes: Vec<u8> = img.data().iter().map(|&b| b as u8).collect();
            hasher.update(&bytes);
        }
        OcrImage::Path(path) => {
            hasher.update(b"F:");
            let bytes = std::fs::read(path)?;
            hasher.update(&bytes);
        }
    }
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub trait OcrEngine: Send + Sync {
    fn recognize(&self, req: &OcrRequest) -> Result<OcrResult, EngineError>;
    /// Human-readable engine description for logs and reports.
    fn describe(&self) -> String;
}

/// Run a recognition request against an engine. The engine never sees
/// mutable state; all scratch files live in a per-call temp directory.
pub fn recognize(req: &OcrRequest, engine: &dyn OcrEngine) -> Result<OcrResult, EngineError> {
    engine.recognize(req)
}

/// Command-line arguments for one engine invocation:
/// `<image> <out-base> -l <model> --psm <n>`.
pub fn engine_args(image: &Path, out_base: &Path, model: &str, psm: u8) -> Vec<String> {
    vec![
        image.display().to_string(),
        out_base.display().to_string(),
        "-l".into(),
        model.into(),
        "--psm".into(),
        psm.to_string(),
    ]
}

/// Subprocess wrapper around the engine binary.
pub struct ExternalEngine {
    binary: PathBuf,
    model_dir: Option<PathBuf>,
    timeout: Duration,
}

impl ExternalEngine {
    pub fn new(binary: impl Into<PathBuf>, model_dir: Option<PathBuf>, timeout: Duration) -> Self {
        Self {
            binary: binary.into(),
            model_dir,
            timeout,
        }
    }

    /// Configure from `EPIG_ENGINE_BIN` / `EPIG_MODEL_DIR`.
    pub fn from_env(timeout: Duration) -> Self {
        let binary = std::env::var(ENGINE_BIN_ENV).unwrap_or_else(|_| "tesseract".into());
        let model_dir = std::env::var(MODEL_DIR_ENV).ok().map(PathBuf::from);
        Self::new(binary, model_dir, timeout)
    }

    pub fn binary(&self) -> &Path {
        &self.binary
    }

    fn run_with_timeout(&self, mut cmd: Command) -> Result<(i32, String, String), EngineError> {
        cmd.stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        let mut child = cmd.spawn().map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                EngineError::EngineNotFound {
                    program: self.binary.display().to_string(),
                }
            } else {
                EngineError::Io(e)
            }
        })?;

        // Drain the pipes on threads so a chatty engine cannot block.
        let mut stdout_pipe = child.stdout.take().expect("stdout piped");
        let mut stderr_pipe = child.stderr.take().expect("stderr piped");
        let out_handle = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stdout_pipe.read_to_string(&mut buf);
            buf
        });
        let err_handle = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr_pipe.read_to_string(&mut buf);
            buf
        });

        let deadline = Instant::now() + self.timeout;
        let status = loop {
            match child.try_wait()? {
                Some(status) => break status,
                None if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    // Reader threads are left to drain on their own: a
                    // surviving grandchild may hold the pipes open.
                    return Err(EngineError::Timeout(self.timeout));
                }
                None => std::thread::sleep(Duration::from_millis(10)),
            }
        };
        let stdout = out_handle.join().unwrap_or_default();
        let stderr = err_handle.join().unwrap_or_default();
        Ok((status.code().unwrap_or(-1), stdout, stderr))
    }
}

impl OcrEngine for ExternalEngine {
    fn recognize(&self, req: &OcrRequest) -> Result<OcrResult, EngineError> {
        let scratch = tempfile::tempdir()?;
        let image_path = match &req.image {
            OcrImage::Path(p) => p.clone(),
            OcrImage::Gray(img) => {
                let p = scratch.path().join("input.pgm");
                imgio::write_pgm(&p, img)?;
                p
            }
            OcrImage::Binary(img) => {
                let p = scratch.path().join("input.pgm");
                imgio::write_pgm(&p, &img.to_gray(0, 255))?;
                p
            }
        };
        let out_base = scratch.path().join("out");

        let mut cmd = Command::new(&self.binary);
        cmd.args(engine_args(&image_path, &out_base, &req.model, req.psm));
        if let Some(dir) = &self.model_dir {
            cmd.env("TESSDATA_PREFIX", dir);
        }
        let (code, stdout, stderr) = self.run_with_timeout(cmd)?;
        if code != 0 {
            let lower = stderr.to_lowercase();
            if lower.contains("error opening data file") || lower.contains("failed loading language")
            {
                return Err(EngineError::ModelNotFound {
                    model: req.model.clone(),
                    stderr,
                });
            }
            return Err(EngineError::EngineFailed { status: code, stderr });
        }

        let text = std::fs::read_to_string(out_base.with_extension("txt"))?;
        let mut engine_diagnostics: Vec<String> = Vec::new();
        engine_diagnostics.extend(stdout.lines().map(str::to_string));
        engine_diagnostics.extend(stderr.lines().map(str::to_string));
        Ok(OcrResult {
            text,
            boxes: None,
            engine_diagnostics,
        })
    }

    fn describe(&self) -> String {
        format!("external engine {}", self.binary.display())
    }
}

/// Parameters of one recorded mock call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockInvocation {
    pub fingerprint: String,
    pub model: String,
    pub psm: u8,
}

/// In-memory engine returning canned text per image fingerprint.
#[derive(Debug, Default)]
pub struct MockEngine {
    fixtures: HashMap<String, String>,
    invocations: Mutex<Vec<MockInvocation>>,
}

impl MockEngine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fixture(mut self, fingerprint: impl Into<String>, text: impl Into<String>) -> Self {
        self.fixtures.insert(fingerprint.into(), text.into());
        self
    }

    /// Convenience: fingerprint the image and register its reply.
    pub fn with_image_fixture(self, image: &OcrImage, text: impl Into<String>) -> Result<Self, EngineError> {
        let fp = fingerprint(image)?;
        Ok(self.with_fixture(fp, text))
    }

    /// Load fixtures from a TSV file: `<fingerprint>\t<escaped text>`
    /// per line, `#` comments allowed. Text escapes: \n \t \r \\.
    pub fn from_fixture_file(path: &Path) -> Result<Self, EngineError> {
        let body = std::fs::read_to_string(path)?;
        let mut fixtures = HashMap::new();
        for (idx, line) in body.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (fp, escaped) = line.split_once('\t').ok_or_else(|| {
                EngineError::BadFixtureFile {
                    path: path.display().to_string(),
                    reason: format!("line {}: expected <fingerprint>\\t<text>", idx + 1),
                }
            })?;
            fixtures.insert(fp.to_string(), unescape_fixture_text(escaped));
        }
        Ok(Self {
            fixtures,
            invocations: Mutex::new(Vec::new()),
        })
    }

    /// Serialize fixtures to the TSV format read by
    /// [`MockEngine::from_fixture_file`].
    pub fn fixture_file_contents(pairs: &[(String, String)]) -> String {
        let mut out = String::new();
        for (fp, text) in pairs {
            out.push_str(fp);
            out.push('\t');
            out.push_str(&escape_fixture_text(text));
            out.push('\n');
        }
        out
    }

    pub fn invocations(&self) -> Vec<MockInvocation> {
        self.invocations.lock().expect("mock lock").clone()
    }
}

pub fn escape_fixture_text(text: &str) -> String {
    text.replace('\\', "\\\\")
        .replace('\n', "\\n")
        .replace('\t', "\\t")
        .replace('\r', "\\r")
}

pub fn unescape_fixture_text(escaped: &str) -> String {
    let mut out = String::with_capacity(escaped.len());
    let mut chars = escaped.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

impl OcrEngine for MockEngine {
    fn recognize(&self, req: &OcrRequest) -> Result<OcrResult, EngineError> {
        let fp = fingerprint(&req.image)?;
        self.invocations.lock().expect("mock lock").push(MockInvocation {
            fingerprint: fp.clone(),
            model: req.model.clone(),
            psm: req.psm,
        });
        match self.fixtures.get(&fp) {
            Some(text) => Ok(OcrResult {
                text: text.clone(),
                boxes: None,
                engine_diagnostics: vec![format!("mock fixture {fp}")],
            }),
            None => Err(EngineError::MissingFixture { fingerprint: fp }),
        }
    }

    fn describe(&self) -> String {
        format!("mock engine ({} fixtures)", self.fixtures.len())
    }
}
