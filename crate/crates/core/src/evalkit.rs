//! Evaluation harness: per-image character accuracy over grapheme
//! clusters and gt-length-weighted aggregation across a test set.

use serde::Serialize;
use thiserror::Error;

use crate::segment::{normalize_base, split_graphemes, GraphemeSeq};

/// Stated in every report so numbers are compared like for like:
/// negative raw accuracies clamp to zero.
pub const METRIC_NOTE: &str =
    "accuracy = max(0, 1 - distance/gt_len); distance = Levenshtein over grapheme clusters";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("ground truth is empty after preprocessing")]
    EmptyGroundTruth,
    #[error("cannot aggregate an empty score list")]
    NoScores,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageScore {
    pub image_id: String,
    pub gt_len: usize,
    pub distance: usize,
    pub accuracy: f64,
}

impl ImageScore {
    pub fn named(mut self, id: impl Into<String>) -> Self {
        self.image_id = id.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub scores: Vec<ImageScore>,
    pub weighted_accuracy: f64,
    pub total_graphemes: usize,
    pub metric: String,
}

/// Minimal insertions + deletions + substitutions over clusters.
pub fn edit_distance(a: &GraphemeSeq, b: &GraphemeSeq) -> usize {
    let a = a.clusters();
    let b = b.clusters();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreOptions {
    /// Reduce both sides to base characters before comparing.
    pub normalize: bool,
    /// Keep whitespace instead of stripping it before clustering.
    pub keep_spaces: bool,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            normalize: true,
            keep_spaces: false,
        }
    }
}

fn preprocess(text: &str, opts: ScoreOptions) -> GraphemeSeq {
    let cleaned: String = if opts.keep_spaces {
        text.to_string()
    } else {
        text.chars().filter(|c| !c.is_whitespace()).collect()
    };
    let seq = split_graphemes(&cleaned);
    if opts.normalize {
        normalize_base(&seq)
    } else {
        seq
    }
}

/// Score a prediction against ground truth. Whitespace is stripped
/// from both sides; `normalize` additionally reduces clusters to base
/// characters. The returned score carries an empty image id.
pub fn score_image(pred: &str, gt: &str, normalize: bool) -> Result<ImageScore, EvalError> {
    score_image_with(
        pred,
        gt,
        ScoreOptions {
            normalize,
            ..ScoreOptions::default()
        },
    )
}

pub fn score_image_with(pred: &str, gt: &str, opts: ScoreOptions) -> Result<ImageScore, EvalError> {
    let gt_seq = preprocess(gt, opts);
    if gt_seq.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let pred_seq = preprocess(pred, opts);
    let distance = edit_distance(&pred_seq, &gt_seq);
    let gt_len = gt_seq.len();
    let accuracy = (1.0 - distance as f64 / gt_len as f64).max(0.0);
    Ok(ImageScore {
        image_id: String::new(),
        gt_len,
        distance,
        accuracy,
    })
}

/// Weighted average accuracy, weights = ground-truth grapheme counts.
pub fn aggregate(scores: Vec<ImageScore>) -> Result<EvalReport, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::NoScores);
    }
    let total_graphemes: usize = scores.iter().map(|s| s.gt_len).sum();
    let weighted_sum: f64 = scores.iter().map(|s| s.gt_len as f64 * s.accuracy).sum();
    let weighted_accuracy = weighted_sum / total_graphemes as f64;
    Ok(EvalReport {
        scores,
        weighted_accuracy,
        total_graphemes,
        metric: METRIC_NOTE.to_string(),
    })
}

/// Line-oriented report: one row per image, then the weighted summary.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::from("image_id\tgt_len\tdistance\taccuracy\n");
    for s in &report.scores {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\n",
            s.image_id, s.gt_len, s.distance, s.accuracy
        ));
    }
    out.push_str(&format!(
        "weighted\t{}\t-\t{:.6}\n",
        report.total_graphemes, report.weighted_accuracy
    ));
    out.push_str(&format!("# {}\n", report.metric));
    out
}
