//! Post-processing for space-less OCR text: Tamil grapheme clustering,
//! lexicon construction, optimal word-break segmentation and
//! base-character normalization.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("empty word at position {0} in input")]
    EmptyWord(usize),
}

/// Combining-mark ranges attached to the preceding base code point:
/// Tamil dependent vowel signs, the virama (pulli) and the au length
/// mark. Table-driven so further mark ranges can be added.
const COMBINING_RANGES: &[(u32, u32)] = &[
    (0x0BBE, 0x0BCC), // dependent vowel signs
    (0x0BCD, 0x0BCD), // virama / pulli
    (0x0BD7, 0x0BD7), // au length mark
];

fn is_combining_mark(c: char) -> bool {
    let cp = c as u32;
    COMBINING_RANGES.iter().any(|&(lo, hi)| (lo..=hi).contains(&cp))
}

/// A string split into grapheme clusters: a base code point plus any
/// trailing combining marks. Joining the clusters reproduces the
/// source string exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphemeSeq {
    clusters: Vec<String>,
    degenerate_leading: bool,
}

impl GraphemeSeq {
    pub fn clusters(&self) -> &[String] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// True when the source string began with a combining mark and a
    /// baseless leading cluster had to be formed.
    pub fn degenerate_leading(&self) -> bool {
        self.degenerate_leading
    }

    pub fn slice_text(&self, span: Range<usize>) -> String {
        self.clusters[span].concat()
    }
}

impl fmt::Display for GraphemeSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clusters {
            f.write_str(c)?;
        }
        Ok(())
    }
}

/// Split text into grapheme clusters by attaching Tamil combining
/// marks to the preceding base. Non-Tamil code points are singleton
/// clusters; a string-initial mark forms a flagged degenerate cluster.
pub fn split_graphemes(text: &str) -> GraphemeSeq {
    let mut clusters: Vec<String> = Vec::new();
    let mut degenerate_leading = false;
    for c in text.chars() {
        if is_combining_mark(c) {
            if let Some(last) = clusters.last_mut() {
                last.push(c);
            } else {
                degenerate_leading = true;
                clusters.push(c.to_string());
            }
        } else {
            clusters.push(c.to_string());
        }
    }
    GraphemeSeq { clusters, degenerate_leading }
}

/// Reduce every cluster to its base code point, stripping combining
/// marks. A degenerate mark-only cluster is left unchanged.
pub fn normalize_base(text: &GraphemeSeq) -> GraphemeSeq {
    let clusters = text
        .clusters
        .iter()
        .map(|cluster| {
            let base: String = cluster.chars().filter(|&c| !is_combining_mark(c)).collect();
            if base.is_empty() {
                cluster.clone()
            } else {
                base
            }
        })
        .collect();
    GraphemeSeq {
        clusters,
        degenerate_leading: text.degenerate_leading,
    }
}

#[derive(Debug, Default)]
struct TrieNode {
    children: HashMap<String, usize>,
    terminal: bool,
}

/// Dictionary of words organized as a trie over grapheme clusters.
#[derive(Debug)]
pub struct Lexicon {
    nodes: Vec<TrieNode>,
    size: usize,
}

impl Lexicon {
    pub fn new() -> Self {
        Self {
            nodes: vec![TrieNode::default()],
            size: 0,
        }
    }

    /// Build from words; duplicates collapse, empty words are rejected.
    pub fn build<I, S>(words: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lex = Self::new();
        for (i, word) in words.into_iter().enumerate() {
            let word = word.as_ref();
            if word.is_empty() {
                return Err(LexiconError::EmptyWord(i));
            }
            lex.insert(word);
        }
        Ok(lex)
    }

    /// Parse the lexicon file format: one word per line, `#` comment
    /// lines and blank lines ignored.
    pub fn from_text(doc: &str) -> Self {
        let mut lex = Self::new();
        for line in doc.lines() {
            let word = line.trim();
            if word.is_empty() || word.starts_with('#') {
                continue;
            }
            lex.insert(word);
        }
        lex
    }

    fn insert(&mut self, word: &str) {
        let seq = split_graphemes(word);
        let mut node = 0usize;
        for cluster in seq.clusters() {
            node = match self.nodes[node].children.get(cluster) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(cluster.clone(), next);
                    next
                }
            };
        }
        if !self.nodes[node].terminal {
            self.nodes[node].terminal = true;
            self.size += 1;
        }
    }

    /// Number of distinct words.
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn contains(&self, word: &str) -> bool {
        let seq = split_graphemes(word);
        let mut node = 0usize;
        for cluster in seq.clusters() {
            match self.nodes[node].children.get(cluster) {
                Some(&next) => node = next,
                None => return false,
            }
        }
        self.nodes[node].terminal
    }

    /// End positions (exclusive) of every lexicon word starting at
    /// `start` in `clusters`.
    fn match_ends(&self, clusters: &[String], start: usize) -> Vec<usize> {
        let mut ends = Vec::new();
        let mut node = 0usize;
        for (offset, cluster) in clusters[start..].iter().enumerate() {
            match self.nodes[node].children.get(cluster) {
                Some(&next) => {
                    node = next;
                    if self.nodes[node].terminal {
                        ends.push(start + offset + 1);
                    }
                }
                None => break,
            }
        }
        ends
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceKind {
    /// Span is a lexicon word.
    Lexicon,
    /// Out-of-vocabulary span; never adjacent to another oov piece.
    Oov,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub span: Range<usize>,
    pub kind: PieceKind,
}

/// Segmentation cost, ordered lexicographically: total clusters inside
/// oov pieces first, then the number of pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SegCost {
    pub oov_clusters: usize,
    pub piece_count: usize,
}

impl SegCost {
    const ZERO: SegCost = SegCost {
        oov_clusters: 0,
        piece_count: 0,
    };

    fn plus(self, oov: usize, pieces: usize) -> SegCost {
        SegCost {
            oov_clusters: self.oov_clusters + oov,
            piece_count: self.piece_count + pieces,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub pieces: Vec<Piece>,
    pub cost: SegCost,
}

impl Segmentation {
    /// Interior piece boundaries (excluding the final position).
    pub fn boundaries(&self) -> Vec<usize> {
        self.pieces
            .iter()
            .map(|p| p.span.end)
            .take(self.pieces.len().saturating_sub(1))
            .collect()
    }
}

/// Optimal word-break: minimize (oov clusters, piece count); among
/// cost ties return the segmentation with lexicographically earliest
/// piece boundaries. Adjacent oov spans always form one piece.
pub fn word_break(text: &GraphemeSeq, lex: &Lexicon) -> Segmentation {
    let clusters = text.clusters();
    let n = clusters.len();
    if n == 0 {
        return Segmentation {
            pieces: Vec::new(),
            cost: SegCost::ZERO,
        };
    }

    // Suffix costs; state distinguishes whether an oov piece may start
    // (it may not directly after another oov piece).
    // after_any[i]: best cost of [i..n) when any piece kind may start.
    // after_oov[i]: best cost of [i..n) when the next piece must be a
    // lexicon word (or the end of input).
    let inf = SegCost {
        oov_clusters: usize::MAX,
        piece_count: usize::MAX,
    };
    let mut after_any = vec![inf; n + 1];
    let mut after_oov = vec![inf; n + 1];
    after_any[n] = SegCost::ZERO;
    after_oov[n] = SegCost::ZERO;

    let mut matches: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        matches.push(lex.match_ends(clusters, i));
    }

    for i in (0..n).rev() {
        let mut best_lex = inf;
        for &j in &matches[i] {
            if after_any[j] != inf {
                best_lex = best_lex.min(after_any[j].plus(0, 1));
            }
        }
        after_oov[i] = best_lex;

        let mut best = best_lex;
        for k in i + 1..=n {
            if after_oov[k] != inf {
                best = best.min(after_oov[k].plus(k - i, 1));
            }
        }
        after_any[i] = best;
    }

    // Greedy reconstruction: among transitions that achieve the
    // optimal suffix cost, take the smallest piece end first.
    let mut pieces = Vec::new();
    let mut pos = 0usize;
    let mut oov_allowed = true;
    while pos < n {
        let target = if oov_allowed { after_any[pos] } else { after_oov[pos] };
        let mut choice: Option<(usize, PieceKind)> = None;
        for &j in &matches[pos] {
            if after_any[j] != inf && after_any[j].plus(0, 1) == target {
                choice = Some((j, PieceKind::Lexicon));
                break; // match_ends is ascending; first hit is smallest
            }
        }
        if oov_allowed {
            for k in pos + 1..=n {
                if choice.is_some_and(|(end, _)| end <= k) {
                    break;
                }
                if after_oov[k] != inf && after_oov[k].plus(k - pos, 1) == target {
                    choice = Some((k, PieceKind::Oov));
                    break;
                }
            }
        }
        let (end, kind) = choice.expect("suffix table admits a continuation");
        pieces.push(Piece { span: pos..end, kind });
        pos = end;
        oov_allowed = kind == PieceKind::Lexicon;
    }

    let cost = SegCost {
        oov_clusters: pieces
            .iter()
            .filter(|p| p.kind == PieceKind::Oov)
            .map(|p| p.span.len())
            .sum(),
        piece_count: pieces.len(),
    };
    Segmentation { pieces, cost }
}

/// Join the pieces of a segmentation with single spaces.
pub fn render_spaced(seg: &Segmentation, text: &GraphemeSeq) -> String {
    seg.pieces
        .iter()
        .map(|p| text.slice_text(p.span.clone()))
        .collect::<Vec<_>>()
        .join(" ")
}
