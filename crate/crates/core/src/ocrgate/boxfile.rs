//! Box-file parsing, writing and rectification.
//!
//! Format: one record per line, `<glyph> <left> <bottom> <right> <top>
//! <page>`, UTF-8, coordinates in pixels with the origin at the image
//! bottom-left (the external engine's convention, kept as-is in the
//! data model).

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoxFileError {
    #[error("line {line}: expected 6 space-separated fields, got {got}")]
    WrongFieldCount { line: usize, got: usize },
    #[error("line {line}: field {field} is not an integer: {value:?}")]
    BadInteger {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: left {left} must be < right {right}")]
    LeftNotBeforeRight { line: usize, left: i32, right: i32 },
    #[error("line {line}: bottom {bottom} must be < top {top}")]
    BottomNotBelowTop { line: usize, bottom: i32, top: i32 },
    #[error("line {line}: box exceeds image height {height} (bottom {bottom}, top {top})")]
    OutOfBounds {
        line: usize,
        height: u32,
        bottom: i32,
        top: i32,
    },
    #[error("invalid box geometry: left {left} right {right} bottom {bottom} top {top}")]
    BadGeometry {
        left: i32,
        right: i32,
        bottom: i32,
        top: i32,
    },
}

/// One training box: a glyph and its rectangle, bottom-left origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxRecord {
    pub glyph: String,
    pub left: i32,
    pub bottom: i32,
    pub right: i32,
    pub top: i32,
    pub page: u32,
}

impl BoxRecord {
    pub fn new(
        glyph: impl Into<String>,
        left: i32,
        bottom: i32,
        right: i32,
        top: i32,
        page: u32,
    ) -> Result<Self, BoxFileError> {
        if left >= right || bottom >= top {
            return Err(BoxFileError::BadGeometry {
                left,
                right,
                bottom,
                top,
            });
        }
        Ok(Self {
            glyph: glyph.into(),
            left,
            bottom,
            right,
            top,
            page,
        })
    }

    pub fn width(&self) -> i32 {
        self.right - self.left
    }

    pub fn height(&self) -> i32 {
        self.top - self.bottom
    }

    /// Horizontal overlap length with another box (0 when disjoint).
    fn h_overlap(&self, other: &BoxRecord) -> i32 {
        (self.right.min(other.right) - self.left.max(other.left)).max(0)
    }
}

/// Parse a box document. When `image_height` is given, records must
/// fit vertically within the image. Malformed lines are reported with
/// their 1-based line number.
pub fn parse_box_file(
    text: &str,
    image_height: Option<u32>,
) -> Result<Vec<BoxRecord>, BoxFileError> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(BoxFileError::WrongFieldCount {
                line,
                got: fields.len(),
            });
        }
        let int = |field: &'static str, value: &str| -> Result<i32, BoxFileError> {
            value.parse().map_err(|_| BoxFileError::BadInteger {
                line,
                field,
                value: value.to_string(),
            })
        };
        let left = int("left", fields[1])?;
        let bottom = int("bottom", fields[2])?;
        let right = int("right", fields[3])?;
        let top = int("top", fields[4])?;
        let page = int("page", fields[5])?.try_into().map_err(|_| {
            BoxFileError::BadInteger {
                line,
                field: "page",
                value: fields[5].to_string(),
            }
        })?;
        if left >= right {
            return Err(BoxFileError::LeftNotBeforeRight { line, left, right });
        }
        if bottom >= top {
            return Err(BoxFileError::BottomNotBelowTop { line, bottom, top });
        }
        if let Some(height) = image_height {
            if bottom < 0 || top > height as i32 {
                return Err(BoxFileError::OutOfBounds {
                    line,
                    height,
                    bottom,
                    top,
                });
            }
        }
        records.push(BoxRecord {
            glyph: fields[0].to_string(),
            left,
            bottom,
            right,
            top,
            page,
        });
    }
    Ok(records)
}

/// Canonical form: one record per line, single spaces, trailing newline.
pub fn write_box_file(boxes: &[BoxRecord]) -> String {
    let mut out = String::new();
    for b in boxes {
        out.push_str(&format!(
            "{} {} {} {} {} {}\n",
            b.glyph, b.left, b.bottom, b.right, b.top, b.page
        ));
    }
    out
}

/// Merge boxes of compound letters: any two boxes on the same page
/// whose horizontal overlap is at least `overlap_ratio` times the
/// narrower width (and nonzero) belong together; merging is applied
/// transitively. Merged glyphs concatenate in left-to-right order and
/// the rectangle is the union.
pub fn merge_compound_boxes(boxes: &[BoxRecord], overlap_ratio: f64) -> Vec<BoxRecord> {
    let n = boxes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            if boxes[i].page != boxes[j].page {
                continue;
            }
            let overlap = boxes[i].h_overlap(&boxes[j]);
            let min_width = boxes[i].width().min(boxes[j].width());
            if overlap > 0 && overlap as f64 >= overlap_ratio * min_width as f64 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let root = find(&mut parent, i);
        groups[root].push(i);
    }
    let mut merged: Vec<BoxRecord> = Vec::new();
    for mut group in groups.into_iter().filter(|g| !g.is_empty()) {
        group.sort_by_key(|&i| boxes[i].left); // stable: ties keep input order
        let glyph: String = group.iter().map(|&i| boxes[i].glyph.as_str()).collect();
        let first = &boxes[group[0]];
        let mut rect = (first.left, first.bottom, first.right, first.top);
        for &i in &group[1..] {
            rect.0 = rect.0.min(boxes[i].left);
            rect.1 = rect.1.min(boxes[i].bottom);
            rect.2 = rect.2.max(boxes[i].right);
            rect.3 = rect.3.max(boxes[i].top);
        }
        merged.push(BoxRecord {
            glyph,
            left: rect.0,
            bottom: rect.1,
            right: rect.2,
            top: rect.3,
            page: first.page,
        });
    }
    merged.sort_by_key(|b| (b.page, b.left, b.bottom));
    merged
}

/// Why a box was discarded during overlap resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedBox {
    pub record: BoxRecord,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolveOutcome {
    pub boxes: Vec<BoxRecord>,
    pub dropped: Vec<DroppedBox>,
}

/// Make boxes pairwise horizontally disjoint: each overlapping pair
/// shrinks symmetrically to the midline of the overlap span. A box
/// nested inside another is dropped, as is any box that collapses to
/// zero width.
pub fn resolve_overlaps(boxes: &[BoxRecord]) -> ResolveOutcome {
    let mut work: Vec<BoxRecord> = boxes.to_vec();
    let mut dropped = Vec::new();

    loop {
        work.sort_by_key(|b| (b.page, b.left, b.bottom));
        let mut changed = false;
        let mut i = 0;
        while i + 1 < work.len() {
            let (a, b) = (&work[i], &work[i + 1]);
            if a.page != b.page || a.right <= b.left {
                i += 1;
                continue;
            }
            changed = true;
            // Sorted by left, so a.left <= b.left.
            if b.right <= a.right {
                let gone = work.remove(i + 1);
                dropped.push(DroppedBox {
                    reason: format!("nested inside box for {:?}", work[i].glyph),
                    record: gone,
                });
                continue;
            }
            if a.left == b.left {
                // a spans a prefix of b: a is the nested one.
                let gone = work.remove(i);
                dropped.push(DroppedBox {
                    reason: format!("nested inside box for {:?}", work[i].glyph),
                    record: gone,
                });
                continue;
            }
            let midline = (b.left + a.right.min(b.right)) / 2;
            work[i].right = midline;
            work[i + 1].left = midline;
            if work[i].width() <= 0 {
                let gone = work.remove(i);
                dropped.push(DroppedBox {
                    reason: "collapsed to zero width".into(),
                    record: gone,
                });
                continue;
            }
            if work[i + 1].width() <= 0 {
                let gone = work.remove(i + 1);
                dropped.push(DroppedBox {
                    reason: "collapsed to zero width".into(),
                    record: gone,
                });
                continue;
            }
            i += 1;
        }
        if !changed {
            break;
        }
    }

    ResolveOutcome { boxes: work, dropped }
}
