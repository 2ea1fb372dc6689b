//! Skew estimation and correction: a coarse-to-fine rotation search
//! maximizing the sharpness of the row projection profile.

use rayon::prelude::*;
use thiserror::Error;

use crate::binarize::BinaryImage;
use crate::raster::{rotate, row_projection, GrayImage};

#[derive(Debug, Error, PartialEq)]
pub enum DeskewError {
    #[error("search parameters must satisfy 0 < fine <= coarse <= max (got max {max}, coarse {coarse}, fine {fine})")]
    BadParams { max: f64, coarse: f64, fine: f64 },
    #[error("binary image {bin_w}x{bin_h} does not match grayscale {img_w}x{img_h}")]
    DimensionMismatch {
        img_w: u32,
        img_h: u32,
        bin_w: u32,
        bin_h: u32,
    },
}

/// Angle search space: scan [-max_angle, +max_angle] at `coarse_step`,
/// then refine around the winner at `fine_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewSearchParams {
    max_angle: f64,
    coarse_step: f64,
    fine_step: f64,
}

impl SkewSearchParams {
    pub fn new(max_angle: f64, coarse_step: f64, fine_step: f64) -> Result<Self, DeskewError> {
        if !(fine_step > 0.0 && fine_step <= coarse_step && coarse_step <= max_angle) {
            return Err(DeskewError::BadParams {
                max: max_angle,
                coarse: coarse_step,
                fine: fine_step,
            });
        }
        Ok(Self {
            max_angle,
            coarse_step,
            fine_step,
        })
    }

    pub fn max_angle(&self) -> f64 {
        self.max_angle
    }

    pub fn coarse_step(&self) -> f64 {
        self.coarse_step
    }

    pub fn fine_step(&self) -> f64 {
        self.fine_step
    }
}

impl Default for SkewSearchParams {
    fn default() -> Self {
        Self::new(15.0, 1.0, 0.1).unwrap()
    }
}

/// Search outcome; `scores` holds every (angle, score) pair evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewEstimate {
    pub angle: f64,
    pub score: u64,
    pub scores: Vec<(f64, u64)>,
}

/// Sharpness of the row projection: the sum of squared differences of
/// adjacent row ink counts. Zero iff the projection is constant.
pub fn skew_score(img: &BinaryImage) -> u64 {
    let proj = row_projection(img);
    proj.windows(2)
        .map(|w| {
            let d = w[1] as i64 - w[0] as i64;
            (d * d) as u64
        })
        .sum()
}

/// Rotate a binary image about its center with nearest-neighbor
/// sampling; out-of-canvas samples are background.
pub fn rotate_binary(img: &BinaryImage, angle: f64) -> BinaryImage {
    let theta = angle.to_radians();
    let (cos_t, sin_t) = (theta.cos(), theta.sin());
    let (w, h) = (img.width() as i64, img.height() as i64);
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let src = img.data();
    let mut data = vec![false; (w * h) as usize];
    for y in 0..h {
        let dy = y as f64 - cy;
        // The source coordinate advances by (cos, -sin) per output x.
        let mut sx = cos_t * -cx + sin_t * dy + cx;
        let mut sy = -sin_t * -cx + cos_t * dy + cy;
        let row = &mut data[(y * w) as usize..((y + 1) * w) as usize];
        for slot in row.iter_mut() {
            let xi = sx.round() as i64;
            let yi = sy.round() as i64;
            if xi >= 0 && yi >= 0 && xi < w && yi < h {
                *slot = src[(yi * w + xi) as usize];
            }
            sx += cos_t;
            sy -= sin_t;
        }
    }
    BinaryImage::new(img.width(), img.height(), data).expect("same dimensions")
}

fn score_at(img: &BinaryImage, angle: f64) -> u64 {
    if angle == 0.0 {
        skew_score(img)
    } else {
        skew_score(&rotate_binary(img, angle))
    }
}

/// True when `(angle, score)` beats the incumbent under the tie-break:
/// higher score, then smaller |angle|, then the more negative angle.
fn better(candidate: (f64, u64), incumbent: (f64, u64)) -> bool {
    if candidate.1 != incumbent.1 {
        return candidate.1 > incumbent.1;
    }
    let (ca, ia) = (candidate.0.abs(), incumbent.0.abs());
    if ca != ia {
        return ca < ia;
    }
    candidate.0 < incumbent.0
}

/// Coarse scan over [-max_angle, +max_angle], then a fine scan within
/// one coarse step of the winner. Returns the best angle evaluated.
pub fn estimate_skew(img: &BinaryImage, p: &SkewSearchParams) -> SkewEstimate {
    let coarse_n = (p.max_angle / p.coarse_step + 1e-9).floor() as i64;
    let coarse: Vec<f64> = (-coarse_n..=coarse_n)
        .map(|i| i as f64 * p.coarse_step)
        .collect();
    let mut scores: Vec<(f64, u64)> = coarse
        .par_iter()
        .map(|&a| (a, score_at(img, a)))
        .collect();

    let coarse_best = scores
        .iter()
        .copied()
        .reduce(|best, c| if better(c, best) { c } else { best })
        .expect("coarse scan is never empty");

    let fine_n = (p.coarse_step / p.fine_step + 1e-9).floor() as i64;
    let fine: Vec<f64> = (-fine_n..=fine_n)
        .map(|i| coarse_best.0 + i as f64 * p.fine_step)
        .filter(|a| a.abs() <= p.max_angle + 1e-9 && *a != coarse_best.0)
        .collect();
    let fine_scores: Vec<(f64, u64)> = fine
        .par_iter()
        .map(|&a| (a, score_at(img, a)))
        .collect();
    scores.extend_from_slice(&fine_scores);

    let (angle, score) = scores
        .iter()
        .copied()
        .reduce(|best, c| if better(c, best) { c } else { best })
        .expect("search space is never empty");
    SkewEstimate { angle, score, scores }
}

/// Rotate the grayscale original by the estimated corrective angle,
/// filling revealed canvas with white.
pub fn deskew(
    img: &GrayImage,
    bin: &BinaryImage,
    p: &SkewSearchParams,
) -> Result<GrayImage, DeskewError> {
    if img.width() != bin.width() || img.height() != bin.height() {
        return Err(DeskewError::DimensionMismatch {
            img_w: img.width(),
            img_h: img.height(),
            bin_w: bin.width(),
            bin_h: bin.height(),
        });
    }
    let est = estimate_skew(bin, p);
    Ok(rotate(img, est.angle, 255))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::binarize::apply_threshold;
    use test_support::stripe_page;

    #[test]
    fn score_hand_case() {
        // Rows fully ink / empty alternating, width 10: H = [10,0,10,0].
        let img = BinaryImage::from_fn(10, 4, |_, y| y % 2 == 0);
        assert_eq!(skew_score(&img), 300);
    }

    #[test]
    fn score_zero_iff_projection_constant() {
        assert_eq!(skew_score(&BinaryImage::all_background(8, 8)), 0);
        assert_eq!(skew_score(&BinaryImage::from_fn(8, 8, |_, _| true)), 0);
        let one_row = BinaryImage::from_fn(8, 3, |_, y| y == 1);
        assert!(skew_score(&one_row) > 0);
    }

    #[test]
    fn straight_stripes_score_higher_than_skewed() {
        let page = stripe_page(200, 120, 6, 10);
        let bin = apply_threshold(&page, 128);
        let skewed = apply_threshold(&rotate(&page, 5.0, 255), 128);
        assert!(skew_score(&bin) > skew_score(&skewed));
    }

    #[test]
    fn params_validation() {
        assert!(SkewSearchParams::new(15.0, 1.0, 0.1).is_ok());
        assert!(SkewSearchParams::new(15.0, 0.1, 1.0).is_err());
        assert!(SkewSearchParams::new(0.5, 1.0, 0.1).is_err());
        assert!(SkewSearchParams::new(15.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn estimate_zero_for_straight_text() {
        let page = stripe_page(240, 160, 6, 10);
        let bin = apply_threshold(&page, 128);
        let p = SkewSearchParams::new(10.0, 1.0, 0.25).unwrap();
        let est = estimate_skew(&bin, &p);
        assert_eq!(est.angle, 0.0);
    }

    #[test]
    fn estimate_recovers_corrective_angle() {
        let page = stripe_page(320, 220, 6, 12);
        let skewed = rotate(&page, 3.0, 255);
        let bin = apply_threshold(&skewed, 128);
        let est = estimate_skew(&bin, &SkewSearchParams::default());
        assert!(
            est.angle >= -3.5 && est.angle <= -2.5,
            "expected corrective angle near -3.0, got {}",
            est.angle
        );
    }

    #[test]
    fn all_background_ties_break_to_zero() {
        let bin = BinaryImage::all_background(40, 30);
        let est = estimate_skew(&bin, &SkewSearchParams::default());
        assert_eq!(est.angle, 0.0);
        assert_eq!(est.score, 0);
    }

    #[test]
    fn estimate_angle_is_within_search_space_and_evaluated() {
        let page = stripe_page(200, 140, 5, 9);
        let bin = apply_threshold(&rotate(&page, -7.0, 255), 128);
        let p = SkewSearchParams::new(8.0, 2.0, 0.5).unwrap();
        let est = estimate_skew(&bin, &p);
        assert!(est.angle.abs() <= 8.0 + 1e-9);
        assert!(est
            .scores
            .iter()
            .any(|&(a, s)| a == est.angle && s == est.score));
        assert!(est.scores.iter().all(|&(_, s)| s <= est.score));
    }

    #[test]
    fn deskew_restores_projection_sharpness() {
        let page = stripe_page(320, 220, 6, 12);
        let original_score = skew_score(&apply_threshold(&page, 128));

        let skewed = rotate(&page, 3.0, 255);
        let bin = apply_threshold(&skewed, 128);
        let fixed = deskew(&skewed, &bin, &SkewSearchParams::default()).unwrap();
        let fixed_score = skew_score(&apply_threshold(&fixed, 128));
        assert!(
            fixed_score as f64 >= 0.95 * original_score as f64,
            "deskewed score {fixed_score} below 95% of original {original_score}"
        );

        // Second pass sees an almost-straight page.
        let second = estimate_skew(&apply_threshold(&fixed, 128), &SkewSearchParams::default());
        assert!(second.angle.abs() <= 0.1 + 1e-9);
    }

    #[test]
    fn deskew_rejects_dimension_mismatch() {
        let img = GrayImage::constant(10, 10, 255);
        let bin = BinaryImage::all_background(9, 10);
        assert!(matches!(
            deskew(&img, &bin, &SkewSearchParams::default()),
            Err(DeskewError::DimensionMismatch { .. })
        ));
    }
}
