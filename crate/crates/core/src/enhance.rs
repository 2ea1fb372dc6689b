//! Intensity-domain filters: median blur, box blur, histogram
//! equalization and the edge-preserving bilateral filter.
//!
//! All window filters replicate edge pixels and round half away from
//! zero, so outputs are reproducible bit for bit across platforms.

use thiserror::Error;

use crate::raster::{intensity_histogram, round_clamp_u8, GrayImage};

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("kernel size {0} must be odd and at least 3")]
    BadKernel(usize),
    #[error("bilateral kernel diameter {0} must be odd and at least 3")]
    BadDiameter(usize),
    #[error("sigma must be strictly positive (got {0})")]
    BadSigma(f64),
}

/// Bilateral filter parameters: kernel diameter and the two Gaussian
/// standard deviations (intensity domain and spatial domain).
#[derive(Debug, Clone, PartialEq)]
pub struct BilateralParams {
    d: usize,
    sigma_color: f64,
    sigma_space: f64,
}

impl BilateralParams {
    pub fn new(d: usize, sigma_color: f64, sigma_space: f64) -> Result<Self, FilterError> {
        if d < 3 || d % 2 == 0 {
            return Err(FilterError::BadDiameter(d));
        }
        if !(sigma_color > 0.0) {
            return Err(FilterError::BadSigma(sigma_color));
        }
        if !(sigma_space > 0.0) {
            return Err(FilterError::BadSigma(sigma_space));
        }
        Ok(Self { d, sigma_color, sigma_space })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sigma_color(&self) -> f64 {
        self.sigma_color
    }

    pub fn sigma_space(&self) -> f64 {
        self.sigma_space
    }
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self::new(9, 75.0, 75.0).unwrap()
    }
}

fn check_kernel(k: usize) -> Result<(), FilterError> {
    if k < 3 || k % 2 == 0 {
        return Err(FilterError::BadKernel(k));
    }
    Ok(())
}

/// Median of the k x k neighborhood, edge replication.
pub fn median_blur(img: &GrayImage, k: usize) -> Result<GrayImage, FilterError> {
    check_kernel(k)?;
    let r = (k / 2) as i64;
    let mut window = Vec::with_capacity(k * k);
    let out = GrayImage::from_fn(img.width(), img.height(), |x, y| {
        window.clear();
        for dy in -r..=r {
            for dx in -r..=r {
                window.push(img.pixel_clamped(x as i64 + dx, y as i64 + dy));
            }
        }
        window.sort_unstable();
        window[window.len() / 2]
    });
    Ok(out)
}

/// Rounded mean of the k x k neighborhood, edge replication.
/// The 2D sum is computed exactly and rounded once.
pub fn box_blur(img: &GrayImage, k: usize) -> Result<GrayImage, FilterError> {
    check_kernel(k)?;
    let r = (k / 2) as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut rowsum = vec![0u32; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0u32;
            for dx in -r..=r {
                acc += img.pixel_clamped(x + dx, y) as u32;
            }
            rowsum[(y * w + x) as usize] = acc;
        }
    }
    let area = (k * k) as f64;
    let out = GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = 0u64;
        for dy in -r..=r {
            let yy = (y as i64 + dy).clamp(0, h - 1);
            acc += rowsum[(yy * w + x as i64) as usize] as u64;
        }
        round_clamp_u8(acc as f64 / area)
    });
    Ok(out)
}

/// Global histogram equalization:
/// s(v) = round(255 * (cdf(v) - cdf_min) / (N - cdf_min)).
/// A single-intensity image is returned unchanged.
pub fn equalize_histogram(img: &GrayImage) -> GrayImage {
    let hist = intensity_histogram(img);
    let mut cdf = [0u64; 256];
    let mut acc = 0u64;
    for (v, &count) in hist.bins().iter().enumerate() {
        acc += count;
        cdf[v] = acc;
    }
    let n = hist.total();
    let cdf_min = cdf
        .iter()
        .copied()
        .find(|&c| c > 0)
        .expect("image has at least one pixel");
    if cdf_min == n {
        return img.clone();
    }
    let denom = (n - cdf_min) as f64;
    let mut lut = [0u8; 256];
    for v in 0..256 {
        let num = cdf[v].saturating_sub(cdf_min) as f64;
        lut[v] = round_clamp_u8(255.0 * num / denom);
    }
    GrayImage::new(
        img.width(),
        img.height(),
        img.data().iter().map(|&v| lut[v as usize]).collect(),
    )
    .expect("same dimensions")
}

/// Edge-preserving bilateral filter over a d x d window:
/// w(x,q) = exp(-|x-q|^2 / 2*sigma_space^2) * exp(-(I(x)-I(q))^2 / 2*sigma_color^2).
pub fn bilateral_filter(img: &GrayImage, p: &BilateralParams) -> GrayImage {
    let r = (p.d / 2) as i64;
    // Both weight factors come from lookup tables: the spatial factor
    // is fixed per offset, the color factor depends only on |dI|.
    let two_ss2 = 2.0 * p.sigma_space * p.sigma_space;
    let spatial: Vec<f64> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (-((dx * dx + dy * dy) as f64) / two_ss2).exp()))
        .collect();
    let two_sc2 = 2.0 * p.sigma_color * p.sigma_color;
    let mut color = [0.0f64; 256];
    for (diff, slot) in color.iter_mut().enumerate() {
        *slot = (-((diff * diff) as f64) / two_sc2).exp();
    }

    let (w, h) = (img.width() as i64, img.height() as i64);
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let center = img.pixel(x, y);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        let mut i = 0usize;
        for dy in -r..=r {
            let yy = (y as i64 + dy).clamp(0, h - 1);
            for dx in -r..=r {
                let xx = (x as i64 + dx).clamp(0, w - 1);
                let q = img.row(yy as u32)[xx as usize];
                let weight = spatial[i] * color[(center as i64 - q as i64).unsigned_abs() as usize];
                num += weight * q as f64;
                den += weight;
                i += 1;
            }
        }
        round_clamp_u8(num / den)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, RngExt, SeedableRng};

    /// Naive references, deliberately written as the straight double
    /// loop over the window definition.
    pub(crate) fn median_naive(img: &GrayImage, k: usize) -> GrayImage {
        let r = (k / 2) as i64;
        GrayImage::from_fn(img.width(), img.height(), |x, y| {
            let mut vals = Vec::new();
            for dy in -r..=r {
                for dx in -r..=r {
                    vals.push(img.pixel_clamped(x as i64 + dx, y as i64 + dy));
                }
            }
            vals.sort();
            vals[vals.len() / 2]
        })
    }

    pub(crate) fn box_naive(img: &GrayImage, k: usize) -> GrayImage {
        let r = (k / 2) as i64;
        GrayImage::from_fn(img.width(), img.height(), |x, y| {
            let mut sum = 0u64;
            for dy in -r..=r {
                for dx in -r..=r {
                    sum += img.pixel_clamped(x as i64 + dx, y as i64 + dy) as u64;
                }
            }
            ((sum as f64) / ((k * k) as f64)).round().clamp(0.0, 255.0) as u8
        })
    }

    pub(crate) fn bilateral_naive(img: &GrayImage, p: &BilateralParams) -> GrayImage {
        let r = (p.d() / 2) as i64;
        GrayImage::from_fn(img.width(), img.height(), |x, y| {
            let center = img.pixel(x, y) as f64;
            let mut num = 0.0;
            let mut den = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let q = img.pixel_clamped(x as i64 + dx, y as i64 + dy) as f64;
                    let ws = (-((dx * dx + dy * dy) as f64)
                        / (2.0 * p.sigma_space() * p.sigma_space()))
                    .exp();
                    let wc = (-((center - q) * (center - q))
                        / (2.0 * p.sigma_color() * p.sigma_color()))
                    .exp();
                    num += ws * wc * q;
                    den += ws * wc;
                }
            }
            (num / den).round().clamp(0.0, 255.0) as u8
        })
    }

    fn random_image(rng: &mut impl Rng, max_side: u32) -> GrayImage {
        let w = rng.random_range(1..=max_side);
        let h = rng.random_range(1..=max_side);
        GrayImage::from_fn(w, h, |_, _| rng.random_range(0..=255u32) as u8)
    }

    #[test]
    fn median_removes_lone_speck() {
        let img = GrayImage::from_fn(5, 5, |x, y| if (x, y) == (2, 2) { 0 } else { 255 });
        let out = median_blur(&img, 3).unwrap();
        assert!(out.data().iter().all(|&v| v == 255));
    }

    #[test]
    fn median_single_row_hand_case() {
        let img = GrayImage::new(5, 1, vec![10, 200, 30, 40, 5]).unwrap();
        let out = median_blur(&img, 3).unwrap();
        assert_eq!(out.data(), &[10, 30, 40, 30, 5]);
    }

    #[test]
    fn median_constant_unchanged() {
        let img = GrayImage::constant(6, 4, 99);
        assert_eq!(median_blur(&img, 5).unwrap(), img);
    }

    #[test]
    fn kernel_validation() {
        let img = GrayImage::constant(4, 4, 0);
        assert_eq!(median_blur(&img, 4), Err(FilterError::BadKernel(4)));
        assert_eq!(box_blur(&img, 1), Err(FilterError::BadKernel(1)));
        assert!(BilateralParams::new(8, 75.0, 75.0).is_err());
        assert!(BilateralParams::new(9, 0.0, 75.0).is_err());
        assert!(BilateralParams::new(9, 75.0, -1.0).is_err());
    }

    #[test]
    fn box_blur_center_spike() {
        let img = GrayImage::from_fn(3, 3, |x, y| if (x, y) == (1, 1) { 255 } else { 0 });
        let out = box_blur(&img, 3).unwrap();
        assert_eq!(out.pixel(1, 1), 28); // 255 / 9 rounded
    }

    #[test]
    fn box_and_median_match_naive_references() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let img = random_image(&mut rng, 24);
            for k in [3usize, 5, 7] {
                assert_eq!(box_blur(&img, k).unwrap(), box_naive(&img, k));
                assert_eq!(median_blur(&img, k).unwrap(), median_naive(&img, k));
            }
        }
    }

    #[test]
    fn equalize_examples() {
        let flat = GrayImage::constant(4, 4, 123);
        assert_eq!(equalize_histogram(&flat), flat);

        let two = GrayImage::from_fn(4, 2, |x, _| if x < 2 { 0 } else { 255 });
        let out = equalize_histogram(&two);
        assert_eq!(out.pixel(0, 0), 0);
        assert_eq!(out.pixel(3, 0), 255);
    }

    #[test]
    fn bilateral_preserves_hard_edge_with_small_sigma_color() {
        let img = GrayImage::from_fn(12, 6, |x, _| if x < 6 { 0 } else { 255 });
        let p = BilateralParams::new(5, 10.0, 5.0).unwrap();
        let out = bilateral_filter(&img, &p);
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((*a as i32 - *b as i32).abs() < 2);
        }
    }

    #[test]
    fn bilateral_degenerates_to_gaussian_for_huge_sigma_color() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let img = random_image(&mut rng, 20);
        let p = BilateralParams::new(7, 1e6, 2.0).unwrap();
        let out = bilateral_filter(&img, &p);
        // Pure spatial Gaussian over the same window.
        let r = 3i64;
        let reference = GrayImage::from_fn(img.width(), img.height(), |x, y| {
            let mut num = 0.0;
            let mut den = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let wgt = (-((dx * dx + dy * dy) as f64) / (2.0 * 4.0)).exp();
                    num += wgt * img.pixel_clamped(x as i64 + dx, y as i64 + dy) as f64;
                    den += wgt;
                }
            }
            (num / den).round() as u8
        });
        for (a, b) in out.data().iter().zip(reference.data()) {
            assert!((*a as i32 - *b as i32).abs() <= 1);
        }
    }

    #[test]
    fn bilateral_matches_naive_within_one_level() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let img = random_image(&mut rng, 20);
            for d in [3usize, 5, 9] {
                let p = BilateralParams::new(d, 75.0, 75.0).unwrap();
                let got = bilateral_filter(&img, &p);
                let want = bilateral_naive(&img, &p);
                for (a, b) in got.data().iter().zip(want.data()) {
                    assert!((*a as i32 - *b as i32).abs() <= 1);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn equalize_is_order_preserving(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let img = random_image(&mut rng, 16);
            let out = equalize_histogram(&img);
            // Collect the implied value mapping and check monotonicity.
            let mut pairs: Vec<(u8, u8)> = img.data().iter().copied()
                .zip(out.data().iter().copied()).collect();
            pairs.sort();
            for win in pairs.windows(2) {
                prop_assert!(win[0].1 <= win[1].1);
            }
        }

        #[test]
        fn filters_keep_dimensions(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let img = random_image(&mut rng, 12);
            let dims = (img.width(), img.height());
            let m = median_blur(&img, 3).unwrap();
            let b = box_blur(&img, 3).unwrap();
            let e = equalize_histogram(&img);
            let bl = bilateral_filter(&img, &BilateralParams::default());
            for out in [m, b, e, bl] {
                prop_assert_eq!((out.width(), out.height()), dims);
            }
        }

        #[test]
        fn constant_images_are_filter_fixed_points(v in any::<u8>()) {
            let img = GrayImage::constant(7, 5, v);
            prop_assert_eq!(median_blur(&img, 3).unwrap(), img.clone());
            prop_assert_eq!(box_blur(&img, 5).unwrap(), img.clone());
            prop_assert_eq!(equalize_histogram(&img), img.clone());
            prop_assert_eq!(bilateral_filter(&img, &BilateralParams::default()), img);
        }
    }
}
