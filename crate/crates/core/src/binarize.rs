//! Thresholding (global Otsu and adaptive), morphological erosion,
//! small-component removal and border elimination.
//!
//! Binary images use ink = `true`. Inscription photos put ink darker
//! than background, so thresholding maps pixel <= t to ink.

use thiserror::Error;

use crate::raster::{GrayImage, IntensityHistogram};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BinarizeError {
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("kernel size {0} must be odd and at least 3")]
    BadKernel(usize),
    #[error("window size {0} must be odd and at least 3")]
    BadWindow(usize),
}

/// Two-level image, row-major. `true` marks ink (foreground).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Result<Self, crate::raster::RasterError> {
        if width == 0 || height == 0 {
            return Err(crate::raster::RasterError::EmptyDimensions { width, height });
        }
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(crate::raster::RasterError::BadDataLength {
                width,
                height,
                expected,
                got: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn all_background(width: u32, height: u32) -> Self {
        Self::from_fn(width, height, |_, _| false)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn ink(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn row(&self, y: u32) -> &[bool] {
        let w = self.width as usize;
        &self.data[y as usize * w..(y as usize + 1) * w]
    }

    pub fn ink_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Render to grayscale with the given ink and background intensities.
    pub fn to_gray(&self, ink: u8, background: u8) -> GrayImage {
        let data = self.data.iter().map(|&b| if b { ink } else { background }).collect();
        GrayImage::new(self.width, self.height, data).expect("same dimensions")
    }

    /// Encode with the convention 1 = background, 0 = ink.
    pub fn paper_encoding(&self) -> Vec<u8> {
        self.data.iter().map(|&b| if b { 0 } else { 1 }).collect()
    }

    /// Decode bytes using the convention 1 = background, 0 = ink.
    pub fn from_paper_encoding(
        width: u32,
        height: u32,
        data: &[u8],
    ) -> Result<Self, crate::raster::RasterError> {
        Self::new(width, height, data.iter().map(|&b| b == 0).collect())
    }
}

/// Between-class statistics at the selected Otsu threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct OtsuStats {
    pub threshold: u8,
    pub sigma_b2: f64,
    pub w0: f64,
    pub w1: f64,
    pub mu0: f64,
    pub mu1: f64,
}

/// Adaptive threshold parameters; the per-pixel threshold is the
/// weighted neighborhood mean minus `constant_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveParams {
    window: usize,
    constant_c: f64,
    weighting: Weighting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Mean,
    Gaussian,
}

impl AdaptiveParams {
    pub fn new(window: usize, constant_c: f64, weighting: Weighting) -> Result<Self, BinarizeError> {
        if window < 3 || window % 2 == 0 {
            return Err(BinarizeError::BadWindow(window));
        }
        Ok(Self { window, constant_c, weighting })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn constant_c(&self) -> f64 {
        self.constant_c
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self::new(31, 10.0, Weighting::Gaussian).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Select the threshold maximizing the between-class variance
/// w0(t) * w1(t) * (mu0(t) - mu1(t))^2, class 0 being intensities <= t.
/// Ties break toward the smallest threshold.
pub fn otsu_threshold(hist: &IntensityHistogram) -> Result<OtsuStats, BinarizeError> {
    let total = hist.total();
    if total == 0 {
        return Err(BinarizeError::EmptyHistogram);
    }
    let bins = hist.bins();
    let nonzero: Vec<usize> = (0..256).filter(|&v| bins[v] > 0).collect();
    if nonzero.len() == 1 {
        let v = nonzero[0];
        return Ok(OtsuStats {
            threshold: v as u8,
            sigma_b2: 0.0,
            w0: 1.0,
            w1: 0.0,
            mu0: v as f64,
            mu1: 0.0,
        });
    }

    let n = total as f64;
    let weighted_total: u64 = bins.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let mut best: Option<OtsuStats> = None;
    let mut count0: u64 = 0;
    let mut sum0: u64 = 0;
    for t in 0..256usize {
        count0 += bins[t];
        sum0 += t as u64 * bins[t];
        let count1 = total - count0;
        let w0 = count0 as f64 / n;
        let w1 = count1 as f64 / n;
        let mu0 = if count0 > 0 { sum0 as f64 / count0 as f64 } else { 0.0 };
        let mu1 = if count1 > 0 {
            (weighted_total - sum0) as f64 / count1 as f64
        } else {
            0.0
        };
        let sigma_b2 = if count0 == 0 || count1 == 0 {
            0.0
        } else {
            w0 * w1 * (mu0 - mu1) * (mu0 - mu1)
        };
        if best.as_ref().map_or(true, |b| sigma_b2 > b.sigma_b2) {
            best = Some(OtsuStats {
                threshold: t as u8,
                sigma_b2,
                w0,
                w1,
                mu0,
                mu1,
            });
        }
    }
    Ok(best.expect("256 candidates scanned"))
}

/// pixel > t -> background, pixel <= t -> ink.
pub fn apply_threshold(img: &GrayImage, t: u8) -> BinaryImage {
    let data = img.data().iter().map(|&v| v <= t).collect();
    BinaryImage::new(img.width(), img.height(), data).expect("same dimensions")
}

/// Adaptive thresholding: T(x) = weighted window mean - constant_c,
/// pixel > T(x) -> background, else ink. Edge replication.
pub fn adaptive_threshold(img: &GrayImage, p: &AdaptiveParams) -> BinaryImage {
    let means = match p.weighting {
        Weighting::Mean => window_means(img, p.window),
        Weighting::Gaussian => gaussian_means(img, p.window),
    };
    let data = img
        .data()
        .iter()
        .zip(means)
        .map(|(&v, mean)| !(v as f64 > mean - p.constant_c))
        .collect();
    BinaryImage::new(img.width(), img.height(), data).expect("same dimensions")
}

/// Separable box mean with edge replication; exact (integer sums).
fn window_means(img: &GrayImage, window: usize) -> Vec<f64> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let r = (window / 2) as i64;
    let mut rowsum = vec![0u64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0u64;
            for dx in -r..=r {
                acc += img.pixel_clamped(x + dx, y) as u64;
            }
            rowsum[(y * w + x) as usize] = acc;
        }
    }
    let area = (window * window) as f64;
    let mut out = vec![0.0f64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0u64;
            for dy in -r..=r {
                let yy = (y + dy).clamp(0, h - 1);
                acc += rowsum[(yy * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc as f64 / area;
        }
    }
    out
}

/// Gaussian kernel sigma for a given window, matching the common
/// document-binarization convention.
fn gaussian_sigma(window: usize) -> f64 {
    0.3 * ((window as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

pub(crate) fn gaussian_kernel(window: usize) -> Vec<f64> {
    let sigma = gaussian_sigma(window);
    let r = (window / 2) as i64;
    let mut k: Vec<f64> = (-r..=r)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian-weighted mean with edge replication.
fn gaussian_means(img: &GrayImage, window: usize) -> Vec<f64> {
    let kernel = gaussian_kernel(window);
    let (w, h) = (img.width() as i64, img.height() as i64);
    let r = (window / 2) as i64;
    let mut horiz = vec![0.0f64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, &kv) in kernel.iter().enumerate() {
                acc += kv * img.pixel_clamped(x + i as i64 - r, y) as f64;
            }
            horiz[(y * w + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0f64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, &kv) in kernel.iter().enumerate() {
                let yy = (y + i as i64 - r).clamp(0, h - 1);
                acc += kv * horiz[(yy * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    out
}

/// Morphological erosion of the ink set: a pixel stays ink only when
/// its whole k x k neighborhood is ink. Outside the canvas counts as
/// background, so a border band of k/2 is always cleared.
pub fn erode(img: &BinaryImage, k: usize) -> Result<BinaryImage, BinarizeError> {
    if k < 3 || k % 2 == 0 {
        return Err(BinarizeError::BadKernel(k));
    }
    let r = (k / 2) as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let out = BinaryImage::from_fn(img.width(), img.height(), |x, y| {
        let (x, y) = (x as i64, y as i64);
        if !img.data[(y * w + x) as usize] {
            return false;
        }
        for dy in -r..=r {
            for dx in -r..=r {
                let (xx, yy) = (x + dx, y + dy);
                if xx < 0 || yy < 0 || xx >= w || yy >= h || !img.data[(yy * w + xx) as usize] {
                    return false;
                }
            }
        }
        true
    });
    Ok(out)
}

fn neighbor_offsets(connectivity: Connectivity) -> &'static [(i64, i64)] {
    match connectivity {
        Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        Connectivity::Eight => &[
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ],
    }
}

/// Flood-fill component labels; 0 = background, components start at 1.
pub(crate) fn label_components(img: &BinaryImage, connectivity: Connectivity) -> (Vec<u32>, u32) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut labels = vec![0u32; (w * h) as usize];
    let mut next = 0u32;
    let offsets = neighbor_offsets(connectivity);
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if !img.data[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i as i64) % w, (i as i64) / w);
            for &(dx, dy) in offsets {
                let (xx, yy) = (x + dx, y + dy);
                if xx < 0 || yy < 0 || xx >= w || yy >= h {
                    continue;
                }
                let j = (yy * w + xx) as usize;
                if img.data[j] && labels[j] == 0 {
                    labels[j] = next;
                    stack.push(j);
                }
            }
        }
    }
    (labels, next)
}

/// Remove every ink component with area below `min_area`.
pub fn remove_small_components(
    img: &BinaryImage,
    min_area: usize,
    connectivity: Connectivity,
) -> BinaryImage {
    let (labels, count) = label_components(img, connectivity);
    let mut areas = vec![0usize; count as usize + 1];
    for &l in &labels {
        areas[l as usize] += 1;
    }
    let data = img
        .data
        .iter()
        .zip(&labels)
        .map(|(&ink, &l)| ink && areas[l as usize] >= min_area)
        .collect();
    BinaryImage::new(img.width, img.height, data).expect("same dimensions")
}

/// Remove every ink component that has a pixel within `band` pixels of
/// the border (distance 0 = the border rows/columns themselves).
pub fn eliminate_border(img: &BinaryImage, band: u32, connectivity: Connectivity) -> BinaryImage {
    let (labels, count) = label_components(img, connectivity);
    let mut doomed = vec![false; count as usize + 1];
    let (w, h) = (img.width as i64, img.height as i64);
    for y in 0..h {
        for x in 0..w {
            let dist = x.min(y).min(w - 1 - x).min(h - 1 - y);
            if dist <= band as i64 {
                let l = labels[(y * w + x) as usize];
                if l != 0 {
                    doomed[l as usize] = true;
                }
            }
        }
    }
    let data = img
        .data
        .iter()
        .zip(&labels)
        .map(|(&ink, &l)| ink && !doomed[l as usize])
        .collect();
    BinaryImage::new(img.width, img.height, data).expect("same dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{GrayImage, IntensityHistogram};
    use proptest::prelude::*;

    /// Brute-force reference: recompute sigma_b^2 from the definition at
    /// every candidate threshold, first-hit argmax.
    pub(crate) fn otsu_brute_force(bins: &[u64; 256]) -> (u8, f64) {
        let total: u64 = bins.iter().sum();
        let n = total as f64;
        let mut best_t = 0u8;
        let mut best_sigma = -1.0f64;
        for t in 0..256usize {
            let mut count0: u64 = 0;
            let mut sum0: u64 = 0;
            for v in 0..=t {
                count0 += bins[v];
                sum0 += v as u64 * bins[v];
            }
            let mut count1: u64 = 0;
            let mut sum1: u64 = 0;
            for v in t + 1..256 {
                count1 += bins[v];
                sum1 += v as u64 * bins[v];
            }
            let w0 = count0 as f64 / n;
            let w1 = count1 as f64 / n;
            let mu0 = if count0 > 0 { sum0 as f64 / count0 as f64 } else { 0.0 };
            let mu1 = if count1 > 0 { sum1 as f64 / count1 as f64 } else { 0.0 };
            let sigma = if count0 == 0 || count1 == 0 {
                0.0
            } else {
                w0 * w1 * (mu0 - mu1) * (mu0 - mu1)
            };
            if sigma > best_sigma {
                best_sigma = sigma;
                best_t = t as u8;
            }
        }
        (best_t, best_sigma)
    }

    fn hist_from(bins: [u64; 256]) -> IntensityHistogram {
        IntensityHistogram::from_counts(bins)
    }

    #[test]
    fn otsu_two_spike_histogram() {
        let mut bins = [0u64; 256];
        bins[1] = 10;
        bins[250] = 10;
        let stats = otsu_threshold(&hist_from(bins)).unwrap();
        assert_eq!(stats.threshold, 1);
        assert!((stats.sigma_b2 - 0.25 * 249.0 * 249.0).abs() < 1e-9);
        assert!((stats.w0 + stats.w1 - 1.0).abs() < 1e-9);
        assert_eq!(stats.mu0, 1.0);
        assert_eq!(stats.mu1, 250.0);
    }

    #[test]
    fn otsu_single_intensity_degenerates() {
        let mut bins = [0u64; 256];
        bins[42] = 77;
        let stats = otsu_threshold(&hist_from(bins)).unwrap();
        assert_eq!(stats.threshold, 42);
        assert_eq!(stats.sigma_b2, 0.0);
    }

    #[test]
    fn otsu_rejects_empty() {
        assert_eq!(
            otsu_threshold(&hist_from([0; 256])),
            Err(BinarizeError::EmptyHistogram)
        );
    }

    #[test]
    fn otsu_matches_brute_force_on_random_histograms() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let mut bins = [0u64; 256];
            for b in bins.iter_mut() {
                *b = rng.random_range(0..50);
            }
            if bins.iter().filter(|&&c| c > 0).count() < 2 {
                continue;
            }
            let stats = otsu_threshold(&hist_from(bins)).unwrap();
            let (bt, bs) = otsu_brute_force(&bins);
            assert_eq!(stats.threshold, bt);
            assert_eq!(stats.sigma_b2, bs);
        }
    }

    #[test]
    fn threshold_rule_examples() {
        let img = GrayImage::new(2, 1, vec![100, 150]).unwrap();
        let bin = apply_threshold(&img, 128);
        assert_eq!(bin.data(), &[true, false]);
        let all255 = GrayImage::constant(3, 3, 255);
        assert_eq!(apply_threshold(&all255, 128).ink_count(), 0);
        let all0 = GrayImage::constant(3, 3, 0);
        assert_eq!(apply_threshold(&all0, 128).ink_count(), 9);
        assert_eq!(apply_threshold(&all255, 255).ink_count(), 9);
    }

    #[test]
    fn threshold_ink_count_monotone_in_t() {
        let img = GrayImage::from_fn(16, 16, |x, y| (x * 16 + y) as u8);
        let mut last = 0;
        for t in 0..=255u32 {
            let count = apply_threshold(&img, t as u8).ink_count();
            assert!(count >= last);
            last = count;
        }
    }

    #[test]
    fn adaptive_constant_image_sign_of_c() {
        let img = GrayImage::constant(8, 8, 90);
        let bright = adaptive_threshold(
            &img,
            &AdaptiveParams::new(3, 10.0, Weighting::Mean).unwrap(),
        );
        assert_eq!(bright.ink_count(), 0);
        let dark = adaptive_threshold(
            &img,
            &AdaptiveParams::new(3, -10.0, Weighting::Mean).unwrap(),
        );
        assert_eq!(dark.ink_count(), 64);
        // Gaussian weighting behaves the same on constant input.
        let g = adaptive_threshold(
            &img,
            &AdaptiveParams::new(5, 10.0, Weighting::Gaussian).unwrap(),
        );
        assert_eq!(g.ink_count(), 0);
    }

    #[test]
    fn adaptive_rejects_bad_window() {
        assert!(AdaptiveParams::new(4, 0.0, Weighting::Mean).is_err());
        assert!(AdaptiveParams::new(1, 0.0, Weighting::Gaussian).is_err());
    }

    #[test]
    fn adaptive_separates_glyph_from_gradient() {
        // Dark glyph on a bright left-to-right gradient; a global Otsu
        // threshold cannot keep the dark end of the background out, the
        // local mean can.
        let glyph = |x: u32, y: u32| (8..12).contains(&x) && (8..12).contains(&y);
        let img = GrayImage::from_fn(48, 20, |x, y| {
            if glyph(x, y) {
                20
            } else {
                (120 + 2 * x) as u8
            }
        });
        let p = AdaptiveParams::new(17, 12.0, Weighting::Gaussian).unwrap();
        let bin = adaptive_threshold(&img, &p);
        for y in 0..20 {
            for x in 0..48 {
                if glyph(x, y) {
                    assert!(bin.ink(x, y), "glyph pixel ({x},{y}) lost");
                } else if !glyph(x.saturating_sub(3), y)
                    && !glyph(x + 3, y)
                    && !glyph(x, y.saturating_sub(3))
                    && !glyph(x, y + 3)
                {
                    // Away from the glyph halo the gradient is background.
                    assert!(!bin.ink(x, y), "background pixel ({x},{y}) marked ink");
                }
            }
        }
    }

    #[test]
    fn adaptive_mean_matches_naive_oracle() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let w = rng.random_range(4..32);
            let h = rng.random_range(4..32);
            let img = GrayImage::from_fn(w, h, |_, _| rng.random_range(0..=255u32) as u8);
            let p = AdaptiveParams::new(7, 7.5, Weighting::Mean).unwrap();
            let got = adaptive_threshold(&img, &p);
            // Naive per-pixel window mean.
            for y in 0..h as i64 {
                for x in 0..w as i64 {
                    let mut sum = 0u64;
                    for dy in -3..=3 {
                        for dx in -3..=3 {
                            sum += img.pixel_clamped(x + dx, y + dy) as u64;
                        }
                    }
                    let t = sum as f64 / 49.0 - 7.5;
                    let expect = !(img.pixel(x as u32, y as u32) as f64 > t);
                    assert_eq!(got.ink(x as u32, y as u32), expect);
                }
            }
        }
    }

    #[test]
    fn erode_examples() {
        // 3x3 solid block centered in 5x5 canvas.
        let img = BinaryImage::from_fn(5, 5, |x, y| (1..4).contains(&x) && (1..4).contains(&y));
        let out = erode(&img, 3).unwrap();
        assert_eq!(out.ink_count(), 1);
        assert!(out.ink(2, 2));

        let lonely = BinaryImage::from_fn(5, 5, |x, y| x == 2 && y == 2);
        assert_eq!(erode(&lonely, 3).unwrap().ink_count(), 0);

        let empty = BinaryImage::all_background(4, 4);
        assert_eq!(erode(&empty, 3).unwrap(), empty);

        assert!(erode(&empty, 2).is_err());
        assert!(erode(&empty, 1).is_err());
    }

    #[test]
    fn remove_small_keeps_big_drops_small() {
        // A 2x2 blob and a 3x2 blob.
        let img = BinaryImage::from_fn(10, 6, |x, y| {
            ((1..3).contains(&x) && (1..3).contains(&y))
                || ((5..8).contains(&x) && (3..5).contains(&y))
        });
        let out = remove_small_components(&img, 5, Connectivity::Eight);
        assert_eq!(out.ink_count(), 6);
        assert!(!out.ink(1, 1));
        assert!(out.ink(5, 3));

        assert_eq!(remove_small_components(&img, 0, Connectivity::Eight), img);

        let dot = BinaryImage::from_fn(3, 3, |x, y| x == 1 && y == 1);
        assert_eq!(remove_small_components(&dot, 2, Connectivity::Eight).ink_count(), 0);
    }

    #[test]
    fn connectivity_choice_matters_for_diagonals() {
        // Two pixels touching only diagonally.
        let img = BinaryImage::from_fn(4, 4, |x, y| (x, y) == (1, 1) || (x, y) == (2, 2));
        let eight = remove_small_components(&img, 2, Connectivity::Eight);
        assert_eq!(eight.ink_count(), 2);
        let four = remove_small_components(&img, 2, Connectivity::Four);
        assert_eq!(four.ink_count(), 0);
    }

    #[test]
    fn border_elimination_examples() {
        // One component touching the left edge, one interior.
        let img = BinaryImage::from_fn(12, 8, |x, y| {
            (x < 3 && y == 4) || ((5..8).contains(&x) && (3..6).contains(&y))
        });
        let out = eliminate_border(&img, 1, Connectivity::Eight);
        assert!(!out.ink(0, 4));
        assert!(!out.ink(2, 4));
        assert_eq!(out.ink_count(), 9);

        // band = 0 with no border ink is the identity.
        let interior = BinaryImage::from_fn(8, 8, |x, y| (2..5).contains(&x) && (2..5).contains(&y));
        assert_eq!(eliminate_border(&interior, 0, Connectivity::Eight), interior);

        // band = 0 still removes components sitting on the border itself.
        let edge = BinaryImage::from_fn(8, 8, |x, y| x == 0 && y == 3);
        assert_eq!(eliminate_border(&edge, 0, Connectivity::Eight).ink_count(), 0);
    }

    proptest! {
        #[test]
        fn erode_never_adds_ink(seed in any::<u64>(), w in 3u32..20, h in 3u32..20) {
            let mut state = seed | 1;
            let img = BinaryImage::from_fn(w, h, |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                (state >> 40) & 3 == 0
            });
            let out = erode(&img, 3).unwrap();
            for (a, b) in out.data().iter().zip(img.data()) {
                prop_assert!(!a || *b);
            }
        }

        #[test]
        fn remove_small_output_components_all_big_enough(
            seed in any::<u64>(), w in 2u32..24, h in 2u32..24, min_area in 0usize..12
        ) {
            let mut state = seed | 1;
            let img = BinaryImage::from_fn(w, h, |_, _| {
                state = state.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
                (state >> 35) & 1 == 1
            });
            let out = remove_small_components(&img, min_area, Connectivity::Eight);
            let (labels, count) = label_components(&out, Connectivity::Eight);
            let mut areas = vec![0usize; count as usize + 1];
            for &l in &labels {
                if l != 0 { areas[l as usize] += 1; }
            }
            for &a in &areas[1..] {
                prop_assert!(a >= min_area);
            }
        }

        #[test]
        fn border_band_is_clear_after_elimination(
            seed in any::<u64>(), w in 2u32..24, h in 2u32..24, band in 0u32..4
        ) {
            let mut state = seed | 1;
            let img = BinaryImage::from_fn(w, h, |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 30) & 1 == 1
            });
            let out = eliminate_border(&img, band, Connectivity::Eight);
            for y in 0..h as i64 {
                for x in 0..w as i64 {
                    let dist = x.min(y).min(w as i64 - 1 - x).min(h as i64 - 1 - y);
                    if dist <= band as i64 {
                        prop_assert!(!out.ink(x as u32, y as u32));
                    }
                }
            }
        }
    }
}
