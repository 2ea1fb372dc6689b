//! Core image representation and geometric primitives: grayscale
//! conversion, resize, rotation, histograms and projections.

use thiserror::Error;

use crate::binarize::BinaryImage;

pub mod io;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RasterError {
    #[error("image dimensions must be non-zero (got {width}x{height})")]
    EmptyDimensions { width: u32, height: u32 },
    #[error("data length {got} does not match {expected} for {width}x{height}")]
    BadDataLength {
        width: u32,
        height: u32,
        expected: usize,
        got: usize,
    },
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions { width, height });
        }
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(RasterError::BadDataLength {
                width,
                height,
                expected,
                got: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    /// Build an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn constant(width: u32, height: u32, value: u8) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub(crate) fn pixel_clamped(&self, x: i64, y: i64) -> u8 {
        let x = x.clamp(0, self.width as i64 - 1) as usize;
        let y = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[y * self.width as usize + x]
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        &self.data[y as usize * w..(y as usize + 1) * w]
    }
}

/// 8-bit RGB image, row-major interleaved triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions { width, height });
        }
        let expected = 3 * width as usize * height as usize;
        if data.len() != expected {
            return Err(RasterError::BadDataLength {
                width,
                height,
                expected,
                got: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> (u8, u8, u8)) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        let mut data = Vec::with_capacity(3 * width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                let (r, g, b) = f(x, y);
                data.extend_from_slice(&[r, g, b]);
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> (u8, u8, u8) {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        (self.data[i], self.data[i + 1], self.data[i + 2])
    }
}

/// Per-intensity pixel counts of a grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntensityHistogram {
    bins: [u64; 256],
    total: u64,
}

impl IntensityHistogram {
    pub fn from_counts(bins: [u64; 256]) -> Self {
        let total = bins.iter().sum();
        Self { bins, total }
    }

    pub fn bins(&self) -> &[u64; 256] {
        &self.bins
    }

    pub fn count(&self, intensity: u8) -> u64 {
        self.bins[intensity as usize]
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Round half away from zero, then clamp to the 8-bit range.
#[inline]
pub(crate) fn round_clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// BT.601 luma conversion: Y = 0.299 R + 0.587 G + 0.114 B, rounded.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let mut data = Vec::with_capacity(img.width as usize * img.height as usize);
    for chunk in img.data.chunks_exact(3) {
        let y = 0.299 * chunk[0] as f64 + 0.587 * chunk[1] as f64 + 0.114 * chunk[2] as f64;
        data.push(round_clamp_u8(y));
    }
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Lift a grayscale image to RGB with r = g = b.
pub fn lift_to_rgb(img: &GrayImage) -> RgbImage {
    let mut data = Vec::with_capacity(3 * img.data.len());
    for &v in &img.data {
        data.extend_from_slice(&[v, v, v]);
    }
    RgbImage {
        width: img.width,
        height: img.height,
        data,
    }
}

#[inline]
fn sample_bilinear_clamped(img: &GrayImage, sx: f64, sy: f64) -> f64 {
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = sx - x0;
    let fy = sy - y0;
    let x0 = x0 as i64;
    let y0 = y0 as i64;
    let p00 = img.pixel_clamped(x0, y0) as f64;
    let p10 = img.pixel_clamped(x0 + 1, y0) as f64;
    let p01 = img.pixel_clamped(x0, y0 + 1) as f64;
    let p11 = img.pixel_clamped(x0 + 1, y0 + 1) as f64;
    let top = p00 + (p10 - p00) * fx;
    let bottom = p01 + (p11 - p01) * fx;
    top + (bottom - top) * fy
}

#[inline]
fn sample_bilinear_fill(img: &GrayImage, sx: f64, sy: f64, fill: u8) -> f64 {
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = sx - x0;
    let fy = sy - y0;
    let x0 = x0 as i64;
    let y0 = y0 as i64;
    let at = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= img.width as i64 || y >= img.height as i64 {
            fill as f64
        } else {
            img.data[y as usize * img.width as usize + x as usize] as f64
        }
    };
    let p00 = at(x0, y0);
    let p10 = at(x0 + 1, y0);
    let p01 = at(x0, y0 + 1);
    let p11 = at(x0 + 1, y0 + 1);
    let top = p00 + (p10 - p00) * fx;
    let bottom = p01 + (p11 - p01) * fx;
    top + (bottom - top) * fy
}

/// Scale so the longer side equals `max_dim`, preserving aspect ratio.
/// Images already within bounds are returned unchanged. Bilinear.
pub fn resize(img: &GrayImage, max_dim: u32) -> GrayImage {
    assert!(max_dim >= 1, "max_dim must be at least 1");
    let (w, h) = (img.width, img.height);
    if w.max(h) <= max_dim {
        return img.clone();
    }
    let (nw, nh) = if w >= h {
        let nh = ((h as f64 * max_dim as f64) / w as f64).round().max(1.0) as u32;
        (max_dim, nh)
    } else {
        let nw = ((w as f64 * max_dim as f64) / h as f64).round().max(1.0) as u32;
        (nw, max_dim)
    };
    let sx = w as f64 / nw as f64;
    let sy = h as f64 / nh as f64;
    GrayImage::from_fn(nw, nh, |x, y| {
        let src_x = (x as f64 + 0.5) * sx - 0.5;
        let src_y = (y as f64 + 0.5) * sy - 0.5;
        round_clamp_u8(sample_bilinear_clamped(img, src_x, src_y))
    })
}

/// Rotate about the image center by `angle` degrees, bilinear sampling.
/// The canvas keeps its size; samples falling outside take `fill`.
pub fn rotate(img: &GrayImage, angle: f64, fill: u8) -> GrayImage {
    let theta = angle.to_radians();
    let (cos_t, sin_t) = (theta.cos(), theta.sin());
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    GrayImage::from_fn(img.width, img.height, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let sx = cos_t * dx + sin_t * dy + cx;
        let sy = -sin_t * dx + cos_t * dy + cy;
        round_clamp_u8(sample_bilinear_fill(img, sx, sy, fill))
    })
}

pub fn intensity_histogram(img: &GrayImage) -> IntensityHistogram {
    let mut bins = [0u64; 256];
    for &v in &img.data {
        bins[v as usize] += 1;
    }
    IntensityHistogram {
        bins,
        total: img.data.len() as u64,
    }
}

/// Ink pixels per row; element `i` counts row `i`.
pub fn row_projection(img: &BinaryImage) -> Vec<u32> {
    (0..img.height())
        .map(|y| img.row(y).iter().filter(|&&ink| ink).count() as u32)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray_strategy(max_side: u32) -> impl Strategy<Value = GrayImage> {
        (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), (w * h) as usize)
                .prop_map(move |data| GrayImage::new(w, h, data).unwrap())
        })
    }

    #[test]
    fn new_rejects_bad_lengths() {
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
        assert!(RgbImage::new(2, 1, vec![0; 5]).is_err());
    }

    #[test]
    fn grayscale_luma_examples() {
        let img = RgbImage::new(3, 1, vec![255, 255, 255, 0, 0, 0, 255, 0, 0]).unwrap();
        let gray = to_grayscale(&img);
        assert_eq!(gray.data(), &[255, 0, 76]);
    }

    #[test]
    fn resize_identity_when_within_bounds() {
        let img = GrayImage::from_fn(100, 50, |x, y| (x + y) as u8);
        assert_eq!(resize(&img, 100), img);
    }

    #[test]
    fn resize_constant_stays_constant() {
        let img = GrayImage::constant(4, 4, 77);
        let out = resize(&img, 2);
        assert_eq!(out, GrayImage::constant(2, 2, 77));
    }

    #[test]
    fn resize_checkerboard_to_single_pixel_averages() {
        let img = GrayImage::new(2, 2, vec![0, 255, 255, 0]).unwrap();
        let out = resize(&img, 1);
        // (0 + 255 + 255 + 0) / 4 = 127.5, rounded half away from zero.
        assert_eq!(out.data(), &[128]);
    }

    #[test]
    fn resize_preserves_aspect_to_nearest_pixel() {
        let img = GrayImage::constant(300, 200, 9);
        let out = resize(&img, 150);
        assert_eq!((out.width(), out.height()), (150, 100));
    }

    #[test]
    fn rotate_zero_is_identity() {
        let img = GrayImage::from_fn(7, 5, |x, y| (31 * x + 17 * y) as u8);
        assert_eq!(rotate(&img, 0.0, 0), img);
    }

    #[test]
    fn rotate_constant_with_matching_fill_is_constant() {
        let img = GrayImage::constant(9, 6, 42);
        for angle in [-33.0, 7.5, 90.0, 181.0] {
            assert_eq!(rotate(&img, angle, 42), img);
        }
    }

    #[test]
    fn rotate_keeps_bright_center_at_90_degrees() {
        let mut data = vec![0u8; 9];
        data[4] = 200;
        let img = GrayImage::new(3, 3, data).unwrap();
        let out = rotate(&img, 90.0, 0);
        assert_eq!(out.pixel(1, 1), 200);
    }

    #[test]
    fn rotate_round_trip_restores_smooth_interior() {
        // Smooth image: interpolation error of the there-and-back trip
        // stays within a couple of levels away from the border.
        let img = GrayImage::from_fn(41, 31, |x, y| {
            let v = 120.0
                + 60.0 * (x as f64 / 41.0 * std::f64::consts::PI).sin()
                + 40.0 * (y as f64 / 31.0 * std::f64::consts::PI).cos();
            round_clamp_u8(v)
        });
        let angle = 7.3;
        let back = rotate(&rotate(&img, angle, 255), -angle, 255);
        for y in 3..img.height() - 3 {
            for x in 3..img.width() - 3 {
                let a = img.pixel(x, y) as i32;
                let b = back.pixel(x, y) as i32;
                assert!(
                    (a - b).abs() <= 2,
                    "pixel ({x},{y}) drifted {a} -> {b} after round trip"
                );
            }
        }
    }

    #[test]
    fn histogram_counts_by_hand() {
        let img = GrayImage::new(2, 2, vec![0, 255, 255, 10]).unwrap();
        let hist = intensity_histogram(&img);
        assert_eq!(hist.count(0), 1);
        assert_eq!(hist.count(10), 1);
        assert_eq!(hist.count(255), 2);
        assert_eq!(hist.total(), 4);
    }

    #[test]
    fn row_projection_counts_ink_rows() {
        use crate::binarize::BinaryImage;
        let img = BinaryImage::from_fn(3, 3, |_, y| y == 1);
        assert_eq!(row_projection(&img), vec![0, 3, 0]);
        let empty = BinaryImage::all_background(4, 2);
        assert_eq!(row_projection(&empty), vec![0, 0]);
    }

    proptest! {
        #[test]
        fn gray_rgb_round_trip_is_identity(img in gray_strategy(16)) {
            prop_assert_eq!(to_grayscale(&lift_to_rgb(&img)), img);
        }

        #[test]
        fn histogram_total_equals_pixel_count(img in gray_strategy(16)) {
            let hist = intensity_histogram(&img);
            prop_assert_eq!(hist.total(), img.width() as u64 * img.height() as u64);
            prop_assert_eq!(hist.bins().iter().sum::<u64>(), hist.total());
        }

        #[test]
        fn resize_preserves_constant_images(v in any::<u8>(), w in 1u32..20, h in 1u32..20, dim in 1u32..24) {
            let img = GrayImage::constant(w, h, v);
            let out = resize(&img, dim);
            prop_assert!(out.data().iter().all(|&p| p == v));
        }

        #[test]
        fn projection_sum_equals_ink_count(w in 1u32..16, h in 1u32..16, seed in any::<u64>()) {
            use crate::binarize::BinaryImage;
            let mut state = seed;
            let img = BinaryImage::from_fn(w, h, |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) & 1 == 1
            });
            let total: u32 = row_projection(&img).iter().sum();
            prop_assert_eq!(total as usize, img.ink_count());
        }
    }
}
