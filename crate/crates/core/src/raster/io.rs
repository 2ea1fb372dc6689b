//! PNG and binary PGM (P5) readers/writers.
//!
//! The PGM writer is bit-exact: `P5\n<w> <h>\n255\n` followed by the raw
//! row-major bytes, which makes it the golden-test format.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{GrayImage, RasterError, RgbImage};
use crate::binarize::BinaryImage;

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("png error on {path}: {source}")]
    Png {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("bad pgm: {0}")]
    BadPgm(String),
    #[error("unsupported image extension: {0}")]
    UnsupportedExtension(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// A decoded image file: grayscale sources stay grayscale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodedImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl DecodedImage {
    /// Collapse to grayscale, converting RGB via the luma weights.
    pub fn into_gray(self) -> GrayImage {
        match self {
            DecodedImage::Gray(g) => g,
            DecodedImage::Rgb(rgb) => super::to_grayscale(&rgb),
        }
    }
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<(), ImageIoError> {
    let bytes = pgm_bytes(img);
    let file = fs::File::create(path).map_err(|source| ImageIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut file = std::io::BufWriter::new(file);
    file.write_all(&bytes).map_err(|source| ImageIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Serialize as binary PGM; header is exactly `P5\n<w> <h>\n255\n`.
pub fn pgm_bytes(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn read_pgm(path: &Path) -> Result<GrayImage, ImageIoError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| ImageIoError::Io {
            path: path.display().to_string(),
            source,
        })?;
    parse_pgm(&bytes)
}

/// Parse binary PGM. Comments (`#` to end of line) are allowed in the
/// header; the maxval must not exceed 255.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, ImageIoError> {
    let mut pos = 0usize;

    let mut next_token = |bytes: &[u8]| -> Result<String, ImageIoError> {
        // Skip whitespace and comments.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(ImageIoError::BadPgm("unexpected end of header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = next_token(bytes)?;
    if magic != "P5" {
        return Err(ImageIoError::BadPgm(format!("expected P5, got {magic:?}")));
    }
    let width: u32 = next_token(bytes)?
        .parse()
        .map_err(|_| ImageIoError::BadPgm("bad width".into()))?;
    let height: u32 = next_token(bytes)?
        .parse()
        .map_err(|_| ImageIoError::BadPgm("bad height".into()))?;
    let maxval: u32 = next_token(bytes)?
        .parse()
        .map_err(|_| ImageIoError::BadPgm("bad maxval".into()))?;
    if maxval == 0 || maxval > 255 {
        return Err(ImageIoError::BadPgm(format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let expected = width as usize * height as usize;
    let raster = bytes
        .get(pos..pos + expected)
        .ok_or_else(|| ImageIoError::BadPgm("truncated raster".into()))?;
    Ok(GrayImage::new(width, height, raster.to_vec())?)
}

pub fn read_png(path: &Path) -> Result<DecodedImage, ImageIoError> {
    let dynimg = image::open(path).map_err(|source| ImageIoError::Png {
        path: path.display().to_string(),
        source,
    })?;
    match dynimg {
        image::DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            Ok(DecodedImage::Gray(GrayImage::new(w, h, buf.into_raw())?))
        }
        other => {
            let buf = other.to_rgb8();
            let (w, h) = buf.dimensions();
            Ok(DecodedImage::Rgb(RgbImage::new(w, h, buf.into_raw())?))
        }
    }
}

pub fn write_png(path: &Path, img: &GrayImage) -> Result<(), ImageIoError> {
    let buf = image::GrayImage::from_raw(img.width(), img.height(), img.data().to_vec())
        .expect("dimensions validated at construction");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| ImageIoError::Png {
            path: path.display().to_string(),
            source,
        })
}

/// Load a PNG or PGM by extension.
pub fn load_image(path: &Path) -> Result<DecodedImage, ImageIoError> {
    match extension_of(path).as_deref() {
        Some("pgm") => Ok(DecodedImage::Gray(read_pgm(path)?)),
        Some("png") => read_png(path),
        other => Err(ImageIoError::UnsupportedExtension(
            other.unwrap_or("<none>").to_string(),
        )),
    }
}

/// Save a grayscale image as PNG or PGM by extension.
pub fn save_gray(path: &Path, img: &GrayImage) -> Result<(), ImageIoError> {
    match extension_of(path).as_deref() {
        Some("pgm") => write_pgm(path, img),
        Some("png") => write_png(path, img),
        other => Err(ImageIoError::UnsupportedExtension(
            other.unwrap_or("<none>").to_string(),
        )),
    }
}

/// Save a binary image (ink black on white) as PNG or PGM by extension.
pub fn save_binary(path: &Path, img: &BinaryImage) -> Result<(), ImageIoError> {
    save_gray(path, &img.to_gray(0, 255))
}

fn extension_of(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GrayImage;

    #[test]
    fn pgm_header_is_bit_exact() {
        let img = GrayImage::new(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let bytes = pgm_bytes(&img);
        assert_eq!(&bytes[..12], b"P5\n3 2\n255\n\x01");
        assert_eq!(bytes.len(), 11 + 6);
    }

    #[test]
    fn pgm_round_trip() {
        let img = GrayImage::from_fn(17, 9, |x, y| (x * 13 + y * 7) as u8);
        let parsed = parse_pgm(&pgm_bytes(&img)).unwrap();
        assert_eq!(parsed, img);
    }

    #[test]
    fn pgm_parser_skips_comments() {
        let mut bytes = b"P5\n# a comment\n2 1\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[9, 8]);
        let img = parse_pgm(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
        assert_eq!(img.data(), &[9, 8]);
    }

    #[test]
    fn pgm_parser_rejects_garbage() {
        assert!(parse_pgm(b"P6\n1 1\n255\nx").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\nab").is_err()); // truncated
        assert!(parse_pgm(b"P5\n1 1\n70000\nx").is_err());
    }

    #[test]
    fn png_round_trip_via_tempdir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.png");
        let img = GrayImage::from_fn(12, 8, |x, y| (x * 21 + y * 3) as u8);
        write_png(&path, &img).unwrap();
        match read_png(&path).unwrap() {
            DecodedImage::Gray(g) => assert_eq!(g, img),
            DecodedImage::Rgb(_) => panic!("expected grayscale png"),
        }
    }
}
