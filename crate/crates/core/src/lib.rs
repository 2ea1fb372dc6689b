//! Inscription OCR toolkit: image preprocessing (deskew, denoise,
//! binarize), external OCR engine orchestration with box-file tooling,
//! dictionary word-break post-processing for space-less text, and a
//! weighted character-accuracy evaluation harness.

pub mod binarize;
pub mod cli;
pub mod deskew;
pub mod enhance;
pub mod evalkit;
pub mod ocrgate;
pub mod pipeline;
pub mod raster;
pub mod segment;
