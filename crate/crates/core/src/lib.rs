//! Segmentation-free detection of white-matter hyperintensities in
//! low-resolution T1 brain slice stacks.
//!
//! The pipeline runs in two phases. Coarse detection works on each slice
//! independently: the brain is separated from the background, ventricles are
//! proposed as dark extremal regions and selected by a genetic algorithm, an
//! equidistant contour between ventricles and brain boundary samples normal
//! white-matter intensities, and robust outliers of that sample (modified
//! Z-score) become hyperintensity candidates, filtered by size and distance
//! heuristics. Fine detection then validates candidates across adjacent
//! slices, keeping only spatially persistent detections.
//!
//! [`phantom`] generates synthetic slice stacks with ground truth for
//! testing, [`evaluate`] scores detections against truth masks, and
//! [`pipeline`] wires the stages into a batch driver.

pub mod coarse;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod fine;
pub mod image;
pub mod manifest;
pub mod mser;
pub mod pgm;
pub mod phantom;
pub mod pipeline;
pub mod preprocess;
pub mod ventricle;

pub use error::{Error, Result};
