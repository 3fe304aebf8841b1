//! Disaster situation-report pipeline: land-cover segmentation of satellite
//! rasters, change quantification between pre/post-event captures, and
//! extractive summarization of an emergency tweet stream, combined into a
//! region-keyed report.

pub mod error;
pub mod raster;
pub mod report;
pub mod seg;
pub mod blend;
pub mod change;
pub mod cowts;
pub mod synthetic;
pub mod tweets;

pub use error::{Error, Result};
