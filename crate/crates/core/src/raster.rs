//! Raster and mask types plus the dataset preparation steps: cropping to a
//! patch-size multiple, patch extraction, usefulness filtering and the
//! train/validation split.

use std::path::Path;

use image::{GrayImage, RgbImage};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of land-cover classes: background, buildings, woodlands, water.
pub const NUM_CLASSES: usize = 4;

/// Display names for the class ids 0..4.
pub const CLASS_NAMES: [&str; NUM_CLASSES] = ["background", "buildings", "woodlands", "water"];

/// An 8-bit RGB raster, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid_arg("dimensions", "width and height must be >= 1"));
        }
        if data.len() != width * height * 3 {
            return Err(Error::ShapeMismatch {
                expected: width * height * 3,
                found: data.len(),
            });
        }
        Ok(RasterImage { width, height, data })
    }

    /// Solid-color image, mostly useful in tests and fixtures.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        RasterImage { width, height, data }
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)?.to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        RasterImage::new(w, h, img.into_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let img = RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer length matches dimensions by construction");
        img.save(path)?;
        Ok(())
    }
}

/// Per-pixel class ids in `0..NUM_CLASSES`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<u8>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, classes: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid_arg("dimensions", "width and height must be >= 1"));
        }
        if classes.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: width * height,
                found: classes.len(),
            });
        }
        if let Some(&bad) = classes.iter().find(|&&c| c as usize >= NUM_CLASSES) {
            return Err(Error::InvalidClassId {
                value: bad,
                limit: NUM_CLASSES,
            });
        }
        Ok(LabelMask { width, height, classes })
    }

    pub fn filled(width: usize, height: usize, class: u8) -> Result<Self> {
        LabelMask::new(width, height, vec![class; width * height])
    }

    #[inline]
    pub fn class(&self, x: usize, y: usize) -> u8 {
        self.classes[y * self.width + x]
    }

    #[inline]
    pub fn set_class(&mut self, x: usize, y: usize, class: u8) {
        self.classes[y * self.width + x] = class;
    }

    /// Fraction of pixels carrying a label other than the background class 0.
    pub fn labeled_fraction(&self) -> f64 {
        let labeled = self.classes.iter().filter(|&&c| c != 0).count();
        labeled as f64 / self.classes.len() as f64
    }

    /// Masks are stored as single-channel 8-bit PNG with raw class ids.
    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)?.to_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        LabelMask::new(w, h, img.into_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let img = GrayImage::from_raw(self.width as u32, self.height as u32, self.classes.clone())
            .expect("buffer length matches dimensions by construction");
        img.save(path)?;
        Ok(())
    }
}

/// Layout of the non-overlapping patch tiling of a cropped raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub patch_size: usize,
    pub rows: usize,
    pub cols: usize,
}

impl PatchGrid {
    /// Top-left pixel offset of the patch at `index` (row-major order).
    pub fn origin(&self, index: usize) -> (usize, usize) {
        let row = index / self.cols;
        let col = index % self.cols;
        (col * self.patch_size, row * self.patch_size)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Conventional file name for the patch at (row, col) of a source raster.
pub fn patch_file_name(stem: &str, row: usize, col: usize) -> String {
    format!("{stem}_r{row}_c{col}.png")
}

fn crop_rect(data: &[u8], width: usize, channels: usize, new_w: usize, new_h: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(new_w * new_h * channels);
    for y in 0..new_h {
        let start = y * width * channels;
        out.extend_from_slice(&data[start..start + new_w * channels]);
    }
    out
}

/// Crop to the nearest size divisible by `unit`, keeping the top-left corner.
pub fn crop_to_multiple(image: &RasterImage, unit: usize) -> Result<RasterImage> {
    let (w, h) = cropped_dims(image.width, image.height, unit)?;
    if (w, h) == (image.width, image.height) {
        return Ok(image.clone());
    }
    Ok(RasterImage {
        width: w,
        height: h,
        data: crop_rect(&image.data, image.width, 3, w, h),
    })
}

/// Mask counterpart of [`crop_to_multiple`], so image/mask pairs stay aligned.
pub fn crop_mask_to_multiple(mask: &LabelMask, unit: usize) -> Result<LabelMask> {
    let (w, h) = cropped_dims(mask.width, mask.height, unit)?;
    if (w, h) == (mask.width, mask.height) {
        return Ok(mask.clone());
    }
    Ok(LabelMask {
        width: w,
        height: h,
        classes: crop_rect(&mask.classes, mask.width, 1, w, h),
    })
}

fn cropped_dims(width: usize, height: usize, unit: usize) -> Result<(usize, usize)> {
    if unit == 0 {
        return Err(Error::invalid_arg("unit", "crop unit must be >= 1"));
    }
    if width < unit || height < unit {
        return Err(Error::DimensionTooSmall { width, height, unit });
    }
    Ok((width / unit * unit, height / unit * unit))
}

fn extract_tile(data: &[u8], width: usize, channels: usize, x0: usize, y0: usize, size: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(size * size * channels);
    for y in y0..y0 + size {
        let start = (y * width + x0) * channels;
        out.extend_from_slice(&data[start..start + size * channels]);
    }
    out
}

/// Split a cropped raster into non-overlapping `patch_size` tiles, row-major.
pub fn patchify(image: &RasterImage, patch_size: usize) -> Result<(Vec<RasterImage>, PatchGrid)> {
    let grid = patch_grid(image.width, image.height, patch_size)?;
    let mut patches = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let (x0, y0) = grid.origin(i);
        patches.push(RasterImage {
            width: patch_size,
            height: patch_size,
            data: extract_tile(&image.data, image.width, 3, x0, y0, patch_size),
        });
    }
    Ok((patches, grid))
}

pub fn patchify_mask(mask: &LabelMask, patch_size: usize) -> Result<(Vec<LabelMask>, PatchGrid)> {
    let grid = patch_grid(mask.width, mask.height, patch_size)?;
    let mut patches = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let (x0, y0) = grid.origin(i);
        patches.push(LabelMask {
            width: patch_size,
            height: patch_size,
            classes: extract_tile(&mask.classes, mask.width, 1, x0, y0, patch_size),
        });
    }
    Ok((patches, grid))
}

fn patch_grid(width: usize, height: usize, patch_size: usize) -> Result<PatchGrid> {
    if patch_size == 0 {
        return Err(Error::invalid_arg("patch_size", "patch size must be >= 1"));
    }
    if width % patch_size != 0 || height % patch_size != 0 {
        return Err(Error::DimensionMismatch {
            expected: (width / patch_size * patch_size, height / patch_size * patch_size),
            found: (width, height),
        });
    }
    Ok(PatchGrid {
        patch_size,
        rows: height / patch_size,
        cols: width / patch_size,
    })
}

/// Inverse of [`patchify`]: stitch row-major patches back into one raster.
pub fn reassemble(patches: &[RasterImage], grid: &PatchGrid) -> Result<RasterImage> {
    if patches.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            found: patches.len(),
        });
    }
    let width = grid.cols * grid.patch_size;
    let height = grid.rows * grid.patch_size;
    let mut data = vec![0u8; width * height * 3];
    for (i, patch) in patches.iter().enumerate() {
        if patch.width != grid.patch_size || patch.height != grid.patch_size {
            return Err(Error::DimensionMismatch {
                expected: (grid.patch_size, grid.patch_size),
                found: (patch.width, patch.height),
            });
        }
        let (x0, y0) = grid.origin(i);
        for y in 0..grid.patch_size {
            let src = y * grid.patch_size * 3;
            let dst = ((y0 + y) * width + x0) * 3;
            data[dst..dst + grid.patch_size * 3]
                .copy_from_slice(&patch.data[src..src + grid.patch_size * 3]);
        }
    }
    Ok(RasterImage { width, height, data })
}

/// Keep only patches whose mask carries at least `min_labeled_fraction`
/// non-background pixels. Returns kept indices in input order.
pub fn filter_useful(masks: &[LabelMask], min_labeled_fraction: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&min_labeled_fraction) {
        return Err(Error::invalid_arg(
            "min_labeled_fraction",
            format!("must be in [0,1], got {min_labeled_fraction}"),
        ));
    }
    Ok(masks
        .iter()
        .enumerate()
        .filter(|(_, m)| m.labeled_fraction() >= min_labeled_fraction)
        .map(|(i, _)| i)
        .collect())
}

/// Seeded train/validation partition of patch ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub ratio: f64,
    pub train: Vec<String>,
    pub val: Vec<String>,
}

impl DatasetSplit {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(file)?)
    }
}

/// Shuffle ids with a seeded RNG and split them `ratio : 1 - ratio`.
pub fn split_dataset(ids: &[String], ratio: f64, seed: u64) -> Result<DatasetSplit> {
    if ids.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid_arg("ratio", format!("must be in (0,1), got {ratio}")));
    }
    let mut shuffled: Vec<String> = ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let n_train = ((ids.len() as f64) * ratio).round() as usize;
    let n_train = n_train.clamp(1, ids.len());
    let val = shuffled.split_off(n_train.min(shuffled.len()));
    Ok(DatasetSplit {
        seed,
        ratio,
        train: shuffled,
        val,
    })
}
