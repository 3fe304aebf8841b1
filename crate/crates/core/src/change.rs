//! Land-cover change quantification between pre- and post-event label masks:
//! per-class pixel accounting, signed percent change, a binary change mask,
//! and extraction/naming of the contiguous changed regions.

use std::collections::VecDeque;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{LabelMask, NUM_CLASSES};

/// Per-class pixel histogram of a label mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassPixelCounts {
    pub counts: [u64; NUM_CLASSES],
}

impl ClassPixelCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Pixel rectangle `[x0, y0, x1, y1]`, inclusive on all sides.
pub type BBox = [usize; 4];

fn bboxes_overlap(a: &BBox, b: &BBox) -> bool {
    a[0] <= b[2] && b[0] <= a[2] && a[1] <= b[3] && b[1] <= a[3]
}

/// A named rectangle in mask coordinates, loaded from the annotation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAnnotation {
    pub name: String,
    pub bbox: BBox,
}

/// One connected changed region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedRegion {
    /// Dominant post-event class inside the region (ties to the lowest id).
    pub class: u8,
    /// Pixel count.
    pub area: usize,
    pub bbox: BBox,
    /// Overlapping annotation names in annotation-file order, or `["unnamed"]`.
    pub names: Vec<String>,
}

/// Per-pixel change flags.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl BinaryMask {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count_true(&self) -> u64 {
        self.data.iter().filter(|&&b| b).count() as u64
    }

    /// Write as a grayscale PNG, changed pixels white (255), others black.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let pixels: Vec<u8> = self.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, pixels)
            .expect("buffer sized from dims");
        img.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }
}

/// Everything the `change` stage produces. The change mask itself is kept out
/// of the JSON (it goes to a PNG); `changed_pixels` summarizes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeReport {
    pub pre_counts: ClassPixelCounts,
    pub post_counts: ClassPixelCounts,
    /// Signed percent per class; `None` where the pre-event count is zero.
    pub percent_change: [Option<f64>; NUM_CLASSES],
    pub changed_pixels: u64,
    pub changed_regions: Vec<NamedRegion>,
    #[serde(skip)]
    pub change_mask: BinaryMask,
}

/// Exact per-class histogram.
pub fn count_class_pixels(mask: &LabelMask) -> ClassPixelCounts {
    let mut counts = [0u64; NUM_CLASSES];
    for &c in &mask.classes {
        counts[c as usize] += 1;
    }
    ClassPixelCounts { counts }
}

/// Per-class `predicted / actual` ratio; classes with zero actual count are
/// flagged by omission (`None`) rather than failing the whole call.
pub fn pixel_ratio(predicted: &ClassPixelCounts, actual: &ClassPixelCounts) -> [Option<f64>; NUM_CLASSES] {
    let mut out = [None; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        if actual.counts[c] > 0 {
            out[c] = Some(predicted.counts[c] as f64 / actual.counts[c] as f64);
        }
    }
    out
}

/// Signed percent change `(post - pre) / pre * 100` for one class.
pub fn percent_change(pre: &ClassPixelCounts, post: &ClassPixelCounts, class_id: u8) -> Result<f64> {
    let c = class_id as usize;
    if c >= NUM_CLASSES {
        return Err(Error::InvalidClassId { value: class_id, limit: NUM_CLASSES });
    }
    if pre.counts[c] == 0 {
        return Err(Error::ZeroBaseline { class: class_id as usize });
    }
    let (p0, p1) = (pre.counts[c] as f64, post.counts[c] as f64);
    Ok((p1 - p0) / p0 * 100.0)
}

/// Pixels whose class id differs between the two masks.
pub fn change_mask(pre: &LabelMask, post: &LabelMask) -> Result<BinaryMask> {
    if pre.width != post.width || pre.height != post.height {
        return Err(Error::DimensionMismatch {
            expected: (pre.width, pre.height),
            found: (post.width, post.height),
        });
    }
    let data = pre
        .classes
        .iter()
        .zip(post.classes.iter())
        .map(|(a, b)| a != b)
        .collect();
    Ok(BinaryMask { width: pre.width, height: pre.height, data })
}

/// 8-connected components of the change mask with area `>= min_area`, each
/// carrying its dominant post-event class and inclusive bounding box, sorted
/// by area descending (ties by bounding box, top-left first). Names are left
/// empty; see [`name_regions`].
pub fn extract_regions(mask: &BinaryMask, min_area: usize, post: &LabelMask) -> Result<Vec<NamedRegion>> {
    if mask.width != post.width || mask.height != post.height {
        return Err(Error::DimensionMismatch {
            expected: (mask.width, mask.height),
            found: (post.width, post.height),
        });
    }
    let (w, h) = (mask.width, mask.height);
    let mut visited = vec![false; w * h];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..w * h {
        if visited[start] || !mask.data[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        let mut area = 0usize;
        let (mut x0, mut y0, mut x1, mut y1) = (w, h, 0usize, 0usize);
        let mut class_hist = [0u64; NUM_CLASSES];
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            area += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            class_hist[post.classes[i] as usize] += 1;
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.data[j] && !visited[j] {
                        visited[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        if area >= min_area {
            let mut class = 0u8;
            for c in 1..NUM_CLASSES {
                if class_hist[c] > class_hist[class as usize] {
                    class = c as u8;
                }
            }
            regions.push(NamedRegion { class, area, bbox: [x0, y0, x1, y1], names: Vec::new() });
        }
    }
    regions.sort_by(|a, b| b.area.cmp(&a.area).then(a.bbox.cmp(&b.bbox)));
    Ok(regions)
}

/// Tag each region with every annotation whose bbox overlaps its bbox
/// (annotation-file order); regions with no overlap get `["unnamed"]`.
/// Never drops or reorders regions.
pub fn name_regions(mut regions: Vec<NamedRegion>, annotations: &[RegionAnnotation]) -> Vec<NamedRegion> {
    for region in regions.iter_mut() {
        region.names = annotations
            .iter()
            .filter(|a| bboxes_overlap(&a.bbox, &region.bbox))
            .map(|a| a.name.clone())
            .collect();
        if region.names.is_empty() {
            region.names.push("unnamed".to_string());
        }
    }
    regions
}

/// Load the annotation file: a JSON array of `{ "name": .., "bbox": [x0, y0, x1, y1] }`.
pub fn load_annotations(path: &Path) -> Result<Vec<RegionAnnotation>> {
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let annotations: Vec<RegionAnnotation> =
        serde_json::from_reader(BufReader::new(File::open(path)?))?;
    for a in &annotations {
        if a.bbox[0] > a.bbox[2] || a.bbox[1] > a.bbox[3] {
            return Err(Error::invalid_arg(
                "annotations",
                format!("annotation {:?} has an inverted bbox {:?}", a.name, a.bbox),
            ));
        }
    }
    Ok(annotations)
}

/// Full change analysis: histograms, per-class percent change (omitted for
/// classes with no pre-event pixels), change mask, and named regions.
pub fn analyze_change(
    pre: &LabelMask,
    post: &LabelMask,
    min_area: usize,
    annotations: &[RegionAnnotation],
) -> Result<ChangeReport> {
    let pre_counts = count_class_pixels(pre);
    let post_counts = count_class_pixels(post);
    let mut pct = [None; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        if pre_counts.counts[c] > 0 {
            pct[c] = Some(percent_change(&pre_counts, &post_counts, c as u8)?);
        }
    }
    let mask = change_mask(pre, post)?;
    let regions = name_regions(extract_regions(&mask, min_area, post)?, annotations);
    Ok(ChangeReport {
        pre_counts,
        post_counts,
        percent_change: pct,
        changed_pixels: mask.count_true(),
        changed_regions: regions,
        change_mask: mask,
    })
}
