//! Windowed whole-raster inference with spline-weighted blending, mirror
//! padding, and optional dihedral (rotation/mirror) test-time augmentation.
//!
//! Overlapping square windows slide across the mirror-padded raster at a
//! stride of `window / subdivisions`; each window's prediction is merged
//! under a separable spline-shaped weight. At the default `subdivisions = 2`
//! the 1-D profile satisfies an exact partition of unity — `w[i] +
//! w[i + size/2] = 1` — so interior seams vanish; accumulated weights are
//! divided out regardless, which also handles the clamped final window
//! positions on rasters whose size is not a stride multiple.

use crate::error::{Error, Result};
use crate::raster::{LabelMask, RasterImage, NUM_CLASSES};
use crate::seg::ProbabilityMap;

/// Separable blending window: `weights[y * size + x] = profile[y] * profile[x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendWindow {
    pub size: usize,
    /// 1-D symmetric profile, strictly positive, `profile[i] + profile[i + size/2] = 1`.
    pub profile: Vec<f64>,
    /// 2-D outer product of the profile with itself.
    pub weights: Vec<f64>,
}

/// Build the blending window from a triangular bump raised to `power`.
///
/// The profile ramps 0→1 over the first half following
/// `S(u) = (2u)^p / 2` for `u ≤ 1/2` and `1 - (2(1-u))^p / 2` for `u ≥ 1/2`,
/// sampled at pixel centers, then mirrors back down — the classic smooth-
/// blending spline. Because `S(u) + S(1-u) = 1`, copies tiled at a half-window
/// step sum to exactly 1; `power = 1` recovers the plain triangle.
pub fn make_spline_window(size: usize, power: f64) -> Result<BlendWindow> {
    if size < 4 || size % 2 != 0 {
        return Err(Error::InvalidSize { size });
    }
    if !power.is_finite() || power <= 0.0 {
        return Err(Error::invalid_arg("power", "must be finite and > 0"));
    }
    let n = size as f64;
    let half = size / 2;
    let mut profile = vec![0.0; size];
    for k in 0..half {
        let u = 2.0 * (k as f64 + 0.5) / n;
        let s = if u <= 0.5 {
            (2.0 * u).powf(power) / 2.0
        } else {
            1.0 - (2.0 * (1.0 - u)).powf(power) / 2.0
        };
        profile[k] = s;
        profile[size - 1 - k] = s;
    }
    let mut weights = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            weights.push(profile[y] * profile[x]);
        }
    }
    Ok(BlendWindow { size, profile, weights })
}

/// Reflect-pad an image by `margin` pixels per side without duplicating the
/// edge pixel: a row `a b c d` with margin 2 becomes `c b | a b c d | c b`.
pub fn mirror_pad(image: &RasterImage, margin: usize) -> Result<RasterImage> {
    if margin >= image.width.min(image.height) {
        return Err(Error::MarginTooLarge {
            margin,
            width: image.width,
            height: image.height,
        });
    }
    if margin == 0 {
        return Ok(image.clone());
    }
    let (w, h) = (image.width, image.height);
    let (pw, ph) = (w + 2 * margin, h + 2 * margin);
    let reflect = |i: isize, len: usize| -> usize {
        let len = len as isize;
        let mut i = i;
        if i < 0 {
            i = -i;
        }
        if i >= len {
            i = 2 * len - 2 - i;
        }
        i as usize
    };
    let mut data = Vec::with_capacity(pw * ph * 3);
    for y in 0..ph {
        let sy = reflect(y as isize - margin as isize, h);
        for x in 0..pw {
            let sx = reflect(x as isize - margin as isize, w);
            let i = (sy * w + sx) * 3;
            data.extend_from_slice(&image.data[i..i + 3]);
        }
    }
    RasterImage::new(pw, ph, data)
}

/// One of the 8 symmetries of the square: `id % 4` counter-clockwise quarter
/// turns applied after an optional horizontal mirror (`id >= 4`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DihedralTransform {
    id: u8,
}

impl DihedralTransform {
    pub const COUNT: usize = 8;

    pub const IDENTITY: DihedralTransform = DihedralTransform { id: 0 };

    pub fn new(id: u8) -> Result<Self> {
        if id as usize >= Self::COUNT {
            return Err(Error::invalid_arg("dihedral", format!("element id {id} not in 0..8")));
        }
        Ok(DihedralTransform { id })
    }

    pub fn all() -> impl Iterator<Item = DihedralTransform> {
        (0..Self::COUNT as u8).map(|id| DihedralTransform { id })
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    fn rotations(&self) -> u8 {
        self.id % 4
    }

    fn mirrored(&self) -> bool {
        self.id >= 4
    }

    /// The group inverse: rotations invert to `4 - r` turns; every mirrored
    /// element is a reflection and therefore its own inverse.
    pub fn inverse(&self) -> DihedralTransform {
        if self.mirrored() {
            *self
        } else {
            DihedralTransform { id: (4 - self.rotations()) % 4 }
        }
    }

    /// Source coordinate in the original patch for output pixel `(x, y)`.
    fn source(&self, n: usize, x: usize, y: usize) -> (usize, usize) {
        let (mut cx, mut cy) = (x, y);
        // Undo the CCW quarter turns (output(x,y) = input(n-1-y, x)).
        for _ in 0..self.rotations() {
            let t = cx;
            cx = n - 1 - cy;
            cy = t;
        }
        if self.mirrored() {
            cx = n - 1 - cx;
        }
        (cx, cy)
    }

    fn permuted<T: Copy>(&self, n: usize, chunk: usize, data: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(data.len());
        for y in 0..n {
            for x in 0..n {
                let (sx, sy) = self.source(n, x, y);
                let i = (sy * n + sx) * chunk;
                out.extend_from_slice(&data[i..i + chunk]);
            }
        }
        out
    }

    /// Transform a square RGB patch.
    pub fn apply_image(&self, patch: &RasterImage) -> Result<RasterImage> {
        if patch.width != patch.height {
            return Err(Error::NonSquarePatch { width: patch.width, height: patch.height });
        }
        let n = patch.width;
        RasterImage::new(n, n, self.permuted(n, 3, &patch.data))
    }

    /// Transform a square probability map (class vectors move with pixels).
    pub fn apply_probs(&self, probs: &ProbabilityMap) -> Result<ProbabilityMap> {
        if probs.width != probs.height {
            return Err(Error::NonSquarePatch { width: probs.width, height: probs.height });
        }
        let n = probs.width;
        ProbabilityMap::new(n, n, self.permuted(n, NUM_CLASSES, &probs.data))
    }
}

/// Apply a dihedral element to a square patch.
pub fn dihedral_apply(patch: &RasterImage, t: DihedralTransform) -> Result<RasterImage> {
    t.apply_image(patch)
}

/// Apply the inverse element, so `dihedral_invert(dihedral_apply(p, t), t) = p`.
pub fn dihedral_invert(patch: &RasterImage, t: DihedralTransform) -> Result<RasterImage> {
    t.inverse().apply_image(patch)
}

/// Diagnostics from a blended prediction run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendStats {
    /// Windows evaluated (augmented variants count as one window).
    pub windows_predicted: usize,
    /// Largest `|sum - 1|` of any pixel's class distribution before the final
    /// per-pixel renormalization.
    pub max_normalization_deviation: f64,
}

/// Smoothly blended whole-raster prediction. See the module docs.
///
/// `predict_fn` maps a `window_size`-square patch to a same-size probability
/// map; with `use_augmentation` its outputs over the 8 dihedral variants are
/// inverse-mapped and averaged. The result has the input's dimensions.
pub fn predict_smooth(
    image: &RasterImage,
    window_size: usize,
    subdivisions: usize,
    use_augmentation: bool,
    predict_fn: impl Fn(&RasterImage) -> Result<ProbabilityMap>,
) -> Result<ProbabilityMap> {
    predict_smooth_with_stats(image, window_size, subdivisions, use_augmentation, predict_fn)
        .map(|(probs, _)| probs)
}

/// [`predict_smooth`] plus [`BlendStats`].
pub fn predict_smooth_with_stats(
    image: &RasterImage,
    window_size: usize,
    subdivisions: usize,
    use_augmentation: bool,
    predict_fn: impl Fn(&RasterImage) -> Result<ProbabilityMap>,
) -> Result<(ProbabilityMap, BlendStats)> {
    if window_size < 4 || window_size % 2 != 0 {
        return Err(Error::InvalidWindow {
            reason: format!("window size {window_size} must be even and at least 4"),
        });
    }
    if subdivisions == 0 || window_size % subdivisions != 0 {
        return Err(Error::InvalidWindow {
            reason: format!("subdivisions {subdivisions} must divide window size {window_size}"),
        });
    }
    let window = make_spline_window(window_size, 2.0)?;
    let step = window_size / subdivisions;
    let margin = window_size / 2;
    let padded = mirror_pad(image, margin)?;
    let (pw, ph) = (padded.width, padded.height);

    let mut acc = vec![0.0f64; pw * ph * NUM_CLASSES];
    let mut wsum = vec![0.0f64; pw * ph];
    let mut windows_predicted = 0usize;

    for &y0 in &start_positions(ph, window_size, step) {
        for &x0 in &start_positions(pw, window_size, step) {
            let patch = crop(&padded, x0, y0, window_size, window_size);
            let pred = predict_window(&patch, use_augmentation, &predict_fn)?;
            windows_predicted += 1;
            for wy in 0..window_size {
                for wx in 0..window_size {
                    let weight = window.weights[wy * window_size + wx];
                    let gi = (y0 + wy) * pw + (x0 + wx);
                    let px = pred.pixel(wx, wy);
                    let a = &mut acc[gi * NUM_CLASSES..(gi + 1) * NUM_CLASSES];
                    for k in 0..NUM_CLASSES {
                        a[k] += weight * px[k];
                    }
                    wsum[gi] += weight;
                }
            }
        }
    }

    // Divide out accumulated weight, crop the margin, renormalize.
    let (w, h) = (image.width, image.height);
    let mut data = Vec::with_capacity(w * h * NUM_CLASSES);
    let mut max_dev = 0.0f64;
    for y in 0..h {
        for x in 0..w {
            let gi = (y + margin) * pw + (x + margin);
            let ws = wsum[gi];
            let a = &acc[gi * NUM_CLASSES..(gi + 1) * NUM_CLASSES];
            let mut px = [0.0; NUM_CLASSES];
            let mut sum = 0.0;
            for k in 0..NUM_CLASSES {
                px[k] = a[k] / ws;
                sum += px[k];
            }
            max_dev = max_dev.max((sum - 1.0).abs());
            for k in 0..NUM_CLASSES {
                data.push(px[k] / sum);
            }
        }
    }
    let probs = ProbabilityMap::new(w, h, data)?;
    probs.validate(1e-9)?;
    Ok((probs, BlendStats { windows_predicted, max_normalization_deviation: max_dev }))
}

/// Hard labels from blended probabilities (ties go to the lowest class id).
pub fn argmax_labels(probs: &ProbabilityMap) -> LabelMask {
    probs.argmax()
}

fn predict_window(
    patch: &RasterImage,
    use_augmentation: bool,
    predict_fn: &impl Fn(&RasterImage) -> Result<ProbabilityMap>,
) -> Result<ProbabilityMap> {
    let n = patch.width;
    let check = |p: &ProbabilityMap| -> Result<()> {
        if p.width != n || p.height != n {
            return Err(Error::DimensionMismatch { expected: (n, n), found: (p.width, p.height) });
        }
        Ok(())
    };
    if !use_augmentation {
        let pred = predict_fn(patch)?;
        check(&pred)?;
        return Ok(pred);
    }
    let mut acc = vec![0.0f64; n * n * NUM_CLASSES];
    for t in DihedralTransform::all() {
        let transformed = t.apply_image(patch)?;
        let pred = predict_fn(&transformed)?;
        check(&pred)?;
        let back = t.inverse().apply_probs(&pred)?;
        for (a, v) in acc.iter_mut().zip(back.data.iter()) {
            *a += v;
        }
    }
    for a in acc.iter_mut() {
        *a /= DihedralTransform::COUNT as f64;
    }
    ProbabilityMap::new(n, n, acc)
}

/// Window start offsets covering `[0, total)`: regular `step` strides plus a
/// clamped final position so the last window ends exactly at `total`.
fn start_positions(total: usize, window: usize, step: usize) -> Vec<usize> {
    debug_assert!(total >= window);
    let mut v = Vec::new();
    let mut x = 0;
    loop {
        if x + window >= total {
            v.push(total - window);
            break;
        }
        v.push(x);
        x += step;
    }
    v
}

fn crop(image: &RasterImage, x0: usize, y0: usize, w: usize, h: usize) -> RasterImage {
    let mut data = Vec::with_capacity(w * h * 3);
    for y in y0..y0 + h {
        let i = (y * image.width + x0) * 3;
        data.extend_from_slice(&image.data[i..i + w * 3]);
    }
    RasterImage { width: w, height: h, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Smooth pixel-local predictor: distribution depends only on the pixel
    /// color, strictly positive at every class.
    fn pixel_local(px: [u8; 3]) -> [f64; NUM_CLASSES] {
        let logits = [
            px[0] as f64 / 64.0,
            px[1] as f64 / 64.0,
            px[2] as f64 / 64.0,
            (px[0] as f64 + px[1] as f64 + px[2] as f64) / 192.0,
        ];
        crate::seg::softmax_vec(logits)
    }

    fn pixel_local_map(image: &RasterImage) -> Result<ProbabilityMap> {
        let mut data = Vec::with_capacity(image.width * image.height * NUM_CLASSES);
        for y in 0..image.height {
            for x in 0..image.width {
                data.extend_from_slice(&pixel_local(image.pixel(x, y)));
            }
        }
        ProbabilityMap::new(image.width, image.height, data)
    }

    fn random_image(w: usize, h: usize, seed: u64) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h * 3).map(|_| rng.gen::<u8>()).collect();
        RasterImage::new(w, h, data).unwrap()
    }

    #[test]
    fn window_profile_is_symmetric_and_positive() {
        for size in [4usize, 8, 16, 64] {
            let w = make_spline_window(size, 2.0).unwrap();
            assert_eq!(w.profile.len(), size);
            assert_eq!(w.weights.len(), size * size);
            for i in 0..size {
                assert_abs_diff_eq!(w.profile[i], w.profile[size - 1 - i], epsilon = 1e-12);
                assert!(w.profile[i] > 0.0);
            }
        }
    }

    #[test]
    fn half_step_tiling_sums_to_one() {
        // Direct tiling oracle: place copies at every half-window offset and
        // sum what lands on each position of a long interior segment.
        for size in [4usize, 8, 16, 256] {
            for power in [1.0, 2.0, 3.0] {
                let w = make_spline_window(size, power).unwrap();
                let step = size / 2;
                let span = size * 4;
                let mut sums = vec![0.0; span];
                let mut offset = 0isize - size as isize;
                while offset < span as isize {
                    for i in 0..size {
                        let g = offset + i as isize;
                        if (0..span as isize).contains(&g) {
                            sums[g as usize] += w.profile[i];
                        }
                    }
                    offset += step as isize;
                }
                // Interior positions (fully covered by two copies).
                for (i, &s) in sums.iter().enumerate().take(span - size).skip(size) {
                    assert_abs_diff_eq!(s, 1.0, epsilon = 1e-9);
                    let _ = i;
                }
            }
        }
    }

    #[test]
    fn higher_power_concentrates_weight_in_the_center() {
        let p1 = make_spline_window(16, 1.0).unwrap();
        let p2 = make_spline_window(16, 2.0).unwrap();
        let rel = |w: &BlendWindow| {
            let max = w.profile.iter().cloned().fold(0.0, f64::max);
            w.profile[0] / max
        };
        assert!(rel(&p2) < rel(&p1));
    }

    #[test]
    fn window_size_validation() {
        assert!(matches!(make_spline_window(3, 2.0), Err(Error::InvalidSize { size: 3 })));
        assert!(matches!(make_spline_window(6, 2.0), Ok(_)));
        assert!(matches!(make_spline_window(7, 2.0), Err(Error::InvalidSize { size: 7 })));
        assert!(matches!(make_spline_window(2, 2.0), Err(Error::InvalidSize { size: 2 })));
        assert!(make_spline_window(8, f64::NAN).is_err());
    }

    #[test]
    fn mirror_pad_matches_hand_checked_reflection() {
        // Row (a,b,c,d) with margin 2 -> (c,b,a,b,c,d,c,b).
        let a = [10, 0, 0];
        let b = [20, 0, 0];
        let c = [30, 0, 0];
        let d = [40, 0, 0];
        let mut img = RasterImage::filled(4, 3, [0, 0, 0]);
        for (x, px) in [a, b, c, d].into_iter().enumerate() {
            for y in 0..3 {
                img.set_pixel(x, y, px);
            }
        }
        let padded = mirror_pad(&img, 2).unwrap();
        assert_eq!((padded.width, padded.height), (8, 7));
        let row: Vec<u8> = (0..8).map(|x| padded.pixel(x, 3)[0]).collect();
        assert_eq!(row, vec![30, 20, 10, 20, 30, 40, 30, 20]);
    }

    #[test]
    fn mirror_pad_center_is_bit_exact_and_margin_checked() {
        let img = random_image(9, 7, 3);
        assert_eq!(mirror_pad(&img, 0).unwrap().data, img.data);

        let padded = mirror_pad(&img, 4).unwrap();
        for y in 0..7 {
            for x in 0..9 {
                assert_eq!(padded.pixel(x + 4, y + 4), img.pixel(x, y));
            }
        }
        assert!(matches!(mirror_pad(&img, 7), Err(Error::MarginTooLarge { .. })));
    }

    #[test]
    fn dihedral_identity_and_constant_invariance() {
        let img = random_image(4, 4, 8);
        assert_eq!(
            DihedralTransform::IDENTITY.apply_image(&img).unwrap().data,
            img.data
        );
        let flat = RasterImage::filled(4, 4, [7, 8, 9]);
        for t in DihedralTransform::all() {
            assert_eq!(t.apply_image(&flat).unwrap().data, flat.data);
        }
    }

    #[test]
    fn dihedral_variants_of_marked_patch_are_distinct() {
        // 2x2 patch with four distinct corners: the dihedral orbit has size 8.
        let mut img = RasterImage::filled(2, 2, [0, 0, 0]);
        img.set_pixel(0, 0, [1, 0, 0]);
        img.set_pixel(1, 0, [2, 0, 0]);
        img.set_pixel(0, 1, [3, 0, 0]);
        img.set_pixel(1, 1, [4, 0, 0]);
        let variants: Vec<Vec<u8>> = DihedralTransform::all()
            .map(|t| t.apply_image(&img).unwrap().data)
            .collect();
        for i in 0..8 {
            for j in 0..i {
                assert_ne!(variants[i], variants[j], "elements {j} and {i} coincide");
            }
        }
    }

    #[test]
    fn dihedral_invert_restores_patch_bit_exactly() {
        let img = random_image(5, 5, 13);
        for t in DihedralTransform::all() {
            let there = dihedral_apply(&img, t).unwrap();
            let back = dihedral_invert(&there, t).unwrap();
            assert_eq!(back.data, img.data, "element {}", t.id());
        }
        // Same law on probability maps.
        let probs = pixel_local_map(&img).unwrap();
        for t in DihedralTransform::all() {
            let back = t.inverse().apply_probs(&t.apply_probs(&probs).unwrap()).unwrap();
            assert_eq!(back.data, probs.data);
        }
    }

    #[test]
    fn dihedral_group_is_closed_under_composition() {
        // For every pair (a, b) there must be exactly one element c with
        // apply(apply(p, a), b) = apply(p, c) on a fully marked patch.
        let mut img = RasterImage::filled(3, 3, [0, 0, 0]);
        for y in 0..3 {
            for x in 0..3 {
                img.set_pixel(x, y, [(y * 3 + x) as u8, 0, 0]);
            }
        }
        let table: Vec<Vec<u8>> = DihedralTransform::all()
            .map(|t| t.apply_image(&img).unwrap().data)
            .collect();
        for a in DihedralTransform::all() {
            for b in DihedralTransform::all() {
                let composed = b.apply_image(&a.apply_image(&img).unwrap()).unwrap();
                let matches: Vec<usize> = table
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| **d == composed.data)
                    .map(|(i, _)| i)
                    .collect();
                assert_eq!(matches.len(), 1, "composition {}*{} not unique", a.id(), b.id());
            }
        }
    }

    #[test]
    fn dihedral_rejects_non_square() {
        let img = random_image(4, 2, 0);
        assert!(matches!(
            dihedral_apply(&img, DihedralTransform::IDENTITY),
            Err(Error::NonSquarePatch { .. })
        ));
    }

    #[test]
    fn constant_predictor_blends_to_constant() {
        let dist = [0.1, 0.2, 0.3, 0.4];
        let image = random_image(30, 22, 17);
        for use_aug in [false, true] {
            for window in [8usize, 16] {
                let probs = predict_smooth(&image, window, 2, use_aug, |p| {
                    Ok(ProbabilityMap::constant(p.width, p.height, dist))
                })
                .unwrap();
                assert_eq!((probs.width, probs.height), (30, 22));
                for y in 0..22 {
                    for x in 0..30 {
                        for k in 0..NUM_CLASSES {
                            assert_abs_diff_eq!(probs.pixel(x, y)[k], dist[k], epsilon = 1e-6);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn pixel_local_predictor_matches_whole_image_oracle() {
        let image = random_image(40, 26, 29);
        let oracle = pixel_local_map(&image).unwrap();
        for use_aug in [false, true] {
            let (probs, stats) =
                predict_smooth_with_stats(&image, 8, 2, use_aug, pixel_local_map).unwrap();
            for (got, want) in probs.data.iter().zip(oracle.data.iter()) {
                assert_abs_diff_eq!(got, want, epsilon = 1e-6);
            }
            assert!(stats.max_normalization_deviation < 1e-6, "{stats:?}");
            assert!(stats.windows_predicted > 0);
        }
    }

    #[test]
    fn blending_is_mirror_equivariant() {
        let image = random_image(24, 18, 31);
        let mirrored = {
            let mut m = RasterImage::filled(24, 18, [0, 0, 0]);
            for y in 0..18 {
                for x in 0..24 {
                    m.set_pixel(23 - x, y, image.pixel(x, y));
                }
            }
            m
        };
        let a = predict_smooth(&image, 8, 2, false, pixel_local_map).unwrap();
        let b = predict_smooth(&mirrored, 8, 2, false, pixel_local_map).unwrap();
        for y in 0..18 {
            for x in 0..24 {
                for k in 0..NUM_CLASSES {
                    assert_abs_diff_eq!(
                        a.pixel(x, y)[k],
                        b.pixel(23 - x, y)[k],
                        epsilon = 1e-9
                    );
                }
            }
        }
    }

    #[test]
    fn predict_smooth_validates_inputs_and_propagates_errors() {
        let image = random_image(20, 20, 5);
        assert!(matches!(
            predict_smooth(&image, 7, 2, false, pixel_local_map),
            Err(Error::InvalidWindow { .. })
        ));
        assert!(matches!(
            predict_smooth(&image, 8, 0, false, pixel_local_map),
            Err(Error::InvalidWindow { .. })
        ));
        assert!(matches!(
            predict_smooth(&image, 8, 3, false, pixel_local_map),
            Err(Error::InvalidWindow { .. })
        ));
        // Wrong-size predictor output.
        assert!(matches!(
            predict_smooth(&image, 8, 2, false, |_| Ok(ProbabilityMap::constant(
                2,
                2,
                [0.25; NUM_CLASSES]
            ))),
            Err(Error::DimensionMismatch { .. })
        ));
        // Window larger than the padded image is impossible by construction
        // (padding adds a full window), but a huge margin can still overflow
        // a tiny image's own mirror constraint.
        let tiny = random_image(4, 4, 6);
        assert!(matches!(
            predict_smooth(&tiny, 16, 2, false, pixel_local_map),
            Err(Error::MarginTooLarge { .. })
        ));
    }

    #[test]
    fn argmax_rules() {
        let one_hot = ProbabilityMap::constant(2, 2, [0.0, 0.0, 1.0, 0.0]);
        assert!(argmax_labels(&one_hot).classes.iter().all(|&c| c == 2));
        let uniform = ProbabilityMap::constant(2, 2, [0.25; NUM_CLASSES]);
        assert!(argmax_labels(&uniform).classes.iter().all(|&c| c == 0));
        let graded = ProbabilityMap::constant(2, 2, [0.1, 0.2, 0.3, 0.4]);
        assert!(argmax_labels(&graded).classes.iter().all(|&c| c == 3));
    }

    #[test]
    fn start_positions_cover_and_clamp() {
        assert_eq!(start_positions(16, 8, 4), vec![0, 4, 8]);
        assert_eq!(start_positions(18, 8, 4), vec![0, 4, 8, 10]);
        assert_eq!(start_positions(8, 8, 4), vec![0]);
        for (total, window, step) in [(16, 8, 4), (18, 8, 4), (23, 6, 3)] {
            let pos = start_positions(total, window, step);
            assert_eq!(*pos.last().unwrap(), total - window);
            let mut covered = vec![false; total];
            for p in pos {
                for i in p..p + window {
                    covered[i] = true;
                }
            }
            assert!(covered.iter().all(|&c| c));
        }
    }
}
