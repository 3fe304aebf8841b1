//! Loss functions: categorical focal loss, soft Jaccard loss, their weighted
//! sum, and the softmax that feeds them.

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::raster::{LabelMask, NUM_CLASSES};

use super::{ProbabilityMap, TrainConfig};

/// Probabilities below this are clamped before taking the log.
const LOG_CLAMP: f64 = 1e-12;

/// Numerically stable softmax of one logit vector (max subtraction).
pub fn softmax_vec(logits: [f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_CLASSES];
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits.iter()) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    out
}

/// Softmax over the class axis of a `[NUM_CLASSES, H, W]` logit volume.
pub fn softmax(logits: &Array3<f64>) -> Result<ProbabilityMap> {
    let (k, h, w) = logits.dim();
    if k != NUM_CLASSES {
        return Err(Error::ShapeMismatch { expected: NUM_CLASSES, found: k });
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mut data = Vec::with_capacity(w * h * NUM_CLASSES);
    for y in 0..h {
        for x in 0..w {
            let z = [
                logits[[0, y, x]],
                logits[[1, y, x]],
                logits[[2, y, x]],
                logits[[3, y, x]],
            ];
            data.extend_from_slice(&softmax_vec(z));
        }
    }
    ProbabilityMap::new(w, h, data)
}

fn check_dims(probs: &ProbabilityMap, labels: &LabelMask) -> Result<()> {
    if probs.width != labels.width || probs.height != labels.height {
        return Err(Error::DimensionMismatch {
            expected: (probs.width, probs.height),
            found: (labels.width, labels.height),
        });
    }
    Ok(())
}

/// Categorical focal loss `-(1 - p_y)^gamma * log(p_y)`, averaged over pixels.
pub fn focal_loss(probs: &ProbabilityMap, labels: &LabelMask, gamma: f64) -> Result<f64> {
    check_dims(probs, labels)?;
    let n = (probs.width * probs.height) as f64;
    let mut total = 0.0;
    for (px, &y) in probs.data.chunks_exact(NUM_CLASSES).zip(labels.classes.iter()) {
        let p = px[y as usize].clamp(LOG_CLAMP, 1.0);
        total += -(1.0 - p).powf(gamma) * p.ln();
    }
    Ok(total / n)
}

/// Soft Jaccard loss `1 - mean_c J_c` with
/// `J_c = sum(p*g) / (sum(p) + sum(g) - sum(p*g))`.
///
/// A class with no prediction mass and no ground-truth pixels contributes
/// `J_c = 1` so that a perfect one-hot prediction scores zero loss.
pub fn jaccard_loss(probs: &ProbabilityMap, labels: &LabelMask) -> Result<f64> {
    check_dims(probs, labels)?;
    let (inter, pred_sum, truth_sum) = jaccard_sums(probs, labels);
    let mut total = 0.0;
    for c in 0..NUM_CLASSES {
        let union = pred_sum[c] + truth_sum[c] - inter[c];
        total += if union > 0.0 { inter[c] / union } else { 1.0 };
    }
    Ok(1.0 - total / NUM_CLASSES as f64)
}

fn jaccard_sums(
    probs: &ProbabilityMap,
    labels: &LabelMask,
) -> ([f64; NUM_CLASSES], [f64; NUM_CLASSES], [f64; NUM_CLASSES]) {
    let mut inter = [0.0; NUM_CLASSES];
    let mut pred_sum = [0.0; NUM_CLASSES];
    let mut truth_sum = [0.0; NUM_CLASSES];
    for (px, &y) in probs.data.chunks_exact(NUM_CLASSES).zip(labels.classes.iter()) {
        for c in 0..NUM_CLASSES {
            pred_sum[c] += px[c];
        }
        inter[y as usize] += px[y as usize];
        truth_sum[y as usize] += 1.0;
    }
    (inter, pred_sum, truth_sum)
}

/// Weighted sum of focal and Jaccard loss per the training configuration.
pub fn combined_loss(probs: &ProbabilityMap, labels: &LabelMask, config: &TrainConfig) -> Result<f64> {
    let w = config.loss_weights;
    Ok(w.focal * focal_loss(probs, labels, config.gamma)? + w.jaccard * jaccard_loss(probs, labels)?)
}

/// Combined loss plus its gradient with respect to the pre-softmax logits,
/// shaped `[NUM_CLASSES, H, W]`. Used by backpropagation.
pub(crate) fn combined_loss_grad(
    probs: &ProbabilityMap,
    labels: &LabelMask,
    config: &TrainConfig,
) -> Result<(f64, Array3<f64>)> {
    check_dims(probs, labels)?;
    let (w, h) = (probs.width, probs.height);
    let n = (w * h) as f64;
    let gamma = config.gamma;
    let weights = config.loss_weights;

    let (inter, pred_sum, truth_sum) = jaccard_sums(probs, labels);
    let mut union = [0.0; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        union[c] = pred_sum[c] + truth_sum[c] - inter[c];
    }

    let loss = combined_loss(probs, labels, config)?;

    let mut dlogits = Array3::<f64>::zeros((NUM_CLASSES, h, w));
    for y in 0..h {
        for x in 0..w {
            let px = probs.pixel(x, y);
            let truth = labels.class(x, y) as usize;

            // dL/dp per class at this pixel.
            let mut dp = [0.0; NUM_CLASSES];

            // Focal term only touches the true-class probability.
            let p = px[truth].clamp(LOG_CLAMP, 1.0);
            let one_minus = 1.0 - p;
            let dfocal = if gamma == 0.0 {
                -1.0 / p
            } else if one_minus <= 1e-15 {
                0.0
            } else {
                gamma * one_minus.powf(gamma - 1.0) * p.ln() - one_minus.powf(gamma) / p
            };
            dp[truth] += weights.focal * dfocal / n;

            // Jaccard term: dJ_c/dp_c(i) = (g*U - I*(1-g)) / U^2.
            for c in 0..NUM_CLASSES {
                if union[c] > 0.0 {
                    let g = if c == truth { 1.0 } else { 0.0 };
                    let dj = (g * union[c] - inter[c] * (1.0 - g)) / (union[c] * union[c]);
                    dp[c] += -weights.jaccard * dj / NUM_CLASSES as f64;
                }
            }

            // Softmax backward: dL/dz_k = p_k * (dL/dp_k - sum_c dL/dp_c * p_c).
            let dot: f64 = dp.iter().zip(px.iter()).map(|(d, p)| d * p).sum();
            for k in 0..NUM_CLASSES {
                dlogits[[k, y, x]] = px[k] * (dp[k] - dot);
            }
        }
    }
    Ok((loss, dlogits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array3;

    fn one_hot_map(labels: &LabelMask) -> ProbabilityMap {
        let mut data = vec![0.0; labels.width * labels.height * NUM_CLASSES];
        for (i, &c) in labels.classes.iter().enumerate() {
            data[i * NUM_CLASSES + c as usize] = 1.0;
        }
        ProbabilityMap::new(labels.width, labels.height, data).unwrap()
    }

    #[test]
    fn softmax_symmetry_and_dominance() {
        let p = softmax_vec([0.0, 0.0, 0.0, 0.0]);
        for v in p {
            assert_abs_diff_eq!(v, 0.25, epsilon = 1e-12);
        }
        let p = softmax_vec([1000.0, 0.0, 0.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!(p[0] > 1.0 - 1e-9);
    }

    #[test]
    fn softmax_matches_independent_evaluation() {
        // exp(1..4)/sum, computed separately.
        let p = softmax_vec([1.0, 2.0, 3.0, 4.0]);
        let expect = [
            0.03205860328008499,
            0.08714431874203257,
            0.23688281808991013,
            0.6439142598879722,
        ];
        for (got, want) in p.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn softmax_map_normalizes_and_rejects_non_finite() {
        let logits = Array3::from_shape_fn((NUM_CLASSES, 3, 5), |(k, y, x)| {
            (k * 7 + y * 3 + x) as f64 * 0.37 - 2.0
        });
        let map = softmax(&logits).unwrap();
        map.validate(1e-9).unwrap();

        let mut bad = logits.clone();
        bad[[0, 0, 0]] = f64::NAN;
        assert!(matches!(softmax(&bad), Err(Error::NonFiniteInput)));
    }

    #[test]
    fn focal_zero_for_perfect_prediction() {
        let labels = LabelMask::new(2, 2, vec![0, 1, 2, 3]).unwrap();
        let probs = one_hot_map(&labels);
        assert_abs_diff_eq!(focal_loss(&probs, &labels, 2.0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn focal_reduces_to_cross_entropy_at_gamma_zero() {
        // p_y = 0.5 everywhere, gamma 0 -> -ln(0.5).
        let labels = LabelMask::filled(4, 4, 1).unwrap();
        let mut probs = ProbabilityMap::constant(4, 4, [0.5, 0.5, 0.0, 0.0]);
        for px in probs.data.chunks_exact_mut(NUM_CLASSES) {
            px.swap(0, 1); // p at class 1 = 0.5 regardless
        }
        let got = focal_loss(&probs, &labels, 0.0).unwrap();
        assert_abs_diff_eq!(got, 0.6931471805599453, epsilon = 1e-9);
    }

    #[test]
    fn focal_matches_direct_formula_at_gamma_two() {
        let labels = LabelMask::filled(4, 4, 0).unwrap();
        let probs = ProbabilityMap::constant(4, 4, [0.5, 0.5, 0.0, 0.0]);
        let got = focal_loss(&probs, &labels, 2.0).unwrap();
        // 0.25 * ln 2, computed separately.
        assert_abs_diff_eq!(got, 0.17328679513998632, epsilon = 1e-9);
    }

    #[test]
    fn focal_rejects_dim_mismatch() {
        let labels = LabelMask::filled(3, 3, 0).unwrap();
        let probs = ProbabilityMap::constant(2, 2, [1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            focal_loss(&probs, &labels, 2.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn jaccard_zero_iff_one_hot_match() {
        let labels = LabelMask::new(2, 2, vec![2, 2, 0, 3]).unwrap();
        let probs = one_hot_map(&labels);
        assert_abs_diff_eq!(jaccard_loss(&probs, &labels).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn jaccard_one_for_fully_disjoint_prediction() {
        // Truth uses classes {0,1}; prediction puts all mass on {2,3}.
        // Every class is present on exactly one side, so all four J_c = 0.
        let labels = LabelMask::new(2, 2, vec![0, 0, 1, 1]).unwrap();
        let pred_labels = LabelMask::new(2, 2, vec![2, 2, 3, 3]).unwrap();
        let probs = one_hot_map(&pred_labels);
        assert_abs_diff_eq!(jaccard_loss(&probs, &labels).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn jaccard_uniform_matches_brute_force() {
        // Uniform 0.25 everywhere vs an all-class-2 mask; brute-force oracle
        // sums every pixel the long way.
        let (w, h) = (6, 5);
        let labels = LabelMask::filled(w, h, 2).unwrap();
        let probs = ProbabilityMap::constant(w, h, [0.25; NUM_CLASSES]);

        let mut total_j = 0.0;
        for c in 0..NUM_CLASSES {
            let mut inter = 0.0;
            let mut psum = 0.0;
            let mut gsum = 0.0;
            for y in 0..h {
                for x in 0..w {
                    let p = probs.pixel(x, y)[c];
                    let g = if labels.class(x, y) as usize == c { 1.0 } else { 0.0 };
                    inter += p * g;
                    psum += p;
                    gsum += g;
                }
            }
            let u = psum + gsum - inter;
            total_j += if u > 0.0 { inter / u } else { 1.0 };
        }
        let oracle = 1.0 - total_j / NUM_CLASSES as f64;

        let got = jaccard_loss(&probs, &labels).unwrap();
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-12);
        // Analytic value: J_2 = 0.25, others 0 -> loss 1 - 0.0625.
        assert_abs_diff_eq!(got, 0.9375, epsilon = 1e-12);
    }

    #[test]
    fn jaccard_stays_in_unit_interval() {
        let labels = LabelMask::new(3, 3, vec![0, 1, 2, 3, 0, 1, 2, 3, 0]).unwrap();
        for seed in 0..20u64 {
            let mut data = Vec::new();
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            for _ in 0..9 {
                let mut px = [0.0; NUM_CLASSES];
                let mut sum = 0.0;
                for p in px.iter_mut() {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    *p = ((state >> 11) as f64 / (1u64 << 53) as f64).max(1e-9);
                    sum += *p;
                }
                for p in px.iter_mut() {
                    *p /= sum;
                }
                data.extend_from_slice(&px);
            }
            let probs = ProbabilityMap::new(3, 3, data).unwrap();
            let l = jaccard_loss(&probs, &labels).unwrap();
            assert!((0.0..=1.0).contains(&l), "loss {l} out of range");
        }
    }

    #[test]
    fn combined_is_additive() {
        let labels = LabelMask::filled(4, 4, 1).unwrap();
        let probs = ProbabilityMap::constant(4, 4, [0.25; NUM_CLASSES]);
        let config = TrainConfig::default();
        let f = focal_loss(&probs, &labels, config.gamma).unwrap();
        let j = jaccard_loss(&probs, &labels).unwrap();
        let c = combined_loss(&probs, &labels, &config).unwrap();
        assert_abs_diff_eq!(c, f + j, epsilon = 1e-12);

        let focal_only = TrainConfig {
            loss_weights: super::super::LossWeights { focal: 1.0, jaccard: 0.0 },
            ..TrainConfig::default()
        };
        assert_abs_diff_eq!(
            combined_loss(&probs, &labels, &focal_only).unwrap(),
            f,
            epsilon = 1e-12
        );
    }

    #[test]
    fn combined_zero_for_perfect_prediction() {
        let labels = LabelMask::new(2, 2, vec![0, 1, 2, 3]).unwrap();
        let probs = one_hot_map(&labels);
        let c = combined_loss(&probs, &labels, &TrainConfig::default()).unwrap();
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
    }
}
