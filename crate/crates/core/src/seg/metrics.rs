//! Evaluation metrics: per-class confusion counts and intersection-over-union.

use crate::error::{Error, Result};
use crate::raster::{LabelMask, NUM_CLASSES};

/// Per-class true positive / false positive / false negative tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: [u64; NUM_CLASSES],
    pub fp: [u64; NUM_CLASSES],
    pub fn_: [u64; NUM_CLASSES],
}

impl ConfusionCounts {
    /// Merge counts from another tally (e.g. accumulated across patches).
    pub fn merge(&mut self, other: &ConfusionCounts) {
        for c in 0..NUM_CLASSES {
            self.tp[c] += other.tp[c];
            self.fp[c] += other.fp[c];
            self.fn_[c] += other.fn_[c];
        }
    }
}

/// Per-class IoU plus the mean over classes present in either mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IouScores {
    /// `None` for classes absent from both prediction and ground truth.
    pub per_class: [Option<f64>; NUM_CLASSES],
    /// Mean over the `Some` entries; `None` if every class is absent.
    pub mean: Option<f64>,
}

/// Tally per-class confusion counts between a predicted and a true mask.
pub fn confusion(pred: &LabelMask, truth: &LabelMask) -> Result<ConfusionCounts> {
    if pred.width != truth.width || pred.height != truth.height {
        return Err(Error::DimensionMismatch {
            expected: (truth.width, truth.height),
            found: (pred.width, pred.height),
        });
    }
    let mut counts = ConfusionCounts::default();
    for (&p, &t) in pred.classes.iter().zip(truth.classes.iter()) {
        let (p, t) = (p as usize, t as usize);
        if p == t {
            counts.tp[p] += 1;
        } else {
            counts.fp[p] += 1;
            counts.fn_[t] += 1;
        }
    }
    Ok(counts)
}

/// IoU per class (`TP / (TP + FP + FN)`) and the mean over classes that occur
/// in at least one of the masks. Classes absent from both are skipped rather
/// than scored, so they neither reward nor penalize the mean.
pub fn iou(counts: &ConfusionCounts) -> IouScores {
    let mut per_class = [None; NUM_CLASSES];
    let mut total = 0.0;
    let mut n = 0usize;
    for c in 0..NUM_CLASSES {
        let denom = counts.tp[c] + counts.fp[c] + counts.fn_[c];
        if denom > 0 {
            let v = counts.tp[c] as f64 / denom as f64;
            per_class[c] = Some(v);
            total += v;
            n += 1;
        }
    }
    IouScores {
        per_class,
        mean: if n > 0 { Some(total / n as f64) } else { None },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_prediction_scores_one() {
        let truth = LabelMask::new(2, 2, vec![0, 1, 2, 3]).unwrap();
        let scores = iou(&confusion(&truth, &truth).unwrap());
        for c in 0..NUM_CLASSES {
            assert_abs_diff_eq!(scores.per_class[c].unwrap(), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(scores.mean.unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hand_worked_two_class_example() {
        // 6 pixels. Truth:  0 0 0 1 1 1
        //           Pred:   0 0 1 1 1 0
        // Class 0: TP=2, FP=1, FN=1 -> 2/4 = 0.5
        // Class 1: TP=2, FP=1, FN=1 -> 0.5
        let truth = LabelMask::new(6, 1, vec![0, 0, 0, 1, 1, 1]).unwrap();
        let pred = LabelMask::new(6, 1, vec![0, 0, 1, 1, 1, 0]).unwrap();
        let counts = confusion(&pred, &truth).unwrap();
        assert_eq!(counts.tp, [2, 2, 0, 0]);
        assert_eq!(counts.fp, [1, 1, 0, 0]);
        assert_eq!(counts.fn_, [1, 1, 0, 0]);

        let scores = iou(&counts);
        assert_abs_diff_eq!(scores.per_class[0].unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(scores.per_class[1].unwrap(), 0.5, epsilon = 1e-12);
        assert!(scores.per_class[2].is_none());
        assert!(scores.per_class[3].is_none());
        assert_abs_diff_eq!(scores.mean.unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn absent_class_excluded_from_mean() {
        // Only class 0 in truth; prediction gets half right with class 1.
        // Class 0: TP=2 FP=0 FN=2 -> 0.5. Class 1: TP=0 FP=2 FN=0 -> 0.
        // Classes 2, 3 absent everywhere -> excluded. Mean = 0.25, not 0.125.
        let truth = LabelMask::new(4, 1, vec![0, 0, 0, 0]).unwrap();
        let pred = LabelMask::new(4, 1, vec![0, 0, 1, 1]).unwrap();
        let scores = iou(&confusion(&pred, &truth).unwrap());
        assert_abs_diff_eq!(scores.per_class[0].unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(scores.per_class[1].unwrap(), 0.0, epsilon = 1e-12);
        assert!(scores.per_class[2].is_none());
        assert_abs_diff_eq!(scores.mean.unwrap(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn counts_are_mergeable() {
        let truth_a = LabelMask::new(2, 1, vec![0, 1]).unwrap();
        let pred_a = LabelMask::new(2, 1, vec![0, 0]).unwrap();
        let truth_b = LabelMask::new(2, 1, vec![2, 2]).unwrap();
        let pred_b = LabelMask::new(2, 1, vec![2, 3]).unwrap();

        let mut merged = confusion(&pred_a, &truth_a).unwrap();
        merged.merge(&confusion(&pred_b, &truth_b).unwrap());

        let whole_truth = LabelMask::new(4, 1, vec![0, 1, 2, 2]).unwrap();
        let whole_pred = LabelMask::new(4, 1, vec![0, 0, 2, 3]).unwrap();
        assert_eq!(merged, confusion(&whole_pred, &whole_truth).unwrap());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = LabelMask::filled(2, 2, 0).unwrap();
        let b = LabelMask::filled(3, 2, 0).unwrap();
        assert!(matches!(confusion(&a, &b), Err(Error::DimensionMismatch { .. })));
    }
}
