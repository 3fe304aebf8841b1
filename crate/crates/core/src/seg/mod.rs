//! Desk-scale trainable per-pixel classifier: losses, IoU metric, a miniature
//! encoder-decoder network with hand-written gradients, Adam, and the
//! checkpointed training loop.

mod loss;
mod metrics;
mod net;
mod optim;
mod train;

pub use loss::{combined_loss, focal_loss, jaccard_loss, softmax, softmax_vec};
pub use metrics::{confusion, iou, ConfusionCounts, IouScores};
pub use net::{gradients, image_to_input, Gradients, ToySegNet};
pub use optim::{adam_step, AdamState};
pub use train::{
    train, write_history_csv, Checkpoint, EpochStats, TrainSample, Trainer, CHECKPOINT_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::NUM_CLASSES;

/// Per-pixel distribution over the `NUM_CLASSES` land-cover classes.
///
/// Stored row-major with the class axis innermost:
/// `data[(y * width + x) * NUM_CLASSES + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl ProbabilityMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * NUM_CLASSES {
            return Err(Error::ShapeMismatch {
                expected: width * height * NUM_CLASSES,
                found: data.len(),
            });
        }
        Ok(ProbabilityMap { width, height, data })
    }

    /// Same distribution at every pixel.
    pub fn constant(width: usize, height: usize, dist: [f64; NUM_CLASSES]) -> Self {
        let mut data = Vec::with_capacity(width * height * NUM_CLASSES);
        for _ in 0..width * height {
            data.extend_from_slice(&dist);
        }
        ProbabilityMap { width, height, data }
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * NUM_CLASSES;
        &self.data[i..i + NUM_CLASSES]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let i = (y * self.width + x) * NUM_CLASSES;
        &mut self.data[i..i + NUM_CLASSES]
    }

    /// Hard labels: the most probable class per pixel, ties broken toward the
    /// lowest class id.
    pub fn argmax(&self) -> crate::raster::LabelMask {
        let classes = self
            .data
            .chunks_exact(NUM_CLASSES)
            .map(|px| {
                let mut best = 0usize;
                for k in 1..NUM_CLASSES {
                    if px[k] > px[best] {
                        best = k;
                    }
                }
                best as u8
            })
            .collect();
        crate::raster::LabelMask { width: self.width, height: self.height, classes }
    }

    /// Check the distribution invariant: entries in [0,1], pixel sums within
    /// `tol` of 1.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for px in self.data.chunks_exact(NUM_CLASSES) {
            let mut sum = 0.0;
            for &p in px {
                if !p.is_finite() || !(0.0..=1.0 + tol).contains(&p) {
                    return Err(Error::NonFiniteInput);
                }
                sum += p;
            }
            if (sum - 1.0).abs() > tol {
                return Err(Error::invalid_arg(
                    "probability_map",
                    format!("pixel distribution sums to {sum}, expected 1"),
                ));
            }
        }
        Ok(())
    }
}

/// Hyperparameters for the training loop and the combined loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Focal-loss focusing exponent.
    pub gamma: f64,
    pub loss_weights: LossWeights,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub focal: f64,
    pub jaccard: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            gamma: 2.0,
            loss_weights: LossWeights { focal: 1.0, jaccard: 1.0 },
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gamma < 0.0 || !self.gamma.is_finite() {
            return Err(Error::invalid_arg("gamma", "must be finite and >= 0"));
        }
        let w = &self.loss_weights;
        if w.focal < 0.0 || w.jaccard < 0.0 {
            return Err(Error::invalid_arg("loss_weights", "must be >= 0"));
        }
        if w.focal == 0.0 && w.jaccard == 0.0 {
            return Err(Error::invalid_arg("loss_weights", "must not both be zero"));
        }
        if self.batch_size < 1 {
            return Err(Error::invalid_arg("batch_size", "must be >= 1"));
        }
        Ok(())
    }
}
