//! The training loop: minibatched Adam over labelled patches, per-epoch
//! train/validation statistics, history CSV output, and JSON checkpoints that
//! allow bit-exact resume.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{LabelMask, RasterImage};

use super::loss::combined_loss;
use super::metrics::{confusion, iou, ConfusionCounts};
use super::net::{gradients, ToySegNet};
use super::optim::{adam_step, AdamState};
use super::TrainConfig;

pub const CHECKPOINT_VERSION: u32 = 1;

/// One labelled training image.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub image: RasterImage,
    pub labels: LabelMask,
}

/// Post-epoch statistics over the full train and validation sets.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// 1-based epoch number, counted across resumes.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_miou: f64,
    pub val_loss: f64,
    pub val_miou: f64,
}

/// Serialized training state. Parameters and optimizer moments are stored as
/// JSON numbers, which round-trip `f64` exactly, so a resumed run continues
/// bit-for-bit where the original left off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed optimizer steps.
    pub step: u64,
    pub config: TrainConfig,
    pub width: usize,
    pub params: Vec<f64>,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
}

impl Checkpoint {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        let mut writer = BufWriter::new(file);
        serde_json::to_writer(&mut writer, self)?;
        writer.flush()?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Checkpoint> {
        if !path.is_file() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let ckpt: Checkpoint = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::invalid_arg(
                "checkpoint",
                format!("unsupported version {}, expected {CHECKPOINT_VERSION}", ckpt.version),
            ));
        }
        Ok(ckpt)
    }
}

/// Network plus optimizer state plus progress counters.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub net: ToySegNet,
    pub config: TrainConfig,
    pub adam: AdamState,
    pub epochs_done: usize,
}

impl Trainer {
    /// Fresh trainer with a `config.seed`-initialized network.
    pub fn new(width: usize, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let net = ToySegNet::new(width, config.seed)?;
        let n = ToySegNet::param_count(width);
        Ok(Trainer { net, config, adam: AdamState::new(n), epochs_done: 0 })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            epoch: self.epochs_done,
            step: self.adam.t,
            config: self.config.clone(),
            width: self.net.width,
            params: self.net.to_flat(),
            adam_m: self.adam.m.clone(),
            adam_v: self.adam.v.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        ckpt.config.validate()?;
        let net = ToySegNet::from_flat(ckpt.width, &ckpt.params)?;
        let n = ckpt.params.len();
        if ckpt.adam_m.len() != n || ckpt.adam_v.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: ckpt.adam_m.len().min(ckpt.adam_v.len()),
            });
        }
        Ok(Trainer {
            net,
            config: ckpt.config.clone(),
            adam: AdamState { m: ckpt.adam_m.clone(), v: ckpt.adam_v.clone(), t: ckpt.step },
            epochs_done: ckpt.epoch,
        })
    }

    /// Mean combined loss and mean IoU over a sample set (no updates).
    pub fn evaluate(&self, samples: &[TrainSample]) -> Result<(f64, f64)> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut loss_sum = 0.0;
        let mut counts = ConfusionCounts::default();
        for s in samples {
            let probs = self.net.predict(&s.image)?;
            loss_sum += combined_loss(&probs, &s.labels, &self.config)?;
            counts.merge(&confusion(&probs.argmax(), &s.labels)?);
        }
        let miou = iou(&counts).mean.expect("label mask is never empty");
        Ok((loss_sum / samples.len() as f64, miou))
    }
}

/// The shuffle order for an epoch depends only on `(seed, epoch index)`, so a
/// resumed run visits samples in the same order a continuous run would.
fn epoch_seed(base: u64, epoch_index: usize) -> u64 {
    base ^ (epoch_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Train for `epochs` additional epochs, invoking `on_epoch` after each —
/// the callback sees the post-epoch trainer so callers can checkpoint every
/// epoch. With `epochs = 0` the network is returned untouched and the history
/// is empty.
///
/// Each epoch shuffles the train set with an epoch-derived seed, walks it in
/// minibatches of `config.batch_size` (final partial batch included), and
/// applies one Adam step per batch on the batch-averaged gradient.
pub fn train(
    trainer: &mut Trainer,
    train_set: &[TrainSample],
    val_set: &[TrainSample],
    epochs: usize,
    mut on_epoch: impl FnMut(&Trainer, &EpochStats) -> Result<()>,
) -> Result<Vec<EpochStats>> {
    trainer.config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let epoch_index = trainer.epochs_done;
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed(trainer.config.seed, epoch_index));
        order.shuffle(&mut rng);

        for batch in order.chunks(trainer.config.batch_size) {
            let mut grad_acc: Option<Vec<f64>> = None;
            for &idx in batch {
                let s = &train_set[idx];
                let (_, grads) = gradients(&trainer.net, &s.image, &s.labels, &trainer.config)?;
                let flat = grads.to_flat();
                match grad_acc.as_mut() {
                    None => grad_acc = Some(flat),
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(flat.iter()) {
                            *a += g;
                        }
                    }
                }
            }
            let mut grad = grad_acc.expect("non-empty batch");
            let scale = 1.0 / batch.len() as f64;
            for g in grad.iter_mut() {
                *g *= scale;
            }
            let mut params = trainer.net.to_flat();
            adam_step(&mut params, &grad, &mut trainer.adam, &trainer.config)?;
            trainer.net = ToySegNet::from_flat(trainer.net.width, &params)?;
        }

        trainer.epochs_done += 1;
        let (train_loss, train_miou) = trainer.evaluate(train_set)?;
        let (val_loss, val_miou) = trainer.evaluate(val_set)?;
        let stats = EpochStats {
            epoch: trainer.epochs_done,
            train_loss,
            train_miou,
            val_loss,
            val_miou,
        };
        on_epoch(trainer, &stats)?;
        history.push(stats);
    }
    Ok(history)
}

/// Write history as CSV with header `epoch,split,loss,miou`, one `train` and
/// one `val` row per epoch. Floats use the shortest exact representation.
pub fn write_history_csv(path: &Path, history: &[EpochStats]) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "epoch,split,loss,miou")?;
    for s in history {
        writeln!(w, "{},train,{},{}", s.epoch, s.train_loss, s.train_miou)?;
        writeln!(w, "{},val,{},{}", s.epoch, s.val_loss, s.val_miou)?;
    }
    w.flush()?;
    Ok(())
}
