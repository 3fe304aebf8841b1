//! The desk-scale segmentation network and its hand-written backpropagation.
//!
//! Architecture (all convolutions zero-padded to preserve spatial size):
//!
//! ```text
//! input [3,H,W]
//!   └─ conv3x3 (3 -> width) ── tanh ──────────────┐ a1
//!        └─ avgpool 2x2                           │
//!             └─ conv3x3 (width -> width) ── tanh │
//!                  └─ nearest upsample 2x         │
//!                       └───────── concat ────────┘  [2*width,H,W]
//!                                    └─ conv1x1 (2*width -> 4)  logits
//! ```
//!
//! tanh keeps every activation smooth, which the finite-difference gradient
//! tests rely on.

use ndarray::{Array2, Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::{LabelMask, RasterImage, NUM_CLASSES};

use super::loss::{combined_loss_grad, softmax};
use super::{ProbabilityMap, TrainConfig};

const IN_CHANNELS: usize = 3;

/// The trainable segmentation network.
#[derive(Debug, Clone, PartialEq)]
pub struct ToySegNet {
    pub width: usize,
    pub conv1_w: Array4<f64>, // [width, 3, 3, 3]
    pub conv1_b: Vec<f64>,
    pub conv2_w: Array4<f64>, // [width, width, 3, 3]
    pub conv2_b: Vec<f64>,
    pub conv3_w: Array2<f64>, // [NUM_CLASSES, 2*width]
    pub conv3_b: Vec<f64>,
}

/// Parameter gradients, shaped exactly like the network's parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub conv1_w: Array4<f64>,
    pub conv1_b: Vec<f64>,
    pub conv2_w: Array4<f64>,
    pub conv2_b: Vec<f64>,
    pub conv3_w: Array2<f64>,
    pub conv3_b: Vec<f64>,
}

/// Activations cached by the forward pass for use in backpropagation.
pub(crate) struct ForwardCache {
    x: Array3<f64>,
    a1: Array3<f64>,
    p: Array3<f64>,
    a2: Array3<f64>,
    cat: Array3<f64>,
}

impl ToySegNet {
    /// Create a network with Glorot-uniform weights drawn from a seeded RNG
    /// and zero biases. The same `(width, seed)` always yields the same net.
    pub fn new(width: usize, seed: u64) -> Result<Self> {
        if width == 0 {
            return Err(Error::invalid_arg("width", "hidden width must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (2.0 * rng.gen::<f64>() - 1.0) * limit
        };
        let conv1_w =
            Array4::from_shape_simple_fn((width, IN_CHANNELS, 3, 3), || draw(IN_CHANNELS * 9, width * 9));
        let conv2_w = Array4::from_shape_simple_fn((width, width, 3, 3), || draw(width * 9, width * 9));
        let conv3_w = Array2::from_shape_simple_fn((NUM_CLASSES, 2 * width), || draw(2 * width, NUM_CLASSES));
        Ok(ToySegNet {
            width,
            conv1_w,
            conv1_b: vec![0.0; width],
            conv2_w,
            conv2_b: vec![0.0; width],
            conv3_w,
            conv3_b: vec![0.0; NUM_CLASSES],
        })
    }

    /// Number of scalar parameters for a given hidden width.
    pub fn param_count(width: usize) -> usize {
        width * IN_CHANNELS * 9 + width + width * width * 9 + width + NUM_CLASSES * 2 * width + NUM_CLASSES
    }

    /// Flatten all parameters into one vector in a fixed order
    /// (conv1 weights, conv1 biases, conv2 weights, conv2 biases,
    /// head weights, head biases).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::param_count(self.width));
        out.extend(self.conv1_w.iter());
        out.extend(self.conv1_b.iter());
        out.extend(self.conv2_w.iter());
        out.extend(self.conv2_b.iter());
        out.extend(self.conv3_w.iter());
        out.extend(self.conv3_b.iter());
        out
    }

    /// Rebuild a network from a flat parameter vector (inverse of
    /// [`ToySegNet::to_flat`]).
    pub fn from_flat(width: usize, flat: &[f64]) -> Result<Self> {
        let expected = Self::param_count(width);
        if flat.len() != expected {
            return Err(Error::ShapeMismatch { expected, found: flat.len() });
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let mut offset = 0;
        let mut take = |n: usize| {
            let slice = &flat[offset..offset + n];
            offset += n;
            slice.to_vec()
        };
        let conv1_w = Array4::from_shape_vec((width, IN_CHANNELS, 3, 3), take(width * IN_CHANNELS * 9))
            .expect("sized above");
        let conv1_b = take(width);
        let conv2_w =
            Array4::from_shape_vec((width, width, 3, 3), take(width * width * 9)).expect("sized above");
        let conv2_b = take(width);
        let conv3_w = Array2::from_shape_vec((NUM_CLASSES, 2 * width), take(NUM_CLASSES * 2 * width))
            .expect("sized above");
        let conv3_b = take(NUM_CLASSES);
        Ok(ToySegNet { width, conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b })
    }

    fn check_input(&self, x: &Array3<f64>) -> Result<()> {
        let (c, h, w) = x.dim();
        if c != IN_CHANNELS {
            return Err(Error::ShapeMismatch { expected: IN_CHANNELS, found: c });
        }
        if h < 2 || w < 2 || h % 2 != 0 || w % 2 != 0 {
            return Err(Error::invalid_arg(
                "input",
                format!("spatial dims must be even and at least 2, got {w}x{h}"),
            ));
        }
        Ok(())
    }

    /// Forward pass returning logits `[NUM_CLASSES, H, W]`.
    pub fn forward(&self, x: &Array3<f64>) -> Result<Array3<f64>> {
        Ok(self.forward_cached(x)?.0)
    }

    pub(crate) fn forward_cached(&self, x: &Array3<f64>) -> Result<(Array3<f64>, ForwardCache)> {
        self.check_input(x)?;
        let mut a1 = conv3x3_forward(x, &self.conv1_w, &self.conv1_b);
        a1.mapv_inplace(f64::tanh);
        let p = avgpool2(&a1);
        let mut a2 = conv3x3_forward(&p, &self.conv2_w, &self.conv2_b);
        a2.mapv_inplace(f64::tanh);
        let u = upsample2(&a2);
        let cat = concat_channels(&a1, &u);
        let logits = conv1x1_forward(&cat, &self.conv3_w, &self.conv3_b);
        Ok((logits, ForwardCache { x: x.clone(), a1, p, a2, cat }))
    }

    pub(crate) fn backward(&self, cache: &ForwardCache, dlogits: &Array3<f64>) -> Gradients {
        let (dconv3_w, dconv3_b, dcat) = conv1x1_backward(&cache.cat, &self.conv3_w, dlogits);
        let (da1_skip, du) = split_channels(&dcat, self.width);

        // Upsample backward, then tanh backward through a2.
        let mut dz2 = upsample2_backward(&du);
        dz2.zip_mut_with(&cache.a2, |g, &a| *g *= 1.0 - a * a);

        let (dconv2_w, dconv2_b, dp) = conv3x3_backward(&cache.p, &self.conv2_w, &dz2);

        // Pool backward joins the skip gradient, then tanh backward through a1.
        let mut dz1 = avgpool2_backward(&dp);
        dz1 += &da1_skip;
        dz1.zip_mut_with(&cache.a1, |g, &a| *g *= 1.0 - a * a);

        let (dconv1_w, dconv1_b, _dx) = conv3x3_backward(&cache.x, &self.conv1_w, &dz1);

        Gradients {
            conv1_w: dconv1_w,
            conv1_b: dconv1_b,
            conv2_w: dconv2_w,
            conv2_b: dconv2_b,
            conv3_w: dconv3_w,
            conv3_b: dconv3_b,
        }
    }

    /// Run the network on an image and return per-pixel class probabilities.
    pub fn predict(&self, image: &RasterImage) -> Result<ProbabilityMap> {
        let x = image_to_input(image);
        let logits = self.forward(&x)?;
        softmax(&logits)
    }
}

impl Gradients {
    /// Flatten in the same order as [`ToySegNet::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend(self.conv1_w.iter());
        out.extend(self.conv1_b.iter());
        out.extend(self.conv2_w.iter());
        out.extend(self.conv2_b.iter());
        out.extend(self.conv3_w.iter());
        out.extend(self.conv3_b.iter());
        out
    }
}

/// Convert an RGB raster to a `[3, H, W]` float tensor scaled to `[0, 1]`.
pub fn image_to_input(image: &RasterImage) -> Array3<f64> {
    let (w, h) = (image.width, image.height);
    Array3::from_shape_fn((IN_CHANNELS, h, w), |(c, y, x)| {
        image.data[(y * w + x) * 3 + c] as f64 / 255.0
    })
}

/// Combined loss and parameter gradients for one labelled image.
pub fn gradients(
    net: &ToySegNet,
    image: &RasterImage,
    labels: &LabelMask,
    config: &TrainConfig,
) -> Result<(f64, Gradients)> {
    if image.width != labels.width || image.height != labels.height {
        return Err(Error::DimensionMismatch {
            expected: (image.width, image.height),
            found: (labels.width, labels.height),
        });
    }
    let x = image_to_input(image);
    let (logits, cache) = net.forward_cached(&x)?;
    let probs = softmax(&logits)?;
    let (loss, dlogits) = combined_loss_grad(&probs, labels, config)?;
    Ok((loss, net.backward(&cache, &dlogits)))
}

// ---------------------------------------------------------------------------
// Layer primitives. All use cross-correlation (no kernel flip), the usual
// CNN convention.

fn conv3x3_forward(input: &Array3<f64>, w: &Array4<f64>, b: &[f64]) -> Array3<f64> {
    let (c_in, h, wd) = input.dim();
    let c_out = w.dim().0;
    let mut out = Array3::zeros((c_out, h, wd));
    for o in 0..c_out {
        for y in 0..h {
            for x in 0..wd {
                let mut acc = b[o];
                for i in 0..c_in {
                    for ky in 0..3 {
                        let iy = y as isize + ky as isize - 1;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..3 {
                            let ix = x as isize + kx as isize - 1;
                            if ix < 0 || ix >= wd as isize {
                                continue;
                            }
                            acc += w[[o, i, ky, kx]] * input[[i, iy as usize, ix as usize]];
                        }
                    }
                }
                out[[o, y, x]] = acc;
            }
        }
    }
    out
}

fn conv3x3_backward(
    input: &Array3<f64>,
    w: &Array4<f64>,
    dout: &Array3<f64>,
) -> (Array4<f64>, Vec<f64>, Array3<f64>) {
    let (c_in, h, wd) = input.dim();
    let c_out = w.dim().0;
    let mut dw = Array4::zeros(w.raw_dim());
    let mut db = vec![0.0; c_out];
    let mut dinput = Array3::zeros(input.raw_dim());
    for o in 0..c_out {
        for y in 0..h {
            for x in 0..wd {
                let g = dout[[o, y, x]];
                db[o] += g;
                for i in 0..c_in {
                    for ky in 0..3 {
                        let iy = y as isize + ky as isize - 1;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..3 {
                            let ix = x as isize + kx as isize - 1;
                            if ix < 0 || ix >= wd as isize {
                                continue;
                            }
                            dw[[o, i, ky, kx]] += g * input[[i, iy as usize, ix as usize]];
                            dinput[[i, iy as usize, ix as usize]] += g * w[[o, i, ky, kx]];
                        }
                    }
                }
            }
        }
    }
    (dw, db, dinput)
}

fn conv1x1_forward(input: &Array3<f64>, w: &Array2<f64>, b: &[f64]) -> Array3<f64> {
    let (c_in, h, wd) = input.dim();
    let c_out = w.dim().0;
    let mut out = Array3::zeros((c_out, h, wd));
    for o in 0..c_out {
        for y in 0..h {
            for x in 0..wd {
                let mut acc = b[o];
                for i in 0..c_in {
                    acc += w[[o, i]] * input[[i, y, x]];
                }
                out[[o, y, x]] = acc;
            }
        }
    }
    out
}

fn conv1x1_backward(
    input: &Array3<f64>,
    w: &Array2<f64>,
    dout: &Array3<f64>,
) -> (Array2<f64>, Vec<f64>, Array3<f64>) {
    let (c_in, h, wd) = input.dim();
    let c_out = w.dim().0;
    let mut dw = Array2::zeros(w.raw_dim());
    let mut db = vec![0.0; c_out];
    let mut dinput = Array3::zeros(input.raw_dim());
    for o in 0..c_out {
        for y in 0..h {
            for x in 0..wd {
                let g = dout[[o, y, x]];
                db[o] += g;
                for i in 0..c_in {
                    dw[[o, i]] += g * input[[i, y, x]];
                    dinput[[i, y, x]] += g * w[[o, i]];
                }
            }
        }
    }
    (dw, db, dinput)
}

fn avgpool2(input: &Array3<f64>) -> Array3<f64> {
    let (c, h, w) = input.dim();
    Array3::from_shape_fn((c, h / 2, w / 2), |(i, y, x)| {
        (input[[i, 2 * y, 2 * x]]
            + input[[i, 2 * y, 2 * x + 1]]
            + input[[i, 2 * y + 1, 2 * x]]
            + input[[i, 2 * y + 1, 2 * x + 1]])
            / 4.0
    })
}

fn avgpool2_backward(dout: &Array3<f64>) -> Array3<f64> {
    let (c, h, w) = dout.dim();
    Array3::from_shape_fn((c, h * 2, w * 2), |(i, y, x)| dout[[i, y / 2, x / 2]] / 4.0)
}

fn upsample2(input: &Array3<f64>) -> Array3<f64> {
    let (c, h, w) = input.dim();
    Array3::from_shape_fn((c, h * 2, w * 2), |(i, y, x)| input[[i, y / 2, x / 2]])
}

fn upsample2_backward(dout: &Array3<f64>) -> Array3<f64> {
    let (c, h, w) = dout.dim();
    Array3::from_shape_fn((c, h / 2, w / 2), |(i, y, x)| {
        dout[[i, 2 * y, 2 * x]]
            + dout[[i, 2 * y, 2 * x + 1]]
            + dout[[i, 2 * y + 1, 2 * x]]
            + dout[[i, 2 * y + 1, 2 * x + 1]]
    })
}

fn concat_channels(a: &Array3<f64>, b: &Array3<f64>) -> Array3<f64> {
    let (ca, h, w) = a.dim();
    let cb = b.dim().0;
    Array3::from_shape_fn((ca + cb, h, w), |(c, y, x)| {
        if c < ca { a[[c, y, x]] } else { b[[c - ca, y, x]] }
    })
}

fn split_channels(d: &Array3<f64>, first: usize) -> (Array3<f64>, Array3<f64>) {
    let (c, h, w) = d.dim();
    let a = Array3::from_shape_fn((first, h, w), |(i, y, x)| d[[i, y, x]]);
    let b = Array3::from_shape_fn((c - first, h, w), |(i, y, x)| d[[first + i, y, x]]);
    (a, b)
}
