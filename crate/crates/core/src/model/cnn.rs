//! Tiny convolutional classifier: one or two 3x3 convolutions (stride 1,
//! zero padding to keep the spatial size), ReLU, 2x2 max-pool, and a dense
//! head. Feature maps are flat row-major [batch, channel, row, col].

use super::{linear_backward, linear_forward, softmax_cross_entropy, DenseLayer, Model};
use crate::error::{Error, Result};
use crate::numkit::{DenseArray, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    /// [out_channels, in_channels, 3, 3]
    pub weights: DenseArray,
    /// [out_channels]
    pub bias: DenseArray,
}

impl ConvLayer {
    fn init(out_c: usize, in_c: usize, rng: &mut Rng) -> Self {
        let fan_in = in_c * 9;
        let fan_out = out_c * 9;
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..out_c * in_c * 9)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        Self {
            weights: DenseArray::from_vec(data, vec![out_c, in_c, 3, 3]).expect("sized above"),
            bias: DenseArray::zeros(vec![out_c]),
        }
    }

    fn out_channels(&self) -> usize {
        self.weights.shape()[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TinyCnn {
    input_shape: (usize, usize, usize), // (channels, height, width)
    convs: Vec<ConvLayer>,
    head: DenseLayer,
}

struct StageCache {
    input: Vec<f64>,    // [B, c_in, h, w]
    pre: Vec<f64>,      // pre-ReLU conv output [B, c_out, h, w]
    argmax: Vec<usize>, // flat index into the post-ReLU map, per pooled cell
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
}

impl TinyCnn {
    /// `input_shape` is (channels, height, width); `conv_channels` gives the
    /// output channels of each of the one or two convolution stages.
    pub fn new(
        input_shape: (usize, usize, usize),
        conv_channels: &[usize],
        num_classes: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if conv_channels.is_empty() || conv_channels.len() > 2 {
            return Err(Error::InvalidArgument(format!(
                "TinyCnn supports 1 or 2 conv stages, got {}",
                conv_channels.len()
            )));
        }
        if num_classes < 2 {
            return Err(Error::InvalidArgument(
                "TinyCnn needs at least 2 classes".into(),
            ));
        }
        let (c, mut h, mut w) = input_shape;
        if c == 0 || h == 0 || w == 0 {
            return Err(Error::InvalidArgument(format!(
                "TinyCnn input shape must be positive: {input_shape:?}"
            )));
        }
        let mut convs = Vec::with_capacity(conv_channels.len());
        let mut in_c = c;
        for &out_c in conv_channels {
            if out_c == 0 {
                return Err(Error::InvalidArgument("zero conv channels".into()));
            }
            if h < 2 || w < 2 {
                return Err(Error::InvalidArgument(format!(
                    "spatial size {h}x{w} too small to pool"
                )));
            }
            convs.push(ConvLayer::init(out_c, in_c, rng));
            in_c = out_c;
            h /= 2;
            w /= 2;
        }
        let head = DenseLayer::init(num_classes, in_c * h * w, rng);
        Ok(Self {
            input_shape,
            convs,
            head,
        })
    }

    pub fn input_shape(&self) -> (usize, usize, usize) {
        self.input_shape
    }

    fn forward_stages(
        &self,
        inputs: &DenseArray,
    ) -> Result<(Vec<StageCache>, DenseArray, DenseArray)> {
        let (batch, dim) = inputs.dims2()?;
        if dim != self.input_dim() {
            return Err(Error::ShapeMismatch {
                op: "TinyCnn::forward",
                left: inputs.shape().to_vec(),
                right: vec![batch, self.input_dim()],
            });
        }
        let (mut c, mut h, mut w) = self.input_shape;
        let mut current = inputs.data().to_vec();
        let mut stages = Vec::with_capacity(self.convs.len());
        for conv in &self.convs {
            let c_out = conv.out_channels();
            let pre = conv3x3_same(&current, batch, c, h, w, conv);
            let mut post = pre.clone();
            for v in &mut post {
                if *v <= 0.0 {
                    *v = 0.0;
                }
            }
            let (ph, pw) = (h / 2, w / 2);
            let (pooled, argmax) = maxpool2(&post, batch, c_out, h, w);
            stages.push(StageCache {
                input: current,
                pre,
                argmax,
                c_in: c,
                h,
                w,
                c_out,
            });
            current = pooled;
            c = c_out;
            h = ph;
            w = pw;
        }
        let head_input = DenseArray::from_vec(current, vec![batch, c * h * w])?;
        let logits = linear_forward(&head_input, &self.head)?;
        Ok((stages, head_input, logits))
    }
}

/// 3x3 stride-1 convolution with zero padding 1 (output spatial size equals
/// the input's).
#[allow(clippy::needless_range_loop)]
fn conv3x3_same(
    input: &[f64],
    batch: usize,
    c_in: usize,
    h: usize,
    w: usize,
    conv: &ConvLayer,
) -> Vec<f64> {
    let c_out = conv.out_channels();
    let wts = conv.weights.data();
    let bias = conv.bias.data();
    let mut out = vec![0.0; batch * c_out * h * w];
    let in_map = h * w;
    for b in 0..batch {
        for oc in 0..c_out {
            let out_base = (b * c_out + oc) * in_map;
            for y in 0..h {
                for x in 0..w {
                    let mut acc = bias[oc];
                    for ic in 0..c_in {
                        let in_base = (b * c_in + ic) * in_map;
                        let w_base = ((oc * c_in) + ic) * 9;
                        for dy in 0..3usize {
                            let sy = y as isize + dy as isize - 1;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            for dx in 0..3usize {
                                let sx = x as isize + dx as isize - 1;
                                if sx < 0 || sx >= w as isize {
                                    continue;
                                }
                                acc += wts[w_base + dy * 3 + dx]
                                    * input[in_base + sy as usize * w + sx as usize];
                            }
                        }
                    }
                    out[out_base + y * w + x] = acc;
                }
            }
        }
    }
    out
}

/// Gradients of the 3x3 same convolution: (d_input, d_weights, d_bias).
#[allow(clippy::needless_range_loop)]
fn conv3x3_same_backward(
    input: &[f64],
    d_out: &[f64],
    batch: usize,
    c_in: usize,
    h: usize,
    w: usize,
    conv: &ConvLayer,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let c_out = conv.out_channels();
    let wts = conv.weights.data();
    let mut d_in = vec![0.0; batch * c_in * h * w];
    let mut d_w = vec![0.0; c_out * c_in * 9];
    let mut d_b = vec![0.0; c_out];
    let map = h * w;
    for b in 0..batch {
        for oc in 0..c_out {
            let out_base = (b * c_out + oc) * map;
            for y in 0..h {
                for x in 0..w {
                    let g = d_out[out_base + y * w + x];
                    if g == 0.0 {
                        continue;
                    }
                    d_b[oc] += g;
                    for ic in 0..c_in {
                        let in_base = (b * c_in + ic) * map;
                        let w_base = ((oc * c_in) + ic) * 9;
                        for dy in 0..3usize {
                            let sy = y as isize + dy as isize - 1;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            for dx in 0..3usize {
                                let sx = x as isize + dx as isize - 1;
                                if sx < 0 || sx >= w as isize {
                                    continue;
                                }
                                let src = in_base + sy as usize * w + sx as usize;
                                d_w[w_base + dy * 3 + dx] += g * input[src];
                                d_in[src] += g * wts[w_base + dy * 3 + dx];
                            }
                        }
                    }
                }
            }
        }
    }
    (d_in, d_w, d_b)
}

/// 2x2 stride-2 max pool (odd trailing rows/cols dropped). Returns the
/// pooled map and the flat argmax index per cell; ties go to the earliest
/// position in scan order, which keeps backward deterministic.
fn maxpool2(
    input: &[f64],
    batch: usize,
    channels: usize,
    h: usize,
    w: usize,
) -> (Vec<f64>, Vec<usize>) {
    let (ph, pw) = (h / 2, w / 2);
    let mut out = vec![0.0; batch * channels * ph * pw];
    let mut argmax = vec![0usize; out.len()];
    let map = h * w;
    for b in 0..batch {
        for c in 0..channels {
            let in_base = (b * channels + c) * map;
            let out_base = (b * channels + c) * ph * pw;
            for py in 0..ph {
                for px in 0..pw {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_i = 0;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let i = in_base + (2 * py + dy) * w + (2 * px + dx);
                            if input[i] > best {
                                best = input[i];
                                best_i = i;
                            }
                        }
                    }
                    out[out_base + py * pw + px] = best;
                    argmax[out_base + py * pw + px] = best_i;
                }
            }
        }
    }
    (out, argmax)
}

impl Model for TinyCnn {
    fn input_dim(&self) -> usize {
        let (c, h, w) = self.input_shape;
        c * h * w
    }

    fn num_classes(&self) -> usize {
        self.head.out_dim()
    }

    fn num_params(&self) -> usize {
        self.convs
            .iter()
            .map(|c| c.weights.len() + c.bias.len())
            .sum::<usize>()
            + self.head.weights.len()
            + self.head.bias.len()
    }

    fn forward(&self, inputs: &DenseArray) -> Result<DenseArray> {
        let (_, _, logits) = self.forward_stages(inputs)?;
        Ok(logits)
    }

    fn loss_and_grad(&self, inputs: &DenseArray, labels: &[usize]) -> Result<(f64, Vec<f64>)> {
        let (batch, _) = inputs.dims2()?;
        let (stages, head_input, logits) = self.forward_stages(inputs)?;
        let (loss, d_logits) = softmax_cross_entropy(&logits, labels)?;
        let (d_flat, d_head_w, d_head_b) = linear_backward(&head_input, &self.head, &d_logits)?;

        let mut grads = vec![0.0; self.num_params()];
        let mut tail = grads.len();
        tail -= d_head_b.len();
        grads[tail..tail + d_head_b.len()].copy_from_slice(d_head_b.data());
        tail -= d_head_w.len();
        grads[tail..tail + d_head_w.len()].copy_from_slice(d_head_w.data());

        // Walk the conv stages in reverse, scattering pool gradients and
        // masking by the ReLU pre-activations.
        let mut d_pooled = d_flat.into_vec();
        for (idx, stage) in stages.iter().enumerate().rev() {
            let conv = &self.convs[idx];
            let mut d_act = vec![0.0; batch * stage.c_out * stage.h * stage.w];
            for (cell, &src) in stage.argmax.iter().enumerate() {
                d_act[src] += d_pooled[cell];
            }
            for (g, &z) in d_act.iter_mut().zip(&stage.pre) {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }
            let (d_in, d_w, d_b) = conv3x3_same_backward(
                &stage.input,
                &d_act,
                batch,
                stage.c_in,
                stage.h,
                stage.w,
                conv,
            );
            tail -= d_b.len();
            grads[tail..tail + d_b.len()].copy_from_slice(&d_b);
            tail -= d_w.len();
            grads[tail..tail + d_w.len()].copy_from_slice(&d_w);
            d_pooled = d_in;
        }
        debug_assert_eq!(tail, 0);
        Ok((loss, grads))
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for conv in &self.convs {
            out.extend_from_slice(conv.weights.data());
            out.extend_from_slice(conv.bias.data());
        }
        out.extend_from_slice(self.head.weights.data());
        out.extend_from_slice(self.head.bias.data());
        out
    }

    fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::LengthMismatch {
                op: "TinyCnn::load_flat",
                left: self.num_params(),
                right: flat.len(),
            });
        }
        let mut off = 0;
        for conv in &mut self.convs {
            let wn = conv.weights.len();
            conv.weights
                .data_mut()
                .copy_from_slice(&flat[off..off + wn]);
            off += wn;
            let bn = conv.bias.len();
            conv.bias.data_mut().copy_from_slice(&flat[off..off + bn]);
            off += bn;
        }
        let wn = self.head.weights.len();
        self.head
            .weights
            .data_mut()
            .copy_from_slice(&flat[off..off + wn]);
        off += wn;
        let bn = self.head.bias.len();
        self.head
            .bias
            .data_mut()
            .copy_from_slice(&flat[off..off + bn]);
        Ok(())
    }

    fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        for conv in &self.convs {
            shapes.push(conv.weights.shape().to_vec());
            shapes.push(conv.bias.shape().to_vec());
        }
        shapes.push(self.head.weights.shape().to_vec());
        shapes.push(self.head.bias.shape().to_vec());
        shapes
    }
}
