//! Small differentiable classifiers with exact reverse-mode gradients.
//!
//! Two architectures: a dense [`Mlp`] and a [`TinyCnn`] (3x3 convolutions,
//! ReLU, 2x2 max-pool, dense head). Both expose their trainable parameters
//! as one flat vector in a fixed order: layers first to last, and within a
//! layer the row-major weights followed by the bias. Flatten and load are
//! exact inverses.
//!
//! Forward and backward passes reduce in a fixed order, so identical
//! (params, batch) inputs give bit-identical outputs.

mod cnn;
mod gradcheck;
mod mlp;
mod snapshot;

pub use cnn::TinyCnn;
pub use gradcheck::{grad_check, GradCheckReport};
pub use mlp::Mlp;
pub use snapshot::{load_arrays, load_model_params, save_arrays, save_model_params};

use crate::error::{Error, Result};
use crate::numkit::{DenseArray, Rng};

/// A differentiable classifier over flat row-major input batches.
pub trait Model {
    fn input_dim(&self) -> usize;

    fn num_classes(&self) -> usize;

    fn num_params(&self) -> usize;

    /// Logits of shape [batch, num_classes].
    fn forward(&self, inputs: &DenseArray) -> Result<DenseArray>;

    /// Mean softmax cross-entropy over the batch and the gradient of that
    /// loss with respect to every parameter, flattened in the documented
    /// order. Pure in (params, batch).
    fn loss_and_grad(&self, inputs: &DenseArray, labels: &[usize]) -> Result<(f64, Vec<f64>)>;

    /// All parameters as one flat vector (layer-major, weights before bias).
    fn flatten(&self) -> Vec<f64>;

    /// Inverse of [`Model::flatten`].
    fn load_flat(&mut self, flat: &[f64]) -> Result<()>;

    /// Shapes of the parameter tensors in flattening order.
    fn param_shapes(&self) -> Vec<Vec<usize>>;
}

impl<M: Model + ?Sized> Model for Box<M> {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }

    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn num_params(&self) -> usize {
        (**self).num_params()
    }

    fn forward(&self, inputs: &DenseArray) -> Result<DenseArray> {
        (**self).forward(inputs)
    }

    fn loss_and_grad(&self, inputs: &DenseArray, labels: &[usize]) -> Result<(f64, Vec<f64>)> {
        (**self).loss_and_grad(inputs, labels)
    }

    fn flatten(&self) -> Vec<f64> {
        (**self).flatten()
    }

    fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        (**self).load_flat(flat)
    }

    fn param_shapes(&self) -> Vec<Vec<usize>> {
        (**self).param_shapes()
    }
}

/// Fully connected layer: `weights` is [out, in], `bias` is [out].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: DenseArray,
    pub bias: DenseArray,
}

impl DenseLayer {
    /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), bias zero.
    pub fn init(out_dim: usize, in_dim: usize, rng: &mut Rng) -> Self {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data = (0..out_dim * in_dim)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        Self {
            weights: DenseArray::from_vec(data, vec![out_dim, in_dim]).expect("sized above"),
            bias: DenseArray::zeros(vec![out_dim]),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn in_dim(&self) -> usize {
        self.weights.shape()[1]
    }
}

/// `x [B, in] * weights^T [in, out] + bias`, row-major.
pub(crate) fn linear_forward(x: &DenseArray, layer: &DenseLayer) -> Result<DenseArray> {
    let (batch, in_dim) = x.dims2()?;
    if in_dim != layer.in_dim() {
        return Err(Error::ShapeMismatch {
            op: "linear_forward",
            left: x.shape().to_vec(),
            right: layer.weights.shape().to_vec(),
        });
    }
    let out_dim = layer.out_dim();
    let w = layer.weights.data();
    let b = layer.bias.data();
    let mut out = vec![0.0; batch * out_dim];
    for i in 0..batch {
        let x_row = x.row(i);
        let out_row = &mut out[i * out_dim..(i + 1) * out_dim];
        for o in 0..out_dim {
            let w_row = &w[o * in_dim..(o + 1) * in_dim];
            let mut acc = b[o];
            for j in 0..in_dim {
                acc += x_row[j] * w_row[j];
            }
            out_row[o] = acc;
        }
    }
    DenseArray::from_vec(out, vec![batch, out_dim])
}

/// Gradients of a dense layer given upstream `d_out [B, out]`:
/// returns (d_x, d_weights, d_bias).
pub(crate) fn linear_backward(
    x: &DenseArray,
    layer: &DenseLayer,
    d_out: &DenseArray,
) -> Result<(DenseArray, DenseArray, DenseArray)> {
    let (batch, in_dim) = x.dims2()?;
    let out_dim = layer.out_dim();
    let w = layer.weights.data();
    let mut d_x = vec![0.0; batch * in_dim];
    let mut d_w = vec![0.0; out_dim * in_dim];
    let mut d_b = vec![0.0; out_dim];
    for i in 0..batch {
        let x_row = x.row(i);
        let d_row = d_out.row(i);
        let dx_row = &mut d_x[i * in_dim..(i + 1) * in_dim];
        for o in 0..out_dim {
            let g = d_row[o];
            d_b[o] += g;
            let w_row = &w[o * in_dim..(o + 1) * in_dim];
            let dw_row = &mut d_w[o * in_dim..(o + 1) * in_dim];
            for j in 0..in_dim {
                dw_row[j] += g * x_row[j];
                dx_row[j] += g * w_row[j];
            }
        }
    }
    Ok((
        DenseArray::from_vec(d_x, vec![batch, in_dim])?,
        DenseArray::from_vec(d_w, vec![out_dim, in_dim])?,
        DenseArray::from_vec(d_b, vec![out_dim])?,
    ))
}

/// ReLU with the subgradient at exactly zero defined as zero.
pub(crate) fn relu_in_place(z: &mut DenseArray) {
    for v in z.data_mut() {
        if *v <= 0.0 {
            *v = 0.0;
        }
    }
}

/// Masks upstream gradients where the pre-activation was <= 0.
pub(crate) fn relu_backward_in_place(pre: &DenseArray, d: &mut DenseArray) {
    for (g, &z) in d.data_mut().iter_mut().zip(pre.data()) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Mean softmax cross-entropy over the batch plus d_loss/d_logits.
/// Softmax is computed with max subtraction.
pub(crate) fn softmax_cross_entropy(
    logits: &DenseArray,
    labels: &[usize],
) -> Result<(f64, DenseArray)> {
    let (batch, classes) = logits.dims2()?;
    if labels.len() != batch {
        return Err(Error::LengthMismatch {
            op: "softmax_cross_entropy",
            left: batch,
            right: labels.len(),
        });
    }
    if !logits.all_finite() {
        return Err(Error::NonFinite("logits".into()));
    }
    let mut d_logits = vec![0.0; batch * classes];
    let mut loss = 0.0;
    let inv_batch = 1.0 / batch as f64;
    for i in 0..batch {
        let label = labels[i];
        if label >= classes {
            return Err(Error::InvalidArgument(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum_exp = 0.0;
        for &z in row {
            sum_exp += (z - max).exp();
        }
        let log_sum = sum_exp.ln();
        loss += (log_sum - (row[label] - max)) * inv_batch;
        let d_row = &mut d_logits[i * classes..(i + 1) * classes];
        for (j, &z) in row.iter().enumerate() {
            let p = (z - max).exp() / sum_exp;
            d_row[j] = (p - if j == label { 1.0 } else { 0.0 }) * inv_batch;
        }
    }
    Ok((loss, DenseArray::from_vec(d_logits, vec![batch, classes])?))
}
