//! Dense feed-forward classifier: ReLU on hidden layers, raw logits out.

use super::{
    linear_backward, linear_forward, relu_backward_in_place, relu_in_place, softmax_cross_entropy,
    DenseLayer, Model,
};
use crate::error::{Error, Result};
use crate::numkit::{DenseArray, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

impl Mlp {
    /// `dims` lists every layer width including input and output, e.g.
    /// `[32, 128, 10]` for one hidden layer of 128 units.
    pub fn new(dims: &[usize], rng: &mut Rng) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidArgument(
                "Mlp needs at least input and output dims".into(),
            ));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "Mlp dims must be positive: {dims:?}"
            )));
        }
        let layers = dims
            .windows(2)
            .map(|w| DenseLayer::init(w[1], w[0], rng))
            .collect();
        Ok(Self { layers })
    }

    /// Builds a model with explicit layer tensors; used by tests that need
    /// hand-set weights. Dimensions must chain.
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::ShapeMismatch {
                    op: "Mlp::from_layers",
                    left: pair[0].weights.shape().to_vec(),
                    right: pair[1].weights.shape().to_vec(),
                });
            }
        }
        if layers.is_empty() {
            return Err(Error::InvalidArgument(
                "Mlp needs at least one layer".into(),
            ));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    fn forward_cached(&self, inputs: &DenseArray) -> Result<(Vec<DenseArray>, Vec<DenseArray>)> {
        // activations[l] is the input to layer l; pre[l] its pre-activation.
        let mut activations = vec![inputs.clone()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let z = linear_forward(&activations[l], layer)?;
            pre.push(z.clone());
            let mut a = z;
            if l + 1 < self.layers.len() {
                relu_in_place(&mut a);
            }
            activations.push(a);
        }
        Ok((activations, pre))
    }
}

impl Model for Mlp {
    fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn forward(&self, inputs: &DenseArray) -> Result<DenseArray> {
        let (mut activations, _) = self.forward_cached(inputs)?;
        Ok(activations.pop().expect("one activation per layer"))
    }

    fn loss_and_grad(&self, inputs: &DenseArray, labels: &[usize]) -> Result<(f64, Vec<f64>)> {
        let (activations, pre) = self.forward_cached(inputs)?;
        let logits = &activations[self.layers.len()];
        let (loss, d_logits) = softmax_cross_entropy(logits, labels)?;

        let mut grads = vec![0.0; self.num_params()];
        // Flat offsets of each layer's weight block, in flattening order.
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for layer in &self.layers {
            offsets.push(off);
            off += layer.weights.len() + layer.bias.len();
        }

        let mut d_out = d_logits;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let (mut d_in, d_w, d_b) = linear_backward(&activations[l], layer, &d_out)?;
            let off = offsets[l];
            grads[off..off + d_w.len()].copy_from_slice(d_w.data());
            grads[off + d_w.len()..off + d_w.len() + d_b.len()].copy_from_slice(d_b.data());
            if l > 0 {
                relu_backward_in_place(&pre[l - 1], &mut d_in);
            }
            d_out = d_in;
        }
        Ok((loss, grads))
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.data());
            out.extend_from_slice(layer.bias.data());
        }
        out
    }

    fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::LengthMismatch {
                op: "Mlp::load_flat",
                left: self.num_params(),
                right: flat.len(),
            });
        }
        let mut off = 0;
        for layer in &mut self.layers {
            let wn = layer.weights.len();
            layer
                .weights
                .data_mut()
                .copy_from_slice(&flat[off..off + wn]);
            off += wn;
            let bn = layer.bias.len();
            layer.bias.data_mut().copy_from_slice(&flat[off..off + bn]);
            off += bn;
        }
        Ok(())
    }

    fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::with_capacity(2 * self.layers.len());
        for layer in &self.layers {
            shapes.push(layer.weights.shape().to_vec());
            shapes.push(layer.bias.shape().to_vec());
        }
        shapes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(w: Vec<f64>, out: usize, into: usize, b: Vec<f64>) -> DenseLayer {
        DenseLayer {
            weights: DenseArray::from_vec(w, vec![out, into]).unwrap(),
            bias: DenseArray::from_vec(b, vec![out]).unwrap(),
        }
    }

    #[test]
    fn zero_model_gives_zero_logits() {
        let m = Mlp::from_layers(vec![layer(vec![0.0; 6], 3, 2, vec![0.0; 3])]).unwrap();
        let x = DenseArray::from_vec(vec![1.0, -2.0, 0.5, 4.0], vec![2, 2]).unwrap();
        let logits = m.forward(&x).unwrap();
        assert_eq!(logits.data(), &[0.0; 6]);
    }

    #[test]
    fn identity_single_layer_passes_input_through() {
        let m =
            Mlp::from_layers(vec![layer(vec![1.0, 0.0, 0.0, 1.0], 2, 2, vec![0.0; 2])]).unwrap();
        let x = DenseArray::from_vec(vec![0.3, -0.7], vec![1, 2]).unwrap();
        assert_eq!(m.forward(&x).unwrap().data(), &[0.3, -0.7]);
    }

    // 2-2-2 net with hand-set weights, hidden ReLU:
    // z1 = [1*1 + 0.5*2, -1*1 + 1*2] = [2, 1]; a1 = [2, 1]
    // logits = [2*2 - 1*1 + 0.1, 2*2 + 1*1 - 0.1] = [3.1, 4.9]
    #[test]
    fn hand_computed_two_layer_forward() {
        let m = Mlp::from_layers(vec![
            layer(vec![1.0, 0.5, -1.0, 1.0], 2, 2, vec![0.0, 0.0]),
            layer(vec![2.0, -1.0, 2.0, 1.0], 2, 2, vec![0.1, -0.1]),
        ])
        .unwrap();
        let x = DenseArray::from_vec(vec![1.0, 2.0], vec![1, 2]).unwrap();
        let logits = m.forward(&x).unwrap();
        assert!((logits.data()[0] - 3.1).abs() < 1e-15);
        assert!((logits.data()[1] - 4.9).abs() < 1e-15);
    }

    #[test]
    fn flatten_load_is_a_bijection() {
        let mut rng = Rng::new(101);
        let m = Mlp::new(&[4, 5, 3], &mut rng).unwrap();
        let flat = m.flatten();
        assert_eq!(flat.len(), m.num_params());
        let mut m2 = Mlp::new(&[4, 5, 3], &mut Rng::new(999)).unwrap();
        m2.load_flat(&flat).unwrap();
        assert_eq!(m2.flatten(), flat);
        assert_eq!(m2, m);
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = Rng::new(7);
        let m = Mlp::new(&[3, 8, 4], &mut rng).unwrap();
        let x = DenseArray::from_vec(vec![0.1, -0.2, 0.3, 0.9, 0.0, -0.5], vec![2, 3]).unwrap();
        let a = m.forward(&x).unwrap();
        let b = m.forward(&x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn input_width_mismatch_is_rejected() {
        let mut rng = Rng::new(1);
        let m = Mlp::new(&[3, 2], &mut rng).unwrap();
        let x = DenseArray::from_vec(vec![1.0, 2.0], vec![1, 2]).unwrap();
        assert!(m.forward(&x).is_err());
    }
}
