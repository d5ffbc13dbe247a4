//! Dataset generation, ingestion, batching, and the train/validation split.
//!
//! Datasets are immutable after load. Every generator and loader is
//! deterministic per seed.

mod cifar;
mod synthetic;

pub use cifar::{load_cifar_binary, CifarVariant, CIFAR_PIXELS};
pub use synthetic::{gen_synthetic, gen_synthetic_with_separation, DEFAULT_SEPARATION};

use crate::error::{Error, Result};
use crate::numkit::{DenseArray, Rng};

/// Labeled classification dataset with row-major inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: DenseArray,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn new(inputs: DenseArray, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let (n, _) = inputs.dims2()?;
        if n != labels.len() {
            return Err(Error::LengthMismatch {
                op: "Dataset::new",
                left: n,
                right: labels.len(),
            });
        }
        if n == 0 {
            return Err(Error::InvalidArgument("empty dataset".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            inputs,
            labels,
            num_classes,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.inputs.shape()[1]
    }

    /// New dataset holding copies of the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let dim = self.feature_dim();
        let mut data = Vec::with_capacity(indices.len() * dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.inputs.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(
            DenseArray::from_vec(data, vec![indices.len(), dim])?,
            labels,
            self.num_classes,
        )
    }
}

/// Validation split parameters.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Seeded shuffle, then a disjoint exhaustive partition: the training part
/// takes floor(n * (1 - fraction)) samples, validation the remainder.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let f = spec.validation_fraction;
    if !(0.0 < f && f < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "validation fraction {f} outside (0, 1)"
        )));
    }
    let n = ds.num_samples();
    let train_n = ((n as f64) * (1.0 - f)).floor() as usize;
    if train_n == 0 || train_n == n {
        return Err(Error::InvalidArgument(format!(
            "split of {n} samples at fraction {f} leaves an empty part"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    Rng::derive(spec.seed, STREAM_SPLIT).shuffle(&mut indices);
    let train = ds.select(&indices[..train_n])?;
    let val = ds.select(&indices[train_n..])?;
    Ok((train, val))
}

const STREAM_SPLIT: u64 = 0x51;
const STREAM_BATCH: u64 = 0xB1;

/// One mini-batch with owned inputs.
#[derive(Debug, Clone)]
pub struct Batch {
    pub inputs: DenseArray,
    pub labels: Vec<usize>,
}

/// Iterator over one epoch: a seeded reshuffle, then consecutive batches.
/// The final short batch is kept, so every sample appears exactly once.
pub struct Batches<'a> {
    dataset: &'a Dataset,
    order: Vec<usize>,
    batch_size: usize,
    cursor: usize,
}

pub fn batches(ds: &Dataset, batch_size: usize, epoch_seed: u64) -> Result<Batches<'_>> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
    }
    let mut order: Vec<usize> = (0..ds.num_samples()).collect();
    Rng::derive(epoch_seed, STREAM_BATCH).shuffle(&mut order);
    Ok(Batches {
        dataset: ds,
        order,
        batch_size,
        cursor: 0,
    })
}

impl Batches<'_> {
    pub fn num_batches(&self) -> usize {
        self.order.len().div_ceil(self.batch_size)
    }
}

impl Iterator for Batches<'_> {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        if self.cursor >= self.order.len() {
            return None;
        }
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let idx = &self.order[self.cursor..end];
        self.cursor = end;
        let ds = self
            .dataset
            .select(idx)
            .expect("indices are in range by construction");
        Some(Batch {
            inputs: ds.inputs,
            labels: ds.labels,
        })
    }
}

/// Per-feature standardization fit on the training split only, so nothing
/// leaks from validation or test data into preprocessing.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Vec<f64>,
    inv_std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &Dataset) -> Self {
        let n = train.num_samples() as f64;
        let dim = train.feature_dim();
        let mut mean = vec![0.0; dim];
        for i in 0..train.num_samples() {
            for (m, &v) in mean.iter_mut().zip(train.inputs.row(i)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for i in 0..train.num_samples() {
            for ((s, &v), m) in var.iter_mut().zip(train.inputs.row(i)).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        let inv_std = var
            .iter()
            .map(|&s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    1.0 / sd
                } else {
                    1.0 // constant feature: leave it centered only
                }
            })
            .collect();
        Self { mean, inv_std }
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        let dim = ds.feature_dim();
        if dim != self.mean.len() {
            return Err(Error::LengthMismatch {
                op: "Standardizer::transform",
                left: self.mean.len(),
                right: dim,
            });
        }
        let mut data = ds.inputs.data().to_vec();
        for row in data.chunks_mut(dim) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) * self.inv_std[j];
            }
        }
        Dataset::new(
            DenseArray::from_vec(data, ds.inputs.shape().to_vec())?,
            ds.labels.clone(),
            ds.num_classes,
        )
    }
}
