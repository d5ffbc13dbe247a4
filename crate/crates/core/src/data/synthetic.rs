//! Synthetic classification data: Gaussian blobs whose class means sit on a
//! scaled simplex (separation x the class's unit basis direction).

use super::Dataset;
use crate::error::{Error, Result};
use crate::numkit::{DenseArray, Rng};

/// Mean offset magnitude used by [`gen_synthetic`].
pub const DEFAULT_SEPARATION: f64 = 3.0;

/// Unit-variance Gaussian blobs, `samples_per_class` for each class, in
/// class-major order (so the label histogram is exactly uniform).
/// Class `c` is centered at `separation` along basis axis `c % feature_dim`,
/// scaled up by one for every wrap so classes never collide.
pub fn gen_synthetic(
    num_classes: usize,
    samples_per_class: usize,
    feature_dim: usize,
    seed: u64,
) -> Result<Dataset> {
    gen_synthetic_with_separation(
        num_classes,
        samples_per_class,
        feature_dim,
        seed,
        DEFAULT_SEPARATION,
    )
}

pub fn gen_synthetic_with_separation(
    num_classes: usize,
    samples_per_class: usize,
    feature_dim: usize,
    seed: u64,
    separation: f64,
) -> Result<Dataset> {
    if num_classes == 0 || samples_per_class == 0 || feature_dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "gen_synthetic needs positive counts, got classes={num_classes} \
             per_class={samples_per_class} dim={feature_dim}"
        )));
    }
    let n = num_classes * samples_per_class;
    let mut rng = Rng::new(seed);
    let mut data = Vec::with_capacity(n * feature_dim);
    let mut labels = Vec::with_capacity(n);
    for class in 0..num_classes {
        let axis = class % feature_dim;
        let magnitude = separation * (1.0 + (class / feature_dim) as f64);
        for _ in 0..samples_per_class {
            for j in 0..feature_dim {
                let mean = if j == axis { magnitude } else { 0.0 };
                data.push(mean + rng.normal());
            }
            labels.push(class);
        }
    }
    Dataset::new(
        DenseArray::from_vec(data, vec![n, feature_dim])?,
        labels,
        num_classes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_is_bit_identical() {
        let a = gen_synthetic(3, 10, 4, 42).unwrap();
        let b = gen_synthetic(3, 10, 4, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let a = gen_synthetic(3, 10, 4, 42).unwrap();
        let b = gen_synthetic(3, 10, 4, 43).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn label_histogram_is_exactly_uniform() {
        let ds = gen_synthetic(5, 7, 3, 1).unwrap();
        let mut counts = vec![0usize; 5];
        for &l in &ds.labels {
            counts[l] += 1;
        }
        assert_eq!(counts, vec![7; 5]);
    }

    // Two far-apart blobs are linearly separable: the nearest-mean rule
    // classifies essentially everything correctly.
    #[test]
    fn large_separation_is_separable() {
        let sep = 8.0;
        let ds = gen_synthetic_with_separation(2, 200, 2, 5, sep).unwrap();
        let mut correct = 0;
        for i in 0..ds.num_samples() {
            let row = ds.inputs.row(i);
            // Class means: (sep, 0) and (0, sep).
            let d0 = (row[0] - sep).powi(2) + row[1].powi(2);
            let d1 = row[0].powi(2) + (row[1] - sep).powi(2);
            let pred = if d0 <= d1 { 0 } else { 1 };
            if pred == ds.labels[i] {
                correct += 1;
            }
        }
        let acc = correct as f64 / ds.num_samples() as f64;
        assert!(acc >= 0.99, "accuracy {acc}");
    }

    #[test]
    fn wrapped_classes_get_distinct_magnitudes() {
        // 3 classes in 2 dims: class 2 wraps onto axis 0 at double magnitude.
        let ds = gen_synthetic_with_separation(3, 50, 2, 9, 4.0).unwrap();
        let mean_axis0_class0: f64 = (0..50).map(|i| ds.inputs.row(i)[0]).sum::<f64>() / 50.0;
        let mean_axis0_class2: f64 = (100..150).map(|i| ds.inputs.row(i)[0]).sum::<f64>() / 50.0;
        assert!((mean_axis0_class0 - 4.0).abs() < 1.0);
        assert!((mean_axis0_class2 - 8.0).abs() < 1.0);
    }
}
