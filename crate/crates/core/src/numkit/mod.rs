//! Minimal dense-array kernels: elementwise arithmetic, scaling,
//! reductions, and matrix multiply. Everything is `f64` and row-major.
//!
//! Arrays are immutable after construction except through the explicitly
//! mutating accessors (`data_mut` and the `*_in_place` kernels).

mod rng;

pub use rng::Rng;

use crate::error::{Error, Result};

/// Contiguous row-major array of 64-bit floats with an explicit shape.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseArray {
    data: Vec<f64>,
    shape: Vec<usize>,
}

impl DenseArray {
    /// Wraps a flat buffer. The product of `shape` must equal `data.len()`
    /// and every dimension must be positive.
    pub fn from_vec(data: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "zero dimension in shape {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::LengthMismatch {
                op: "DenseArray::from_vec",
                left: expected,
                right: data.len(),
            });
        }
        Ok(Self { data, shape })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            data: vec![0.0; n],
            shape,
        }
    }

    pub fn full(shape: Vec<usize>, value: f64) -> Self {
        let n = shape.iter().product();
        Self {
            data: vec![value; n],
            shape,
        }
    }

    /// Square identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(vec![n, n]);
        for i in 0..n {
            out.data[i * n + i] = 1.0;
        }
        out
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Exclusive access to the raw buffer. Callers must not change the length.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Interprets the array as a matrix, failing on any other rank.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            &[r, c] => Ok((r, c)),
            other => Err(Error::InvalidArgument(format!(
                "expected a rank-2 array, got shape {other:?}"
            ))),
        }
    }

    /// Row `i` of a rank-2 array.
    pub fn row(&self, i: usize) -> &[f64] {
        let cols = self.shape[self.shape.len() - 1];
        &self.data[i * cols..(i + 1) * cols]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn scale_in_place(&mut self, alpha: f64) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }
}

fn check_same_shape(op: &'static str, x: &DenseArray, y: &DenseArray) -> Result<()> {
    if x.shape != y.shape {
        return Err(Error::ShapeMismatch {
            op,
            left: x.shape.clone(),
            right: y.shape.clone(),
        });
    }
    Ok(())
}

/// `alpha * x + y`, elementwise. Inputs are unmodified.
pub fn axpy(alpha: f64, x: &DenseArray, y: &DenseArray) -> Result<DenseArray> {
    check_same_shape("axpy", x, y)?;
    let data = x
        .data
        .iter()
        .zip(&y.data)
        .map(|(xi, yi)| alpha * xi + yi)
        .collect();
    Ok(DenseArray {
        data,
        shape: x.shape.clone(),
    })
}

/// Slice form of `axpy` for flat parameter/gradient buffers: `y += alpha * x`.
pub fn axpy_in_place(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Elementwise `x - y`.
pub fn sub(x: &DenseArray, y: &DenseArray) -> Result<DenseArray> {
    check_same_shape("sub", x, y)?;
    let data = x.data.iter().zip(&y.data).map(|(a, b)| a - b).collect();
    Ok(DenseArray {
        data,
        shape: x.shape.clone(),
    })
}

/// Row-major matrix product of `a` ([m, k]) and `b` ([k, n]).
pub fn matmul(a: &DenseArray, b: &DenseArray) -> Result<DenseArray> {
    let (m, k) = a.dims2()?;
    let (k2, n) = b.dims2()?;
    if k != k2 {
        return Err(Error::ShapeMismatch {
            op: "matmul",
            left: a.shape.clone(),
            right: b.shape.clone(),
        });
    }
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let a_row = &a.data[i * k..(i + 1) * k];
        let out_row = &mut out[i * n..(i + 1) * n];
        for (p, &a_ip) in a_row.iter().enumerate() {
            let b_row = &b.data[p * n..(p + 1) * n];
            for (o, &b_pj) in out_row.iter_mut().zip(b_row) {
                *o += a_ip * b_pj;
            }
        }
    }
    Ok(DenseArray {
        data: out,
        shape: vec![m, n],
    })
}

/// Transpose of a rank-2 array.
pub fn transpose(a: &DenseArray) -> Result<DenseArray> {
    let (m, n) = a.dims2()?;
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a.data[i * n + j];
        }
    }
    Ok(DenseArray {
        data: out,
        shape: vec![n, m],
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arr(data: &[f64], shape: &[usize]) -> DenseArray {
        DenseArray::from_vec(data.to_vec(), shape.to_vec()).unwrap()
    }

    #[test]
    fn from_vec_rejects_bad_length() {
        let err = DenseArray::from_vec(vec![1.0, 2.0, 3.0], vec![2, 2]).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
    }

    #[test]
    fn axpy_zero_scale_is_identity_on_y() {
        let x = arr(&[1.0, 2.0], &[2]);
        let y = arr(&[3.0, 4.0], &[2]);
        assert_eq!(axpy(0.0, &x, &y).unwrap().data(), &[3.0, 4.0]);
    }

    #[test]
    fn axpy_unit_scale() {
        let x = arr(&[1.0, 1.0], &[2]);
        let y = arr(&[0.0, 0.0], &[2]);
        assert_eq!(axpy(1.0, &x, &y).unwrap().data(), &[1.0, 1.0]);
    }

    #[test]
    fn axpy_hand_case() {
        let x = arr(&[1.0, -1.0], &[2]);
        let y = arr(&[1.0, 1.0], &[2]);
        assert_eq!(axpy(2.0, &x, &y).unwrap().data(), &[3.0, -1.0]);
    }

    #[test]
    fn axpy_shape_mismatch_names_both_shapes() {
        let x = arr(&[1.0, 2.0], &[2]);
        let y = arr(&[1.0, 2.0], &[2, 1]);
        let err = axpy(1.0, &x, &y).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2]") && msg.contains("[2, 1]"), "{msg}");
    }

    #[test]
    fn axpy_leaves_inputs_unmodified() {
        let x = arr(&[1.0, -1.0], &[2]);
        let y = arr(&[1.0, 1.0], &[2]);
        let _ = axpy(2.0, &x, &y).unwrap();
        assert_eq!(x.data(), &[1.0, -1.0]);
        assert_eq!(y.data(), &[1.0, 1.0]);
    }

    #[test]
    fn matmul_identity() {
        let i2 = DenseArray::identity(2);
        let m = arr(&[1.0, 2.0, 3.0, 4.0], &[2, 2]);
        assert_eq!(matmul(&i2, &m).unwrap(), m);
    }

    #[test]
    fn matmul_inner_collapse() {
        let a = arr(&[1.0, 0.0], &[1, 2]);
        let b = arr(&[0.0, 5.0], &[2, 1]);
        let out = matmul(&a, &b).unwrap();
        assert_eq!(out.shape(), &[1, 1]);
        assert_eq!(out.data(), &[0.0]);
    }

    #[test]
    fn matmul_hand_case() {
        let a = arr(&[1.0, 2.0, 3.0, 4.0], &[2, 2]);
        let b = arr(&[5.0, 6.0, 7.0, 8.0], &[2, 2]);
        let out = matmul(&a, &b).unwrap();
        assert_eq!(out.data(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = arr(&[1.0, 2.0], &[1, 2]);
        let b = arr(&[1.0, 2.0, 3.0], &[3, 1]);
        assert!(matmul(&a, &b).is_err());
    }

    #[test]
    fn transpose_round_trip() {
        let a = arr(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[2, 3]);
        let t = transpose(&a).unwrap();
        assert_eq!(t.shape(), &[3, 2]);
        assert_eq!(transpose(&t).unwrap(), a);
    }

    #[test]
    fn sub_scale_and_sum() {
        let a = arr(&[3.0, 1.0], &[2]);
        let b = arr(&[1.0, 4.0], &[2]);
        assert_eq!(sub(&a, &b).unwrap().data(), &[2.0, -3.0]);
        let mut c = arr(&[1.5, -2.0], &[2]);
        c.scale_in_place(2.0);
        assert_eq!(c.data(), &[3.0, -4.0]);
        assert_eq!(c.sum(), -1.0);
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1.0)
    }

    proptest! {
        // axpy(a, x, axpy(b, x, y)) == axpy(a+b, x, y) to ulp scale: the
        // error is measured against the magnitude of the terms combined,
        // which is the scale rounding actually happens at.
        #[test]
        fn axpy_is_linear(
            a in -10.0f64..10.0,
            b in -10.0f64..10.0,
            xs in proptest::collection::vec(-100.0f64..100.0, 1..32),
            shift in -100.0f64..100.0,
        ) {
            let n = xs.len();
            let x = DenseArray::from_vec(xs.clone(), vec![n]).unwrap();
            let y = DenseArray::from_vec(xs.iter().map(|v| v + shift).collect(), vec![n]).unwrap();
            let lhs = axpy(a, &x, &axpy(b, &x, &y).unwrap()).unwrap();
            let rhs = axpy(a + b, &x, &y).unwrap();
            for i in 0..n {
                let (l, r) = (lhs.data()[i], rhs.data()[i]);
                let scale = (a.abs() + b.abs()) * xs[i].abs() + y.data()[i].abs();
                let tol = 1e-14 * scale.max(1.0);
                prop_assert!((l - r).abs() <= tol, "{l} vs {r} (tol {tol})");
            }
        }

        // (A·B)·C == A·(B·C) within 1e-12 rel on small random matrices.
        #[test]
        fn matmul_is_associative(
            vals in proptest::collection::vec(-2.0f64..2.0, 27..=27),
        ) {
            let a = DenseArray::from_vec(vals[0..9].to_vec(), vec![3, 3]).unwrap();
            let b = DenseArray::from_vec(vals[9..18].to_vec(), vec![3, 3]).unwrap();
            let c = DenseArray::from_vec(vals[18..27].to_vec(), vec![3, 3]).unwrap();
            let lhs = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let rhs = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            for (l, r) in lhs.data().iter().zip(rhs.data()) {
                prop_assert!(rel_err(*l, *r) <= 1e-12, "{l} vs {r}");
            }
        }
    }
}
