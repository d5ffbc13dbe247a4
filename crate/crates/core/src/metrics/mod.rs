//! Loss/accuracy/top-k tracking, best-epoch selection, loss-difference
//! series between methods, and per-parameter trajectory traces.

use crate::error::{Error, Result};
use crate::numkit::DenseArray;
use serde::{Deserialize, Serialize};

/// One epoch's worth of training metrics. Top-k errors are computed on the
/// validation set, so `top1_error == 1 - val_accuracy` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    /// 1-based epoch index.
    pub epoch: u32,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub top1_error: f64,
    pub top5_error: f64,
    /// Mean learning rate over the epoch's iterations.
    pub mean_lr: f64,
}

/// Fraction of samples whose true label is NOT among the `k` highest
/// logits. Ties rank the lower class index first, which keeps the result
/// deterministic and makes `topk_error(.., 1) + accuracy == 1` exact.
pub fn topk_error(logits: &DenseArray, labels: &[usize], k: usize) -> Result<f64> {
    let (batch, classes) = logits.dims2()?;
    if labels.len() != batch {
        return Err(Error::LengthMismatch {
            op: "topk_error",
            left: batch,
            right: labels.len(),
        });
    }
    if k == 0 || k > classes {
        return Err(Error::InvalidArgument(format!(
            "topk_error: k={k} outside [1, {classes}]"
        )));
    }
    let mut misses = 0usize;
    for (i, &label) in labels.iter().enumerate() {
        let row = logits.row(i);
        let target = row[label];
        // Rank of the true label under (logit desc, index asc) ordering.
        let mut ahead = 0usize;
        for (j, &z) in row.iter().enumerate() {
            if z > target || (z == target && j < label) {
                ahead += 1;
            }
        }
        if ahead >= k {
            misses += 1;
        }
    }
    Ok(misses as f64 / batch as f64)
}

/// Classification accuracy under the same tie rule as [`topk_error`].
pub fn accuracy(logits: &DenseArray, labels: &[usize]) -> Result<f64> {
    Ok(1.0 - topk_error(logits, labels, 1)?)
}

/// Epoch and loss of the best (minimum validation loss) record; the
/// earliest epoch wins ties.
pub fn best_epoch(records: &[TrainRecord]) -> Result<(u32, f64)> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidArgument("best_epoch on empty records".into()))?;
    let mut best = (first.epoch, first.val_loss);
    for r in &records[1..] {
        if r.val_loss < best.1 {
            best = (r.epoch, r.val_loss);
        }
    }
    Ok(best)
}

/// Per-epoch validation-loss difference `a - b` plus the series mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDiffSeries {
    pub diffs: Vec<(u32, f64)>,
    pub mean: f64,
}

pub fn loss_diff(a: &[TrainRecord], b: &[TrainRecord]) -> Result<LossDiffSeries> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            op: "loss_diff",
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("loss_diff on empty series".into()));
    }
    let mut diffs = Vec::with_capacity(a.len());
    let mut sum = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        if ra.epoch != rb.epoch {
            return Err(Error::InvalidArgument(format!(
                "loss_diff epochs do not line up: {} vs {}",
                ra.epoch, rb.epoch
            )));
        }
        let d = ra.val_loss - rb.val_loss;
        sum += d;
        diffs.push((ra.epoch, d));
    }
    let mean = sum / diffs.len() as f64;
    Ok(LossDiffSeries { diffs, mean })
}

/// Raw per-iteration values of one tracked parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTrace {
    /// Which layer the parameter lives in (flattening order).
    pub layer: usize,
    /// Index into the model's flat parameter vector.
    pub index: usize,
    pub values: Vec<f64>,
}

impl ParamTrace {
    pub fn new(layer: usize, index: usize) -> Self {
        Self {
            layer,
            index,
            values: Vec::new(),
        }
    }

    pub fn record(&mut self, value: f64) {
        self.values.push(value);
    }

    pub fn smoothed(&self, window: usize) -> Result<Vec<f64>> {
        smooth(&self.values, window)
    }
}

/// Centered moving average with the window truncated at the boundaries.
pub fn smooth(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidArgument("smooth: window must be >= 1".into()));
    }
    let n = series.len();
    let lo_span = (window - 1) / 2;
    let hi_span = window / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(lo_span);
        let hi = (i + hi_span).min(n - 1);
        let slice = &series[lo..=hi];
        out.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logits(rows: &[&[f64]]) -> DenseArray {
        let cols = rows[0].len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        DenseArray::from_vec(data, vec![rows.len(), cols]).unwrap()
    }

    fn record(epoch: u32, val_loss: f64) -> TrainRecord {
        TrainRecord {
            epoch,
            train_loss: 0.0,
            train_accuracy: 0.0,
            val_loss,
            val_accuracy: 0.0,
            top1_error: 0.0,
            top5_error: 0.0,
            mean_lr: 0.0,
        }
    }

    #[test]
    fn strict_winners_have_zero_top1_error() {
        let l = logits(&[&[5.0, 1.0, 0.0], &[0.0, 7.0, 1.0]]);
        assert_eq!(topk_error(&l, &[0, 1], 1).unwrap(), 0.0);
    }

    #[test]
    fn k_equals_c_never_misses() {
        let l = logits(&[&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]]);
        assert_eq!(topk_error(&l, &[2, 0], 3).unwrap(), 0.0);
    }

    // Four rows, C = 10: one top-1 miss, zero top-5 misses.
    #[test]
    fn hand_built_batch_top1_and_top5() {
        let mut rows: Vec<Vec<f64>> = vec![vec![0.0; 10]; 4];
        rows[0][0] = 9.0; // label 0: hit
        rows[1][1] = 9.0; // label 1: hit
        rows[2][2] = 9.0; // label 2: hit
        rows[3][4] = 9.0; // label 3 has rank 2: top-1 miss, top-5 hit
        rows[3][3] = 5.0;
        let l = logits(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
        let labels = [0, 1, 2, 3];
        assert_eq!(topk_error(&l, &labels, 1).unwrap(), 0.25);
        assert_eq!(topk_error(&l, &labels, 5).unwrap(), 0.0);
    }

    #[test]
    fn tie_goes_to_lower_class_index() {
        // Logits tie between classes 1 and 2.
        let l = logits(&[&[0.0, 3.0, 3.0]]);
        // Label 1 wins the tie; label 2 loses it.
        assert_eq!(topk_error(&l, &[1], 1).unwrap(), 0.0);
        assert_eq!(topk_error(&l, &[2], 1).unwrap(), 1.0);
    }

    #[test]
    fn top1_plus_accuracy_is_exactly_one() {
        let l = logits(&[&[1.0, 1.0, 0.0], &[0.2, 0.9, 0.9], &[4.0, -4.0, 0.0]]);
        for labels in [[0, 1, 2], [1, 2, 0], [2, 0, 1]] {
            let e = topk_error(&l, &labels, 1).unwrap();
            let a = accuracy(&l, &labels).unwrap();
            assert_eq!(e + a, 1.0);
        }
    }

    #[test]
    fn topk_is_non_increasing_in_k() {
        let l = logits(&[&[3.0, 1.0, 2.0, 0.0], &[0.0, 1.0, 2.0, 3.0]]);
        let labels = [3, 0];
        let mut prev = f64::INFINITY;
        for k in 1..=4 {
            let e = topk_error(&l, &labels, k).unwrap();
            assert!(e <= prev);
            prev = e;
        }
    }

    #[test]
    fn k_out_of_range_is_an_error() {
        let l = logits(&[&[1.0, 2.0]]);
        assert!(topk_error(&l, &[0], 3).is_err());
        assert!(topk_error(&l, &[0], 0).is_err());
    }

    #[test]
    fn best_epoch_takes_the_argmin() {
        let recs = vec![record(1, 3.0), record(2, 2.8), record(3, 2.9)];
        assert_eq!(best_epoch(&recs).unwrap(), (2, 2.8));
    }

    #[test]
    fn strictly_decreasing_losses_pick_the_last_epoch() {
        let recs: Vec<_> = (1..=5).map(|e| record(e, 5.0 - e as f64)).collect();
        assert_eq!(best_epoch(&recs).unwrap().0, 5);
    }

    #[test]
    fn best_epoch_tie_goes_to_the_earlier_epoch() {
        let recs = vec![record(1, 2.8), record(2, 2.8)];
        assert_eq!(best_epoch(&recs).unwrap(), (1, 2.8));
    }

    #[test]
    fn identical_series_diff_to_zero() {
        let a = vec![record(1, 2.0), record(2, 1.5)];
        let d = loss_diff(&a, &a).unwrap();
        assert_eq!(d.mean, 0.0);
        assert!(d.diffs.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn constant_offset_diffs_to_the_offset() {
        let a = vec![record(1, 2.5), record(2, 2.0)];
        let b = vec![record(1, 2.0), record(2, 1.5)];
        let d = loss_diff(&a, &b).unwrap();
        assert!(d.diffs.iter().all(|&(_, v)| (v - 0.5).abs() < 1e-15));
        assert!((d.mean - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_three_epoch_diff() {
        let a = vec![record(1, 3.0), record(2, 2.0), record(3, 1.0)];
        let b = vec![record(1, 2.5), record(2, 2.2), record(3, 0.4)];
        let d = loss_diff(&a, &b).unwrap();
        let expect = [0.5, -0.2, 0.6];
        for ((_, got), want) in d.diffs.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((d.mean - 0.3).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let a = vec![record(1, 1.0)];
        let b = vec![record(1, 1.0), record(2, 1.0)];
        assert!(loss_diff(&a, &b).is_err());
    }

    #[test]
    fn window_one_smoothing_is_identity() {
        let s = [3.0, -1.0, 2.0];
        assert_eq!(smooth(&s, 1).unwrap(), s.to_vec());
    }

    #[test]
    fn constant_series_stays_constant() {
        let s = [2.0; 7];
        assert_eq!(smooth(&s, 5).unwrap(), s.to_vec());
    }

    // [0, 3, 0] with window 3: boundaries truncate to 2-wide windows.
    #[test]
    fn boundary_truncation_hand_case() {
        let out = smooth(&[0.0, 3.0, 0.0], 3).unwrap();
        assert_eq!(out, vec![1.5, 1.0, 1.5]);
    }

    #[test]
    fn trace_records_and_smooths() {
        let mut t = ParamTrace::new(0, 17);
        for v in [1.0, 2.0, 3.0] {
            t.record(v);
        }
        assert_eq!(t.values.len(), 3);
        assert_eq!(t.smoothed(1).unwrap(), vec![1.0, 2.0, 3.0]);
    }
}
