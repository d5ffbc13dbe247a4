//! Single training run: dataset assembly, seeded model init, the
//! per-iteration optimizer loop, per-epoch evaluation, and best-epoch
//! test metrics.

use super::config::{
    BaseOptimizerKind, DatasetSpec, ModelSpec, OptimizerKind, OptimizerSpec, RunConfig,
};
use crate::data::{
    batches, gen_synthetic_with_separation, load_cifar_binary, split, Dataset, SplitSpec,
    Standardizer,
};
use crate::error::{Error, Result};
use crate::metrics::{topk_error, ParamTrace, TrainRecord};
use crate::model::{Mlp, Model, TinyCnn};
use crate::numkit::Rng;
use crate::optim::{Adam, Demon, Optimizer, ParamVector, PlpOptions, PlpWrapper, SgdMomentum};
use serde::{Deserialize, Serialize};

const STREAM_INIT: u64 = 0x11;
const STREAM_TRACE: u64 = 0x77;
const STREAM_EPOCH_BASE: u64 = 0xE000;
const EVAL_CHUNK: usize = 512;

/// Test-set metrics of the best (minimum validation loss) model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestMetrics {
    pub accuracy: f64,
    pub top1_error: f64,
    pub top5_error: f64,
}

/// Model parameters captured at the best epoch, in snapshot-file layout.
#[derive(Debug, Clone, Default)]
pub struct BestSnapshot {
    pub shapes: Vec<Vec<usize>>,
    pub flat: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutput {
    pub records: Vec<TrainRecord>,
    pub best_epoch: u32,
    pub best_val_loss: f64,
    pub test: TestMetrics,
    /// True when no test set was configured and test-style metrics fall
    /// back to the validation split.
    pub test_on_validation: bool,
    /// (epoch, test accuracy) at each configured report epoch.
    pub report_epoch_test_accuracy: Vec<(u32, f64)>,
    pub iterations_run: u64,
    pub predictions_fired: u64,
    /// 1-based base-iteration indices where predictions fired (only when
    /// the run traces predictions).
    pub prediction_trace: Vec<u64>,
    /// Peak auxiliary f64 storage of the prediction wrapper, when used.
    pub peak_aux_f64: Option<usize>,
    pub param_traces: Vec<ParamTrace>,
    #[serde(skip)]
    pub best_snapshot: BestSnapshot,
}

pub(crate) struct PreparedData {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Option<Dataset>,
}

pub(crate) fn prepare_data(config: &RunConfig) -> Result<PreparedData> {
    let (full, test_raw) = match &config.dataset {
        DatasetSpec::Synthetic {
            num_classes,
            samples_per_class,
            test_per_class,
            feature_dim,
            separation,
            data_seed,
        } => {
            let full = gen_synthetic_with_separation(
                *num_classes,
                *samples_per_class,
                *feature_dim,
                *data_seed,
                *separation,
            )?;
            let test = if *test_per_class > 0 {
                // The held-out set comes from the next seed so it never
                // overlaps the training draw.
                Some(gen_synthetic_with_separation(
                    *num_classes,
                    *test_per_class,
                    *feature_dim,
                    data_seed.wrapping_add(1),
                    *separation,
                )?)
            } else {
                None
            };
            (full, test)
        }
        DatasetSpec::CifarBinary {
            train_path,
            test_path,
            variant,
        } => {
            let full = load_cifar_binary(train_path, *variant)?;
            let test = match test_path {
                Some(p) => Some(load_cifar_binary(p, *variant)?),
                None => None,
            };
            (full, test)
        }
    };
    let (train, val) = split(
        &full,
        &SplitSpec {
            validation_fraction: config.validation_fraction,
            seed: config.seed,
        },
    )?;
    let standardizer = Standardizer::fit(&train);
    Ok(PreparedData {
        train: standardizer.transform(&train)?,
        val: standardizer.transform(&val)?,
        test: test_raw.map(|t| standardizer.transform(&t)).transpose()?,
    })
}

pub(crate) fn build_model(config: &RunConfig) -> Result<Box<dyn Model>> {
    let mut rng = Rng::derive(config.seed, STREAM_INIT);
    let classes = config.num_classes();
    match &config.model {
        ModelSpec::Mlp { hidden } => {
            let feature_dim = match &config.dataset {
                DatasetSpec::Synthetic { feature_dim, .. } => *feature_dim,
                DatasetSpec::CifarBinary { .. } => crate::data::CIFAR_PIXELS,
            };
            let mut dims = vec![feature_dim];
            dims.extend_from_slice(hidden);
            dims.push(classes);
            Ok(Box::new(Mlp::new(&dims, &mut rng)?))
        }
        ModelSpec::TinyCnn {
            image,
            conv_channels,
        } => Ok(Box::new(TinyCnn::new(
            *image,
            conv_channels,
            classes,
            &mut rng,
        )?)),
    }
}

pub(crate) enum BuiltOptimizer {
    Plain(Box<dyn Optimizer>),
    Plp(PlpWrapper<Box<dyn Optimizer>>),
}

impl BuiltOptimizer {
    fn step(&mut self, params: &mut ParamVector, grads: &[f64], lr: f64) -> Result<()> {
        match self {
            BuiltOptimizer::Plain(o) => o.step(params, grads, lr),
            BuiltOptimizer::Plp(o) => o.step(params, grads, lr),
        }
    }

    fn plp(&self) -> Option<&PlpWrapper<Box<dyn Optimizer>>> {
        match self {
            BuiltOptimizer::Plain(_) => None,
            BuiltOptimizer::Plp(o) => Some(o),
        }
    }
}

fn build_base(
    kind: BaseOptimizerKind,
    spec: &OptimizerSpec,
    n: usize,
    total_iterations: u64,
) -> Result<Box<dyn Optimizer>> {
    Ok(match kind {
        BaseOptimizerKind::Sgd => Box::new(SgdMomentum::new(n, spec.momentum, spec.weight_decay)),
        BaseOptimizerKind::Demon => Box::new(Demon::new(
            n,
            spec.beta_init,
            spec.weight_decay,
            total_iterations,
        )?),
        BaseOptimizerKind::Adam => Box::new(Adam::new(
            n,
            spec.beta1,
            spec.beta2,
            spec.eps,
            spec.weight_decay,
        )),
    })
}

pub(crate) fn build_optimizer(
    spec: &OptimizerSpec,
    n: usize,
    total_iterations: u64,
) -> Result<BuiltOptimizer> {
    Ok(match spec.kind {
        OptimizerKind::Sgd => BuiltOptimizer::Plain(build_base(
            BaseOptimizerKind::Sgd,
            spec,
            n,
            total_iterations,
        )?),
        OptimizerKind::Demon => BuiltOptimizer::Plain(build_base(
            BaseOptimizerKind::Demon,
            spec,
            n,
            total_iterations,
        )?),
        OptimizerKind::Adam => BuiltOptimizer::Plain(build_base(
            BaseOptimizerKind::Adam,
            spec,
            n,
            total_iterations,
        )?),
        OptimizerKind::Plp => {
            let base = build_base(spec.plp.base, spec, n, total_iterations)?;
            BuiltOptimizer::Plp(PlpWrapper::new(
                base,
                PlpOptions {
                    step: spec.plp.step,
                    predict_identity: spec.plp.predict_identity,
                    trace_predictions: spec.plp.trace_predictions,
                    reset_velocity_on_predict: spec.plp.reset_velocity_on_predict,
                },
            )?)
        }
    })
}

struct EvalResult {
    loss: f64,
    accuracy: f64,
    top1_error: f64,
    topk_error: f64,
}

/// Full-set loss/accuracy/top-k in fixed chunk order; sums never depend on
/// evaluation order.
fn evaluate(model: &dyn Model, ds: &Dataset, k: usize) -> Result<EvalResult> {
    let n = ds.num_samples();
    let mut loss_sum = 0.0;
    let mut top1_misses = 0.0;
    let mut topk_misses = 0.0;
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_CHUNK).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let chunk = ds.select(&idx)?;
        let logits = model.forward(&chunk.inputs)?;
        let (chunk_loss, _) = crate::model::softmax_cross_entropy(&logits, &chunk.labels)?;
        let bn = (end - start) as f64;
        loss_sum += chunk_loss * bn;
        top1_misses += topk_error(&logits, &chunk.labels, 1)? * bn;
        topk_misses += topk_error(&logits, &chunk.labels, k)? * bn;
        start = end;
    }
    let nf = n as f64;
    let top1 = top1_misses / nf;
    Ok(EvalResult {
        loss: loss_sum / nf,
        accuracy: 1.0 - top1,
        top1_error: top1,
        topk_error: topk_misses / nf,
    })
}

/// Picks a few parameter indices per layer for trajectory tracing. Layers
/// are (weights, bias) pairs in flattening order.
fn pick_trace_indices(model: &dyn Model, per_layer: usize, seed: u64) -> Vec<ParamTrace> {
    let shapes = model.param_shapes();
    let mut rng = Rng::derive(seed, STREAM_TRACE);
    let mut traces = Vec::new();
    let mut offset = 0;
    for (layer, pair) in shapes.chunks(2).enumerate() {
        let span: usize = pair.iter().map(|s| s.iter().product::<usize>()).sum();
        for _ in 0..per_layer.min(span) {
            traces.push(ParamTrace::new(layer, offset + rng.below(span)));
        }
        offset += span;
    }
    traces
}

/// Executes the configured training run. Deterministic per (config, seed);
/// any non-finite loss or parameter aborts with the offending iteration.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let data = prepare_data(config)?;
    let mut model = build_model(config)?;
    let classes = model.num_classes();
    let topk = classes.min(5);

    let train_n = data.train.num_samples();
    let iters_per_epoch = train_n.div_ceil(config.batch_size) as u64;
    let total_iterations = iters_per_epoch * config.epochs as u64;

    let mut params = ParamVector::new(model.flatten());
    let mut optimizer = build_optimizer(&config.optimizer, params.len(), total_iterations)?;
    let schedule = config.schedule.build(iters_per_epoch);
    schedule.validate()?;

    let mut traces = if config.trace.enabled {
        pick_trace_indices(&*model, config.trace.per_layer, config.seed)
    } else {
        Vec::new()
    };

    let mut records = Vec::with_capacity(config.epochs);
    let mut best_epoch = 0u32;
    let mut best_val_loss = f64::INFINITY;
    let mut best_params: Vec<f64> = Vec::new();
    let mut report_epoch_test_accuracy = Vec::new();
    let mut iteration = 0u64;

    for epoch in 1..=config.epochs as u32 {
        let epoch_seed =
            Rng::derive(config.seed, STREAM_EPOCH_BASE.wrapping_add(epoch as u64)).next_u64();
        let mut lr_sum = 0.0;
        let mut batches_run = 0u64;
        for batch in batches(&data.train, config.batch_size, epoch_seed)? {
            let lr = schedule.lr_at(iteration);
            model.load_flat(params.as_slice())?;
            let (loss, grads) = model
                .loss_and_grad(&batch.inputs, &batch.labels)
                .map_err(|e| at_iteration(e, iteration + 1))?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    iteration: iteration + 1,
                    what: format!("training loss is {loss}"),
                });
            }
            optimizer.step(&mut params, &grads, lr)?;
            iteration += 1;
            lr_sum += lr;
            batches_run += 1;
            for trace in &mut traces {
                trace.record(params.as_slice()[trace.index]);
            }
        }

        model.load_flat(params.as_slice())?;
        let train_eval = evaluate(&*model, &data.train, topk)?;
        let val_eval = evaluate(&*model, &data.val, topk)?;
        records.push(TrainRecord {
            epoch,
            train_loss: train_eval.loss,
            train_accuracy: train_eval.accuracy,
            val_loss: val_eval.loss,
            val_accuracy: val_eval.accuracy,
            top1_error: val_eval.top1_error,
            top5_error: val_eval.topk_error,
            mean_lr: lr_sum / batches_run as f64,
        });
        if val_eval.loss < best_val_loss {
            best_val_loss = val_eval.loss;
            best_epoch = epoch;
            best_params = params.as_slice().to_vec();
        }
        if config.report_epochs.contains(&epoch) {
            let eval_set = data.test.as_ref().unwrap_or(&data.val);
            let acc = evaluate(&*model, eval_set, topk)?.accuracy;
            report_epoch_test_accuracy.push((epoch, acc));
        }
    }

    // Metrics of the optimal model, via the saved best-epoch snapshot.
    model.load_flat(&best_params)?;
    let test_on_validation = data.test.is_none();
    let eval_set = data.test.as_ref().unwrap_or(&data.val);
    let test_eval = evaluate(&*model, eval_set, topk)?;

    let (predictions_fired, prediction_trace, peak_aux) = match optimizer.plp() {
        Some(w) => (
            w.predictions_fired(),
            w.prediction_trace().to_vec(),
            Some(w.peak_aux_f64()),
        ),
        None => (0, Vec::new(), None),
    };

    Ok(RunOutput {
        records,
        best_epoch,
        best_val_loss,
        test: TestMetrics {
            accuracy: test_eval.accuracy,
            top1_error: test_eval.top1_error,
            top5_error: test_eval.topk_error,
        },
        test_on_validation,
        report_epoch_test_accuracy,
        iterations_run: iteration,
        predictions_fired,
        prediction_trace,
        peak_aux_f64: peak_aux,
        param_traces: traces,
        best_snapshot: BestSnapshot {
            shapes: model.param_shapes(),
            flat: best_params,
        },
    })
}

fn at_iteration(e: Error, iteration: u64) -> Error {
    match e {
        Error::NonFinite(what) => Error::Divergence { iteration, what },
        other => other,
    }
}
