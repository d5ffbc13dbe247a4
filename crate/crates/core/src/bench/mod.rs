//! Experiment orchestration: run configs, the training loop, seed
//! repetition, hyperparameter sweeps, and report emission.

mod config;
mod report;
mod trainer;

pub use config::{
    BaseOptimizerKind, DatasetSpec, ModelSpec, OptimizerKind, OptimizerSpec, PlpSpec, RunConfig,
    ScheduleSpec, TraceSpec, DESK_SCALE_EPOCHS,
};
pub use report::{
    best_epochs_csv, default_batch_values, default_lr_values, emit_experiment, emit_sweep,
    loss_diff_csv, predictions_csv, read_experiment_json, read_sweep_json, records_csv, repeat,
    summary_csv, sweep, sweep_grid_csv, traces_csv, write_json, ExperimentReport, LossDiffPair,
    MethodReport, SeedResult, SweepAxis, SweepCell, SweepReport, SweepValues,
};
pub use trainer::{run, BestSnapshot, RunOutput, TestMetrics};
