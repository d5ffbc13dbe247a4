//! Seed repetition, hyperparameter sweeps, and report emission.
//!
//! Reports carry raw fractions and raw losses; any display scaling is a
//! presentation concern. Emitted files contain no timestamps, so a
//! (config, seed) pair determines every byte.

use super::config::{OptimizerKind, RunConfig, ScheduleSpec};
use super::trainer::{run, RunOutput, TestMetrics};
use crate::error::{Error, Result};
use crate::metrics::{loss_diff, LossDiffSeries, TrainRecord};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// Outcome of one (method, seed) cell. A diverged run keeps its seed row
/// with the failure message instead of dropping silently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub status: String,
    pub best_epoch: Option<u32>,
    pub best_val_loss: Option<f64>,
    pub test: Option<TestMetrics>,
    pub report_epoch_test_accuracy: Vec<(u32, f64)>,
    pub val_loss_by_epoch: Vec<f64>,
}

impl SeedResult {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    /// Per-seed best-epoch/loss rows.
    pub seeds: Vec<SeedResult>,
    pub mean_best_epoch: Option<f64>,
    pub mean_best_val_loss: Option<f64>,
    /// Mean test accuracy at each configured report epoch.
    pub epoch_accuracy_mean: Vec<(u32, Option<f64>)>,
    /// Mean test metrics of the per-seed optimal models.
    pub optimal_mean: Option<TestMetrics>,
    /// Validation loss per epoch, averaged over succeeding seeds.
    pub mean_val_loss_by_epoch: Vec<f64>,
}

/// Validation-loss difference between two methods' mean curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDiffPair {
    pub a: String,
    pub b: String,
    pub series: LossDiffSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub n_seeds: usize,
    pub seed_base: u64,
    pub epochs: usize,
    pub report_epochs: Vec<u32>,
    pub methods: Vec<MethodReport>,
    /// All method pairs, series computed as `a - b` in listed order.
    pub loss_diffs: Vec<LossDiffPair>,
}

impl ExperimentReport {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }
}

/// Runs `n_seeds` seeds (config.seed, config.seed + 1, ...) for each method
/// and aggregates means. `jobs` > 1 runs cells on worker threads; results
/// are folded in (method, seed) order either way, so reports are identical.
pub fn repeat(
    config: &RunConfig,
    methods: &[OptimizerKind],
    n_seeds: usize,
    jobs: usize,
) -> Result<ExperimentReport> {
    if n_seeds == 0 {
        return Err(Error::InvalidArgument("repeat needs n_seeds >= 1".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidArgument(
            "repeat needs at least one method".into(),
        ));
    }
    config.validate()?;

    let mut cells = Vec::with_capacity(methods.len() * n_seeds);
    for &method in methods {
        for s in 0..n_seeds as u64 {
            cells.push(config.with_optimizer(method).with_seed(config.seed + s));
        }
    }
    let outputs = run_cells(&cells, jobs.max(1));

    let mut methods_out = Vec::with_capacity(methods.len());
    for (mi, &method) in methods.iter().enumerate() {
        let slice = &outputs[mi * n_seeds..(mi + 1) * n_seeds];
        methods_out.push(aggregate_method(
            method.name(),
            config,
            slice,
            config.seed,
            n_seeds,
        ));
    }

    let mut loss_diffs = Vec::new();
    for i in 0..methods_out.len() {
        for j in (i + 1)..methods_out.len() {
            if let Some(series) = mean_curve_diff(&methods_out[i], &methods_out[j]) {
                loss_diffs.push(LossDiffPair {
                    a: methods_out[i].method.clone(),
                    b: methods_out[j].method.clone(),
                    series,
                });
            }
        }
    }

    Ok(ExperimentReport {
        n_seeds,
        seed_base: config.seed,
        epochs: config.epochs,
        report_epochs: config.report_epochs.clone(),
        methods: methods_out,
        loss_diffs,
    })
}

fn run_cells(cells: &[RunConfig], jobs: usize) -> Vec<Result<RunOutput>> {
    if jobs <= 1 || cells.len() <= 1 {
        return cells.iter().map(run).collect();
    }
    let slots: Mutex<Vec<Option<Result<RunOutput>>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for worker in 0..jobs.min(cells.len()) {
            let slots = &slots;
            scope.spawn(move || {
                let mut i = worker;
                while i < cells.len() {
                    let out = run(&cells[i]);
                    slots.lock().expect("result mutex")[i] = Some(out);
                    i += jobs;
                }
            });
        }
    });
    slots
        .into_inner()
        .expect("result mutex")
        .into_iter()
        .map(|s| s.expect("every cell filled"))
        .collect()
}

fn aggregate_method(
    name: &str,
    config: &RunConfig,
    outputs: &[Result<RunOutput>],
    seed_base: u64,
    n_seeds: usize,
) -> MethodReport {
    let mut seeds = Vec::with_capacity(n_seeds);
    for (s, out) in outputs.iter().enumerate() {
        let seed = seed_base + s as u64;
        match out {
            Ok(o) => seeds.push(SeedResult {
                seed,
                status: "ok".into(),
                best_epoch: Some(o.best_epoch),
                best_val_loss: Some(o.best_val_loss),
                test: Some(o.test),
                report_epoch_test_accuracy: o.report_epoch_test_accuracy.clone(),
                val_loss_by_epoch: o.records.iter().map(|r| r.val_loss).collect(),
            }),
            Err(e) => seeds.push(SeedResult {
                seed,
                status: e.to_string(),
                best_epoch: None,
                best_val_loss: None,
                test: None,
                report_epoch_test_accuracy: Vec::new(),
                val_loss_by_epoch: Vec::new(),
            }),
        }
    }

    let ok: Vec<&SeedResult> = seeds.iter().filter(|s| s.ok()).collect();
    let mean = |f: &dyn Fn(&SeedResult) -> f64| -> Option<f64> {
        if ok.is_empty() {
            None
        } else {
            Some(ok.iter().map(|s| f(s)).sum::<f64>() / ok.len() as f64)
        }
    };

    let mean_best_epoch = mean(&|s| s.best_epoch.expect("ok seed") as f64);
    let mean_best_val_loss = mean(&|s| s.best_val_loss.expect("ok seed"));
    let optimal_mean = if ok.is_empty() {
        None
    } else {
        let n = ok.len() as f64;
        Some(TestMetrics {
            accuracy: ok
                .iter()
                .map(|s| s.test.expect("ok seed").accuracy)
                .sum::<f64>()
                / n,
            top1_error: ok
                .iter()
                .map(|s| s.test.expect("ok seed").top1_error)
                .sum::<f64>()
                / n,
            top5_error: ok
                .iter()
                .map(|s| s.test.expect("ok seed").top5_error)
                .sum::<f64>()
                / n,
        })
    };

    let epoch_accuracy_mean = config
        .report_epochs
        .iter()
        .map(|&e| {
            let vals: Vec<f64> = ok
                .iter()
                .filter_map(|s| {
                    s.report_epoch_test_accuracy
                        .iter()
                        .find(|(ep, _)| *ep == e)
                        .map(|(_, a)| *a)
                })
                .collect();
            let mean = if vals.is_empty() {
                None
            } else {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            };
            (e, mean)
        })
        .collect();

    let mean_val_loss_by_epoch = if ok.is_empty() {
        Vec::new()
    } else {
        let epochs = ok[0].val_loss_by_epoch.len();
        (0..epochs)
            .map(|i| ok.iter().map(|s| s.val_loss_by_epoch[i]).sum::<f64>() / ok.len() as f64)
            .collect()
    };

    MethodReport {
        method: name.into(),
        seeds,
        mean_best_epoch,
        mean_best_val_loss,
        epoch_accuracy_mean,
        optimal_mean,
        mean_val_loss_by_epoch,
    }
}

/// Loss difference of two methods' mean validation-loss curves, reusing the
/// record-based series op.
fn mean_curve_diff(a: &MethodReport, b: &MethodReport) -> Option<LossDiffSeries> {
    if a.mean_val_loss_by_epoch.is_empty()
        || a.mean_val_loss_by_epoch.len() != b.mean_val_loss_by_epoch.len()
    {
        return None;
    }
    let to_records = |curve: &[f64]| -> Vec<TrainRecord> {
        curve
            .iter()
            .enumerate()
            .map(|(i, &v)| TrainRecord {
                epoch: i as u32 + 1,
                train_loss: 0.0,
                train_accuracy: 0.0,
                val_loss: v,
                val_accuracy: 0.0,
                top1_error: 0.0,
                top5_error: 0.0,
                mean_lr: 0.0,
            })
            .collect()
    };
    loss_diff(
        &to_records(&a.mean_val_loss_by_epoch),
        &to_records(&b.mean_val_loss_by_epoch),
    )
    .ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Lr,
    BatchSize,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Lr => "lr",
            SweepAxis::BatchSize => "batch_size",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lr" => Ok(SweepAxis::Lr),
            "batch_size" | "batch-size" => Ok(SweepAxis::BatchSize),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep axis '{other}' (expected lr or batch_size)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepValues {
    Lr(Vec<f64>),
    BatchSize(Vec<usize>),
}

pub fn default_lr_values() -> Vec<f64> {
    vec![0.01, 0.001, 0.0001]
}

pub fn default_batch_values() -> Vec<usize> {
    vec![32, 64, 128, 256]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub value: String,
    pub report: ExperimentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: String,
    pub cells: Vec<SweepCell>,
}

/// One [`repeat`] per sweep value. The learning-rate axis swaps in a
/// constant schedule at the swept rate (sensitivity runs use no schedule
/// adjustment); the batch axis rewrites `batch_size`.
pub fn sweep(
    config: &RunConfig,
    values: &SweepValues,
    methods: &[OptimizerKind],
    n_seeds: usize,
    jobs: usize,
) -> Result<SweepReport> {
    let cells: Vec<(String, RunConfig)> = match values {
        SweepValues::Lr(lrs) => {
            if lrs.is_empty() {
                return Err(Error::InvalidArgument("empty sweep values".into()));
            }
            lrs.iter()
                .map(|&lr| {
                    let mut c = config.clone();
                    c.schedule = ScheduleSpec::Constant { base_lr: lr };
                    (format!("{lr}"), c)
                })
                .collect()
        }
        SweepValues::BatchSize(sizes) => {
            if sizes.is_empty() {
                return Err(Error::InvalidArgument("empty sweep values".into()));
            }
            sizes
                .iter()
                .map(|&bs| {
                    let mut c = config.clone();
                    c.batch_size = bs;
                    (format!("{bs}"), c)
                })
                .collect()
        }
    };
    let axis = match values {
        SweepValues::Lr(_) => SweepAxis::Lr,
        SweepValues::BatchSize(_) => SweepAxis::BatchSize,
    };
    let mut out = Vec::with_capacity(cells.len());
    for (value, cell_config) in cells {
        let report = repeat(&cell_config, methods, n_seeds, jobs)?;
        out.push(SweepCell { value, report });
    }
    Ok(SweepReport {
        axis: axis.name().into(),
        cells: out,
    })
}

// ---------------------------------------------------------------------------
// Emission

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    write_file(path, &(text + "\n"))
}

pub fn read_experiment_json(path: &Path) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_sweep_json(path: &Path) -> Result<SweepReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Per-seed best-epoch rows (the shape of the per-model comparison tables).
pub fn best_epochs_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("Method,Seed,BestEpoch,BestValLoss,Status\n");
    for m in &report.methods {
        for s in &m.seeds {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                m.method,
                s.seed,
                s.best_epoch.map(|e| e.to_string()).unwrap_or_default(),
                opt(s.best_val_loss),
                csv_field(&s.status)
            ));
        }
    }
    out
}

/// Summary table: mean test accuracy at the report epochs plus optimal-model
/// accuracy and top-1/top-5 error per method.
pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("Method");
    for e in &report.report_epochs {
        out.push_str(&format!(",Epoch{e}"));
    }
    out.push_str(",Accuracy,Top1,Top5\n");
    for m in &report.methods {
        out.push_str(&m.method);
        for &(_, acc) in &m.epoch_accuracy_mean {
            out.push(',');
            out.push_str(&opt(acc));
        }
        out.push_str(&format!(
            ",{},{},{}\n",
            opt(m.optimal_mean.map(|t| t.accuracy)),
            opt(m.optimal_mean.map(|t| t.top1_error)),
            opt(m.optimal_mean.map(|t| t.top5_error)),
        ));
    }
    out
}

/// Loss-difference series as (epoch, diff) rows plus one `mean` row per
/// pair (the average line of the difference plots).
pub fn loss_diff_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("Pair,Epoch,Diff\n");
    for pair in &report.loss_diffs {
        let name = format!("{}-{}", pair.a, pair.b);
        for &(epoch, d) in &pair.series.diffs {
            out.push_str(&format!("{name},{epoch},{d}\n"));
        }
        out.push_str(&format!("{name},mean,{}\n", pair.series.mean));
    }
    out
}

/// Sensitivity grid: one row per (value, method) with mean best epoch and
/// optimal-model metrics.
pub fn sweep_grid_csv(report: &SweepReport) -> String {
    let mut out = String::from("Axis,Value,Method,Epoch,Accuracy,Top1,Top5\n");
    for cell in &report.cells {
        for m in &cell.report.methods {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                report.axis,
                cell.value,
                m.method,
                opt(m.mean_best_epoch),
                opt(m.optimal_mean.map(|t| t.accuracy)),
                opt(m.optimal_mean.map(|t| t.top1_error)),
                opt(m.optimal_mean.map(|t| t.top5_error)),
            ));
        }
    }
    out
}

/// Per-epoch training records of a single run.
pub fn records_csv(records: &[TrainRecord]) -> String {
    let mut out = String::from(
        "Epoch,TrainLoss,TrainAccuracy,ValLoss,ValAccuracy,Top1Error,Top5Error,MeanLr\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.epoch,
            r.train_loss,
            r.train_accuracy,
            r.val_loss,
            r.val_accuracy,
            r.top1_error,
            r.top5_error,
            r.mean_lr
        ));
    }
    out
}

/// Raw parameter trajectories, one row per (trace, iteration).
pub fn traces_csv(traces: &[crate::metrics::ParamTrace]) -> String {
    let mut out = String::from("Layer,Index,Iteration,Value\n");
    for t in traces {
        for (i, v) in t.values.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", t.layer, t.index, i + 1, v));
        }
    }
    out
}

/// Base-iteration indices where predictions fired.
pub fn predictions_csv(trace: &[u64]) -> String {
    let mut out = String::from("Iteration\n");
    for i in trace {
        out.push_str(&format!("{i}\n"));
    }
    out
}

/// Writes the experiment report as JSON plus the three CSV shapes.
pub fn emit_experiment(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let json = dir.join("report.json");
    write_json(report, &json)?;
    written.push(json);
    for (name, contents) in [
        ("best_epochs.csv", best_epochs_csv(report)),
        ("summary.csv", summary_csv(report)),
        ("loss_diff.csv", loss_diff_csv(report)),
    ] {
        let path = dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes the sweep report as JSON plus the grid CSV.
pub fn emit_sweep(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let json = dir.join("sweep.json");
    write_json(report, &json)?;
    written.push(json);
    let grid = dir.join("sweep_grid.csv");
    write_file(&grid, &sweep_grid_csv(report))?;
    written.push(grid);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_report() -> ExperimentReport {
        ExperimentReport {
            n_seeds: 0,
            seed_base: 0,
            epochs: 0,
            report_epochs: vec![10, 20, 30],
            methods: Vec::new(),
            loss_diffs: Vec::new(),
        }
    }

    #[test]
    fn empty_report_emits_header_only_csvs() {
        let r = empty_report();
        assert_eq!(
            best_epochs_csv(&r),
            "Method,Seed,BestEpoch,BestValLoss,Status\n"
        );
        assert_eq!(
            summary_csv(&r),
            "Method,Epoch10,Epoch20,Epoch30,Accuracy,Top1,Top5\n"
        );
        assert_eq!(loss_diff_csv(&r), "Pair,Epoch,Diff\n");
    }

    #[test]
    fn csv_fields_with_commas_are_quoted() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let r = empty_report();
        let dir = std::env::temp_dir().join("plpkit_report_test");
        let path = dir.join("report.json");
        write_json(&r, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let loaded = read_experiment_json(&path).unwrap();
        write_json(&loaded, &path).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn sweep_axis_parses_both_spellings() {
        assert_eq!(
            SweepAxis::parse("batch-size").unwrap(),
            SweepAxis::BatchSize
        );
        assert_eq!(
            SweepAxis::parse("batch_size").unwrap(),
            SweepAxis::BatchSize
        );
        assert_eq!(SweepAxis::parse("lr").unwrap(), SweepAxis::Lr);
        assert!(SweepAxis::parse("momentum").is_err());
    }
}
