//! Benchmark harness CLI: `run` one training config, `repeat` it across
//! seeds and optimizers, `sweep` a hyperparameter axis, or re-`report` a
//! saved JSON report as CSV.

use clap::{Args, Parser, Subcommand};
use plpkit::bench::{
    self, emit_experiment, emit_sweep, read_experiment_json, read_sweep_json, OptimizerKind,
    RunConfig, SweepAxis, SweepValues,
};
use plpkit::model::save_arrays;
use plpkit::numkit::DenseArray;
use plpkit::Result;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "plpbench",
    version,
    about = "Optimizer comparison bench harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one training run.
    Run(RunArgs),
    /// Run every (optimizer, seed) cell and aggregate a comparison report.
    Repeat(RepeatArgs),
    /// Sweep learning rate or batch size, one aggregated report per value.
    Sweep(SweepArgs),
    /// Re-emit a saved report.json / sweep.json as CSV + JSON.
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's out_dir, then ./plpbench-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Shrink the run to the desk-scale preset (20 epochs).
    #[arg(long)]
    desk_scale: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the configured optimizer (sgd, demon, adam, plp).
    #[arg(long)]
    optimizer: Option<String>,
}

#[derive(Args)]
struct RepeatArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of seeds, starting at the base seed.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    /// Comma-separated optimizers to compare.
    #[arg(long, default_value = "plp,sgd,demon")]
    optimizers: String,
    /// Worker threads for independent cells (results are identical to
    /// sequential execution).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sweep axis: lr or batch-size.
    #[arg(long)]
    axis: String,
    /// Comma-separated values; defaults to lr {0.01, 0.001, 0.0001} or
    /// batch {32, 64, 128, 256}.
    #[arg(long)]
    values: Option<String>,
    #[arg(long, default_value_t = 3)]
    seeds: usize,
    #[arg(long, default_value = "plp,sgd,demon")]
    optimizers: String,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.json or sweep.json produced by repeat/sweep.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "plpbench-out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Repeat(args) => cmd_repeat(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut config = RunConfig::from_json_file(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if common.desk_scale {
        config.apply_desk_scale();
    }
    Ok(config)
}

fn out_dir(common: &CommonArgs, config: &RunConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("plpbench-out"))
}

fn parse_optimizers(list: &str) -> Result<Vec<OptimizerKind>> {
    list.split(',')
        .map(|s| OptimizerKind::parse(s.trim()))
        .collect()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| plpkit::Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, contents).map_err(|e| plpkit::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = load_config(&args.common)?;
    if let Some(opt) = &args.optimizer {
        config.optimizer.kind = OptimizerKind::parse(opt)?;
    }
    let out = out_dir(&args.common, &config);
    let output = bench::run(&config)?;

    bench::write_json(&output, &out.join("run.json"))?;
    write(
        &out.join("records.csv"),
        &bench::records_csv(&output.records),
    )?;
    if !output.param_traces.is_empty() {
        write(
            &out.join("param_traces.csv"),
            &bench::traces_csv(&output.param_traces),
        )?;
    }
    if !output.prediction_trace.is_empty() {
        write(
            &out.join("predictions.csv"),
            &bench::predictions_csv(&output.prediction_trace),
        )?;
    }
    let snapshot = &output.best_snapshot;
    if !snapshot.flat.is_empty() {
        let mut arrays = Vec::new();
        let mut off = 0;
        for shape in &snapshot.shapes {
            let n: usize = shape.iter().product();
            arrays.push(DenseArray::from_vec(
                snapshot.flat[off..off + n].to_vec(),
                shape.clone(),
            )?);
            off += n;
        }
        save_arrays(&out.join("best_params.bin"), &arrays)?;
    }

    println!(
        "run complete: {} epochs, {} iterations, best epoch {} (val loss {:.6})",
        output.records.len(),
        output.iterations_run,
        output.best_epoch,
        output.best_val_loss
    );
    println!(
        "optimal-model test metrics: accuracy {:.4}, top-1 {:.4}, top-5 {:.4}{}",
        output.test.accuracy,
        output.test.top1_error,
        output.test.top5_error,
        if output.test_on_validation {
            " (on validation split; no test set configured)"
        } else {
            ""
        }
    );
    println!("artifacts in {}", out.display());
    Ok(())
}

fn cmd_repeat(args: RepeatArgs) -> Result<()> {
    let config = load_config(&args.common)?;
    let out = out_dir(&args.common, &config);
    let methods = parse_optimizers(&args.optimizers)?;
    let report = bench::repeat(&config, &methods, args.seeds, args.jobs)?;
    let files = emit_experiment(&report, &out)?;
    for m in &report.methods {
        println!(
            "{:>6}: mean best epoch {}, mean best val loss {}",
            m.method,
            m.mean_best_epoch
                .map(|v| format!("{v:.2}"))
                .unwrap_or_else(|| "-".into()),
            m.mean_best_val_loss
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "-".into()),
        );
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let config = load_config(&args.common)?;
    let out = out_dir(&args.common, &config);
    let methods = parse_optimizers(&args.optimizers)?;
    let axis = SweepAxis::parse(&args.axis)?;
    let values = match (axis, &args.values) {
        (SweepAxis::Lr, None) => SweepValues::Lr(bench::default_lr_values()),
        (SweepAxis::BatchSize, None) => SweepValues::BatchSize(bench::default_batch_values()),
        (SweepAxis::Lr, Some(list)) => SweepValues::Lr(parse_list(list)?),
        (SweepAxis::BatchSize, Some(list)) => SweepValues::BatchSize(parse_list(list)?),
    };
    let report = bench::sweep(&config, &values, &methods, args.seeds, args.jobs)?;
    let files = emit_sweep(&report, &out)?;
    println!(
        "sweep over {} complete: {} values x {} optimizers",
        report.axis,
        report.cells.len(),
        methods.len()
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(list: &str) -> Result<Vec<T>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| plpkit::Error::InvalidConfig(format!("bad sweep value '{s}'")))
        })
        .collect()
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    // A saved report is either an experiment or a sweep; try both shapes.
    match read_experiment_json(&args.input) {
        Ok(report) => {
            let files = emit_experiment(&report, &args.out)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Err(first_err) => match read_sweep_json(&args.input) {
            Ok(report) => {
                let files = emit_sweep(&report, &args.out)?;
                for f in files {
                    println!("wrote {}", f.display());
                }
                Ok(())
            }
            Err(_) => Err(first_err),
        },
    }
}
