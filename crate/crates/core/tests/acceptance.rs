//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`
//! to see them).

use plpkit::bench::{
    repeat, run, sweep, DatasetSpec, ModelSpec, OptimizerKind, OptimizerSpec, PlpSpec, RunConfig,
    ScheduleSpec, SweepValues, TraceSpec,
};
use plpkit::data::gen_synthetic;
use plpkit::metrics::{accuracy, best_epoch, topk_error, TrainRecord};
use plpkit::model::{grad_check, Mlp, TinyCnn};
use plpkit::numkit::{DenseArray, Rng};
use plpkit::optim::{demon_beta, plp_predict, Adam, Demon, Optimizer, ParamVector, SgdMomentum};

fn pass(id: u32, detail: &str) {
    println!("PASS  criterion {id}: {detail}");
}

// --- criterion 1: prediction formula against an independent oracle -------

// Three-line oracle coded apart from the production implementation.
fn oracle_predict(s1: &[f64], s2: &[f64], s3: &[f64], step: f64) -> Vec<f64> {
    let m12: Vec<f64> = s1.iter().zip(s2).map(|(a, b)| (a + b) / 2.0).collect();
    let m23: Vec<f64> = s2.iter().zip(s3).map(|(a, b)| (a + b) / 2.0).collect();
    m23.iter()
        .zip(&m12)
        .map(|(m23i, m12i)| m23i + step * (m23i - m12i))
        .collect()
}

#[test]
fn criterion_1_plp_formula_oracle() {
    let mut rng = Rng::new(0xC1);
    let dim = 1000;
    let mut max_rel: f64 = 0.0;
    for trial in 0..100 {
        let step = match trial % 3 {
            0 => 1.0,
            1 => 0.0,
            _ => 2.5,
        };
        let draw =
            |rng: &mut Rng| -> Vec<f64> { (0..dim).map(|_| rng.uniform(-10.0, 10.0)).collect() };
        let (s1, s2, s3) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let got = plp_predict(&s1, &s2, &s3, step).unwrap();
        let want = oracle_predict(&s1, &s2, &s3, step);
        for (g, w) in got.iter().zip(&want) {
            let rel = (g - w).abs() / g.abs().max(w.abs()).max(1.0);
            max_rel = max_rel.max(rel);
        }
    }
    assert!(max_rel <= 1e-15, "oracle mismatch: max rel {max_rel}");

    // Affine-sequence law: s_i = a + i*b predicts a + (2.5 + step)*b.
    let mut law_err: f64 = 0.0;
    for &step in &[0.0, 1.0, 2.0] {
        let a: Vec<f64> = (0..dim).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let b: Vec<f64> = (0..dim).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let grid = |i: f64| -> Vec<f64> { a.iter().zip(&b).map(|(ai, bi)| ai + i * bi).collect() };
        let got = plp_predict(&grid(1.0), &grid(2.0), &grid(3.0), step).unwrap();
        for ((g, ai), bi) in got.iter().zip(&a).zip(&b) {
            let want = ai + (2.5 + step) * bi;
            let scale = ai.abs().max(bi.abs()).max(1.0);
            law_err = law_err.max((g - want).abs() / scale);
        }
    }
    assert!(law_err <= 1e-14, "affine law violated: {law_err}");
    pass(
        1,
        &format!("oracle max rel {max_rel:.2e}, affine law err {law_err:.2e}"),
    );
}

// --- criterion 2: momentum decay endpoints and monotonicity --------------

#[test]
fn criterion_2_demon_decay() {
    let total = 1000;
    for &beta in &[0.5, 0.9, 0.99] {
        assert_eq!(
            demon_beta(0, total, beta).unwrap(),
            beta,
            "beta_0 != beta_init"
        );
        assert_eq!(demon_beta(total, total, beta).unwrap(), 0.0, "beta_T != 0");
        let mut prev = f64::INFINITY;
        for t in 0..=total {
            let b = demon_beta(t, total, beta).unwrap();
            assert!(b <= prev, "beta not monotone at t={t} for beta_init={beta}");
            prev = b;
        }
    }
    pass(
        2,
        "beta_0 = beta_init and beta_T = 0 exactly; monotone for 0.5/0.9/0.99 over T=1000",
    );
}

// --- criterion 3: scalar trajectory oracles -------------------------------

struct SgdOracle {
    theta: f64,
    v: f64,
}

impl SgdOracle {
    fn step(&mut self, g: f64, lr: f64, mu: f64, wd: f64) {
        let gt = g + wd * self.theta;
        let new_theta = self.theta - lr * gt + mu * self.v;
        self.v = mu * self.v - lr * gt;
        self.theta = new_theta;
    }
}

struct DemonOracle {
    theta: f64,
    v: f64,
    t: u64,
}

impl DemonOracle {
    fn step(&mut self, g: f64, lr: f64, beta_init: f64, wd: f64, total: u64) {
        let remaining = 1.0 - self.t as f64 / total as f64;
        let beta = beta_init * remaining / ((1.0 - beta_init) + beta_init * remaining);
        let gt = g + wd * self.theta;
        let new_theta = self.theta - lr * gt + beta * self.v;
        self.v = beta * self.v - lr * gt;
        self.theta = new_theta;
        self.t += 1;
    }
}

struct AdamOracle {
    theta: f64,
    m: f64,
    v: f64,
    t: i32,
}

impl AdamOracle {
    fn step(&mut self, g: f64, lr: f64, b1: f64, b2: f64, eps: f64, wd: f64) {
        self.t += 1;
        let gt = g + wd * self.theta;
        self.m = b1 * self.m + (1.0 - b1) * gt;
        self.v = b2 * self.v + (1.0 - b2) * gt * gt;
        let m_hat = self.m / (1.0 - b1.powi(self.t));
        let v_hat = self.v / (1.0 - b2.powi(self.t));
        self.theta -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

#[test]
fn criterion_3_optimizer_step_oracles() {
    let tol = 1e-14;
    let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);

    for &wd in &[0.0, 1e-4] {
        // SGD with momentum, g == 1.
        let mut opt = SgdMomentum::new(1, 0.9, wd);
        let mut p = ParamVector::new(vec![0.0]);
        let mut oracle = SgdOracle { theta: 0.0, v: 0.0 };
        for _ in 0..10 {
            opt.step(&mut p, &[1.0], 0.1).unwrap();
            oracle.step(1.0, 0.1, 0.9, wd);
            assert!(
                close(p.as_slice()[0], oracle.theta),
                "sgd drifted from oracle"
            );
        }

        // DEMON, g == 1, horizon 10.
        let mut opt = Demon::new(1, 0.9, wd, 10).unwrap();
        let mut p = ParamVector::new(vec![0.0]);
        let mut oracle = DemonOracle {
            theta: 0.0,
            v: 0.0,
            t: 0,
        };
        for _ in 0..10 {
            opt.step(&mut p, &[1.0], 0.1).unwrap();
            oracle.step(1.0, 0.1, 0.9, wd, 10);
            assert!(
                close(p.as_slice()[0], oracle.theta),
                "demon drifted from oracle"
            );
        }

        // Adam on g(theta) = theta.
        let mut opt = Adam::new(1, 0.9, 0.999, 1e-8, wd);
        let mut p = ParamVector::new(vec![1.0]);
        let mut oracle = AdamOracle {
            theta: 1.0,
            m: 0.0,
            v: 0.0,
            t: 0,
        };
        for _ in 0..10 {
            let g = p.as_slice()[0];
            opt.step(&mut p, &[g], 0.1).unwrap();
            oracle.step(oracle.theta, 0.1, 0.9, 0.999, 1e-8, wd);
            assert!(
                close(p.as_slice()[0], oracle.theta),
                "adam drifted from oracle"
            );
        }
    }
    pass(
        3,
        "10-step scalar trajectories match independent recurrences to 1e-14 (wd 0 and 1e-4)",
    );
}

// --- criterion 4: analytic gradients vs finite differences ----------------

#[test]
fn criterion_4_gradient_correctness() {
    let mut rng = Rng::new(0xC4);
    let mut worst: f64 = 0.0;

    // MLP with a hidden layer.
    let mut mlp = Mlp::new(&[6, 10, 4], &mut rng).unwrap();
    let inputs =
        DenseArray::from_vec((0..8 * 6).map(|_| rng.normal()).collect(), vec![8, 6]).unwrap();
    let labels: Vec<usize> = (0..8).map(|_| rng.below(4)).collect();
    let report = grad_check(&mut mlp, &inputs, &labels, 1e-5, 1e-4).unwrap();
    assert!(
        report.pass,
        "mlp grad check failed: {}",
        report.max_rel_error
    );
    worst = worst.max(report.max_rel_error);

    // Single-stage CNN.
    let mut cnn = TinyCnn::new((1, 6, 6), &[3], 4, &mut rng).unwrap();
    let inputs =
        DenseArray::from_vec((0..6 * 36).map(|_| rng.normal()).collect(), vec![6, 36]).unwrap();
    let labels: Vec<usize> = (0..6).map(|_| rng.below(4)).collect();
    let report = grad_check(&mut cnn, &inputs, &labels, 1e-5, 1e-4).unwrap();
    assert!(
        report.pass,
        "cnn grad check failed: {}",
        report.max_rel_error
    );
    worst = worst.max(report.max_rel_error);

    // Two-stage CNN with multi-channel input.
    let mut cnn2 = TinyCnn::new((2, 8, 8), &[2, 2], 3, &mut rng).unwrap();
    let inputs =
        DenseArray::from_vec((0..4 * 128).map(|_| rng.normal()).collect(), vec![4, 128]).unwrap();
    let labels: Vec<usize> = (0..4).map(|_| rng.below(3)).collect();
    let report = grad_check(&mut cnn2, &inputs, &labels, 1e-5, 1e-4).unwrap();
    assert!(
        report.pass,
        "2-stage cnn grad check failed: {}",
        report.max_rel_error
    );
    worst = worst.max(report.max_rel_error);

    pass(
        4,
        &format!("max relative gradient error {worst:.2e} <= 1e-4 across MLP and both CNNs"),
    );
}

// --- shared desk-scale config helpers --------------------------------------

fn small_config(optimizer: OptimizerKind) -> RunConfig {
    RunConfig {
        model: ModelSpec::Mlp { hidden: vec![16] },
        dataset: DatasetSpec::Synthetic {
            num_classes: 4,
            samples_per_class: 100,
            test_per_class: 25,
            feature_dim: 8,
            separation: 3.0,
            data_seed: 99,
        },
        optimizer: OptimizerSpec {
            kind: optimizer,
            momentum: 0.9,
            weight_decay: 1e-4,
            beta_init: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            plp: PlpSpec::default(),
        },
        schedule: ScheduleSpec::Constant { base_lr: 0.01 },
        batch_size: 16,
        epochs: 5,
        seed: 11,
        validation_fraction: 0.2,
        report_epochs: vec![2, 4],
        trace: TraceSpec::default(),
        out_dir: None,
    }
}

// --- criterion 5: identity prediction reproduces the base run bitwise -----

#[test]
fn criterion_5_noop_prediction_equivalence() {
    let sgd_out = run(&small_config(OptimizerKind::Sgd)).unwrap();

    let mut plp_config = small_config(OptimizerKind::Plp);
    plp_config.optimizer.plp.predict_identity = true;
    let plp_out = run(&plp_config).unwrap();

    assert_eq!(plp_out.records, sgd_out.records, "records differ bitwise");
    assert_eq!(plp_out.best_snapshot.flat, sgd_out.best_snapshot.flat);
    assert_eq!(plp_out.test, sgd_out.test);
    assert_eq!(
        serde_json::to_string(&plp_out.records).unwrap(),
        serde_json::to_string(&sgd_out.records).unwrap()
    );
    pass(
        5,
        &format!(
            "predict_identity run of {} epochs is bit-identical to the pure momentum run",
            plp_out.records.len()
        ),
    );
}

// --- criterion 6: prediction cadence and memory bound ----------------------

#[test]
fn criterion_6_cadence_and_memory() {
    let mut config = small_config(OptimizerKind::Plp);
    config.optimizer.plp.trace_predictions = true;
    config.epochs = 4;
    let out = run(&config).unwrap();

    let expected: Vec<u64> = (1..=out.iterations_run).filter(|i| i % 3 == 0).collect();
    assert_eq!(
        out.prediction_trace, expected,
        "predictions must fire at every 3rd base step"
    );
    assert_eq!(out.predictions_fired as usize, expected.len());

    let n = {
        // input 8 -> 16 -> 4: (16*8 + 16) + (4*16 + 4)
        16 * 8 + 16 + 4 * 16 + 4
    };
    let peak = out.peak_aux_f64.expect("plp run reports aux storage");
    assert!(peak <= 4 * n, "aux storage {peak} exceeds 4N = {}", 4 * n);
    assert!(peak >= 3 * n, "snapshot slots unexpectedly small: {peak}");
    pass(
        6,
        &format!(
            "{} predictions at every 3rd of {} iterations; peak aux {} <= 4N = {}",
            out.predictions_fired,
            out.iterations_run,
            peak,
            4 * n
        ),
    );
}

// --- criterion 7: desk-scale three-method comparison -----------------------

#[test]
fn criterion_7_desk_scale_comparison() {
    let config = RunConfig {
        model: ModelSpec::Mlp { hidden: vec![128] },
        dataset: DatasetSpec::Synthetic {
            num_classes: 10,
            samples_per_class: 1250, // 12500 total -> 10000 train / 2500 val
            test_per_class: 250,
            feature_dim: 32,
            separation: 3.0,
            data_seed: 2024,
        },
        optimizer: OptimizerSpec {
            kind: OptimizerKind::Sgd,
            momentum: 0.9,
            weight_decay: 1e-4,
            beta_init: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            plp: PlpSpec::default(),
        },
        schedule: ScheduleSpec::Constant { base_lr: 0.01 },
        batch_size: 128,
        epochs: 20,
        seed: 100,
        validation_fraction: 0.2,
        report_epochs: vec![10, 20, 30],
        trace: TraceSpec::default(),
        out_dir: None,
    };

    let methods = [OptimizerKind::Plp, OptimizerKind::Sgd, OptimizerKind::Demon];
    let report = repeat(&config, &methods, 10, 1).unwrap();

    // (a) complete, deterministic reports.
    assert_eq!(report.methods.len(), 3);
    for m in &report.methods {
        assert_eq!(m.seeds.len(), 10, "{} is missing seeds", m.method);
        for s in &m.seeds {
            assert!(s.ok(), "{} seed {} failed: {}", m.method, s.seed, s.status);
        }
        assert!(m.optimal_mean.is_some());
        assert_eq!(m.mean_val_loss_by_epoch.len(), 20);
    }
    // Re-running one cell reproduces its records bit for bit.
    let cell = config.with_optimizer(OptimizerKind::Plp).with_seed(100);
    let once = run(&cell).unwrap();
    let twice = run(&cell).unwrap();
    assert_eq!(
        once.records, twice.records,
        "repeat run is not deterministic"
    );

    let dir = std::env::temp_dir().join("plpkit_acceptance_c7");
    let files = plpkit::bench::emit_experiment(&report, &dir).unwrap();
    assert_eq!(files.len(), 4);
    for f in &files {
        assert!(f.exists());
    }
    let summary = plpkit::bench::summary_csv(&report);
    assert_eq!(
        summary.lines().count(),
        1 + 3,
        "summary must have one row per method"
    );

    // (b) PLP does not catastrophically degrade training.
    let plp = report.method("plp").unwrap().mean_best_val_loss.unwrap();
    let sgd = report.method("sgd").unwrap().mean_best_val_loss.unwrap();
    let rel = (plp - sgd).abs() / sgd;
    assert!(
        rel <= 0.05,
        "plp mean best val loss {plp} vs sgd {sgd}: rel {rel} > 5%"
    );

    // (c) the directional comparison is reported with per-seed detail.
    let plp_epochs: Vec<u32> = report
        .method("plp")
        .unwrap()
        .seeds
        .iter()
        .map(|s| s.best_epoch.unwrap())
        .collect();
    assert_eq!(plp_epochs.len(), 10);
    let direction = if plp < sgd {
        "PLP below SGD"
    } else {
        "SGD below PLP"
    };

    pass(
        7,
        &format!(
        "30 deterministic cells; plp {plp:.6} vs sgd {sgd:.6} (rel {:.4}%, gate 5%); {direction}",
        rel * 100.0
    ),
    );
}

// --- criterion 8: sweep grids have the sensitivity-table structure ---------

#[test]
fn criterion_8_sweep_grid_shape() {
    let mut config = small_config(OptimizerKind::Sgd);
    config.epochs = 2;
    let methods = [OptimizerKind::Plp, OptimizerKind::Sgd, OptimizerKind::Demon];

    let lr_values = vec![0.01, 0.001, 0.0001];
    let lr_sweep = sweep(&config, &SweepValues::Lr(lr_values.clone()), &methods, 1, 1).unwrap();
    assert_eq!(lr_sweep.cells.len(), lr_values.len());

    let batch_values = vec![32usize, 64, 128, 256];
    let batch_sweep = sweep(
        &config,
        &SweepValues::BatchSize(batch_values.clone()),
        &methods,
        1,
        1,
    )
    .unwrap();
    assert_eq!(batch_sweep.cells.len(), batch_values.len());

    for (sweep_report, values) in [
        (&lr_sweep, lr_values.len()),
        (&batch_sweep, batch_values.len()),
    ] {
        let grid = plpkit::bench::sweep_grid_csv(sweep_report);
        let rows: Vec<&str> = grid.lines().skip(1).collect();
        assert_eq!(
            rows.len(),
            values * methods.len(),
            "one grid row per (value, method)"
        );
        for row in rows {
            let fields: Vec<&str> = row.split(',').collect();
            assert_eq!(
                fields.len(),
                7,
                "Axis,Value,Method,Epoch,Accuracy,Top1,Top5"
            );
            for f in &fields[3..] {
                assert!(!f.is_empty(), "empty grid cell in {row}");
                f.parse::<f64>().expect("numeric grid cell");
            }
        }
        for cell in &sweep_report.cells {
            assert_eq!(cell.report.methods.len(), methods.len());
        }
    }
    pass(
        8,
        &format!(
            "lr grid {}x{} and batch grid {}x{} cells, each with epoch/acc/top-1/top-5",
            lr_sweep.cells.len(),
            methods.len(),
            batch_sweep.cells.len(),
            methods.len()
        ),
    );
}

// --- criterion 9: metric identities ----------------------------------------

#[test]
fn criterion_9_metric_identities() {
    let mut rng = Rng::new(0xC9);
    // Random logits with deliberate ties mixed in.
    for _ in 0..50 {
        let batch = 1 + rng.below(6);
        let classes = 2 + rng.below(8);
        let mut data: Vec<f64> = (0..batch * classes)
            .map(|_| rng.uniform(-2.0, 2.0))
            .collect();
        if rng.below(2) == 0 && classes >= 2 {
            data[0] = data[1]; // force a tie in row 0
        }
        let logits = DenseArray::from_vec(data, vec![batch, classes]).unwrap();
        let labels: Vec<usize> = (0..batch).map(|_| rng.below(classes)).collect();

        let top1 = topk_error(&logits, &labels, 1).unwrap();
        let acc = accuracy(&logits, &labels).unwrap();
        assert_eq!(top1 + acc, 1.0, "top1 + accuracy must be exactly 1");

        let mut prev = f64::INFINITY;
        for k in 1..=classes {
            let e = topk_error(&logits, &labels, k).unwrap();
            assert!(e <= prev, "topk_error increased at k={k}");
            prev = e;
        }
    }

    // Tie rule on the best-epoch selection.
    let rec = |epoch, val_loss| TrainRecord {
        epoch,
        train_loss: 0.0,
        train_accuracy: 0.0,
        val_loss,
        val_accuracy: 0.0,
        top1_error: 0.0,
        top5_error: 0.0,
        mean_lr: 0.0,
    };
    assert_eq!(best_epoch(&[rec(1, 2.8), rec(2, 2.8)]).unwrap(), (1, 2.8));
    assert_eq!(
        best_epoch(&[rec(1, 3.0), rec(2, 2.8), rec(3, 2.9)]).unwrap(),
        (2, 2.8)
    );

    // Adding a strictly larger loss anywhere never changes the winner.
    let base = vec![rec(1, 3.0), rec(2, 2.8), rec(3, 2.9)];
    let mut extended = base.clone();
    extended.push(rec(4, 10.0));
    assert_eq!(best_epoch(&base).unwrap(), best_epoch(&extended).unwrap());

    pass(
        9,
        "top1 + accuracy == 1 exactly; top-k non-increasing; best-epoch tie rule verified",
    );
}

// Smoke check that the synthetic generator used above separates well enough
// for the comparison gates to be meaningful.
#[test]
fn synthetic_desk_dataset_is_learnable() {
    let ds = gen_synthetic(10, 100, 32, 2024).unwrap();
    assert_eq!(ds.num_samples(), 1000);
    assert_eq!(ds.num_classes, 10);
}
