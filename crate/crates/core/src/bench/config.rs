//! Run configuration: a single JSON document with a key per hyperparameter.
//! Defaults follow the standard comparison protocol (momentum 0.9, weight
//! decay 1e-4, prediction step 1, 100 epochs; the desk-scale preset drops
//! epochs to 20).

use crate::data::CifarVariant;
use crate::error::{Error, Result};
use crate::optim::LrSchedule;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const DESK_SCALE_EPOCHS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub dataset: DatasetSpec,
    pub optimizer: OptimizerSpec,
    pub schedule: ScheduleSpec,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    /// Epochs at which test accuracy is sampled for the summary table.
    #[serde(default = "default_report_epochs")]
    pub report_epochs: Vec<u32>,
    #[serde(default)]
    pub trace: TraceSpec,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_validation_fraction() -> f64 {
    0.2
}

fn default_report_epochs() -> Vec<u32> {
    vec![10, 20, 30]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Mlp {
        /// Hidden layer widths; empty means a linear classifier.
        hidden: Vec<usize>,
    },
    TinyCnn {
        /// Input image as (channels, height, width).
        image: (usize, usize, usize),
        conv_channels: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Synthetic {
        num_classes: usize,
        samples_per_class: usize,
        /// Held-out test samples per class; 0 falls back to evaluating
        /// test-style metrics on the validation split.
        #[serde(default)]
        test_per_class: usize,
        feature_dim: usize,
        #[serde(default = "default_separation")]
        separation: f64,
        /// Fixed across run seeds, so repeated runs share the dataset and
        /// only initialization, split, and batching vary.
        data_seed: u64,
    },
    CifarBinary {
        train_path: PathBuf,
        #[serde(default)]
        test_path: Option<PathBuf>,
        variant: CifarVariant,
    },
}

fn default_separation() -> f64 {
    crate::data::DEFAULT_SEPARATION
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Demon,
    Adam,
    Plp,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Demon => "demon",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Plp => "plp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "demon" => Ok(OptimizerKind::Demon),
            "adam" => Ok(OptimizerKind::Adam),
            "plp" => Ok(OptimizerKind::Plp),
            other => Err(Error::InvalidConfig(format!(
                "unknown optimizer '{other}' (expected sgd, demon, adam, or plp)"
            ))),
        }
    }
}

/// Base optimizers the prediction wrapper can drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseOptimizerKind {
    Sgd,
    Demon,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    /// DEMON decay start value.
    #[serde(default = "default_momentum")]
    pub beta_init: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_adam_eps")]
    pub eps: f64,
    #[serde(default)]
    pub plp: PlpSpec,
}

fn default_momentum() -> f64 {
    0.9
}

fn default_weight_decay() -> f64 {
    1e-4
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_adam_eps() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlpSpec {
    #[serde(default = "default_plp_step")]
    pub step: f64,
    #[serde(default = "default_plp_base")]
    pub base: BaseOptimizerKind,
    #[serde(default)]
    pub predict_identity: bool,
    #[serde(default)]
    pub trace_predictions: bool,
    #[serde(default)]
    pub reset_velocity_on_predict: bool,
}

fn default_plp_step() -> f64 {
    1.0
}

fn default_plp_base() -> BaseOptimizerKind {
    BaseOptimizerKind::Sgd
}

impl Default for PlpSpec {
    fn default() -> Self {
        Self {
            step: default_plp_step(),
            base: default_plp_base(),
            predict_identity: false,
            trace_predictions: false,
            reset_velocity_on_predict: false,
        }
    }
}

/// Schedule spec; the cyclic half period defaults to one epoch of
/// iterations when omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    Constant {
        base_lr: f64,
    },
    CyclicTriangular {
        base_lr: f64,
        max_lr: f64,
        #[serde(default)]
        half_period: Option<u64>,
    },
}

impl ScheduleSpec {
    pub fn build(&self, iterations_per_epoch: u64) -> LrSchedule {
        match *self {
            ScheduleSpec::Constant { base_lr } => LrSchedule::Constant { base_lr },
            ScheduleSpec::CyclicTriangular {
                base_lr,
                max_lr,
                half_period,
            } => LrSchedule::CyclicTriangular {
                base_lr,
                max_lr,
                half_period: half_period.unwrap_or(iterations_per_epoch.max(1)),
            },
        }
    }

    pub fn base_lr(&self) -> f64 {
        match *self {
            ScheduleSpec::Constant { base_lr } => base_lr,
            ScheduleSpec::CyclicTriangular { base_lr, .. } => base_lr,
        }
    }
}

/// Parameter-trace sampling: a few seeded indices per layer, recorded every
/// iteration. Recording every parameter would blow the desk-scale memory
/// budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_trace_per_layer")]
    pub per_layer: usize,
}

fn default_trace_per_layer() -> usize {
    4
}

impl Default for TraceSpec {
    fn default() -> Self {
        Self {
            enabled: false,
            per_layer: default_trace_per_layer(),
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Everything checkable without touching data files runs here, so a bad
    /// config fails before any compute starts.
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(0.0 < self.validation_fraction && self.validation_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "validation_fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        self.schedule.build(1).validate()?;
        let o = &self.optimizer;
        if !(0.0..1.0).contains(&o.momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum {} outside [0, 1)",
                o.momentum
            )));
        }
        if !(0.0 < o.beta_init && o.beta_init < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "beta_init {} outside (0, 1)",
                o.beta_init
            )));
        }
        if o.plp.step.is_nan() || o.plp.step < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "plp step {} must be >= 0",
                o.plp.step
            )));
        }
        match &self.dataset {
            DatasetSpec::Synthetic {
                num_classes,
                samples_per_class,
                feature_dim,
                ..
            } => {
                if *num_classes < 2 || *samples_per_class == 0 || *feature_dim == 0 {
                    return Err(Error::InvalidConfig(
                        "synthetic dataset needs >= 2 classes and positive sizes".into(),
                    ));
                }
                self.check_model_input(*feature_dim)?;
            }
            DatasetSpec::CifarBinary { .. } => {
                self.check_model_input(crate::data::CIFAR_PIXELS)?;
            }
        }
        Ok(())
    }

    fn check_model_input(&self, feature_dim: usize) -> Result<()> {
        if let ModelSpec::TinyCnn { image, .. } = &self.model {
            let (c, h, w) = *image;
            if c * h * w != feature_dim {
                return Err(Error::InvalidConfig(format!(
                    "model image {image:?} has {} features but the dataset provides {feature_dim}",
                    c * h * w
                )));
            }
        }
        Ok(())
    }

    /// Number of classes the configured dataset will produce.
    pub fn num_classes(&self) -> usize {
        match &self.dataset {
            DatasetSpec::Synthetic { num_classes, .. } => *num_classes,
            DatasetSpec::CifarBinary { variant, .. } => variant.num_classes(),
        }
    }

    pub fn apply_desk_scale(&mut self) {
        self.epochs = DESK_SCALE_EPOCHS;
    }

    pub fn with_optimizer(&self, kind: OptimizerKind) -> Self {
        let mut c = self.clone();
        c.optimizer.kind = kind;
        c
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c
    }
}
