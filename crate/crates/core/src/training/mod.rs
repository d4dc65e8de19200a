//! Joint minibatch training of all autoencoders and the assignment network.

mod adam;

pub use adam::{adam_step, AdamConfig, AdamState};

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{minibatches, FeatureView};
use crate::error::{Error, Result};
use crate::model::Mixae;
use crate::objective::{total_loss, LossWeights, ObjectiveInputs, ObjectiveOptions, ScheduleConfig, TermAverages};
use crate::scalar::Scalar;

fn default_batch_size() -> usize {
    256
}
fn default_epochs() -> usize {
    50
}
fn default_lr() -> f64 {
    0.001
}
fn default_decay() -> f64 {
    0.9
}
fn default_decay_every() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr_init: f64,
    #[serde(default = "default_decay")]
    pub lr_decay_factor: f64,
    #[serde(default = "default_decay_every")]
    pub lr_decay_every: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub objective: ObjectiveOptions,
    /// Write a periodic checkpoint every this many epochs.
    #[serde(default)]
    pub checkpoint_every: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: default_batch_size(),
            epochs: default_epochs(),
            lr_init: default_lr(),
            lr_decay_factor: default_decay(),
            lr_decay_every: default_decay_every(),
            adam: AdamConfig::default(),
            seed: 0,
            schedule: ScheduleConfig::default(),
            objective: ObjectiveOptions::default(),
            checkpoint_every: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.lr_decay_every == 0 {
            return Err(Error::Config("batch_size, epochs and lr_decay_every must be positive".into()));
        }
        if !(self.lr_init >= 0.0 && self.lr_decay_factor > 0.0) {
            return Err(Error::Config("lr_init must be >= 0 and lr_decay_factor > 0".into()));
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::Config("checkpoint_every must be positive".into()));
        }
        self.adam.validate()?;
        self.schedule.validate()
    }
}

/// Step decay: `lr_init · factor^⌊epoch / every⌋`.
pub fn learning_rate(epoch: usize, cfg: &TrainConfig) -> f64 {
    cfg.lr_init * cfg.lr_decay_factor.powi((epoch / cfg.lr_decay_every) as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub reconstruction: f64,
    pub sample_entropy: f64,
    pub batch_entropy: f64,
    pub total: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lr: f64,
    pub acc: Option<f64>,
    /// Not written to the CSV log, which must be reproducible.
    pub wall_time_secs: f64,
}

pub const EPOCH_LOG_HEADER: &str = "epoch,recon,sample_entropy,batch_entropy,total,alpha,beta,lr,acc_if_monitored";

impl EpochLog {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.epoch,
            self.reconstruction,
            self.sample_entropy,
            self.batch_entropy,
            self.total,
            self.alpha,
            self.beta,
            self.lr,
            self.acc.map(|a| a.to_string()).unwrap_or_default()
        )
    }

    pub fn averages(&self) -> TermAverages {
        TermAverages {
            reconstruction: self.reconstruction,
            sample_entropy: self.sample_entropy,
            batch_entropy: self.batch_entropy,
        }
    }
}

pub fn write_epoch_log_csv<W: Write>(mut out: W, logs: &[EpochLog]) -> std::io::Result<()> {
    writeln!(out, "{EPOCH_LOG_HEADER}")?;
    for l in logs {
        writeln!(out, "{}", l.csv_row())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointReason {
    Periodic,
    BestAccuracy,
}

/// Callbacks invoked by [`train`]. All methods default to no-ops.
///
/// `monitor` is the only place labels may enter: it receives the model and
/// returns an accuracy that is logged and used to pick best-so-far
/// checkpoints, never fed back into the optimization.
pub trait TrainObserver<T: Scalar> {
    fn monitor(&mut self, _model: &Mixae<T>) -> Result<Option<f64>> {
        Ok(None)
    }

    fn on_epoch(&mut self, _log: &EpochLog, _model: &Mixae<T>) -> Result<()> {
        Ok(())
    }

    fn on_checkpoint(&mut self, _model: &Mixae<T>, _epoch: usize, _reason: CheckpointReason) -> Result<()> {
        Ok(())
    }
}

pub struct NoObserver;

impl<T: Scalar> TrainObserver<T> for NoObserver {}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainStatus {
    Completed,
    /// The loss or a gradient became non-finite; the model holds the
    /// parameters from the end of the last complete epoch.
    Diverged { epoch: usize, detail: String },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub logs: Vec<EpochLog>,
    pub status: TrainStatus,
    pub best_acc: Option<(usize, f64)>,
    pub final_weights: LossWeights,
}

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::Numerical { .. })
}

/// Trains `model` in place on a label-free feature view.
///
/// Each epoch shuffles with `(seed, epoch)`, drops the incomplete tail
/// batch, runs forward → objective → backward → ADAM per batch, then lets
/// the schedule pick α/β for the next epoch from the epoch's term means.
pub fn train<T: Scalar>(
    model: &mut Mixae<T>,
    data: FeatureView<'_, T>,
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver<T>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let features = data.features();
    let n = features.rows();
    if n == 0 {
        return Err(Error::Input("empty dataset".into()));
    }
    if cfg.batch_size > n {
        return Err(Error::Config(format!("batch_size {} exceeds dataset size {n}", cfg.batch_size)));
    }
    if features.cols() != model.config().input_dim {
        return Err(Error::dim("train", features.shape(), &[n, model.config().input_dim]));
    }
    let kind = model.config().reconstruction_loss;

    // Warm-up weights come from the untrained model on the first batch.
    let first = minibatches(n, cfg.batch_size, cfg.seed, 0)?;
    let x0 = features.select_rows(&first[0]);
    let out0 = model.infer(&x0)?;
    let probe = total_loss(
        ObjectiveInputs {
            x: &x0,
            reconstructions: &out0.reconstructions,
            assignments: &out0.assignments,
        },
        kind,
        LossWeights { alpha: 0.0, beta: 0.0 },
        cfg.objective,
    )?
    .0;
    let mut weights = cfg.schedule.initial_weights(TermAverages {
        reconstruction: probe.weighted_reconstruction,
        sample_entropy: probe.sample_entropy_mean,
        batch_entropy: probe.batch_entropy,
    });

    let mut adam = AdamState::new(model.params());
    let mut logs: Vec<EpochLog> = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64)> = None;
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let lr = learning_rate(epoch, cfg);
        let snapshot = model.params().clone();
        let batches = minibatches(n, cfg.batch_size, cfg.seed, epoch)?;
        let mut sums = [0.0f64; 4];
        let mut failure = None;
        for idx in &batches {
            let x = features.select_rows(idx);
            let step = (|| -> Result<_> {
                let out = model.forward(&x)?;
                let (bd, grads) = total_loss(
                    ObjectiveInputs {
                        x: &x,
                        reconstructions: &out.reconstructions,
                        assignments: &out.assignments,
                    },
                    kind,
                    weights,
                    cfg.objective,
                )?;
                let g = model.backward(&out, &grads)?;
                Ok((bd, g))
            })();
            let (bd, g) = match step {
                Ok(v) => v,
                Err(e) if is_divergence(&e) => {
                    failure = Some(e.to_string());
                    break;
                }
                Err(e) => return Err(e),
            };
            if let Err(e) = adam_step(model.params_mut(), &g, &mut adam, lr, &cfg.adam) {
                if is_divergence(&e) {
                    failure = Some(e.to_string());
                    break;
                }
                return Err(e);
            }
            sums[0] += bd.weighted_reconstruction;
            sums[1] += bd.sample_entropy_mean;
            sums[2] += bd.batch_entropy;
            sums[3] += bd.total;
        }
        if failure.is_none() && !model.params().is_finite() {
            failure = Some("parameters became non-finite".into());
        }
        if let Some(detail) = failure {
            *model.params_mut() = snapshot;
            return Ok(TrainOutcome {
                logs,
                status: TrainStatus::Diverged { epoch, detail },
                best_acc: best,
                final_weights: weights,
            });
        }
        let nb = batches.len() as f64;
        let acc = observer.monitor(model)?;
        let log = EpochLog {
            epoch,
            reconstruction: sums[0] / nb,
            sample_entropy: sums[1] / nb,
            batch_entropy: sums[2] / nb,
            total: sums[3] / nb,
            alpha: weights.alpha,
            beta: weights.beta,
            lr,
            acc,
            wall_time_secs: started.elapsed().as_secs_f64(),
        };
        observer.on_epoch(&log, model)?;
        if let Some(a) = acc {
            if best.is_none_or(|(_, b)| a > b) {
                best = Some((epoch, a));
                observer.on_checkpoint(model, epoch, CheckpointReason::BestAccuracy)?;
            }
        }
        if cfg.checkpoint_every.is_some_and(|every| (epoch + 1) % every == 0) {
            observer.on_checkpoint(model, epoch, CheckpointReason::Periodic)?;
        }
        weights = cfg.schedule.weights_for_epoch(epoch + 1, log.averages(), weights);
        logs.push(log);
    }
    Ok(TrainOutcome {
        logs,
        status: TrainStatus::Completed,
        best_acc: best,
        final_weights: weights,
    })
}
