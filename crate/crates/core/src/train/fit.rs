use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::data::WindowBatch;
use crate::error::{Error, Result};
use crate::model::{forward_tape, init_params, DeepMstmParams, ModelConfig, PreparedBatch};
use crate::scalar::Scalar;
use crate::tensorcore::{Tape, Tensor};

use super::AdamState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    /// Stop once the training MAE has not improved for this many epochs.
    #[serde(default)]
    pub patience: Option<usize>,
}

fn default_epochs() -> usize {
    500
}

fn default_lr() -> f64 {
    0.01
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            seed: 0,
            epochs: default_epochs(),
            lr: default_lr(),
            patience: None,
        }
    }
}

/// One line of the per-epoch training log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mae: f64,
}

#[derive(Clone, Debug)]
pub struct TrainReport<T> {
    /// Training MAE at the start of each epoch, before that epoch's update.
    pub epoch_mae: Vec<f64>,
    pub params: DeepMstmParams<T>,
    pub wall_clock: Duration,
    pub seed: u64,
    pub config: ModelConfig,
    pub options: TrainOptions,
}

impl<T: Scalar> TrainReport<T> {
    pub fn epochs_run(&self) -> usize {
        self.epoch_mae.len()
    }

    pub fn final_mae(&self) -> Option<f64> {
        self.epoch_mae.last().copied()
    }

    pub fn records(&self) -> impl Iterator<Item = EpochRecord> + '_ {
        self.epoch_mae
            .iter()
            .enumerate()
            .map(|(i, &mae)| EpochRecord { epoch: i + 1, mae })
    }

    /// Writes one JSON object per epoch, one per line.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for r in self.records() {
            let line = serde_json::to_string(&r).map_err(|e| Error::Contract(e.to_string()))?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Everything but the wall-clock time, which is the only field allowed to
    /// differ between two runs of the same job.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.epoch_mae.len() == other.epoch_mae.len()
            && self.epoch_mae.iter().zip(&other.epoch_mae).all(|(a, b)| a.to_bits() == b.to_bits())
            && self.params == other.params
            && self.seed == other.seed
            && self.config == other.config
            && self.options == other.options
    }
}

/// Trains a freshly initialized model on every window of `batch` at once.
pub fn fit<T: Scalar>(batch: &WindowBatch, config: &ModelConfig, opts: &TrainOptions) -> Result<TrainReport<T>> {
    config.validate()?;
    if batch.is_empty() {
        return Err(Error::Contract("cannot train on an empty batch".into()));
    }
    if batch.target != config.target {
        return Err(Error::Config(format!(
            "windows target series {}, configuration targets {}",
            batch.target, config.target
        )));
    }
    if config.event_types != batch.event_types {
        return Err(Error::Config(format!(
            "configuration has {} event types, the calendar has {}",
            config.event_types, batch.event_types
        )));
    }
    let prepared = PreparedBatch::from_windows(config, batch)?;
    let params = init_params(config, opts.seed)?;
    fit_prepared(&prepared, &batch.targets, params, config, opts)
}

/// Trains `params` on an already prepared batch.
pub fn fit_prepared<T: Scalar>(
    batch: &PreparedBatch<T>,
    targets: &[f64],
    mut params: DeepMstmParams<T>,
    config: &ModelConfig,
    opts: &TrainOptions,
) -> Result<TrainReport<T>> {
    if batch.is_empty() || targets.len() != batch.len() {
        return Err(Error::Contract(format!(
            "{} targets for {} windows",
            targets.len(),
            batch.len()
        )));
    }
    if !(opts.lr.is_finite() && opts.lr >= 0.0) {
        return Err(Error::Config(format!("learning rate {} must be finite and non-negative", opts.lr)));
    }
    let started = Instant::now();
    let targets = Tensor::new(vec![1, targets.len()], targets.iter().map(|&v| T::lit(v)).collect())?;
    let mut adam = AdamState::for_params(&params, T::lit(opts.lr));
    let mut history = Vec::with_capacity(opts.epochs);
    let mut best = f64::INFINITY;
    let mut since_best = 0;

    for epoch in 1..=opts.epochs {
        let (mae, grads) = loss_and_grads(&params, config, batch, &targets)?;
        if !mae.is_finite() || !grads.is_finite() {
            let window = first_bad_window(&params, config, batch, &targets)?;
            return Err(Error::NonFiniteLoss { epoch, window });
        }
        history.push(mae);
        super::adam_step(&mut params, &grads, &mut adam)?;

        if mae < best {
            best = mae;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if opts.patience.is_some_and(|p| since_best >= p) {
            break;
        }
    }

    Ok(TrainReport {
        epoch_mae: history,
        params,
        wall_clock: started.elapsed(),
        seed: opts.seed,
        config: config.clone(),
        options: opts.clone(),
    })
}


fn loss_and_grads<T: Scalar>(
    params: &DeepMstmParams<T>,
    config: &ModelConfig,
    batch: &PreparedBatch<T>,
    targets: &Tensor<T>,
) -> Result<(f64, DeepMstmParams<T>)> {
    let mut tape = Tape::new();
    let w = params.map(&mut |t| tape.param(t.clone()));
    let heads = forward_tape(&mut tape, &w, config, batch)?;
    let y = tape.constant(targets.clone());
    let diff = tape.sub(heads.forecast, y)?;
    let loss = tape.mean_abs(diff)?;
    let mae = tape.value(loss).item()?.as_f64();
    let mut grads = tape.backward(loss)?;
    let grads = w.map(&mut |v| grads.take(*v).expect("every parameter is a trainable leaf"));
    Ok((mae, grads))
}

/// Index of the first window whose own loss or gradient is not finite.
fn first_bad_window<T: Scalar>(
    params: &DeepMstmParams<T>,
    config: &ModelConfig,
    batch: &PreparedBatch<T>,
    targets: &Tensor<T>,
) -> Result<usize> {
    for i in 0..batch.len() {
        let target = Tensor::new(vec![1, 1], vec![targets.data()[i]])?;
        let (mae, grads) = loss_and_grads(params, config, &batch.window(i)?, &target)?;
        if !mae.is_finite() || !grads.is_finite() {
            return Ok(i);
        }
    }
    Ok(0)
}
