//! Training loop: Adam, one graph per step, plateau learning-rate decay and
//! early stopping on the validation loss.

use std::fmt;
use std::time::Instant;

use capillary_gnn::{variant_loss, GnnConfig, GnnModel, LossTerms, LossWeights, Sample};
use capillary_nn::{Adam, AdamConfig, Eager, ParamStore, Tape};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::GraphSample;
use crate::error::{Result, WorkbenchError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Epochs without validation improvement before the rate is decayed.
    pub plateau_patience: usize,
    pub decay_factor: f64,
    /// Epochs without validation improvement before training stops.
    pub early_stop_patience: usize,
    pub max_epochs: usize,
    /// A validation loss counts as an improvement when below `best·(1 − threshold)`.
    pub improvement_threshold: f64,
    /// Seed of the per-epoch shuffle.
    pub seed: u64,
    /// Variant defaults when absent.
    pub weights: Option<LossWeights>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            plateau_patience: 10,
            decay_factor: 0.1,
            early_stop_patience: 25,
            max_epochs: 500,
            improvement_threshold: 1e-4,
            seed: 0,
            weights: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(WorkbenchError::Config(m));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be finite and nonnegative", self.learning_rate));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad(format!("decay factor {} outside (0, 1]", self.decay_factor));
        }
        if self.plateau_patience == 0 || self.early_stop_patience == 0 {
            return bad("patience values must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.improvement_threshold) {
            return bad(format!("improvement threshold {} outside [0, 1)", self.improvement_threshold));
        }
        if let Some(w) = &self.weights {
            w.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `max_epochs` was zero; the model is the initialisation.
    NoTraining,
    MaxEpochs,
    EarlyStop,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::NoTraining => "no training",
            StopReason::MaxEpochs => "maximum epochs reached",
            StopReason::EarlyStop => "early stop",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Rate used during this epoch.
    pub learning_rate: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateChange {
    /// First epoch trained with the new rate.
    pub epoch: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub variant: u8,
    pub parameter_count: usize,
    pub train_graphs: usize,
    pub val_graphs: usize,
    pub epochs: Vec<EpochRecord>,
    pub rate_changes: Vec<RateChange>,
    /// Epoch of the returned parameters (0 = initialisation).
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stop_reason: StopReason,
}

impl TrainLog {
    pub fn loss_trajectory(&self) -> Vec<(f64, f64)> {
        self.epochs.iter().map(|e| (e.train_loss, e.val_loss)).collect()
    }
}

/// Plateau learning-rate decay and early stopping driven by a validation loss.
#[derive(Debug, Clone)]
pub struct Schedule {
    learning_rate: f64,
    decay_factor: f64,
    plateau_patience: usize,
    stop_patience: usize,
    threshold: f64,
    best: f64,
    since_best: usize,
    since_decay: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleStep {
    pub improved: bool,
    /// Rate for the next epoch when it changed.
    pub decayed_to: Option<f64>,
    pub stop: bool,
}

impl Schedule {
    pub fn new(config: &TrainConfig) -> Self {
        Self {
            learning_rate: config.learning_rate,
            decay_factor: config.decay_factor,
            plateau_patience: config.plateau_patience,
            stop_patience: config.early_stop_patience,
            threshold: config.improvement_threshold,
            best: f64::INFINITY,
            since_best: 0,
            since_decay: 0,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// Records the loss of a finished epoch.
    pub fn observe(&mut self, loss: f64) -> ScheduleStep {
        let improved = !self.best.is_finite() || loss < self.best * (1.0 - self.threshold);
        if improved {
            self.best = loss;
            self.since_best = 0;
            self.since_decay = 0;
        } else {
            self.since_best += 1;
            self.since_decay += 1;
        }
        let stop = self.since_best >= self.stop_patience;
        let mut decayed_to = None;
        if !stop && self.since_decay >= self.plateau_patience {
            self.since_decay = 0;
            self.learning_rate *= self.decay_factor;
            decayed_to = Some(self.learning_rate);
        }
        ScheduleStep {
            improved,
            decayed_to,
            stop,
        }
    }
}

pub fn loss_weights(model: &GnnModel, config: &TrainConfig) -> LossWeights {
    config.weights.unwrap_or_else(|| LossWeights::for_variant(model.variant()))
}

/// Loss terms of `model` on one sample, without gradients.
pub fn sample_loss(model: &GnnModel, weights: &LossWeights, sample: &Sample) -> Result<LossTerms> {
    let mut b = Eager::new(&model.store);
    let out = model.forward(&mut b, &sample.inputs)?;
    let (_, terms) = variant_loss(
        &mut b,
        model.variant(),
        weights,
        &out,
        sample,
        model.config.k_v,
        model.config.scales.pressure,
    )?;
    Ok(terms)
}

/// Mean total loss over `samples`.
pub fn mean_loss(model: &GnnModel, weights: &LossWeights, samples: &[GraphSample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(f64::NAN);
    }
    let mut sum = 0.0;
    for s in samples {
        sum += sample_loss(model, weights, &s.sample)?.total;
    }
    Ok(sum / samples.len() as f64)
}

/// One optimiser step on one graph; returns the loss before the update.
fn train_step(model: &mut GnnModel, adam: &mut Adam, weights: &LossWeights, sample: &Sample) -> Result<f64> {
    let (total, grads) = {
        let mut tape = Tape::new(&model.store);
        let out = model.forward(&mut tape, &sample.inputs)?;
        let (loss, terms) = variant_loss(
            &mut tape,
            model.variant(),
            weights,
            &out,
            sample,
            model.config.k_v,
            model.config.scales.pressure,
        )?;
        if !terms.total.is_finite() {
            return Ok(terms.total);
        }
        (terms.total, tape.backward(loss)?)
    };
    adam.step(&mut model.store, &grads);
    Ok(total)
}

fn non_finite_as_loss(e: WorkbenchError, epoch: usize, graph: usize) -> WorkbenchError {
    use capillary_gnn::GnnError;
    use capillary_nn::NnError;
    match e {
        WorkbenchError::Gnn(GnnError::Nn(NnError::NonFinite(_))) | WorkbenchError::Nn(NnError::NonFinite(_)) => {
            WorkbenchError::NonFiniteLoss { epoch, graph }
        }
        other => other,
    }
}

pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub model: GnnModel,
    pub log: TrainLog,
}

/// Trains a fresh model of `gnn`. Without validation samples the training
/// loss drives the schedule.
pub fn train(gnn: &GnnConfig, config: &TrainConfig, train_set: &[GraphSample], val_set: &[GraphSample]) -> Result<TrainOutcome> {
    config.validate()?;
    let mut model = GnnModel::new(gnn.clone())?;
    let weights = loss_weights(&model, config);
    weights.validate()?;
    let mut log = TrainLog {
        variant: model.variant().id(),
        parameter_count: model.parameter_count(),
        train_graphs: train_set.len(),
        val_graphs: val_set.len(),
        epochs: Vec::new(),
        rate_changes: Vec::new(),
        best_epoch: 0,
        best_val_loss: f64::NAN,
        stop_reason: StopReason::NoTraining,
    };
    if config.max_epochs == 0 {
        log::info!("max_epochs = 0: returning the initial model");
        return Ok(TrainOutcome { model, log });
    }
    if train_set.is_empty() {
        return Err(WorkbenchError::Config("training split is empty".into()));
    }

    let mut adam = Adam::new(
        &model.store,
        AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut schedule = Schedule::new(config);
    let mut best: ParamStore = model.store.clone();
    log.stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=config.max_epochs {
        let started = Instant::now();
        let lr = adam.learning_rate();
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for &i in &order {
            let graph = train_set[i].id;
            let loss = train_step(&mut model, &mut adam, &weights, &train_set[i].sample)
                .map_err(|e| non_finite_as_loss(e, epoch, graph))?;
            if !loss.is_finite() {
                return Err(WorkbenchError::NonFiniteLoss { epoch, graph });
            }
            sum += loss;
        }
        let train_loss = sum / train_set.len() as f64;
        let mut val_loss = train_loss;
        if !val_set.is_empty() {
            let mut sum = 0.0;
            for s in val_set {
                let loss = sample_loss(&model, &weights, &s.sample)
                    .map_err(|e| non_finite_as_loss(e, epoch, s.id))?
                    .total;
                if !loss.is_finite() {
                    return Err(WorkbenchError::NonFiniteLoss { epoch, graph: s.id });
                }
                sum += loss;
            }
            val_loss = sum / val_set.len() as f64;
        }
        log.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            learning_rate: lr,
            seconds: started.elapsed().as_secs_f64(),
        });
        log::info!("epoch {epoch}: train {train_loss:.6e} val {val_loss:.6e} lr {lr:.1e}");

        let step = schedule.observe(val_loss);
        if step.improved {
            best = model.store.clone();
            log.best_epoch = epoch;
            log.best_val_loss = val_loss;
        }
        if step.stop {
            log.stop_reason = StopReason::EarlyStop;
            break;
        }
        if let Some(next) = step.decayed_to {
            adam.set_learning_rate(next);
            log.rate_changes.push(RateChange {
                epoch: epoch + 1,
                learning_rate: next,
            });
            log::info!("validation plateau: learning rate {lr:.1e} -> {next:.1e}");
        }
    }
    model.store = best;
    Ok(TrainOutcome { model, log })
}
