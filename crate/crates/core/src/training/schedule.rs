use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::EncodedInstance;
use crate::model::{Forward, Mode, Model};
use crate::numerics::Tape;
use crate::rng::{seeded, Stream};

use super::adam::{clip_global_norm, AdamState, GRAD_CLIP_NORM};
use super::{TrainConfig, TrainError};

/// Encoded train/validation split for one language.
#[derive(Debug, Clone)]
pub struct LanguageData {
    pub train: Vec<EncodedInstance>,
    pub validation: Vec<EncodedInstance>,
}

/// One line of the structured training log.
#[derive(Debug, Clone, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub per_language_val: BTreeMap<String, f64>,
    pub lr: f64,
    pub instances_seen: usize,
    pub improved: bool,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// One optimizer update on a single instance.
pub(super) fn train_step(
    model: &mut Model,
    adam: &mut AdamState,
    instance: &EncodedInstance,
    config: &TrainConfig,
    lr: f64,
    noise_rng: &mut ChaCha8Rng,
) -> Result<f64, TrainError> {
    let mut tape = Tape::new();
    let mut fx = Forward::new(
        &mut tape,
        Mode::Train {
            dropout: config.dropout,
            word_drop: config.word_drop,
            rng: noise_rng,
        },
    );
    let loss = model.loss_on(&mut fx, instance)?;
    let loss_value = tape.value(loss).item();
    let mut grads = tape.backward(loss)?;
    clip_global_norm(&mut grads, GRAD_CLIP_NORM);
    adam.step(&mut model.params, &grads, lr)?;
    Ok(loss_value)
}

pub(super) fn mean_val_loss(
    model: &Model,
    validation: &[EncodedInstance],
) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for inst in validation {
        total += model.eval_loss(inst)?;
    }
    Ok(total / validation.len().max(1) as f64)
}

/// Train on one language: up to `config.epochs` epochs with per-epoch
/// shuffles, stopping once validation loss has not improved for
/// `config.early_stop_tolerance` consecutive epochs. Returns the weights
/// of the best-validation epoch.
pub fn train_monolingual(
    mut model: Model,
    data: &LanguageData,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if data.train.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let mut shuffle_rng = seeded(config.seed, Stream::Shuffle);
    let mut noise_rng = seeded(config.seed, Stream::Noise);
    let mut adam = AdamState::new();
    let mut stopper = super::EarlyStopping::new(config.early_stop_tolerance);
    let mut best_params = model.params.clone();
    let mut log = Vec::new();

    let mut order: Vec<usize> = (0..data.train.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut train_total = 0.0;
        for &i in &order {
            train_total += train_step(
                &mut model,
                &mut adam,
                &data.train[i],
                config,
                config.lr,
                &mut noise_rng,
            )?;
        }
        let val_loss = mean_val_loss(&model, &data.validation)?;
        let improved = stopper.record(epoch, val_loss);
        if improved {
            best_params = model.params.clone();
        }
        log.push(EpochRecord {
            epoch,
            train_loss: train_total / data.train.len() as f64,
            val_loss,
            per_language_val: BTreeMap::new(),
            lr: config.lr,
            instances_seen: data.train.len(),
            improved,
        });
        if stopper.should_stop() {
            break;
        }
    }

    model.params = best_params;
    Ok(TrainOutcome {
        model,
        log,
        best_epoch: stopper.best_epoch(),
    })
}

/// Fresh random sample of round(rate * n) distinct indices.
pub(super) fn subsample_indices(n: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let k = ((n as f64) * rate).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.truncate(k);
    order
}

/// The baseline replication schedule: a fixed number of epochs (20 in the
/// replication config), no early stopping, and every epoch trains on a
/// fresh subsample of the training data. Returns the final-epoch weights.
pub fn train_baseline_schedule(
    mut model: Model,
    data: &LanguageData,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if data.train.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let rate = config.subsample_rate.unwrap_or(0.3);
    let mut sample_rng = seeded(config.seed, Stream::Subsample);
    let mut noise_rng = seeded(config.seed, Stream::Noise);
    let mut adam = AdamState::new();
    let mut log = Vec::new();

    for epoch in 1..=config.epochs {
        let sample = subsample_indices(data.train.len(), rate, &mut sample_rng);
        let mut train_total = 0.0;
        for &i in &sample {
            train_total += train_step(
                &mut model,
                &mut adam,
                &data.train[i],
                config,
                config.lr,
                &mut noise_rng,
            )?;
        }
        let val_loss = mean_val_loss(&model, &data.validation)?;
        log.push(EpochRecord {
            epoch,
            train_loss: train_total / sample.len().max(1) as f64,
            val_loss,
            per_language_val: BTreeMap::new(),
            lr: config.lr,
            instances_seen: sample.len(),
            improved: false,
        });
    }

    let best_epoch = log.len();
    Ok(TrainOutcome {
        model,
        log,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ContextMode;
    use crate::testutil::tiny_setup;

    fn split_setup(
        dims: usize,
        n: usize,
        seed: u64,
    ) -> (Model, LanguageData) {
        let setup = tiny_setup(dims, ContextMode::FullLstm, false, n, seed);
        let k = setup.encoded.len() * 9 / 10;
        let data = LanguageData {
            train: setup.encoded[..k].to_vec(),
            validation: setup.encoded[k..].to_vec(),
        };
        (setup.model, data)
    }

    #[test]
    fn training_is_deterministic_for_identical_inputs() {
        let config = TrainConfig {
            epochs: 3,
            seed: 5,
            ..TrainConfig::default()
        };
        let (model_a, data) = split_setup(3, 12, 5);
        let (model_b, _) = split_setup(3, 12, 5);
        let out_a = train_monolingual(model_a, &data, &config).unwrap();
        let out_b = train_monolingual(model_b, &data, &config).unwrap();
        assert_eq!(out_a.model.params, out_b.model.params);
        assert_eq!(out_a.log.len(), out_b.log.len());
        for (a, b) in out_a.log.iter().zip(out_b.log.iter()) {
            assert_eq!(a.val_loss.to_bits(), b.val_loss.to_bits());
        }
    }

    #[test]
    fn best_epoch_has_the_minimum_recorded_val_loss() {
        let config = TrainConfig {
            epochs: 6,
            seed: 7,
            ..TrainConfig::default()
        };
        let (model, data) = split_setup(3, 12, 7);
        let out = train_monolingual(model, &data, &config).unwrap();
        let min = out
            .log
            .iter()
            .map(|r| r.val_loss)
            .fold(f64::INFINITY, f64::min);
        let best = &out.log[out.best_epoch - 1];
        assert_eq!(best.val_loss, min);
        assert!(best.improved);
    }

    #[test]
    fn baseline_schedule_subsamples_at_the_stated_rate() {
        let mut rng = seeded(3, Stream::Subsample);
        let s = subsample_indices(100, 0.3, &mut rng);
        assert_eq!(s.len(), 30);
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 30, "subsample has duplicates");
        // rounding, not truncation
        assert_eq!(subsample_indices(9, 0.3, &mut rng).len(), 3);
        assert_eq!(subsample_indices(11, 0.3, &mut rng).len(), 3);
        assert_eq!(subsample_indices(12, 0.3, &mut rng).len(), 4);
    }

    #[test]
    fn baseline_schedule_draws_fresh_samples_and_never_stops_early() {
        let config = TrainConfig {
            epochs: 20,
            subsample_rate: Some(0.3),
            seed: 2,
            ..TrainConfig::default()
        };
        let (model, data) = split_setup(2, 35, 2);
        let n_train = data.train.len();
        let out = train_baseline_schedule(model, &data, &config).unwrap();
        assert_eq!(out.log.len(), 20);
        let per_epoch = ((n_train as f64) * 0.3).round() as usize;
        let total: usize = out.log.iter().map(|r| r.instances_seen).sum();
        assert_eq!(total, 20 * per_epoch);
    }
}
