//! Objective, gradients, optimizer and the epoch loop with early stopping.

mod adam;
mod config;
mod objective;

pub use adam::{Adam, BETA1, BETA2, EPSILON};
pub use config::{TrainConfig, CONFIG_KEYS};
pub use objective::{backward, l2_penalty, loss, regularized};

use std::fmt::Write as _;

use crate::data::{Dataset, Example, Profiles, SplitPart};
use crate::error::{NrpaError, Result};
use crate::evaluation::{evaluate_examples, EvalOptions};
use crate::model::{init_params, ModelParams, ParamId};
use crate::rng::SeededRng;

/// Salt for the mini-batch shuffling stream, kept apart from initialization.
const SHUFFLE_STREAM: u64 = 0x5348_5546;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean mini-batch objective over the epoch (example-weighted).
    pub train_loss: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation MSE.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub history: Vec<EpochRecord>,
}

/// `epoch,train_loss,val_mse` with a header row.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_mse\n");
    for r in history {
        let _ = writeln!(s, "{},{:?},{:?}", r.epoch, r.train_loss, r.val_mse);
    }
    s
}

/// Trainable tensors under the configured ablation.
pub fn trainable(config: &TrainConfig) -> Vec<ParamId> {
    ParamId::ALL
        .into_iter()
        .filter(|id| id.is_active(&config.ablation))
        .collect()
}

/// Trains from a seeded initialization on the dataset's train split,
/// scoring the validation split after every epoch and stopping after
/// `patience` epochs without improvement.
pub fn train(config: &TrainConfig, dataset: &Dataset, profiles: &Profiles) -> Result<TrainOutcome> {
    config.validate()?;
    let dims = config.dims(dataset.vocab.len(), dataset.num_users(), dataset.num_items());
    let params = init_params(dims, config.activation, config.seed)?;
    train_from(
        config,
        params,
        &dataset.examples(SplitPart::Train),
        &dataset.examples(SplitPart::Validation),
        profiles,
    )
}

/// The epoch loop, starting from `params`.
pub fn train_from(
    config: &TrainConfig,
    mut params: ModelParams,
    train_set: &[Example],
    validation: &[Example],
    profiles: &Profiles,
) -> Result<TrainOutcome> {
    if train_set.is_empty() || validation.is_empty() {
        return Err(NrpaError::Input(
            "training needs non-empty train and validation splits".into(),
        ));
    }
    let active = trainable(config);
    let mut adam = Adam::new(&params, config.learning_rate);
    let mut rng = SeededRng::new(config.seed).fork(SHUFFLE_STREAM);
    let eval = EvalOptions {
        ablation: config.ablation,
        exclude_target: config.exclude_target,
        clip: false,
        threads: 1,
    };
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(usize, f64, ModelParams)> = None;
    let mut since_best = 0;
    for epoch in 1..=config.max_epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<Example> = chunk.iter().map(|&i| train_set[i]).collect();
            let (value, grads) = backward(&batch, &params, profiles, &config.ablation, config.l2_weight)
                .map_err(|e| match e {
                    NrpaError::NonFinite(what) => NrpaError::NonFinite(format!(
                        "training diverged at epoch {epoch}, batch {}: {what}",
                        b + 1
                    )),
                    other => other,
                })?;
            total += value * batch.len() as f64;
            adam.step(&mut params, &grads, &active)?;
            if let Some(id) = params.first_non_finite() {
                return Err(NrpaError::NonFinite(format!(
                    "training diverged at epoch {epoch}, batch {}: parameter {}",
                    b + 1,
                    id.name()
                )));
            }
        }
        let train_loss = total / train_set.len() as f64;
        let val_mse = evaluate_examples(&params, validation, profiles, &eval)?;
        if !val_mse.is_finite() {
            return Err(NrpaError::NonFinite(format!("validation MSE at epoch {epoch}")));
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_mse,
        });
        if best.as_ref().is_none_or(|(_, b, _)| val_mse < *b) {
            best = Some((epoch, val_mse, params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }
    let (best_epoch, best_val_mse, params) = best.expect("max_epochs >= 1");
    Ok(TrainOutcome {
        params,
        best_epoch,
        best_val_mse,
        history,
    })
}
