//! Scoring, attention ablations, the ID-dimension sweep and the synthetic
//! personalization corpus.

mod synthetic;

pub use crate::model::{AblationSpec, AttentionMode};
pub use synthetic::{make_synthetic_corpus, SyntheticCorpus, FILLER_WORDS};

use std::fmt::Write as _;

use serde::Serialize;

use crate::data::{Dataset, Example, Profiles, SplitPart};
use crate::error::{NrpaError, Result};
use crate::model::{forward, AttentionTrace, ModelParams};
use crate::training::{train, TrainConfig};

pub const DEFAULT_ID_DIMS: [usize; 5] = [8, 16, 32, 64, 128];

pub fn mse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(NrpaError::Shape(format!(
            "{} predictions for {} ratings",
            predictions.len(),
            truths.len()
        )));
    }
    if predictions.is_empty() {
        return Err(NrpaError::Input("MSE of zero examples".into()));
    }
    let total: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(total / predictions.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub ablation: AblationSpec,
    pub exclude_target: bool,
    /// Clamp predictions to `[1, 5]` before scoring.
    pub clip: bool,
    /// Worker threads for scoring; results do not depend on it.
    pub threads: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            ablation: AblationSpec::FULL,
            exclude_target: true,
            clip: false,
            threads: 1,
        }
    }
}

fn predict_one(params: &ModelParams, profiles: &Profiles, ex: &Example, opts: &EvalOptions) -> Result<f64> {
    let (up, ip) = profiles.pair(ex.user, ex.item, opts.exclude_target);
    let p = forward(params, &up, &ip, &opts.ablation)?.prediction;
    Ok(if opts.clip { p.clamp(1.0, 5.0) } else { p })
}

/// Predictions in example order. With `threads > 1` contiguous chunks are
/// scored concurrently; each prediction is computed independently so the
/// output is identical to the single-threaded result.
pub fn predict_examples(
    params: &ModelParams,
    examples: &[Example],
    profiles: &Profiles,
    opts: &EvalOptions,
) -> Result<Vec<f64>> {
    let threads = opts.threads.max(1).min(examples.len().max(1));
    if threads == 1 {
        return examples
            .iter()
            .map(|ex| predict_one(params, profiles, ex, opts))
            .collect();
    }
    let chunk = examples.len().div_ceil(threads);
    let parts: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = examples
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|ex| predict_one(params, profiles, ex, opts))
                        .collect::<Result<Vec<f64>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scoring thread panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(examples.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// MSE over `examples`, summed in example order.
pub fn evaluate_examples(
    params: &ModelParams,
    examples: &[Example],
    profiles: &Profiles,
    opts: &EvalOptions,
) -> Result<f64> {
    let preds = predict_examples(params, examples, profiles, opts)?;
    let truths: Vec<f64> = examples.iter().map(|e| e.rating).collect();
    mse(&preds, &truths)
}

/// MSE on one split of a prepared dataset under the given ablation.
pub fn evaluate(
    params: &ModelParams,
    dataset: &Dataset,
    part: SplitPart,
    profiles: &Profiles,
    opts: &EvalOptions,
) -> Result<f64> {
    evaluate_examples(params, &dataset.examples(part), profiles, opts)
}

/// One line of the attention dump.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub user: String,
    pub item: String,
    pub prediction: f64,
    #[serde(flatten)]
    pub attention: AttentionTrace,
}

/// JSON-lines attention trace for every example, in order.
pub fn trace_jsonl(
    params: &ModelParams,
    dataset: &Dataset,
    examples: &[Example],
    profiles: &Profiles,
    opts: &EvalOptions,
) -> Result<String> {
    let mut out = String::new();
    for ex in examples {
        let rec = trace_record(params, dataset, ex.user, ex.item, profiles, opts)?;
        out.push_str(&serde_json::to_string(&rec).expect("trace serializes"));
        out.push('\n');
    }
    Ok(out)
}

pub fn trace_record(
    params: &ModelParams,
    dataset: &Dataset,
    user: u32,
    item: u32,
    profiles: &Profiles,
    opts: &EvalOptions,
) -> Result<TraceRecord> {
    let (up, ip) = profiles.pair(user, item, opts.exclude_target);
    let pass = forward(params, &up, &ip, &opts.ablation)?;
    Ok(TraceRecord {
        user: dataset.user_key(user).unwrap_or("<unknown>").to_owned(),
        item: dataset.item_key(item).unwrap_or("<unknown>").to_owned(),
        prediction: pass.prediction,
        attention: pass.trace(),
    })
}

/// Trains each of the six attention variants with identical settings and
/// reports test MSE, in [`AblationSpec::variants`] order.
pub fn run_ablation_suite(config: &TrainConfig, dataset: &Dataset) -> Result<Vec<(String, f64)>> {
    let profiles = dataset.profiles(config.review_len, config.reviews_per_owner)?;
    let mut rows = Vec::new();
    for (name, spec) in AblationSpec::variants() {
        let cfg = TrainConfig {
            ablation: spec,
            ..config.clone()
        };
        let outcome = train(&cfg, dataset, &profiles)?;
        let opts = EvalOptions {
            ablation: spec,
            exclude_target: cfg.exclude_target,
            ..EvalOptions::default()
        };
        let test = evaluate(&outcome.params, dataset, SplitPart::Test, &profiles, &opts)?;
        rows.push((name.to_owned(), test));
    }
    Ok(rows)
}

/// Retrains once per ID-embedding size and reports the best validation MSE.
pub fn sweep_id_dim(config: &TrainConfig, dataset: &Dataset, dims: &[usize]) -> Result<Vec<(usize, f64)>> {
    if dims.is_empty() {
        return Err(NrpaError::Config(
            "ID-dimension sweep needs at least one size".into(),
        ));
    }
    let profiles = dataset.profiles(config.review_len, config.reviews_per_owner)?;
    dims.iter()
        .map(|&d| {
            let cfg = TrainConfig {
                id_dim: d,
                ..config.clone()
            };
            Ok((d, train(&cfg, dataset, &profiles)?.best_val_mse))
        })
        .collect()
}

pub fn ablation_csv(rows: &[(String, f64)]) -> String {
    let mut s = String::from("variant,mse\n");
    for (v, m) in rows {
        let _ = writeln!(s, "{v},{m:?}");
    }
    s
}

pub fn sweep_csv(rows: &[(usize, f64)]) -> String {
    let mut s = String::from("d_id,val_mse\n");
    for (d, m) in rows {
        let _ = writeln!(s, "{d},{m:?}");
    }
    s
}
