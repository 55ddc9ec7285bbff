//! Squared-error objective with L2 regularization, and its exact gradient.

use crate::data::{Example, Profiles};
use crate::error::{NrpaError, Result};
use crate::model::{forward, AblationSpec, Gradients, ModelParams, ParamId};

/// Tensors covered by the L2 term: every active non-bias tensor.
pub fn regularized(id: ParamId, ablation: &AblationSpec) -> bool {
    !id.is_bias() && id.is_active(ablation)
}

/// `Σ ‖θ‖²` over regularized tensors, skipping the `PAD` embedding row.
pub fn l2_penalty(params: &ModelParams, ablation: &AblationSpec) -> f64 {
    let mut total = 0.0;
    for id in ParamId::ALL {
        if !regularized(id, ablation) {
            continue;
        }
        let values = params.tensor(id);
        let skip = if id == ParamId::WordEmb {
            params.dims.word_dim
        } else {
            0
        };
        total += values[skip..].iter().map(|x| x * x).sum::<f64>();
    }
    total
}

/// Mean squared error over the batch plus `l2_weight · Σ‖θ‖²`. Profiles keep
/// the target review (training-time lookup).
pub fn loss(
    batch: &[Example],
    params: &ModelParams,
    profiles: &Profiles,
    ablation: &AblationSpec,
    l2_weight: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(NrpaError::Input("loss of an empty batch".into()));
    }
    let mut sq = 0.0;
    for ex in batch {
        let (up, ip) = profiles.pair(ex.user, ex.item, false);
        let r = forward(params, &up, &ip, ablation)?.prediction - ex.rating;
        sq += r * r;
    }
    Ok(sq / batch.len() as f64 + l2_weight * l2_penalty(params, ablation))
}

/// Loss and its gradient with respect to every parameter tensor.
pub fn backward(
    batch: &[Example],
    params: &ModelParams,
    profiles: &Profiles,
    ablation: &AblationSpec,
    l2_weight: f64,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(NrpaError::Input("gradient of an empty batch".into()));
    }
    let mut grads = params.zeros_like();
    let scale = 1.0 / batch.len() as f64;
    let mut sq = 0.0;
    for ex in batch {
        let (up, ip) = profiles.pair(ex.user, ex.item, false);
        let pass = forward(params, &up, &ip, ablation)?;
        let r = pass.prediction - ex.rating;
        if !r.is_finite() {
            return Err(NrpaError::NonFinite(format!(
                "prediction for user {} item {}",
                ex.user, ex.item
            )));
        }
        sq += r * r;
        pass.backward(params, 2.0 * r * scale, &mut grads);
    }
    let mut value = sq * scale;
    if l2_weight != 0.0 {
        value += l2_weight * l2_penalty(params, ablation);
        for id in ParamId::ALL {
            if !regularized(id, ablation) {
                continue;
            }
            let theta = params.tensor(id);
            for (g, x) in grads.tensor_mut(id).iter_mut().zip(theta) {
                *g += 2.0 * l2_weight * x;
            }
        }
    }
    grads.pin_padding();
    if !value.is_finite() {
        return Err(NrpaError::NonFinite("loss".into()));
    }
    if let Some(id) = grads.first_non_finite() {
        return Err(NrpaError::NonFinite(format!("gradient of {}", id.name())));
    }
    Ok((value, grads))
}
