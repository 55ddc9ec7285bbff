//! Forward computation and its reverse pass.
//!
//! Layout note: per-review matrices are stored position-major, so row `k` of
//! an embedded review is the embedding of word `k` and row `k` of a feature
//! matrix is the convolutional feature `z_k` of that word.

use serde::Serialize;

use super::{AblationSpec, FmParams, Gradients, Level, ModelParams, TowerParams};
use crate::data::{Profile, Side, PAD};
use crate::error::{NrpaError, Result};
use crate::numeric::{
    axpy, dot, masked_softmax, matvec, matvec_t, softmax_backward, uniform_weights, Activation, Matrix,
};

/// Looks up every token: returns `T × d_w`, row `k` = embedding of token `k`.
/// `PAD` rows are zero because the `PAD` embedding is pinned to zero.
pub fn embed_review(tokens: &[u32], word_emb: &Matrix) -> Result<Matrix> {
    let mut out = Matrix::zeros(tokens.len(), word_emb.cols());
    for (k, &tok) in tokens.iter().enumerate() {
        if tok as usize >= word_emb.rows() {
            return Err(NrpaError::Shape(format!(
                "token id {tok} outside embedding table of {} rows",
                word_emb.rows()
            )));
        }
        if tok != PAD {
            out.row_mut(k).copy_from_slice(word_emb.row(tok as usize));
        }
    }
    Ok(out)
}

/// Same-length convolution with `(window - 1) / 2` zero columns of padding
/// on each side. Returns `(pre_activation, features)`, both `T × K`.
/// Positions where `skip` is true are left at zero; their features never
/// reach attention.
fn conv_forward(
    emb: &Matrix,
    conv_w: &Matrix,
    conv_b: &[f64],
    activation: Activation,
    skip: Option<&[bool]>,
) -> Result<(Matrix, Matrix)> {
    let word_dim = emb.cols();
    if word_dim == 0 || !conv_w.cols().is_multiple_of(word_dim) {
        return Err(NrpaError::Shape(format!(
            "conv filters are {}x{} but word vectors have {} dims",
            conv_w.rows(),
            conv_w.cols(),
            word_dim
        )));
    }
    let window = conv_w.cols() / word_dim;
    if window.is_multiple_of(2) {
        return Err(NrpaError::Config(format!(
            "convolution window must be odd, got {window}"
        )));
    }
    if conv_b.len() != conv_w.rows() {
        return Err(NrpaError::Shape(format!(
            "{} conv biases for {} filters",
            conv_b.len(),
            conv_w.rows()
        )));
    }
    let (len, filters, half) = (emb.rows(), conv_w.rows(), window / 2);
    let mut pre = Matrix::zeros(len, filters);
    let mut feat = Matrix::zeros(len, filters);
    for t in 0..len {
        if skip.is_some_and(|s| s[t]) {
            continue;
        }
        for j in 0..filters {
            let w = conv_w.row(j);
            let mut acc = conv_b[j];
            for o in 0..window {
                let Some(src) = (t + o).checked_sub(half).filter(|&s| s < len) else {
                    continue;
                };
                acc += dot(&w[o * word_dim..(o + 1) * word_dim], emb.row(src));
            }
            pre.set(t, j, acc);
            feat.set(t, j, activation.apply(acc));
        }
    }
    Ok((pre, feat))
}

/// Convolutional word features (`T × K`, row `k` = `z_k`).
pub fn conv_encode(emb: &Matrix, conv_w: &Matrix, conv_b: &[f64], activation: Activation) -> Result<Matrix> {
    conv_forward(emb, conv_w, conv_b, activation, None).map(|(_, feat)| feat)
}

/// `ReLU(W · id + b)`.
pub fn query_vector(id_emb: &[f64], w: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    Ok(query_forward(id_emb, w, b)?.1)
}

fn query_forward(id_emb: &[f64], w: &Matrix, b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut pre = matvec(w, id_emb)?;
    if b.len() != pre.len() {
        return Err(NrpaError::Shape(format!(
            "query bias has length {} but weight is {}x{}",
            b.len(),
            w.rows(),
            w.cols()
        )));
    }
    axpy(1.0, b, &mut pre);
    let q = pre.iter().map(|&x| x.max(0.0)).collect();
    Ok((pre, q))
}

/// Masked attention pooling over the rows of `atoms`. With `key` the logits
/// are `key · atom`; without it the weights are uniform.
fn pool(atoms: &Matrix, key: Option<&[f64]>, mask: &[bool]) -> Result<(Vec<f64>, Vec<f64>)> {
    if mask.len() != atoms.rows() {
        return Err(NrpaError::Shape(format!(
            "mask of length {} for {} atoms",
            mask.len(),
            atoms.rows()
        )));
    }
    let weights = match key {
        Some(key) => {
            if key.len() != atoms.cols() {
                return Err(NrpaError::Shape(format!(
                    "attention key of length {} for atoms of width {}",
                    key.len(),
                    atoms.cols()
                )));
            }
            let logits: Vec<f64> = (0..atoms.rows())
                .map(|r| if mask[r] { dot(key, atoms.row(r)) } else { 0.0 })
                .collect();
            masked_softmax(&logits, mask)
        }
        None => uniform_weights(mask),
    };
    let mut pooled = vec![0.0; atoms.cols()];
    for (r, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            axpy(w, atoms.row(r), &mut pooled);
        }
    }
    Ok((weights, pooled))
}

/// One review's pooled vector and its word weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedReview {
    pub vector: Vec<f64>,
    pub word_weights: Vec<f64>,
}

/// A user's or item's text feature and its review weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SideRepresentation {
    pub vector: Vec<f64>,
    pub review_weights: Vec<f64>,
}

/// Word-level personalized attention: logits `qᵀ A z_k` over unmasked words,
/// masked softmax, weighted sum of word features. An all-masked review
/// pools to the zero vector with zero weights.
pub fn word_attention_pool(
    features: &Matrix,
    query: &[f64],
    harmony: &Matrix,
    token_mask: &[bool],
) -> Result<EncodedReview> {
    let key = matvec_t(harmony, query)?;
    let (word_weights, vector) = pool(features, Some(&key), token_mask)?;
    Ok(EncodedReview { vector, word_weights })
}

/// Review-level personalized attention over the rows of `reviews` (`N × K`).
pub fn review_attention_pool(
    reviews: &Matrix,
    query: &[f64],
    harmony: &Matrix,
    review_mask: &[bool],
) -> Result<SideRepresentation> {
    let key = matvec_t(harmony, query)?;
    let (review_weights, vector) = pool(reviews, Some(&key), review_mask)?;
    Ok(SideRepresentation {
        vector,
        review_weights,
    })
}

fn fm_forward(input: &[f64], fm: &FmParams) -> Result<(f64, Vec<f64>)> {
    if fm.linear.len() != input.len() || fm.factors.rows() != input.len() {
        return Err(NrpaError::Shape(format!(
            "FM expects {} inputs (factors {}x{}), got {}",
            fm.linear.len(),
            fm.factors.rows(),
            fm.factors.cols(),
            input.len()
        )));
    }
    let sums = matvec_t(&fm.factors, input)?;
    let mut pairwise = 0.0;
    for (f, s) in sums.iter().enumerate() {
        let sq: f64 = (0..input.len())
            .map(|i| {
                let v = fm.factors.get(i, f) * input[i];
                v * v
            })
            .sum();
        pairwise += s * s - sq;
    }
    Ok((fm.bias + dot(&fm.linear, input) + 0.5 * pairwise, sums))
}

/// Factorization-machine rating over `p_u ⊕ p_i`, using the linear-time
/// form of the pairwise term. Unclipped.
pub fn fm_predict(user_vec: &[f64], item_vec: &[f64], fm: &FmParams) -> Result<f64> {
    let input: Vec<f64> = user_vec.iter().chain(item_vec).copied().collect();
    fm_forward(&input, fm).map(|(r, _)| r)
}

#[derive(Debug, Clone)]
pub(crate) struct QueryPass {
    pre: Vec<f64>,
    query: Vec<f64>,
    key: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct ReviewPass {
    tokens: Vec<u32>,
    emb: Matrix,
    pre: Matrix,
    feat: Matrix,
    alpha: Vec<f64>,
}

/// Everything one tower computed for one owner.
#[derive(Debug, Clone)]
pub(crate) struct SidePass {
    side: Side,
    owner: u32,
    review_len: usize,
    word: Option<QueryPass>,
    review: Option<QueryPass>,
    reviews: Vec<Option<ReviewPass>>,
    review_vectors: Matrix,
    beta: Vec<f64>,
    vector: Vec<f64>,
}

fn query_pass(params: &ModelParams, side: Side, owner: u32, level: Level) -> Result<QueryPass> {
    let ids = params.id_emb(side);
    if owner as usize >= ids.rows() {
        return Err(NrpaError::Input(format!(
            "{} index {owner} outside embedding table of {} rows",
            side.name(),
            ids.rows()
        )));
    }
    let tower = params.tower(side);
    let (w, b, a) = match level {
        Level::Word => (&tower.word_query_w, &tower.word_query_b, &tower.word_harmony),
        Level::Review => (
            &tower.review_query_w,
            &tower.review_query_b,
            &tower.review_harmony,
        ),
    };
    let (pre, query) = query_forward(ids.row(owner as usize), w, b)?;
    let key = matvec_t(a, &query)?;
    Ok(QueryPass { pre, query, key })
}

pub(crate) fn encode_side(
    params: &ModelParams,
    side: Side,
    profile: &Profile,
    ablation: &AblationSpec,
) -> Result<SidePass> {
    let dims = &params.dims;
    if profile.review_len != dims.review_len || profile.reviews_per_owner != dims.reviews_per_owner {
        return Err(NrpaError::Shape(format!(
            "profile is {}x{} but the model expects {}x{}",
            profile.reviews_per_owner, profile.review_len, dims.reviews_per_owner, dims.review_len
        )));
    }
    let owner = profile.owner;
    let word = ablation
        .is_personalized(side, Level::Word)
        .then(|| query_pass(params, side, owner, Level::Word))
        .transpose()?;
    let review = ablation
        .is_personalized(side, Level::Review)
        .then(|| query_pass(params, side, owner, Level::Review))
        .transpose()?;
    let tower: &TowerParams = params.tower(side);
    let mut reviews = Vec::with_capacity(profile.reviews_per_owner);
    let mut review_vectors = Matrix::zeros(profile.reviews_per_owner, dims.num_filters);
    for n in 0..profile.reviews_per_owner {
        if !profile.review_mask[n] {
            reviews.push(None);
            continue;
        }
        let tokens = profile.review(n).to_vec();
        let emb = embed_review(&tokens, &params.word_emb)?;
        let mask = profile.review_token_mask(n);
        let masked: Vec<bool> = mask.iter().map(|m| !m).collect();
        let (pre, feat) = conv_forward(
            &emb,
            &tower.conv_w,
            &tower.conv_b,
            params.activation,
            Some(&masked),
        )?;
        let key = word.as_ref().map(|w| w.key.as_slice());
        let (alpha, vector) = pool(&feat, key, mask)?;
        review_vectors.row_mut(n).copy_from_slice(&vector);
        reviews.push(Some(ReviewPass {
            tokens,
            emb,
            pre,
            feat,
            alpha,
        }));
    }
    let key = review.as_ref().map(|r| r.key.as_slice());
    let (beta, vector) = pool(&review_vectors, key, &profile.review_mask)?;
    Ok(SidePass {
        side,
        owner,
        review_len: profile.review_len,
        word,
        review,
        reviews,
        review_vectors,
        beta,
        vector,
    })
}

/// Attention weights of one scored pair. Padding reviews carry all-zero
/// word weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttentionTrace {
    pub user_alpha: Vec<Vec<f64>>,
    pub user_beta: Vec<f64>,
    pub item_alpha: Vec<Vec<f64>>,
    pub item_beta: Vec<f64>,
}

/// Result of one forward evaluation, retaining what the reverse pass needs.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub prediction: f64,
    pub(crate) user: SidePass,
    pub(crate) item: SidePass,
    fm_input: Vec<f64>,
    fm_sums: Vec<f64>,
}

/// Scores one (user, item) pair from their profiles.
pub fn forward(
    params: &ModelParams,
    user_profile: &Profile,
    item_profile: &Profile,
    ablation: &AblationSpec,
) -> Result<ForwardPass> {
    let user = encode_side(params, Side::User, user_profile, ablation)?;
    let item = encode_side(params, Side::Item, item_profile, ablation)?;
    let fm_input: Vec<f64> = user.vector.iter().chain(&item.vector).copied().collect();
    let (prediction, fm_sums) = fm_forward(&fm_input, &params.fm)?;
    Ok(ForwardPass {
        prediction,
        user,
        item,
        fm_input,
        fm_sums,
    })
}

impl ForwardPass {
    pub fn user_vector(&self) -> &[f64] {
        &self.user.vector
    }

    pub fn item_vector(&self) -> &[f64] {
        &self.item.vector
    }

    pub fn trace(&self) -> AttentionTrace {
        let alphas = |s: &SidePass| -> Vec<Vec<f64>> {
            s.reviews
                .iter()
                .map(|r| match r {
                    Some(r) => r.alpha.clone(),
                    None => vec![0.0; s.review_len],
                })
                .collect()
        };
        AttentionTrace {
            user_alpha: alphas(&self.user),
            user_beta: self.user.beta.clone(),
            item_alpha: alphas(&self.item),
            item_beta: self.item.beta.clone(),
        }
    }

    /// Accumulates `d_pred · ∂prediction/∂θ` into `grads`.
    pub(crate) fn backward(&self, params: &ModelParams, d_pred: f64, grads: &mut Gradients) {
        let fm = &params.fm;
        let input = &self.fm_input;
        let k_fm = fm.factors.cols();
        grads.fm.bias += d_pred;
        axpy(d_pred, input, &mut grads.fm.linear);
        let mut d_input = vec![0.0; input.len()];
        for (i, x) in input.iter().enumerate() {
            let v = fm.factors.row(i);
            let gv = grads.fm.factors.row_mut(i);
            let mut acc = fm.linear[i];
            for f in 0..k_fm {
                acc += v[f] * (self.fm_sums[f] - v[f] * x);
                gv[f] += d_pred * (x * self.fm_sums[f] - v[f] * x * x);
            }
            d_input[i] = d_pred * acc;
        }
        let k = params.dims.num_filters;
        side_backward(params, &self.user, &d_input[..k], grads);
        side_backward(params, &self.item, &d_input[k..], grads);
    }
}

/// Reverse pass through a query MLP and harmony matrix, given the gradient
/// of the attention key `Aᵀ q`.
#[allow(clippy::too_many_arguments)]
fn query_backward(
    pass: &QueryPass,
    d_key: &[f64],
    id: &[f64],
    w: &Matrix,
    harmony: &Matrix,
    g_w: &mut Matrix,
    g_b: &mut [f64],
    g_harmony: &mut Matrix,
    g_id: &mut [f64],
) {
    for (a, &q) in pass.query.iter().enumerate() {
        if q != 0.0 {
            axpy(q, d_key, g_harmony.row_mut(a));
        }
    }
    for a in 0..harmony.rows() {
        if pass.pre[a] <= 0.0 {
            continue;
        }
        let d_pre = dot(harmony.row(a), d_key);
        if d_pre == 0.0 {
            continue;
        }
        g_b[a] += d_pre;
        axpy(d_pre, id, g_w.row_mut(a));
        axpy(d_pre, w.row(a), g_id);
    }
}

fn side_backward(params: &ModelParams, pass: &SidePass, d_vector: &[f64], grads: &mut Gradients) {
    let side = pass.side;
    let tower = params.tower(side);
    let k = d_vector.len();
    let n_reviews = pass.reviews.len();

    // Review level.
    let mut d_reviews = Matrix::zeros(n_reviews, k);
    for n in 0..n_reviews {
        if pass.beta[n] != 0.0 {
            axpy(pass.beta[n], d_vector, d_reviews.row_mut(n));
        }
    }
    if let Some(rq) = &pass.review {
        let d_beta: Vec<f64> = (0..n_reviews)
            .map(|n| dot(d_vector, pass.review_vectors.row(n)))
            .collect();
        let d_logits = softmax_backward(&pass.beta, &d_beta);
        let mut d_key = vec![0.0; k];
        for n in 0..n_reviews {
            if d_logits[n] != 0.0 {
                axpy(d_logits[n], pass.review_vectors.row(n), &mut d_key);
                axpy(d_logits[n], &rq.key, d_reviews.row_mut(n));
            }
        }
        let id = params.id_emb(side).row(pass.owner as usize).to_vec();
        let mut g_id = vec![0.0; id.len()];
        let g_tower = grads.tower_mut(side);
        query_backward(
            rq,
            &d_key,
            &id,
            &tower.review_query_w,
            &tower.review_harmony,
            &mut g_tower.review_query_w,
            &mut g_tower.review_query_b,
            &mut g_tower.review_harmony,
            &mut g_id,
        );
        axpy(1.0, &g_id, grads.id_emb_mut(side).row_mut(pass.owner as usize));
    }

    // Word level, per review.
    let window = params.dims.window;
    let word_dim = params.dims.word_dim;
    let half = window / 2;
    let mut d_word_key = vec![0.0; k];
    for (n, review) in pass.reviews.iter().enumerate() {
        let Some(r) = review else { continue };
        let d_pooled = d_reviews.row(n);
        if d_pooled.iter().all(|&x| x == 0.0) {
            continue;
        }
        let len = r.tokens.len();
        let mut d_feat = Matrix::zeros(len, k);
        for t in 0..len {
            if r.alpha[t] != 0.0 {
                axpy(r.alpha[t], d_pooled, d_feat.row_mut(t));
            }
        }
        if let Some(wq) = &pass.word {
            let d_alpha: Vec<f64> = (0..len).map(|t| dot(d_pooled, r.feat.row(t))).collect();
            let d_logits = softmax_backward(&r.alpha, &d_alpha);
            for t in 0..len {
                if d_logits[t] != 0.0 {
                    axpy(d_logits[t], r.feat.row(t), &mut d_word_key);
                    axpy(d_logits[t], &wq.key, d_feat.row_mut(t));
                }
            }
        }
        // Convolution.
        let (g_tower, g_words) = match side {
            Side::User => (&mut grads.user_tower, &mut grads.word_emb),
            Side::Item => (&mut grads.item_tower, &mut grads.word_emb),
        };
        for t in 0..len {
            for j in 0..k {
                let g = d_feat.get(t, j) * params.activation.derivative(r.pre.get(t, j), r.feat.get(t, j));
                if g == 0.0 {
                    continue;
                }
                g_tower.conv_b[j] += g;
                for o in 0..window {
                    let Some(src) = (t + o).checked_sub(half).filter(|&s| s < len) else {
                        continue;
                    };
                    let tok = r.tokens[src];
                    if tok == PAD {
                        continue;
                    }
                    let block = o * word_dim..(o + 1) * word_dim;
                    axpy(g, r.emb.row(src), &mut g_tower.conv_w.row_mut(j)[block.clone()]);
                    axpy(g, &tower.conv_w.row(j)[block], g_words.row_mut(tok as usize));
                }
            }
        }
    }
    if let Some(wq) = &pass.word {
        let id = params.id_emb(side).row(pass.owner as usize).to_vec();
        let mut g_id = vec![0.0; id.len()];
        let g_tower = grads.tower_mut(side);
        query_backward(
            wq,
            &d_word_key,
            &id,
            &tower.word_query_w,
            &tower.word_harmony,
            &mut g_tower.word_query_w,
            &mut g_tower.word_query_b,
            &mut g_tower.word_harmony,
            &mut g_id,
        );
        axpy(1.0, &g_id, grads.id_emb_mut(side).row_mut(pass.owner as usize));
    }
}
