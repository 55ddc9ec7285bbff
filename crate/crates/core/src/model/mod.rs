//! Model parameters and the forward computation: word embedding,
//! convolutional review encoding, personalized word- and review-level
//! attention, and the factorization-machine rating head.

mod ablation;
pub mod checkpoint;
pub use checkpoint::Checkpoint;
mod encoder;
mod pretrained;

pub use ablation::{AblationSpec, AttentionMode, Level};
pub use encoder::{
    conv_encode, embed_review, fm_predict, forward, query_vector, review_attention_pool, word_attention_pool,
    AttentionTrace, EncodedReview, ForwardPass, SideRepresentation,
};
pub use pretrained::load_word_vectors;

use crate::data::{Side, PAD};
use crate::error::{NrpaError, Result};
use crate::numeric::{Activation, Matrix};
use crate::rng::SeededRng;

/// Every size that determines tensor shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub vocab_size: usize,
    /// Includes the reserved unknown-user row 0.
    pub num_users: usize,
    /// Includes the reserved unknown-item row 0.
    pub num_items: usize,
    pub word_dim: usize,
    pub id_dim: usize,
    pub num_filters: usize,
    pub attention_dim: usize,
    pub window: usize,
    pub fm_factors: usize,
    pub review_len: usize,
    pub reviews_per_owner: usize,
}

impl Dims {
    pub fn as_array(&self) -> [usize; 11] {
        [
            self.vocab_size,
            self.num_users,
            self.num_items,
            self.word_dim,
            self.id_dim,
            self.num_filters,
            self.attention_dim,
            self.window,
            self.fm_factors,
            self.review_len,
            self.reviews_per_owner,
        ]
    }

    pub fn from_array(a: [usize; 11]) -> Self {
        Dims {
            vocab_size: a[0],
            num_users: a[1],
            num_items: a[2],
            word_dim: a[3],
            id_dim: a[4],
            num_filters: a[5],
            attention_dim: a[6],
            window: a[7],
            fm_factors: a[8],
            review_len: a[9],
            reviews_per_owner: a[10],
        }
    }

    pub fn validate(&self) -> Result<()> {
        const NAMES: [&str; 11] = [
            "vocab_size",
            "num_users",
            "num_items",
            "word_dim",
            "id_dim",
            "num_filters",
            "attention_dim",
            "window",
            "fm_factors",
            "review_len",
            "reviews_per_owner",
        ];
        for (name, v) in NAMES.iter().zip(self.as_array()) {
            if v == 0 {
                return Err(NrpaError::Config(format!("dimension {name} must be at least 1")));
            }
        }
        if self.vocab_size < 2 {
            return Err(NrpaError::Config("vocabulary needs <pad> and <unk>".into()));
        }
        if self.window.is_multiple_of(2) {
            return Err(NrpaError::Config(format!(
                "convolution window must be odd, got {}",
                self.window
            )));
        }
        if self.checked_param_count().is_none() {
            return Err(NrpaError::Config(
                "dimensions overflow the parameter count".into(),
            ));
        }
        Ok(())
    }

    pub fn fm_input_dim(&self) -> usize {
        2 * self.num_filters
    }

    /// Number of scalars across all tensors, or `None` if any shape or the
    /// total overflows `usize`.
    pub fn checked_param_count(&self) -> Option<usize> {
        self.window.checked_mul(self.word_dim)?;
        self.num_filters.checked_mul(2)?;
        ParamId::ALL.into_iter().try_fold(0usize, |acc, id| {
            let (r, c) = id.shape(self);
            acc.checked_add(r.checked_mul(c)?)
        })
    }
}

/// Parameters of one tower (user or item side).
#[derive(Debug, Clone, PartialEq)]
pub struct TowerParams {
    /// `K × (window · d_w)`. Filter `j` is row `j`: `window` consecutive
    /// blocks of `d_w` weights, block `o` applied to the word at offset
    /// `o - (window - 1) / 2` from the output position.
    pub conv_w: Matrix,
    pub conv_b: Vec<f64>,
    pub word_query_w: Matrix,
    pub word_query_b: Vec<f64>,
    /// `d_a × K` bilinear map between word query and word features.
    pub word_harmony: Matrix,
    pub review_query_w: Matrix,
    pub review_query_b: Vec<f64>,
    pub review_harmony: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmParams {
    pub bias: f64,
    /// Length `2K`.
    pub linear: Vec<f64>,
    /// `2K × k_fm`.
    pub factors: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: Dims,
    pub activation: Activation,
    /// `|V| × d_w`, shared by both towers. Row `PAD` is pinned to zero.
    pub word_emb: Matrix,
    pub user_emb: Matrix,
    pub item_emb: Matrix,
    pub user_tower: TowerParams,
    pub item_tower: TowerParams,
    pub fm: FmParams,
}

/// Gradients share the parameter layout.
pub type Gradients = ModelParams;

/// Identifies one parameter tensor. [`ParamId::ALL`] is the canonical order
/// used by checkpoints and optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamId {
    WordEmb,
    UserEmb,
    ItemEmb,
    ConvW(Side),
    ConvB(Side),
    WordQueryW(Side),
    WordQueryB(Side),
    WordHarmony(Side),
    ReviewQueryW(Side),
    ReviewQueryB(Side),
    ReviewHarmony(Side),
    FmBias,
    FmLinear,
    FmFactors,
}

impl ParamId {
    pub const ALL: [ParamId; 22] = {
        use ParamId::*;
        use Side::{Item as I, User as U};
        [
            WordEmb,
            UserEmb,
            ItemEmb,
            ConvW(U),
            ConvB(U),
            WordQueryW(U),
            WordQueryB(U),
            WordHarmony(U),
            ReviewQueryW(U),
            ReviewQueryB(U),
            ReviewHarmony(U),
            ConvW(I),
            ConvB(I),
            WordQueryW(I),
            WordQueryB(I),
            WordHarmony(I),
            ReviewQueryW(I),
            ReviewQueryB(I),
            ReviewHarmony(I),
            FmBias,
            FmLinear,
            FmFactors,
        ]
    };

    pub fn name(self) -> String {
        use ParamId::*;
        let sided = |s: Side, n: &str| format!("{}.{n}", s.name());
        match self {
            WordEmb => "word_emb".into(),
            UserEmb => "user_emb".into(),
            ItemEmb => "item_emb".into(),
            ConvW(s) => sided(s, "conv_w"),
            ConvB(s) => sided(s, "conv_b"),
            WordQueryW(s) => sided(s, "word_query_w"),
            WordQueryB(s) => sided(s, "word_query_b"),
            WordHarmony(s) => sided(s, "word_harmony"),
            ReviewQueryW(s) => sided(s, "review_query_w"),
            ReviewQueryB(s) => sided(s, "review_query_b"),
            ReviewHarmony(s) => sided(s, "review_harmony"),
            FmBias => "fm.bias".into(),
            FmLinear => "fm.linear".into(),
            FmFactors => "fm.factors".into(),
        }
    }

    /// `(rows, cols)`; vectors are `(len, 1)`.
    pub fn shape(self, d: &Dims) -> (usize, usize) {
        use ParamId::*;
        match self {
            WordEmb => (d.vocab_size, d.word_dim),
            UserEmb => (d.num_users, d.id_dim),
            ItemEmb => (d.num_items, d.id_dim),
            ConvW(_) => (d.num_filters, d.window * d.word_dim),
            ConvB(_) => (d.num_filters, 1),
            WordQueryW(_) | ReviewQueryW(_) => (d.attention_dim, d.id_dim),
            WordQueryB(_) | ReviewQueryB(_) => (d.attention_dim, 1),
            WordHarmony(_) | ReviewHarmony(_) => (d.attention_dim, d.num_filters),
            FmBias => (1, 1),
            FmLinear => (d.fm_input_dim(), 1),
            FmFactors => (d.fm_input_dim(), d.fm_factors),
        }
    }

    /// Whether the tensor is a bias (excluded from L2).
    pub fn is_bias(self) -> bool {
        matches!(
            self,
            ParamId::ConvB(_) | ParamId::WordQueryB(_) | ParamId::ReviewQueryB(_) | ParamId::FmBias
        )
    }

    /// Whether the tensor takes part in the model under `ablation`. Query
    /// MLPs and harmony matrices at uniform sites are inactive, as is an ID
    /// embedding table when both of its side's sites are uniform.
    pub fn is_active(self, ablation: &AblationSpec) -> bool {
        use ParamId::*;
        match self {
            WordQueryW(s) | WordQueryB(s) | WordHarmony(s) => ablation.is_personalized(s, Level::Word),
            ReviewQueryW(s) | ReviewQueryB(s) | ReviewHarmony(s) => {
                ablation.is_personalized(s, Level::Review)
            }
            UserEmb => {
                ablation.is_personalized(Side::User, Level::Word)
                    || ablation.is_personalized(Side::User, Level::Review)
            }
            ItemEmb => {
                ablation.is_personalized(Side::Item, Level::Word)
                    || ablation.is_personalized(Side::Item, Level::Review)
            }
            _ => true,
        }
    }
}

impl ModelParams {
    /// All-zero parameters of the given shape.
    pub fn zeros(dims: Dims, activation: Activation) -> Self {
        let m = |id: ParamId| {
            let (r, c) = id.shape(&dims);
            Matrix::zeros(r, c)
        };
        let v = |id: ParamId| vec![0.0; id.shape(&dims).0];
        let tower = |s: Side| TowerParams {
            conv_w: m(ParamId::ConvW(s)),
            conv_b: v(ParamId::ConvB(s)),
            word_query_w: m(ParamId::WordQueryW(s)),
            word_query_b: v(ParamId::WordQueryB(s)),
            word_harmony: m(ParamId::WordHarmony(s)),
            review_query_w: m(ParamId::ReviewQueryW(s)),
            review_query_b: v(ParamId::ReviewQueryB(s)),
            review_harmony: m(ParamId::ReviewHarmony(s)),
        };
        ModelParams {
            dims,
            activation,
            word_emb: m(ParamId::WordEmb),
            user_emb: m(ParamId::UserEmb),
            item_emb: m(ParamId::ItemEmb),
            user_tower: tower(Side::User),
            item_tower: tower(Side::Item),
            fm: FmParams {
                bias: 0.0,
                linear: v(ParamId::FmLinear),
                factors: m(ParamId::FmFactors),
            },
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims, self.activation)
    }

    pub fn tower(&self, side: Side) -> &TowerParams {
        match side {
            Side::User => &self.user_tower,
            Side::Item => &self.item_tower,
        }
    }

    pub fn tower_mut(&mut self, side: Side) -> &mut TowerParams {
        match side {
            Side::User => &mut self.user_tower,
            Side::Item => &mut self.item_tower,
        }
    }

    pub fn id_emb(&self, side: Side) -> &Matrix {
        match side {
            Side::User => &self.user_emb,
            Side::Item => &self.item_emb,
        }
    }

    pub fn id_emb_mut(&mut self, side: Side) -> &mut Matrix {
        match side {
            Side::User => &mut self.user_emb,
            Side::Item => &mut self.item_emb,
        }
    }

    pub fn tensor(&self, id: ParamId) -> &[f64] {
        use ParamId::*;
        match id {
            WordEmb => self.word_emb.as_slice(),
            UserEmb => self.user_emb.as_slice(),
            ItemEmb => self.item_emb.as_slice(),
            ConvW(s) => self.tower(s).conv_w.as_slice(),
            ConvB(s) => &self.tower(s).conv_b,
            WordQueryW(s) => self.tower(s).word_query_w.as_slice(),
            WordQueryB(s) => &self.tower(s).word_query_b,
            WordHarmony(s) => self.tower(s).word_harmony.as_slice(),
            ReviewQueryW(s) => self.tower(s).review_query_w.as_slice(),
            ReviewQueryB(s) => &self.tower(s).review_query_b,
            ReviewHarmony(s) => self.tower(s).review_harmony.as_slice(),
            FmBias => std::slice::from_ref(&self.fm.bias),
            FmLinear => &self.fm.linear,
            FmFactors => self.fm.factors.as_slice(),
        }
    }

    pub fn tensor_mut(&mut self, id: ParamId) -> &mut [f64] {
        use ParamId::*;
        match id {
            WordEmb => self.word_emb.as_mut_slice(),
            UserEmb => self.user_emb.as_mut_slice(),
            ItemEmb => self.item_emb.as_mut_slice(),
            ConvW(s) => self.tower_mut(s).conv_w.as_mut_slice(),
            ConvB(s) => &mut self.tower_mut(s).conv_b,
            WordQueryW(s) => self.tower_mut(s).word_query_w.as_mut_slice(),
            WordQueryB(s) => &mut self.tower_mut(s).word_query_b,
            WordHarmony(s) => self.tower_mut(s).word_harmony.as_mut_slice(),
            ReviewQueryW(s) => self.tower_mut(s).review_query_w.as_mut_slice(),
            ReviewQueryB(s) => &mut self.tower_mut(s).review_query_b,
            ReviewHarmony(s) => self.tower_mut(s).review_harmony.as_mut_slice(),
            FmBias => std::slice::from_mut(&mut self.fm.bias),
            FmLinear => &mut self.fm.linear,
            FmFactors => self.fm.factors.as_mut_slice(),
        }
    }

    pub fn num_values(&self) -> usize {
        ParamId::ALL.iter().map(|&id| self.tensor(id).len()).sum()
    }

    /// First tensor holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<ParamId> {
        ParamId::ALL
            .into_iter()
            .find(|&id| self.tensor(id).iter().any(|x| !x.is_finite()))
    }

    /// Zeroes the `PAD` embedding row.
    pub fn pin_padding(&mut self) {
        self.word_emb.row_mut(PAD as usize).fill(0.0);
    }

    pub fn shape_matches(&self, other: &ModelParams) -> bool {
        self.dims == other.dims
    }
}

/// Seeded initialization. Weight matrices (and the FM linear weights) are
/// Glorot-uniform in `±sqrt(6 / (fan_in + fan_out))`; biases and the FM
/// global bias start at zero; embedding tables are uniform in `±0.1` with
/// the `PAD` row zeroed. Tensors are filled in [`ParamId::ALL`] order from a
/// single SeededRng stream.
pub fn init_params(dims: Dims, activation: Activation, seed: u64) -> Result<ModelParams> {
    dims.validate()?;
    let mut params = ModelParams::zeros(dims, activation);
    let mut rng = SeededRng::new(seed);
    for id in ParamId::ALL {
        if id.is_bias() {
            continue;
        }
        let limit = init_limit(id, &dims);
        for x in params.tensor_mut(id) {
            *x = rng.uniform(-limit, limit);
        }
    }
    params.pin_padding();
    Ok(params)
}

/// Half-width of the uniform initialization range for a non-bias tensor.
pub fn init_limit(id: ParamId, d: &Dims) -> f64 {
    let glorot = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();
    match id {
        ParamId::WordEmb | ParamId::UserEmb | ParamId::ItemEmb => 0.1,
        ParamId::ConvW(_) => glorot(d.window * d.word_dim, d.window * d.num_filters),
        ParamId::FmLinear => glorot(d.fm_input_dim(), 1),
        other => {
            let (rows, cols) = other.shape(d);
            glorot(cols, rows)
        }
    }
}
