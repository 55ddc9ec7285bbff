//! Small deterministic models and corpora for tests, benchmarks and fuzzing.

use crate::data::{build_profiles, Example, Interaction, Profiles};
use crate::model::{init_params, Dims, ModelParams, ParamId};
use crate::numeric::Activation;
use crate::rng::SeededRng;

/// |V|=20, |U|=|I|=3, d_w=5, d_id=4, K=6, d_a=6, window 3, k_fm=2, T=7, N=3.
pub fn toy_dims() -> Dims {
    Dims {
        vocab_size: 20,
        num_users: 3,
        num_items: 3,
        word_dim: 5,
        id_dim: 4,
        num_filters: 6,
        attention_dim: 6,
        window: 3,
        fm_factors: 2,
        review_len: 7,
        reviews_per_owner: 3,
    }
}

/// Seeded parameters with every bias and the FM bias moved off zero, and
/// weights scaled by `gain`, so attention weights are far from uniform and
/// no ReLU sits exactly on its kink.
pub fn random_params(dims: Dims, activation: Activation, seed: u64, gain: f64) -> ModelParams {
    let mut p = init_params(dims, activation, seed).expect("valid dims");
    let mut rng = SeededRng::new(seed ^ 0xB1A5);
    for id in ParamId::ALL {
        let bias = id.is_bias();
        for x in p.tensor_mut(id) {
            if bias {
                *x = rng.uniform(-0.5, 0.5);
            } else {
                *x *= gain;
            }
        }
    }
    p.pin_padding();
    p
}

/// Random interactions over users/items `1..` (index 0 stays unseen), with
/// review lengths from empty to longer than `review_len`.
pub fn random_interactions(dims: &Dims, count: usize, seed: u64) -> Vec<Interaction> {
    let mut rng = SeededRng::new(seed);
    (0..count)
        .map(|_| {
            let len = rng.below(dims.review_len + 3);
            Interaction {
                user: 1 + rng.below(dims.num_users - 1) as u32,
                item: 1 + rng.below(dims.num_items - 1) as u32,
                rating: 1.0 + 4.0 * rng.next_f64(),
                tokens: (0..len)
                    .map(|_| 1 + rng.below(dims.vocab_size - 1) as u32)
                    .collect(),
            }
        })
        .collect()
}

pub fn profiles_for(dims: &Dims, interactions: &[Interaction]) -> Profiles {
    let all: Vec<usize> = (0..interactions.len()).collect();
    build_profiles(
        interactions,
        &all,
        dims.num_users,
        dims.num_items,
        dims.review_len,
        dims.reviews_per_owner,
    )
    .expect("valid profile dims")
}

pub fn examples_of(interactions: &[Interaction]) -> Vec<Example> {
    interactions.iter().map(Example::from).collect()
}
