//! A corpus where the same review text means different things to different
//! users.
//!
//! Items have a price score and a quality score in `{0, 1}`; a review states
//! both as `price high|low` and `quality high|low` phrases among filler
//! words. Each user weighs the two aspects with `w_p + w_q = 1` and rates
//! `1 + 4 (w_p s_p + w_q s_q) + noise`, clipped to `[1, 5]`.
//!
//! The review text is a fixed function of the item's two aspect levels
//! (four texts in total, drawn once per corpus). Per-review variation would
//! let a model fingerprint users from the filler words in their profile;
//! with fixed texts a profile reveals only how many items of each kind the
//! user reviewed, so user preferences are recoverable only through
//! ID-conditioned attention.

use crate::data::RawRecord;
use crate::rng::SeededRng;

pub const FILLER_WORDS: [&str; 10] = [
    "the", "this", "it", "is", "camera", "item", "and", "very", "use", "easy",
];

pub const NOISE_STD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<RawRecord>,
    /// `w_p` per user, indexed like the `u{k}` keys.
    pub price_weight: Vec<f64>,
    /// `(s_p, s_q)` per item, indexed like the `i{k}` keys.
    pub item_scores: Vec<(f64, f64)>,
}

impl SyntheticCorpus {
    /// Noise-free rating of user `u` for item `i`.
    pub fn expected_rating(&self, user: usize, item: usize) -> f64 {
        let w = self.price_weight[user];
        let (sp, sq) = self.item_scores[item];
        1.0 + 4.0 * (w * sp + (1.0 - w) * sq)
    }
}

fn level(score: f64) -> &'static str {
    if score >= 0.5 {
        "high"
    } else {
        "low"
    }
}

/// One text per `(s_p, s_q)` combination, indexed `2 s_p + s_q`: both
/// aspect phrases in random order, with up to two filler words around each.
fn aspect_texts(rng: &mut SeededRng) -> Vec<String> {
    let mut texts = Vec::with_capacity(4);
    for sp in [0.0, 1.0] {
        for sq in [0.0, 1.0] {
            let mut phrases = [["price", level(sp)], ["quality", level(sq)]];
            if rng.below(2) == 1 {
                phrases.swap(0, 1);
            }
            let mut words: Vec<&str> = Vec::new();
            for phrase in phrases {
                for _ in 0..rng.below(3) {
                    words.push(FILLER_WORDS[rng.below(FILLER_WORDS.len())]);
                }
                words.extend_from_slice(&phrase);
            }
            for _ in 0..rng.below(3) {
                words.push(FILLER_WORDS[rng.below(FILLER_WORDS.len())]);
            }
            texts.push(words.join(" "));
        }
    }
    texts
}

/// Each user reviews `max(2, n_items / 4)` distinct items. Deterministic in
/// `seed`.
pub fn make_synthetic_corpus(seed: u64, n_users: usize, n_items: usize) -> SyntheticCorpus {
    let mut rng = SeededRng::new(seed);
    let price_weight: Vec<f64> = (0..n_users).map(|_| rng.next_f64()).collect();
    let item_scores: Vec<(f64, f64)> = (0..n_items)
        .map(|_| ((rng.below(2)) as f64, (rng.below(2)) as f64))
        .collect();
    let texts = aspect_texts(&mut rng);
    let per_user = (n_items / 4).max(2).min(n_items);
    let mut records = Vec::with_capacity(n_users * per_user);
    let mut pool: Vec<usize> = (0..n_items).collect();
    for u in 0..n_users {
        rng.shuffle(&mut pool);
        for &i in &pool[..per_user] {
            let (sp, sq) = item_scores[i];
            let w = price_weight[u];
            let clean = 1.0 + 4.0 * (w * sp + (1.0 - w) * sq);
            let rating = (clean + NOISE_STD * rng.normal()).clamp(1.0, 5.0);
            records.push(RawRecord {
                user: format!("u{u}"),
                item: format!("i{i}"),
                rating,
                text: texts[2 * sp as usize + sq as usize].clone(),
            });
        }
    }
    SyntheticCorpus {
        records,
        price_weight,
        item_scores,
    }
}
