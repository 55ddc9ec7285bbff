//! Corpus ingestion, vocabulary, splitting and profile assembly.

mod parse;
mod profile;
mod split;
mod store;
mod vocab;

use std::collections::HashMap;

pub use parse::{parse_reviews, InputFormat, ParseOutcome, RawRecord};
pub use profile::{build_profiles, Profile, ProfileBook, Profiles, Side};
pub use split::{split_dataset, DatasetSplit, SplitPart};
pub use store::{
    decode_interactions, encode_interactions, DecodedInteractions, DATASET_FILES, INTERACTIONS_MAGIC,
};
pub use vocab::{tokenize, Vocabulary, PAD, PAD_TOKEN, UNK, UNK_TOKEN};

use crate::error::{NrpaError, Result};

/// Reserved index for users and items that are unknown to the dataset.
pub const UNKNOWN_OWNER: u32 = 0;

/// One rated, tokenized review.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub user: u32,
    pub item: u32,
    pub rating: f64,
    pub tokens: Vec<u32>,
}

/// The `(user, item, rating)` triple a model is trained or scored on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example {
    pub user: u32,
    pub item: u32,
    pub rating: f64,
}

impl From<&Interaction> for Example {
    fn from(it: &Interaction) -> Self {
        Example {
            user: it.user,
            item: it.item,
            rating: it.rating,
        }
    }
}

/// A prepared corpus: indexed interactions, key tables, train-only
/// vocabulary and the split.
///
/// User and item index 0 is reserved for unknown owners, so real keys start
/// at 1 and `user_keys[k]` names index `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub interactions: Vec<Interaction>,
    pub user_keys: Vec<String>,
    pub item_keys: Vec<String>,
    pub vocab: Vocabulary,
    pub split: DatasetSplit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
    /// Percentage of the user × item matrix that is observed.
    pub density_percent: f64,
}

fn index_keys<'a>(keys: impl Iterator<Item = &'a str>) -> (Vec<String>, HashMap<&'a str, u32>) {
    let mut table = Vec::new();
    let mut lookup = HashMap::new();
    for k in keys {
        lookup.entry(k).or_insert_with(|| {
            table.push(k.to_owned());
            table.len() as u32
        });
    }
    (table, lookup)
}

impl Dataset {
    /// Indexes owners by first appearance, splits with `seed`, builds the
    /// vocabulary from training reviews only and encodes every review.
    pub fn prepare(records: &[RawRecord], seed: u64, min_count: usize) -> Result<Self> {
        let split = split_dataset(records.len(), seed)?;
        let (user_keys, user_ix) = index_keys(records.iter().map(|r| r.user.as_str()));
        let (item_keys, item_ix) = index_keys(records.iter().map(|r| r.item.as_str()));
        let texts: Vec<Vec<String>> = records.iter().map(|r| tokenize(&r.text)).collect();
        let vocab = Vocabulary::build(
            split.train.iter().map(|&i| texts[i].iter().map(String::as_str)),
            min_count,
        );
        let interactions = records
            .iter()
            .zip(&texts)
            .map(|(r, toks)| Interaction {
                user: user_ix[r.user.as_str()],
                item: item_ix[r.item.as_str()],
                rating: r.rating,
                tokens: vocab.encode(toks),
            })
            .collect();
        Ok(Dataset {
            interactions,
            user_keys,
            item_keys,
            vocab,
            split,
        })
    }

    /// Number of user rows including the reserved unknown index.
    pub fn num_users(&self) -> usize {
        self.user_keys.len() + 1
    }

    pub fn num_items(&self) -> usize {
        self.item_keys.len() + 1
    }

    pub fn user_index(&self, key: &str) -> Option<u32> {
        self.user_keys.iter().position(|k| k == key).map(|p| p as u32 + 1)
    }

    pub fn item_index(&self, key: &str) -> Option<u32> {
        self.item_keys.iter().position(|k| k == key).map(|p| p as u32 + 1)
    }

    pub fn user_key(&self, index: u32) -> Option<&str> {
        index
            .checked_sub(1)
            .and_then(|i| self.user_keys.get(i as usize))
            .map(String::as_str)
    }

    pub fn item_key(&self, index: u32) -> Option<&str> {
        index
            .checked_sub(1)
            .and_then(|i| self.item_keys.get(i as usize))
            .map(String::as_str)
    }

    pub fn examples(&self, part: SplitPart) -> Vec<Example> {
        self.split
            .part(part)
            .iter()
            .map(|&i| Example::from(&self.interactions[i]))
            .collect()
    }

    pub fn profiles(&self, review_len: usize, reviews_per_owner: usize) -> Result<Profiles> {
        build_profiles(
            &self.interactions,
            &self.split.train,
            self.num_users(),
            self.num_items(),
            review_len,
            reviews_per_owner,
        )
    }

    /// Mean training rating.
    pub fn train_mean(&self) -> f64 {
        let train = &self.split.train;
        train.iter().map(|&i| self.interactions[i].rating).sum::<f64>() / train.len() as f64
    }

    pub fn stats(&self) -> DatasetStats {
        let (users, items, ratings) = (
            self.user_keys.len(),
            self.item_keys.len(),
            self.interactions.len(),
        );
        let density_percent = if users == 0 || items == 0 {
            0.0
        } else {
            100.0 * ratings as f64 / (users as f64 * items as f64)
        };
        DatasetStats {
            users,
            items,
            ratings,
            density_percent,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for (k, it) in self.interactions.iter().enumerate() {
            if it.user as usize >= self.num_users() || it.item as usize >= self.num_items() {
                return Err(NrpaError::Input(format!(
                    "interaction {k} references an unknown owner"
                )));
            }
            if it.tokens.iter().any(|&t| t as usize >= self.vocab.len()) {
                return Err(NrpaError::Input(format!(
                    "interaction {k} has a token outside the vocabulary"
                )));
            }
        }
        Ok(())
    }
}
