//! Fixed-shape review stacks for users and items.

use super::{Interaction, PAD};
use crate::error::{NrpaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    User,
    Item,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::User => "user",
            Side::Item => "item",
        }
    }
}

/// `N × T` grid of token ids for one owner, with masks marking real cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub owner: u32,
    pub reviews_per_owner: usize,
    pub review_len: usize,
    /// Row-major `N × T`; masked cells hold `PAD`.
    pub tokens: Vec<u32>,
    pub review_mask: Vec<bool>,
    pub token_mask: Vec<bool>,
    /// Counterpart (item for a user profile, user for an item profile) of
    /// each real row.
    pub counterparts: Vec<Option<u32>>,
}

impl Profile {
    pub fn empty(owner: u32, reviews_per_owner: usize, review_len: usize) -> Self {
        Self {
            owner,
            reviews_per_owner,
            review_len,
            tokens: vec![PAD; reviews_per_owner * review_len],
            review_mask: vec![false; reviews_per_owner],
            token_mask: vec![false; reviews_per_owner * review_len],
            counterparts: vec![None; reviews_per_owner],
        }
    }

    pub fn review(&self, n: usize) -> &[u32] {
        &self.tokens[n * self.review_len..(n + 1) * self.review_len]
    }

    pub fn review_token_mask(&self, n: usize) -> &[bool] {
        &self.token_mask[n * self.review_len..(n + 1) * self.review_len]
    }

    pub fn real_reviews(&self) -> usize {
        self.review_mask.iter().filter(|&&m| m).count()
    }

    /// Reorders rows; used by permutation tests.
    pub fn permuted(&self, order: &[usize]) -> Profile {
        let mut out = Profile::empty(self.owner, self.reviews_per_owner, self.review_len);
        for (dst, &src) in order.iter().enumerate() {
            let t = self.review_len;
            out.tokens[dst * t..(dst + 1) * t].copy_from_slice(self.review(src));
            out.token_mask[dst * t..(dst + 1) * t].copy_from_slice(self.review_token_mask(src));
            out.review_mask[dst] = self.review_mask[src];
            out.counterparts[dst] = self.counterparts[src];
        }
        out
    }
}

/// Training reviews for every owner on one side, in corpus order.
#[derive(Debug, Clone)]
pub struct ProfileBook {
    side: Side,
    reviews_per_owner: usize,
    review_len: usize,
    // Up to N + 1 entries per owner so that excluding one still leaves N.
    entries: Vec<Vec<(u32, Vec<u32>)>>,
}

impl ProfileBook {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn num_owners(&self) -> usize {
        self.entries.len()
    }

    pub fn reviews_per_owner(&self) -> usize {
        self.reviews_per_owner
    }

    pub fn review_len(&self) -> usize {
        self.review_len
    }

    /// Profile of `owner`, optionally leaving out the review written against
    /// `exclude` (the counterpart). Owners without training reviews, and ids
    /// outside the table, get an all-padding profile.
    pub fn profile(&self, owner: u32, exclude: Option<u32>) -> Profile {
        let (n_max, t_max) = (self.reviews_per_owner, self.review_len);
        let mut p = Profile::empty(owner, n_max, t_max);
        let Some(list) = self.entries.get(owner as usize) else {
            return p;
        };
        let kept = list
            .iter()
            .filter(|(other, _)| Some(*other) != exclude)
            .take(n_max);
        for (row, (other, toks)) in kept.enumerate() {
            p.review_mask[row] = true;
            p.counterparts[row] = Some(*other);
            for (k, &tok) in toks.iter().enumerate() {
                p.tokens[row * t_max + k] = tok;
                p.token_mask[row * t_max + k] = true;
            }
        }
        p
    }
}

#[derive(Debug, Clone)]
pub struct Profiles {
    pub users: ProfileBook,
    pub items: ProfileBook,
}

impl Profiles {
    pub fn book(&self, side: Side) -> &ProfileBook {
        match side {
            Side::User => &self.users,
            Side::Item => &self.items,
        }
    }

    /// The user and item profiles used to score `(user, item)`.
    pub fn pair(&self, user: u32, item: u32, exclude_target: bool) -> (Profile, Profile) {
        let (ex_u, ex_i) = if exclude_target {
            (Some(item), Some(user))
        } else {
            (None, None)
        };
        (self.users.profile(user, ex_u), self.items.profile(item, ex_i))
    }
}

/// Collects up to `reviews_per_owner` training reviews per user and per item,
/// each truncated to `review_len` tokens. `train` holds indices into
/// `interactions`; rows are taken in ascending index (corpus) order.
pub fn build_profiles(
    interactions: &[Interaction],
    train: &[usize],
    num_users: usize,
    num_items: usize,
    review_len: usize,
    reviews_per_owner: usize,
) -> Result<Profiles> {
    if review_len == 0 || reviews_per_owner == 0 {
        return Err(NrpaError::Config(
            "review length and reviews per owner must be at least 1".into(),
        ));
    }
    let mut order = train.to_vec();
    order.sort_unstable();
    let mut users = vec![Vec::new(); num_users];
    let mut items = vec![Vec::new(); num_items];
    for idx in order {
        let it = interactions
            .get(idx)
            .ok_or_else(|| NrpaError::Input(format!("train index {idx} out of range")))?;
        let (u, i) = (it.user as usize, it.item as usize);
        if u >= num_users || i >= num_items {
            return Err(NrpaError::Input(format!(
                "interaction {idx} references user {u} / item {i} beyond {num_users} / {num_items}"
            )));
        }
        let toks: Vec<u32> = it.tokens.iter().copied().take(review_len).collect();
        if users[u].len() <= reviews_per_owner {
            users[u].push((it.item, toks.clone()));
        }
        if items[i].len() <= reviews_per_owner {
            items[i].push((it.user, toks));
        }
    }
    let book = |side, entries| ProfileBook {
        side,
        reviews_per_owner,
        review_len,
        entries,
    };
    Ok(Profiles {
        users: book(Side::User, users),
        items: book(Side::Item, items),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inter(user: u32, item: u32, tokens: Vec<u32>) -> Interaction {
        Interaction {
            user,
            item,
            rating: 3.0,
            tokens,
        }
    }

    #[test]
    fn padding_and_truncation() {
        let data = vec![
            inter(1, 1, vec![2, 3]),
            inter(1, 2, (2..12).collect()),
            inter(2, 1, vec![4]),
        ];
        let p = build_profiles(&data, &[0, 1, 2], 3, 3, 4, 3).unwrap();
        let up = p.users.profile(1, None);
        assert_eq!(up.review_mask, vec![true, true, false]);
        assert_eq!(up.review(0), &[2, 3, PAD, PAD]);
        assert_eq!(up.review_token_mask(0), &[true, true, false, false]);
        assert_eq!(up.review(1), &[2, 3, 4, 5]);
        assert_eq!(up.review(2), &[PAD; 4]);
        assert_eq!(up.review_token_mask(2), &[false; 4]);
    }

    #[test]
    fn shapes_are_fixed() {
        let data: Vec<Interaction> = (0..10).map(|k| inter(1, k % 3, vec![2; k as usize])).collect();
        let idx: Vec<usize> = (0..10).collect();
        let p = build_profiles(&data, &idx, 3, 3, 5, 4).unwrap();
        for owner in 0..5 {
            let prof = p.users.profile(owner, None);
            assert_eq!(prof.tokens.len(), 20);
            assert_eq!(prof.token_mask.len(), 20);
            assert_eq!(prof.review_mask.len(), 4);
        }
        assert_eq!(p.users.profile(1, None).real_reviews(), 4);
        assert_eq!(p.users.profile(0, None).real_reviews(), 0);
        assert_eq!(p.users.profile(99, None).real_reviews(), 0);
    }

    #[test]
    fn corpus_order_ignores_split_order() {
        let data = vec![inter(1, 1, vec![2]), inter(1, 2, vec![3]), inter(1, 0, vec![4])];
        let p = build_profiles(&data, &[2, 0, 1], 2, 3, 1, 2).unwrap();
        let prof = p.users.profile(1, None);
        assert_eq!(prof.tokens, vec![2, 3]);
    }

    #[test]
    fn exclude_target_drops_exactly_that_review() {
        let data = vec![
            inter(1, 1, vec![2]),
            inter(1, 2, vec![3]),
            inter(1, 3, vec![4]),
            inter(2, 2, vec![5]),
        ];
        let p = build_profiles(&data, &[0, 1, 2, 3], 3, 4, 1, 3).unwrap();
        let (up, ip) = p.pair(1, 2, true);
        assert_eq!(up.real_reviews(), 2);
        assert_eq!(up.counterparts, vec![Some(1), Some(3), None]);
        assert_eq!(&up.tokens[..2], &[2, 4]);
        assert_eq!(ip.counterparts, vec![Some(2), None, None]);
        let (up, ip) = p.pair(1, 2, false);
        assert_eq!(up.real_reviews(), 3);
        assert_eq!(ip.real_reviews(), 2);
    }

    #[test]
    fn exclusion_backfills_from_overflow() {
        let data: Vec<Interaction> = (0..3).map(|k| inter(0, k, vec![k + 2])).collect();
        let p = build_profiles(&data, &[0, 1, 2], 1, 3, 1, 2).unwrap();
        assert_eq!(p.users.profile(0, None).tokens, vec![2, 3]);
        assert_eq!(p.users.profile(0, Some(0)).tokens, vec![3, 4]);
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(build_profiles(&[], &[], 1, 1, 0, 1).is_err());
        assert!(build_profiles(&[], &[], 1, 1, 1, 0).is_err());
    }
}
