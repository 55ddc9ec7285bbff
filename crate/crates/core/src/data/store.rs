//! On-disk layout of a prepared dataset directory:
//!
//! * `vocab.tsv`: `token<TAB>id` per line
//! * `users.json`, `items.json`: JSON arrays of owner keys (index `k + 1`)
//! * `interactions.bin`: binary interaction table, see [`encode_interactions`]
//! * `split.txt`: seed and index lists

use std::fs;
use std::path::Path;

use super::{Dataset, DatasetSplit, Interaction, Vocabulary};
use crate::error::{NrpaError, Result};

pub const INTERACTIONS_MAGIC: &[u8; 4] = b"NRPD";
const INTERACTIONS_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 * 5;
const RECORD_LEN: usize = 4 + 4 + 8 + 8 + 4;

pub const VOCAB_FILE: &str = "vocab.tsv";
pub const USERS_FILE: &str = "users.json";
pub const ITEMS_FILE: &str = "items.json";
pub const INTERACTIONS_FILE: &str = "interactions.bin";
pub const SPLIT_FILE: &str = "split.txt";

/// Little-endian layout:
///
/// ```text
/// magic "NRPD" | version u32 | records u64 | users u64 | items u64 | vocab u64 | tokens u64
/// records × { user u32 | item u32 | rating f64 | token_start u64 | token_len u32 }
/// tokens × u32
/// ```
///
/// Token runs are contiguous and appear in record order.
pub fn encode_interactions(
    interactions: &[Interaction],
    num_users: usize,
    num_items: usize,
    vocab_size: usize,
) -> Vec<u8> {
    let n_tokens: usize = interactions.iter().map(|i| i.tokens.len()).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + interactions.len() * RECORD_LEN + n_tokens * 4);
    out.extend_from_slice(INTERACTIONS_MAGIC);
    out.extend_from_slice(&INTERACTIONS_VERSION.to_le_bytes());
    for v in [interactions.len(), num_users, num_items, vocab_size, n_tokens] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    let mut start = 0u64;
    for it in interactions {
        out.extend_from_slice(&it.user.to_le_bytes());
        out.extend_from_slice(&it.item.to_le_bytes());
        out.extend_from_slice(&it.rating.to_le_bytes());
        out.extend_from_slice(&start.to_le_bytes());
        out.extend_from_slice(&(it.tokens.len() as u32).to_le_bytes());
        start += it.tokens.len() as u64;
    }
    for it in interactions {
        for t in &it.tokens {
            out.extend_from_slice(&t.to_le_bytes());
        }
    }
    out
}

pub struct DecodedInteractions {
    pub interactions: Vec<Interaction>,
    pub num_users: usize,
    pub num_items: usize,
    pub vocab_size: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let mut a = [0u8; N];
        a.copy_from_slice(&self.bytes[self.pos..self.pos + N]);
        self.pos += N;
        a
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn decode_interactions(bytes: &[u8]) -> Result<DecodedInteractions> {
    let bad = |r: String| NrpaError::format("interactions file", r);
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != INTERACTIONS_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let mut c = Cursor { bytes, pos: 4 };
    let version = c.u32();
    if version != INTERACTIONS_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let n_records = c.u64();
    let num_users = c.u64();
    let num_items = c.u64();
    let vocab_size = c.u64();
    let n_tokens = c.u64();
    let expected = n_records
        .checked_mul(RECORD_LEN as u64)
        .and_then(|r| n_tokens.checked_mul(4).and_then(|t| r.checked_add(t)))
        .and_then(|b| b.checked_add(HEADER_LEN as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(bad(format!(
            "length {} does not match {n_records} records and {n_tokens} tokens",
            bytes.len()
        )));
    }
    let mut heads = Vec::with_capacity(n_records as usize);
    let mut next_start = 0u64;
    for k in 0..n_records {
        let user = c.u32();
        let item = c.u32();
        let rating = c.f64();
        let start = c.u64();
        let len = c.u32();
        if u64::from(user) >= num_users || u64::from(item) >= num_items {
            return Err(bad(format!("record {k}: owner index out of range")));
        }
        if !(1.0..=5.0).contains(&rating) {
            return Err(bad(format!("record {k}: rating {rating} outside [1, 5]")));
        }
        if start != next_start {
            return Err(bad(format!("record {k}: token run is not contiguous")));
        }
        next_start = start + u64::from(len);
        if next_start > n_tokens {
            return Err(bad(format!("record {k}: token run overflows the token table")));
        }
        heads.push((user, item, rating, len as usize));
    }
    if next_start != n_tokens {
        return Err(bad("token table has trailing entries".into()));
    }
    let mut interactions = Vec::with_capacity(heads.len());
    for (k, (user, item, rating, len)) in heads.into_iter().enumerate() {
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            let t = c.u32();
            if u64::from(t) >= vocab_size {
                return Err(bad(format!("record {k}: token id {t} outside vocabulary")));
            }
            tokens.push(t);
        }
        interactions.push(Interaction {
            user,
            item,
            rating,
            tokens,
        });
    }
    Ok(DecodedInteractions {
        interactions,
        num_users: num_users as usize,
        num_items: num_items as usize,
        vocab_size: vocab_size as usize,
    })
}

impl Dataset {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(VOCAB_FILE), self.vocab.to_tsv())?;
        fs::write(
            dir.join(USERS_FILE),
            serde_json::to_string(&self.user_keys).expect("string list serializes"),
        )?;
        fs::write(
            dir.join(ITEMS_FILE),
            serde_json::to_string(&self.item_keys).expect("string list serializes"),
        )?;
        fs::write(
            dir.join(INTERACTIONS_FILE),
            encode_interactions(
                &self.interactions,
                self.num_users(),
                self.num_items(),
                self.vocab.len(),
            ),
        )?;
        fs::write(dir.join(SPLIT_FILE), self.split.to_manifest())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            fs::read(dir.join(name))
                .map_err(|e| NrpaError::Input(format!("cannot read {}: {e}", dir.join(name).display())))
        };
        let utf8 = |name: &'static str, b: Vec<u8>| {
            String::from_utf8(b).map_err(|_| NrpaError::format(name, "not UTF-8"))
        };
        let vocab = Vocabulary::from_tsv(&utf8("vocabulary", read(VOCAB_FILE)?)?)?;
        let keys = |name: &'static str, b: Vec<u8>| -> Result<Vec<String>> {
            serde_json::from_slice(&b).map_err(|e| NrpaError::format(name, e.to_string()))
        };
        let user_keys = keys("user table", read(USERS_FILE)?)?;
        let item_keys = keys("item table", read(ITEMS_FILE)?)?;
        let decoded = decode_interactions(&read(INTERACTIONS_FILE)?)?;
        if decoded.num_users != user_keys.len() + 1
            || decoded.num_items != item_keys.len() + 1
            || decoded.vocab_size != vocab.len()
        {
            return Err(NrpaError::format(
                "interactions file",
                "header counts disagree with the key tables or vocabulary",
            ));
        }
        let split = DatasetSplit::from_manifest(
            &utf8("split manifest", read(SPLIT_FILE)?)?,
            decoded.interactions.len(),
        )?;
        let ds = Dataset {
            interactions: decoded.interactions,
            user_keys,
            item_keys,
            vocab,
            split,
        };
        ds.validate()?;
        Ok(ds)
    }
}

/// Files that make up a prepared dataset, in a fixed order.
pub const DATASET_FILES: [&str; 5] = [VOCAB_FILE, USERS_FILE, ITEMS_FILE, INTERACTIONS_FILE, SPLIT_FILE];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Vec<Interaction> {
        vec![
            Interaction {
                user: 1,
                item: 2,
                rating: 4.5,
                tokens: vec![2, 3, 4],
            },
            Interaction {
                user: 2,
                item: 1,
                rating: 1.0,
                tokens: vec![],
            },
            Interaction {
                user: 1,
                item: 1,
                rating: 5.0,
                tokens: vec![1],
            },
        ]
    }

    #[test]
    fn fixed_width_layout() {
        let bytes = encode_interactions(&sample(), 3, 3, 5);
        assert_eq!(bytes.len(), HEADER_LEN + 3 * RECORD_LEN + 4 * 4);
        assert_eq!(&bytes[..4], b"NRPD");
        let d = decode_interactions(&bytes).unwrap();
        assert_eq!(d.interactions, sample());
        assert_eq!((d.num_users, d.num_items, d.vocab_size), (3, 3, 5));
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode_interactions(&sample(), 3, 3, 5);
        assert!(decode_interactions(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_interactions(&encode_interactions(&sample(), 2, 3, 5)).is_err());
        assert!(decode_interactions(&encode_interactions(&sample(), 3, 3, 4)).is_err());
        let mut b = bytes.clone();
        b[0] = b'X';
        assert!(decode_interactions(&b).is_err());
        // Huge record count must fail on length, not allocate.
        let mut b = bytes.clone();
        b[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode_interactions(&b).is_err());
    }

    #[test]
    fn directory_round_trip() {
        let records: Vec<_> = (0..12)
            .map(|k| super::super::RawRecord {
                user: format!("user\t{}", k % 3),
                item: format!("item{}", k % 4),
                rating: 1.0 + (k % 5) as f64,
                text: "nice and cheap".into(),
            })
            .collect();
        let ds = Dataset::prepare(&records, 1, 1).unwrap();
        let dir = std::env::temp_dir().join(format!("nrpa-store-{}", std::process::id()));
        ds.save(&dir).unwrap();
        assert_eq!(Dataset::load(&dir).unwrap(), ds);
        fs::remove_dir_all(&dir).unwrap();
    }

    proptest! {
        #[test]
        fn round_trip(recs in prop::collection::vec((0u32..4, 0u32..4, 1.0f64..=5.0, prop::collection::vec(0u32..9, 0..6)), 0..20)) {
            let its: Vec<Interaction> = recs.into_iter().map(|(user, item, rating, tokens)| Interaction { user, item, rating, tokens }).collect();
            let d = decode_interactions(&encode_interactions(&its, 4, 4, 9)).unwrap();
            prop_assert_eq!(d.interactions, its);
        }
    }
}
