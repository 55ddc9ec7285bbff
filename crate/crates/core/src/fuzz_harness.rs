//! Entry points shared by the fuzz targets and the seed-corpus test. Each
//! accepts arbitrary bytes, must not panic, and checks that anything the
//! decoder accepts survives a re-encode.

use std::str;

use crate::data::PAD;
use crate::data::{
    decode_interactions, encode_interactions, parse_reviews, DatasetSplit, InputFormat, Vocabulary,
};
use crate::model::{load_word_vectors, AblationSpec, Checkpoint};
use crate::numeric::Matrix;
use crate::training::TrainConfig;

pub type Target = fn(&[u8]);

pub const TARGETS: [(&str, Target); 9] = [
    ("parse_amazon_json", parse_amazon_json),
    ("parse_csv", parse_csv),
    ("decode_checkpoint", decode_checkpoint),
    ("decode_interactions", decode_interactions_target),
    ("parse_vocabulary", parse_vocabulary),
    ("parse_split_manifest", parse_split_manifest),
    ("parse_config", parse_config),
    ("parse_ablation", parse_ablation),
    ("parse_word_vectors", parse_word_vectors),
];

pub fn parse_amazon_json(data: &[u8]) {
    let out = parse_reviews(data, InputFormat::AmazonJson).expect("in-memory reads cannot fail");
    for r in &out.records {
        assert!((1.0..=5.0).contains(&r.rating));
    }
}

pub fn parse_csv(data: &[u8]) {
    let out = parse_reviews(data, InputFormat::Csv).expect("in-memory reads cannot fail");
    for r in &out.records {
        assert!((1.0..=5.0).contains(&r.rating));
    }
}

pub fn decode_checkpoint(data: &[u8]) {
    if let Ok(ckpt) = Checkpoint::decode(data) {
        assert_eq!(ckpt.encode(), data);
    }
}

pub fn decode_interactions_target(data: &[u8]) {
    if let Ok(d) = decode_interactions(data) {
        assert_eq!(
            encode_interactions(&d.interactions, d.num_users, d.num_items, d.vocab_size),
            data
        );
    }
}

pub fn parse_vocabulary(data: &[u8]) {
    let Ok(text) = str::from_utf8(data) else { return };
    if let Ok(v) = Vocabulary::from_tsv(text) {
        let again = Vocabulary::from_tsv(&v.to_tsv()).expect("own output parses");
        assert_eq!(again.to_tsv(), v.to_tsv());
    }
}

/// The first two bytes give the expected record count.
pub fn parse_split_manifest(data: &[u8]) {
    if data.len() < 2 {
        return;
    }
    let total = u16::from_le_bytes([data[0], data[1]]) as usize;
    let Ok(text) = str::from_utf8(&data[2..]) else {
        return;
    };
    if let Ok(split) = DatasetSplit::from_manifest(text, total) {
        let again = DatasetSplit::from_manifest(&split.to_manifest(), total).expect("own output parses");
        assert_eq!(again, split);
    }
}

pub fn parse_config(data: &[u8]) {
    let Ok(text) = str::from_utf8(data) else { return };
    if let Ok(c) = TrainConfig::parse(text) {
        assert_eq!(TrainConfig::parse(&c.to_text()).expect("own output parses"), c);
    }
}

pub fn parse_ablation(data: &[u8]) {
    let Ok(text) = str::from_utf8(data) else { return };
    if let Ok(spec) = AblationSpec::parse(text) {
        assert_eq!(
            AblationSpec::parse(&spec.to_string()).expect("own output parses"),
            spec
        );
    }
}

/// Loads into a three-column embedding over a fixed small vocabulary.
pub fn parse_word_vectors(data: &[u8]) {
    let vocab = Vocabulary::build([["good", "bad", "tasty", "good"]], 1);
    let mut emb = Matrix::zeros(vocab.len(), 3);
    emb.fill(0.5);
    emb.row_mut(PAD as usize).fill(0.0);
    let before = emb.clone();
    match load_word_vectors(&mut emb, &vocab, data) {
        Ok(n) => {
            assert!(n < vocab.len());
            assert!(emb.is_finite());
            assert!(emb.row(PAD as usize).iter().all(|&x| x == 0.0));
        }
        Err(_) => assert_eq!(emb, before),
    }
}
