//! Regenerates the checked-in fuzz seed corpora under `fuzz/corpus/`.
//!
//! `cargo run -p nrpa-core --example fuzz_seeds`

use std::fs;
use std::path::Path;

use nrpa_core::data::{encode_interactions, split_dataset, tokenize, Vocabulary};
use nrpa_core::fixtures::{random_interactions, random_params, toy_dims};
use nrpa_core::model::Checkpoint;
use nrpa_core::numeric::Activation;
use nrpa_core::training::TrainConfig;

fn main() -> std::io::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let put = |target: &str, name: &str, bytes: &[u8]| -> std::io::Result<()> {
        let dir = root.join(target);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join(name), bytes)
    };

    put(
        "parse_amazon_json",
        "valid",
        br#"{"reviewerID":"A1","asin":"B7","overall":4.0,"reviewText":"Great tea, a bit pricey."}
{"reviewerID":"A2","asin":"B7","overall":2,"reviewText":""}
"#,
    )?;
    put(
        "parse_amazon_json",
        "no_text",
        br#"{"reviewerID":"A3","asin":"B9","overall":5.0}"#,
    )?;
    put(
        "parse_amazon_json",
        "mixed",
        b"{\"reviewerID\":\"A1\",\"asin\":\"B1\",\"overall\":9.0}\n\nnot json\n{\"asin\":\"B2\"}\n\xff\xfe\n",
    )?;

    put(
        "parse_csv",
        "valid",
        b"u1,i1,5,\"good, cheap and fresh\"\nu2,i1,3.5,okay\n",
    )?;
    put(
        "parse_csv",
        "broken",
        b"u1,i1\nu1,i1,0,too low\nu2,i2,x,bad\n\"open quote,i3,4,t\n\xc3\x28,i4,4,t\n",
    )?;

    let dims = toy_dims();
    let params = random_params(dims, Activation::Tanh, 3, 1.0);
    let ckpt = Checkpoint::new(params, TrainConfig::default().to_text()).encode();
    put("decode_checkpoint", "toy", &ckpt)?;
    put("decode_checkpoint", "truncated", &ckpt[..ckpt.len() / 2])?;
    put("decode_checkpoint", "header_only", &ckpt[..100])?;

    let data = random_interactions(&dims, 6, 4);
    let bin = encode_interactions(&data, dims.num_users, dims.num_items, dims.vocab_size);
    put("decode_interactions", "six", &bin)?;
    put("decode_interactions", "empty", &encode_interactions(&[], 1, 1, 2))?;
    put("decode_interactions", "truncated", &bin[..bin.len() - 3])?;

    let docs: Vec<Vec<String>> = ["The tea is great", "great price, low quality", "tea tea tea"]
        .iter()
        .map(|d| tokenize(d))
        .collect();
    let vocab = Vocabulary::build(docs.iter().map(|d| d.iter().map(String::as_str)), 1);
    put("parse_vocabulary", "small", vocab.to_tsv().as_bytes())?;
    put("parse_vocabulary", "bad_order", b"<pad>\t0\n<unk>\t1\ntea\t3\n")?;

    let mut manifest = 12u16.to_le_bytes().to_vec();
    manifest.extend_from_slice(
        split_dataset(12, 3)
            .expect("12 records split")
            .to_manifest()
            .as_bytes(),
    );
    put("parse_split_manifest", "twelve", &manifest)?;
    let mut overlap = 3u16.to_le_bytes().to_vec();
    overlap.extend_from_slice(b"seed=1\ntrain=0,1\nvalidation=1\ntest=2\n");
    put("parse_split_manifest", "overlap", &overlap)?;

    put(
        "parse_config",
        "defaults",
        TrainConfig::default().to_text().as_bytes(),
    )?;
    put("parse_config", "synthetic", include_bytes!("synthetic.conf"))?;
    put("parse_config", "typo", b"learning_rat = 0.1\nwindow = 4\n")?;

    put("parse_ablation", "full", b"")?;
    put("parse_ablation", "no_attention", b"word=uniform,review=uniform")?;
    put("parse_ablation", "mixed", b"user=uniform, item=personalized")?;
    put("parse_ablation", "bad", b"word=off,,review")?;

    put(
        "parse_word_vectors",
        "glove",
        b"good 0.1 -0.2 3e-1\nbad 1 2 3\nmissing 0 0 0\n",
    )?;
    put(
        "parse_word_vectors",
        "header",
        b"2 3\n<pad> 1 1 1\ntasty 0.5 0.5 0.5\n",
    )?;
    put("parse_word_vectors", "short_row", b"good 0.1 -0.2\n")?;
    put("parse_word_vectors", "non_finite", b"good inf 0 0\n")?;
    Ok(())
}
