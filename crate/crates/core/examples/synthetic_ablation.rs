//! Trains the full model and the no-attention variant on the synthetic
//! price/quality corpus and prints test MSE for each.
//!
//! `cargo run --release -p nrpa-core --example synthetic_ablation -- [seed] [key=value ...]`

use nrpa_core::data::{Dataset, SplitPart};
use nrpa_core::evaluation::{evaluate, make_synthetic_corpus, AblationSpec, EvalOptions};
use nrpa_core::training::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let mut config = TrainConfig::parse(include_str!("synthetic.conf"))?;
    config.seed = seed;
    for kv in args {
        let (k, v) = kv.split_once('=').ok_or("expected key=value")?;
        config.set(k, v)?;
    }
    let corpus = make_synthetic_corpus(seed, 200, 100);
    let dataset = Dataset::prepare(&corpus.records, seed, 1)?;
    let profiles = dataset.profiles(config.review_len, config.reviews_per_owner)?;
    for (name, spec) in [
        ("full", AblationSpec::FULL),
        ("no-attention", AblationSpec::NO_ATTENTION),
    ] {
        let cfg = TrainConfig {
            ablation: spec,
            ..config.clone()
        };
        let start = std::time::Instant::now();
        let out = train(&cfg, &dataset, &profiles)?;
        let opts = EvalOptions {
            ablation: spec,
            ..EvalOptions::default()
        };
        let test = evaluate(&out.params, &dataset, SplitPart::Test, &profiles, &opts)?;
        println!(
            "{name}: test_mse={test:.4} best_val={:.4} epochs={} best_epoch={} ({:.1}s)",
            out.best_val_mse,
            out.history.len(),
            out.best_epoch,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
