use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use nrpa_core::data::{parse_reviews, Dataset, InputFormat, Profiles, SplitPart};
use nrpa_core::evaluation::{
    ablation_csv, evaluate, run_ablation_suite, sweep_csv, sweep_id_dim, trace_jsonl, trace_record,
    EvalOptions,
};
use nrpa_core::model::{init_params, load_word_vectors, AblationSpec, Checkpoint, Dims};
use nrpa_core::training::{history_csv, train_from, TrainConfig};

use crate::manifest::{dataset_fingerprint, unix_now, RunManifest};
use crate::{CliError, CliResult};

pub const CHECKPOINT_FILE: &str = "model.nrpa";
pub const HISTORY_FILE: &str = "history.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn load_config(path: &Path) -> CliResult<TrainConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
    Ok(TrainConfig::parse(&text)?)
}

/// Thousands separators for the statistics table.
fn grouped(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

pub fn prepare(input: &Path, format: &str, out: &Path, seed: u64, min_count: usize) -> CliResult {
    let format = InputFormat::parse(format)?;
    let file =
        File::open(input).map_err(|e| CliError::input(format!("cannot read {}: {e}", input.display())))?;
    let parsed = parse_reviews(BufReader::new(file), format)?;
    if parsed.skipped > 0 {
        eprintln!("skipped {} malformed lines", parsed.skipped);
    }
    let dataset = Dataset::prepare(&parsed.records, seed, min_count)?;
    dataset.save(out)?;
    let stats = dataset.stats();
    let name = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let width = name.len().max(7);
    println!(
        "{:<width$}  {:>10}  {:>10}  {:>10}  {:>9}",
        "Dataset", "#users", "#items", "#ratings", "density"
    );
    println!(
        "{:<width$}  {:>10}  {:>10}  {:>10}  {:>8.3}%",
        name,
        grouped(stats.users),
        grouped(stats.items),
        grouped(stats.ratings),
        stats.density_percent
    );
    println!(
        "split: train={} validation={} test={}",
        dataset.split.train.len(),
        dataset.split.validation.len(),
        dataset.split.test.len()
    );
    Ok(())
}

pub fn train(data: &Path, config: &Path, out: &Path, word_vectors: Option<&Path>) -> CliResult {
    let config = load_config(config)?;
    let started = unix_now();
    let dataset = Dataset::load(data)?;
    let fingerprint = dataset_fingerprint(data)?;
    let profiles = dataset.profiles(config.review_len, config.reviews_per_owner)?;
    config.validate()?;
    let dims = config.dims(dataset.vocab.len(), dataset.num_users(), dataset.num_items());
    let mut params = init_params(dims, config.activation, config.seed)?;
    let mut pretrained = None;
    if let Some(path) = word_vectors {
        let file =
            File::open(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        let n = load_word_vectors(&mut params.word_emb, &dataset.vocab, BufReader::new(file))?;
        eprintln!(
            "word vectors: {n} of {} vocabulary rows initialized",
            dataset.vocab.len()
        );
        pretrained = Some((path.to_path_buf(), n));
    }
    let outcome = train_from(
        &config,
        params,
        &dataset.examples(SplitPart::Train),
        &dataset.examples(SplitPart::Validation),
        &profiles,
    )?;

    let checkpoint = out.join(CHECKPOINT_FILE);
    let history = out.join(HISTORY_FILE);
    let ckpt = Checkpoint::new(outcome.params, config.to_text());
    write(&checkpoint, ckpt.encode())?;
    write(&history, history_csv(&outcome.history))?;
    let manifest = RunManifest {
        config,
        dataset: data.to_path_buf(),
        dataset_sha256: fingerprint,
        checkpoint: checkpoint.clone(),
        history: history.clone(),
        started_unix: started,
        finished_unix: unix_now(),
        epochs_run: outcome.history.len(),
        best_epoch: outcome.best_epoch,
        best_val_mse: outcome.best_val_mse,
        word_vectors: pretrained,
    };
    write(&out.join(MANIFEST_FILE), manifest.to_text())?;
    println!(
        "epochs={} best_epoch={} best_val_mse={}",
        outcome.history.len(),
        outcome.best_epoch,
        outcome.best_val_mse
    );
    println!("checkpoint={}", checkpoint.display());
    Ok(())
}

/// Checkpoint plus the dataset it is scored against, checked for agreement.
struct Loaded {
    checkpoint: Checkpoint,
    config: TrainConfig,
    dataset: Dataset,
    profiles: Profiles,
}

fn dims_tuple(vocab: usize, users: usize, items: usize) -> String {
    format!("(vocab={vocab}, users={users}, items={items})")
}

fn load_pair(checkpoint: &Path, data: &Path) -> CliResult<Loaded> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let dataset = Dataset::load(data)?;
    let d: &Dims = &ckpt.params.dims;
    let expected = (dataset.vocab.len(), dataset.num_users(), dataset.num_items());
    if (d.vocab_size, d.num_users, d.num_items) != expected {
        return Err(CliError::input(format!(
            "checkpoint dims {} do not match dataset dims {}",
            dims_tuple(d.vocab_size, d.num_users, d.num_items),
            dims_tuple(expected.0, expected.1, expected.2)
        )));
    }
    let config = TrainConfig::parse(&ckpt.metadata)
        .map_err(|e| CliError::input(format!("checkpoint metadata: {e}")))?;
    let profiles = dataset.profiles(d.review_len, d.reviews_per_owner)?;
    Ok(Loaded {
        checkpoint: ckpt,
        config,
        dataset,
        profiles,
    })
}

pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub data: PathBuf,
    pub split: String,
    pub ablation: Option<String>,
    pub clip: bool,
    pub threads: usize,
    pub trace: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
}

pub fn eval(args: &EvalArgs) -> CliResult {
    let part = match SplitPart::parse(&args.split) {
        Some(SplitPart::Train) | None => {
            return Err(CliError::input(format!(
                "--split must be val or test, got {:?}",
                args.split
            )))
        }
        Some(p) => p,
    };
    if args.threads == 0 {
        return Err(CliError::input("--threads must be at least 1"));
    }
    let loaded = load_pair(&args.checkpoint, &args.data)?;
    let ablation = match &args.ablation {
        Some(spec) => AblationSpec::parse(spec)?,
        None => loaded.config.ablation,
    };
    let opts = EvalOptions {
        ablation,
        exclude_target: loaded.config.exclude_target,
        clip: args.clip,
        threads: args.threads,
    };
    let params = &loaded.checkpoint.params;
    let mse = evaluate(params, &loaded.dataset, part, &loaded.profiles, &opts)?;
    let examples = loaded.dataset.examples(part);
    if let Some(path) = &args.trace {
        let text = trace_jsonl(params, &loaded.dataset, &examples, &loaded.profiles, &opts)?;
        write(path, text)?;
    }
    let split_name = match part {
        SplitPart::Validation => "val",
        _ => "test",
    };
    let metrics = args
        .metrics
        .clone()
        .unwrap_or_else(|| args.checkpoint.with_file_name(format!("eval-{split_name}.csv")));
    write(
        &metrics,
        format!(
            "split,ablation,clip,examples,mse\n{split_name},\"{ablation}\",{},{},{mse:?}\n",
            args.clip,
            examples.len()
        ),
    )?;
    println!("mse={mse}");
    Ok(())
}

pub fn ablate(data: &Path, config: &Path, out: &Path) -> CliResult {
    let config = load_config(config)?;
    let dataset = Dataset::load(data)?;
    let rows = run_ablation_suite(&config, &dataset)?;
    for (variant, mse) in &rows {
        println!("{variant:<14} {mse:.6}");
    }
    write(out, ablation_csv(&rows))
}

pub fn sweep(data: &Path, config: &Path, dims: &[usize], out: &Path) -> CliResult {
    let config = load_config(config)?;
    let dataset = Dataset::load(data)?;
    let rows = sweep_id_dim(&config, &dataset, dims)?;
    for (d, mse) in &rows {
        println!("d_id={d:<4} val_mse={mse:.6}");
    }
    write(out, sweep_csv(&rows))
}

const TOP_WORDS: usize = 5;

pub fn inspect(checkpoint: &Path, data: &Path, user: &str, item: &str, json: bool) -> CliResult {
    let loaded = load_pair(checkpoint, data)?;
    let ds = &loaded.dataset;
    let u = ds
        .user_index(user)
        .ok_or_else(|| CliError::input(format!("unknown user {user:?}")))?;
    let i = ds
        .item_index(item)
        .ok_or_else(|| CliError::input(format!("unknown item {item:?}")))?;
    let opts = EvalOptions {
        ablation: loaded.config.ablation,
        exclude_target: loaded.config.exclude_target,
        ..EvalOptions::default()
    };
    let rec = trace_record(&loaded.checkpoint.params, ds, u, i, &loaded.profiles, &opts)?;
    if json {
        println!("{}", serde_json::to_string(&rec).expect("trace serializes"));
        return Ok(());
    }
    println!(
        "user={} item={} prediction={:.4}",
        rec.user, rec.item, rec.prediction
    );
    let (up, ip) = loaded.profiles.pair(u, i, opts.exclude_target);
    let sides = [
        ("user", &up, &rec.attention.user_alpha, &rec.attention.user_beta),
        ("item", &ip, &rec.attention.item_alpha, &rec.attention.item_beta),
    ];
    for (label, profile, alpha, beta) in sides {
        let mut rows: Vec<usize> = (0..profile.reviews_per_owner)
            .filter(|&n| profile.review_mask[n])
            .collect();
        println!();
        println!("{label} reviews: {}", rows.len());
        rows.sort_by(|&a, &b| beta[b].total_cmp(&beta[a]).then(a.cmp(&b)));
        for n in rows {
            let counterpart = profile.counterparts[n].and_then(|c| match label {
                "user" => ds.item_key(c),
                _ => ds.user_key(c),
            });
            let tokens = profile.review(n);
            let mask = profile.review_token_mask(n);
            let mut words: Vec<usize> = (0..tokens.len()).filter(|&k| mask[k]).collect();
            let alpha_sum: f64 = words.iter().map(|&k| alpha[n][k]).sum();
            words.sort_by(|&a, &b| alpha[n][b].total_cmp(&alpha[n][a]).then(a.cmp(&b)));
            let top: Vec<String> = words
                .iter()
                .take(TOP_WORDS)
                .map(|&k| format!("{}:{:.3}", ds.vocab.token(tokens[k]).unwrap_or("?"), alpha[n][k]))
                .collect();
            println!(
                "  row={n} with={} beta={:.4} alpha_sum={:.4} top: {}",
                counterpart.unwrap_or("?"),
                beta[n],
                alpha_sum,
                top.join(" ")
            );
        }
    }
    Ok(())
}
