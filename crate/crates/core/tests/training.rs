use nrpa_core::data::{Dataset, Example, SplitPart, PAD};
use nrpa_core::evaluation::{evaluate, make_synthetic_corpus, EvalOptions};
use nrpa_core::fixtures::{examples_of, profiles_for, random_interactions, random_params, toy_dims};
use nrpa_core::model::{forward, AblationSpec, ModelParams, ParamId};
use nrpa_core::numeric::Activation;
use nrpa_core::training::{
    backward, history_csv, l2_penalty, loss, train, trainable, Adam, TrainConfig, BETA1, BETA2, EPSILON,
};
use nrpa_core::NrpaError;

fn tiny_config() -> TrainConfig {
    TrainConfig::parse(
        "word_dim = 6\nid_dim = 4\nnum_filters = 5\nattention_dim = 5\nreview_len = 8\n\
         reviews_per_owner = 4\nfm_factors = 3\nlearning_rate = 0.01\nbatch_size = 16\n\
         max_epochs = 6\npatience = 2\nseed = 3\n",
    )
    .unwrap()
}

fn tiny_dataset(seed: u64) -> Dataset {
    Dataset::prepare(&make_synthetic_corpus(seed, 20, 12).records, seed, 1).unwrap()
}

#[test]
fn perfect_predictions_have_zero_loss() {
    let dims = toy_dims();
    let data = random_interactions(&dims, 6, 2);
    let profiles = profiles_for(&dims, &data);
    let params = random_params(dims, Activation::Relu, 2, 1.0);
    let batch: Vec<Example> = examples_of(&data)
        .into_iter()
        .map(|mut ex| {
            let (up, ip) = profiles.pair(ex.user, ex.item, false);
            ex.rating = forward(&params, &up, &ip, &AblationSpec::FULL)
                .unwrap()
                .prediction;
            ex
        })
        .collect();
    assert_eq!(
        loss(&batch, &params, &profiles, &AblationSpec::FULL, 0.0).unwrap(),
        0.0
    );
}

#[test]
fn constant_predictor_loss() {
    let dims = toy_dims();
    let data = random_interactions(&dims, 4, 3);
    let profiles = profiles_for(&dims, &data);
    let mut params = ModelParams::zeros(dims, Activation::Relu);
    let c = 2.5;
    params.fm.bias = c;
    let mut batch = examples_of(&data[..2]);
    batch[0].rating = 1.0;
    batch[1].rating = 5.0;
    let got = loss(&batch, &params, &profiles, &AblationSpec::FULL, 0.0).unwrap();
    assert_eq!(got, ((c - 1.0f64).powi(2) + (c - 5.0f64).powi(2)) / 2.0);
}

#[test]
fn l2_term_is_sum_of_squared_weights() {
    let dims = toy_dims();
    let data = random_interactions(&dims, 5, 4);
    let profiles = profiles_for(&dims, &data);
    let params = random_params(dims, Activation::Relu, 4, 1.0);
    let batch = examples_of(&data);
    let brute: f64 = ParamId::ALL
        .into_iter()
        .filter(|id| !id.is_bias())
        .flat_map(|id| params.tensor(id).iter().map(|x| x * x).collect::<Vec<_>>())
        .sum();
    assert!((l2_penalty(&params, &AblationSpec::FULL) - brute).abs() < 1e-12 * brute);
    let lam = 0.01;
    let with = loss(&batch, &params, &profiles, &AblationSpec::FULL, lam).unwrap();
    let without = loss(&batch, &params, &profiles, &AblationSpec::FULL, 0.0).unwrap();
    assert!((with - without - lam * brute).abs() < 1e-12);
    // uniform sites drop their query and harmony tensors from the penalty
    assert!(l2_penalty(&params, &AblationSpec::NO_ATTENTION) < brute);
}

#[test]
fn adam_zero_gradient_is_a_no_op() {
    let dims = toy_dims();
    let mut params = random_params(dims, Activation::Relu, 5, 1.0);
    let before = params.clone();
    let zero = params.zeros_like();
    let mut adam = Adam::new(&params, 0.1);
    for _ in 0..3 {
        adam.step(&mut params, &zero, &ParamId::ALL).unwrap();
    }
    assert_eq!(params, before);
    assert_eq!(adam.steps(), 3);
}

#[test]
fn adam_first_step_moves_against_gradient_by_lr() {
    let dims = toy_dims();
    let mut params = random_params(dims, Activation::Relu, 6, 1.0);
    let before = params.clone();
    let mut grads = params.zeros_like();
    let mut sign = 1.0;
    for x in grads.fm.linear.iter_mut() {
        *x = sign * 0.37;
        sign = -sign;
    }
    let lr = 1e-3;
    Adam::new(&params, lr)
        .step(&mut params, &grads, &ParamId::ALL)
        .unwrap();
    for (k, (&b, &a)) in before.fm.linear.iter().zip(&params.fm.linear).enumerate() {
        let g = grads.fm.linear[k];
        assert!(((b - a) - lr * g.signum()).abs() < 1e-9, "{k}");
    }
    assert_eq!(params.fm.factors, before.fm.factors);
}

#[test]
fn adam_matches_scalar_reference() {
    let dims = toy_dims();
    let mut params = ModelParams::zeros(dims, Activation::Relu);
    params.fm.bias = 1.0;
    let (lr, target) = (0.05, 3.0);
    let mut adam = Adam::new(&params, lr);
    let (mut x, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
    for t in 1..=5 {
        let g = 2.0 * (x - target);
        m = BETA1 * m + (1.0 - BETA1) * g;
        v = BETA2 * v + (1.0 - BETA2) * g * g;
        let m_hat = m / (1.0 - BETA1.powi(t));
        let v_hat = v / (1.0 - BETA2.powi(t));
        x -= lr * m_hat / (v_hat.sqrt() + EPSILON);

        let mut grads = params.zeros_like();
        grads.fm.bias = 2.0 * (params.fm.bias - target);
        adam.step(&mut params, &grads, &[ParamId::FmBias]).unwrap();
        assert_eq!(params.fm.bias, x, "step {t}");
    }
}

#[test]
fn adam_rejects_mismatched_shapes_and_pins_padding() {
    let dims = toy_dims();
    let mut params = random_params(dims, Activation::Relu, 7, 1.0);
    let other = ModelParams::zeros(
        nrpa_core::model::Dims {
            fm_factors: 3,
            ..dims
        },
        Activation::Relu,
    );
    let mut adam = Adam::new(&params, 0.1);
    assert!(matches!(
        adam.step(&mut params, &other, &ParamId::ALL),
        Err(NrpaError::Shape(_))
    ));

    let mut grads = params.zeros_like();
    grads.word_emb.row_mut(PAD as usize).fill(1.0);
    adam.step(&mut params, &grads, &ParamId::ALL).unwrap();
    assert!(params.word_emb.row(PAD as usize).iter().all(|&x| x == 0.0));
}

#[test]
fn small_step_decreases_batch_loss() {
    let dims = toy_dims();
    let mut failures = Vec::new();
    for seed in 0..20u64 {
        let data = random_interactions(&dims, 8, seed);
        let profiles = profiles_for(&dims, &data);
        let mut params = random_params(dims, Activation::Relu, seed, 1.0);
        let batch = examples_of(&data);
        let (before, grads) = backward(&batch, &params, &profiles, &AblationSpec::FULL, 1e-4).unwrap();
        Adam::new(&params, 1e-4)
            .step(&mut params, &grads, &ParamId::ALL)
            .unwrap();
        let after = loss(&batch, &params, &profiles, &AblationSpec::FULL, 1e-4).unwrap();
        if after >= before {
            failures.push((seed, before, after));
        }
    }
    assert!(failures.len() <= 1, "{failures:?}");
}

#[test]
fn training_history_and_determinism() {
    let ds = tiny_dataset(1);
    let config = tiny_config();
    let profiles = ds.profiles(config.review_len, config.reviews_per_owner).unwrap();
    let a = train(&config, &ds, &profiles).unwrap();
    let b = train(&config, &ds, &profiles).unwrap();
    assert!(!a.history.is_empty() && a.history.len() <= config.max_epochs);
    assert_eq!(a.history, b.history);
    assert_eq!(a.params, b.params);
    for (k, r) in a.history.iter().enumerate() {
        assert_eq!(r.epoch, k + 1);
        assert!(r.train_loss.is_finite() && r.val_mse.is_finite());
    }
    let csv = history_csv(&a.history);
    assert_eq!(csv.lines().count(), a.history.len() + 1);
}

#[test]
fn early_stopping_keeps_the_best_epoch() {
    let ds = tiny_dataset(2);
    let mut config = tiny_config();
    config.max_epochs = 25;
    config.learning_rate = 0.05;
    let profiles = ds.profiles(config.review_len, config.reviews_per_owner).unwrap();
    let out = train(&config, &ds, &profiles).unwrap();
    let min = out
        .history
        .iter()
        .map(|r| r.val_mse)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(out.best_val_mse, min);
    assert_eq!(out.history[out.best_epoch - 1].val_mse, min);
    let stopped_early = out.history.len() < config.max_epochs;
    if stopped_early {
        assert_eq!(out.history.len(), out.best_epoch + config.patience);
    }
    let again = evaluate(
        &out.params,
        &ds,
        SplitPart::Validation,
        &profiles,
        &EvalOptions::default(),
    )
    .unwrap();
    assert_eq!(again, min);
    assert!(out.params.word_emb.row(PAD as usize).iter().all(|&x| x == 0.0));
}

#[test]
fn ablated_tensors_stay_frozen() {
    let ds = tiny_dataset(3);
    let mut config = tiny_config();
    config.ablation = AblationSpec::NO_ATTENTION;
    config.max_epochs = 2;
    let profiles = ds.profiles(config.review_len, config.reviews_per_owner).unwrap();
    let init = nrpa_core::model::init_params(
        config.dims(ds.vocab.len(), ds.num_users(), ds.num_items()),
        config.activation,
        config.seed,
    )
    .unwrap();
    let out = train(&config, &ds, &profiles).unwrap();
    let active = trainable(&config);
    for id in ParamId::ALL {
        let unchanged = out.params.tensor(id) == init.tensor(id);
        if !active.contains(&id) {
            assert!(unchanged, "{}", id.name());
        }
    }
    assert!(!active.contains(&ParamId::UserEmb));
    assert!(out.params.tensor(ParamId::FmFactors) != init.tensor(ParamId::FmFactors));
}

#[test]
fn divergence_is_reported() {
    let ds = tiny_dataset(4);
    let mut config = tiny_config();
    config.learning_rate = 1e300;
    let profiles = ds.profiles(config.review_len, config.reviews_per_owner).unwrap();
    match train(&config, &ds, &profiles) {
        Err(NrpaError::NonFinite(msg)) => assert!(msg.contains("epoch 1"), "{msg}"),
        other => panic!("expected divergence, got {:?}", other.map(|o| o.history)),
    }
}
