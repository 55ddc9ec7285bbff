#![allow(clippy::needless_range_loop)]

use nrpa_core::data::{Interaction, Profile, PAD};
use nrpa_core::fixtures::{profiles_for, random_interactions, random_params, toy_dims};
use nrpa_core::model::{
    conv_encode, embed_review, fm_predict, forward, query_vector, review_attention_pool, word_attention_pool,
    AblationSpec, FmParams,
};
use nrpa_core::numeric::{Activation, Matrix};
use nrpa_core::rng::SeededRng;

fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn embedding_lookup() {
    let mut rng = SeededRng::new(1);
    let mut table = random_matrix(&mut rng, 6, 3);
    table.row_mut(PAD as usize).fill(0.0);

    let pads = embed_review(&[PAD; 4], &table).unwrap();
    assert!(pads.as_slice().iter().all(|&x| x == 0.0));

    let one = embed_review(&[PAD, 4, PAD], &table).unwrap();
    assert_eq!(one.row(1), table.row(4));
    assert!(one.row(0).iter().chain(one.row(2)).all(|&x| x == 0.0));

    // equals Eᵀ · onehot
    let tokens = [2u32, 5, 1, 0];
    let m = embed_review(&tokens, &table).unwrap();
    for (k, &t) in tokens.iter().enumerate() {
        for c in 0..3 {
            let via_onehot: f64 = (0..6)
                .map(|r| table.get(r, c) * if r == t as usize { 1.0 } else { 0.0 })
                .sum();
            assert_eq!(m.get(k, c), via_onehot);
        }
    }
    assert!(embed_review(&[6], &table).is_err());
}

#[test]
fn zero_filters_give_activated_bias() {
    let mut rng = SeededRng::new(2);
    let emb = random_matrix(&mut rng, 5, 4);
    let w = Matrix::zeros(3, 3 * 4);
    let b = [0.7, -0.2, 0.0];
    let out = conv_encode(&emb, &w, &b, Activation::Relu).unwrap();
    for k in 0..5 {
        assert_eq!(out.row(k), &[0.7, 0.0, 0.0]);
    }
    let out = conv_encode(&emb, &w, &b, Activation::Tanh).unwrap();
    assert_eq!(out.get(3, 1), (-0.2f64).tanh());
}

#[test]
fn unit_window_is_positionwise_affine() {
    let mut rng = SeededRng::new(3);
    let emb = random_matrix(&mut rng, 6, 4);
    let w = random_matrix(&mut rng, 5, 4);
    let b: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
    let out = conv_encode(&emb, &w, &b, Activation::Relu).unwrap();
    for k in 0..6 {
        for j in 0..5 {
            let pre: f64 = b[j] + (0..4).map(|c| w.get(j, c) * emb.get(k, c)).sum::<f64>();
            assert!((out.get(k, j) - pre.max(0.0)).abs() < 1e-12);
        }
    }
}

#[test]
fn window_three_is_local() {
    let mut rng = SeededRng::new(4);
    let emb = random_matrix(&mut rng, 9, 3);
    let w = random_matrix(&mut rng, 4, 9);
    let b = vec![0.5; 4];
    let base = conv_encode(&emb, &w, &b, Activation::Tanh).unwrap();
    for changed in 0..9 {
        let mut e = emb.clone();
        for c in 0..3 {
            e.set(changed, c, e.get(changed, c) + 1.0);
        }
        let out = conv_encode(&e, &w, &b, Activation::Tanh).unwrap();
        for k in 0..9 {
            let moved = out.row(k) != base.row(k);
            assert_eq!(moved, k.abs_diff(changed) <= 1, "input {changed}, output {k}");
        }
    }
}

#[test]
fn even_window_and_bad_shapes_are_rejected() {
    let emb = Matrix::zeros(4, 3);
    assert!(conv_encode(&emb, &Matrix::zeros(2, 6), &[0.0; 2], Activation::Relu).is_err());
    assert!(conv_encode(&emb, &Matrix::zeros(2, 7), &[0.0; 2], Activation::Relu).is_err());
    assert!(conv_encode(&emb, &Matrix::zeros(2, 9), &[0.0; 3], Activation::Relu).is_err());
}

#[test]
fn query_examples() {
    assert_eq!(
        query_vector(&[0.3, -1.0], &Matrix::zeros(3, 2), &[0.0; 3]).unwrap(),
        vec![0.0; 3]
    );

    let w = Matrix::from_rows(&[&[1.0, -2.0], &[0.5, 1.0]]).unwrap();
    let q = query_vector(&[2.0, 1.0], &w, &[0.1, -3.0]).unwrap();
    assert!(close(&q, &[0.1, 0.0], 1e-15), "{q:?}");

    let mut rng = SeededRng::new(5);
    let w = random_matrix(&mut rng, 4, 3);
    let id = [0.2, -0.4, 0.9];
    assert_eq!(
        query_vector(&id, &w, &[0.0; 4]).unwrap(),
        query_vector(&id, &w, &[0.0; 4]).unwrap()
    );
    assert!(query_vector(&id, &w, &[0.0; 3]).is_err());
    assert!(query_vector(&[1.0], &w, &[0.0; 4]).is_err());
}

#[test]
fn word_pool_examples() {
    let mut rng = SeededRng::new(6);
    let harmony = random_matrix(&mut rng, 2, 3);
    let same = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]]).unwrap();
    for q in [[0.1, 5.0], [3.0, 0.0]] {
        let enc = word_attention_pool(&same, &q, &harmony, &[true; 3]).unwrap();
        assert!(close(&enc.vector, &[1.0, 2.0, 3.0], 1e-12));
    }

    let single = Matrix::from_rows(&[&[0.4, -0.1, 2.0]]).unwrap();
    let enc = word_attention_pool(&single, &[1.0, 1.0], &harmony, &[true]).unwrap();
    assert_eq!(enc.word_weights, vec![1.0]);
    assert_eq!(enc.vector, vec![0.4, -0.1, 2.0]);

    // logits 2 and -1
    let atoms = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
    let a = Matrix::from_rows(&[&[2.0, -1.0]]).unwrap();
    let enc = word_attention_pool(&atoms, &[1.0], &a, &[true, true]).unwrap();
    let e3 = 3f64.exp();
    assert!(close(
        &enc.word_weights,
        &[e3 / (1.0 + e3), 1.0 / (1.0 + e3)],
        1e-15
    ));

    let enc = word_attention_pool(&atoms, &[1.0], &a, &[false, false]).unwrap();
    assert_eq!(enc.word_weights, vec![0.0, 0.0]);
    assert_eq!(enc.vector, vec![0.0, 0.0]);

    assert!(word_attention_pool(&atoms, &[1.0], &a, &[true]).is_err());
    assert!(word_attention_pool(&atoms, &[1.0, 2.0], &a, &[true, true]).is_err());
}

#[test]
fn personalization_is_expressible() {
    let text = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5]]).unwrap();
    let a = Matrix::identity(2);
    let price_fan = word_attention_pool(&text, &[3.0, 0.0], &a, &[true; 3]).unwrap();
    let quality_fan = word_attention_pool(&text, &[0.0, 3.0], &a, &[true; 3]).unwrap();
    assert!(price_fan.word_weights[0] > price_fan.word_weights[1]);
    assert!(quality_fan.word_weights[1] > quality_fan.word_weights[0]);
}

#[test]
fn review_pool_examples() {
    let mut rng = SeededRng::new(7);
    let reviews = random_matrix(&mut rng, 4, 3);
    let harmony = random_matrix(&mut rng, 2, 3);

    let one = review_attention_pool(&reviews, &[1.0, 0.5], &harmony, &[false, false, true, false]).unwrap();
    assert_eq!(one.vector, reviews.row(2));
    assert_eq!(one.review_weights, vec![0.0, 0.0, 1.0, 0.0]);

    let flat = review_attention_pool(&reviews, &[0.0, 0.0], &harmony, &[true, true, false, true]).unwrap();
    for (n, &w) in flat.review_weights.iter().enumerate() {
        assert_eq!(w, if n == 2 { 0.0 } else { 1.0 / 3.0 });
    }

    let base = review_attention_pool(&reviews, &[0.8, 1.3], &harmony, &[true; 4]).unwrap();
    let order = [2usize, 0, 3, 1];
    let rows: Vec<&[f64]> = order.iter().map(|&r| reviews.row(r)).collect();
    let moved = review_attention_pool(
        &Matrix::from_rows(&rows).unwrap(),
        &[0.8, 1.3],
        &harmony,
        &[true; 4],
    )
    .unwrap();
    assert!(close(&base.vector, &moved.vector, 1e-12));
    for (dst, &src) in order.iter().enumerate() {
        assert!((moved.review_weights[dst] - base.review_weights[src]).abs() < 1e-15);
    }
}

fn fm(bias: f64, linear: Vec<f64>, factors: Matrix) -> FmParams {
    FmParams {
        bias,
        linear,
        factors,
    }
}

#[test]
fn fm_examples() {
    let p = fm(3.7, vec![0.0; 4], Matrix::zeros(4, 2));
    assert_eq!(fm_predict(&[0.3, -2.0], &[1.0, 4.0], &p).unwrap(), 3.7);

    let p = fm(0.5, vec![1.0, -1.0, 2.0, 0.25], Matrix::zeros(4, 2));
    assert_eq!(
        fm_predict(&[1.0, 2.0], &[3.0, 4.0], &p).unwrap(),
        0.5 + 1.0 - 2.0 + 6.0 + 1.0
    );

    let mut rng = SeededRng::new(8);
    for _ in 0..50 {
        let p = fm(
            rng.normal(),
            (0..4).map(|_| rng.normal()).collect(),
            random_matrix(&mut rng, 4, 2),
        );
        let x: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let mut slow = p.bias + (0..4).map(|i| p.linear[i] * x[i]).sum::<f64>();
        for i in 0..4 {
            for j in i + 1..4 {
                slow += (p.factors.get(i, 0) * p.factors.get(j, 0)
                    + p.factors.get(i, 1) * p.factors.get(j, 1))
                    * x[i]
                    * x[j];
            }
        }
        assert!((fm_predict(&x[..2], &x[2..], &p).unwrap() - slow).abs() < 1e-12);
    }
    assert!(fm_predict(&[1.0], &[1.0, 2.0], &fm(0.0, vec![0.0; 4], Matrix::zeros(4, 2))).is_err());
}

#[test]
fn forward_is_deterministic_and_cold_start_is_finite() {
    let dims = toy_dims();
    let data = random_interactions(&dims, 10, 9);
    let profiles = profiles_for(&dims, &data);
    let params = random_params(dims, Activation::Relu, 9, 2.0);
    let (up, ip) = profiles.pair(1, 2, false);
    let a = forward(&params, &up, &ip, &AblationSpec::FULL).unwrap();
    let b = forward(&params, &up, &ip, &AblationSpec::FULL).unwrap();
    assert_eq!(a.prediction, b.prediction);
    assert_eq!(a.trace(), b.trace());

    let cold = Profile::empty(0, dims.reviews_per_owner, dims.review_len);
    let pass = forward(&params, &cold, &ip, &AblationSpec::FULL).unwrap();
    assert!(pass.user_vector().iter().all(|&x| x == 0.0));
    assert!(pass.prediction.is_finite());
    assert!(pass.trace().user_beta.iter().all(|&x| x == 0.0));
}

#[test]
fn forward_rejects_mismatched_profiles() {
    let dims = toy_dims();
    let params = random_params(dims, Activation::Relu, 1, 1.0);
    let wrong = Profile::empty(1, dims.reviews_per_owner + 1, dims.review_len);
    let right = Profile::empty(1, dims.reviews_per_owner, dims.review_len);
    assert!(forward(&params, &wrong, &right, &AblationSpec::FULL).is_err());
    let stranger = Profile::empty(dims.num_users as u32, dims.reviews_per_owner, dims.review_len);
    assert!(forward(&params, &stranger, &right, &AblationSpec::FULL).is_err());
    let data = vec![Interaction {
        user: 1,
        item: 1,
        rating: 3.0,
        tokens: vec![dims.vocab_size as u32],
    }];
    let profiles = profiles_for(&dims, &data);
    let (up, ip) = profiles.pair(1, 1, false);
    assert!(forward(&params, &up, &ip, &AblationSpec::FULL).is_err());
}
