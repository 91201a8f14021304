use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Reduce any matrix to a scalar through a fixed random linear functional.
fn probe(tape: &mut Tape<f64>, x: Var, seed: u64) -> Var {
    let cols = tape.value(x).cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = tape.constant(random(&mut rng, &[cols, 1]));
    let y = tape.matmul(x, r).unwrap();
    tape.sum(y)
}

/// Checks every coordinate of every parameter against central differences.
fn check<F>(store: &mut ParamStore<f64>, build: F)
where
    F: Fn(&mut Tape<f64>, &ParamStore<f64>) -> Var,
{
    let mut tape = Tape::new(true, 11);
    let loss = build(&mut tape, store);
    let grads = tape.backward(loss).unwrap();
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let n = store.value(id).len();
        let analytic = grads
            .get(id)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(store.value(id).shape()));
        for c in 0..n {
            let numeric = finite_diff_grad(store, id, c, 1e-5, |s| {
                let mut t = Tape::new(true, 11);
                let l = build(&mut t, s);
                t.value(l).item()
            });
            let a = analytic.data()[c];
            let err = relative_error(a, numeric, 1e-3);
            assert!(
                err < 1e-5,
                "{}[{c}]: analytic {a} vs numeric {numeric} (rel {err})",
                store.name(id)
            );
        }
    }
}

fn store_with(shapes: &[(&str, &[usize])], seed: u64) -> ParamStore<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = ParamStore::new();
    for (name, shape) in shapes {
        s.insert(name, random(&mut rng, shape)).unwrap();
    }
    s
}

fn p(tape: &mut Tape<f64>, s: &ParamStore<f64>, name: &str) -> Var {
    tape.param(s, s.id(name).unwrap())
}

#[test]
fn grad_matmul_add_scale() {
    let mut s = store_with(
        &[
            ("a", &[3, 4]),
            ("b", &[4, 2]),
            ("c", &[3, 2]),
            ("r", &[1, 2]),
        ],
        1,
    );
    check(&mut s, |t, s| {
        let (a, b, c, r) = (p(t, s, "a"), p(t, s, "b"), p(t, s, "c"), p(t, s, "r"));
        let ab = t.matmul(a, b).unwrap();
        let sum = t.add(ab, c).unwrap();
        let shifted = t.add_row(sum, r).unwrap();
        let scaled = t.scale(shifted, 0.7);
        let flipped = t.transpose(scaled);
        probe(t, flipped, 5)
    });
}

#[test]
fn grad_concat_and_gather() {
    let mut s = store_with(&[("table", &[5, 3]), ("x", &[4, 2]), ("y", &[2, 5])], 2);
    check(&mut s, |t, s| {
        let (table, x, y) = (p(t, s, "table"), p(t, s, "x"), p(t, s, "y"));
        let rows = t.gather_rows(table, vec![4, 0, 4, 2]).unwrap();
        let wide = t.concat_cols(rows, x).unwrap();
        let tall = t.concat_rows(&[wide, y]).unwrap();
        probe(t, tall, 6)
    });
}

#[test]
fn grad_layer_norm_gelu() {
    let mut s = store_with(&[("x", &[3, 6]), ("g", &[1, 6]), ("b", &[1, 6])], 3);
    check(&mut s, |t, s| {
        let (x, g, b) = (p(t, s, "x"), p(t, s, "g"), p(t, s, "b"));
        let y = t.layer_norm(x, g, b, 1e-5).unwrap();
        let z = t.gelu(y);
        probe(t, z, 7)
    });
}

#[test]
fn grad_dropout_with_fixed_mask() {
    let mut s = store_with(&[("x", &[4, 5])], 4);
    check(&mut s, |t, s| {
        let x = p(t, s, "x");
        let y = t.dropout(x, 0.3).unwrap();
        probe(t, y, 8)
    });
}

#[test]
fn grad_cross_entropy_with_excluded_entries() {
    let mut s = store_with(&[("w", &[3, 6]), ("h", &[1, 3])], 5);
    check(&mut s, |t, s| {
        let (w, h) = (p(t, s, "w"), p(t, s, "h"));
        let logits = t.matmul(h, w).unwrap();
        let mut mask = vec![0.0; 6];
        mask[1] = f64::NEG_INFINITY;
        mask[4] = f64::NEG_INFINITY;
        let m = t.constant(Tensor::row(mask));
        let masked = t.add(logits, m).unwrap();
        t.cross_entropy(masked, 3).unwrap()
    });
}

#[test]
fn cross_entropy_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let logits: Vec<f64> = (0..7).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let z: f64 = logits.iter().map(|l| l.exp()).sum();
    let mut t = Tape::<f64>::new(false, 0);
    let l = t.constant(Tensor::row(logits.clone()));
    let ce = t.cross_entropy(l, 2).unwrap();
    let expected = -(logits[2].exp() / z).ln();
    assert!((t.value(ce).item() - expected).abs() < 1e-12);
}

fn random_neighborhood(
    rng: &mut ChaCha8Rng,
    nq: usize,
    nk: usize,
    nb: Option<usize>,
) -> Neighborhood {
    let mut n = Neighborhood::new();
    for _ in 0..nq {
        let len = rng.gen_range(0..=nk);
        let entries: Vec<_> = (0..len)
            .map(|_| (rng.gen_range(0..nk), nb.map(|b| rng.gen_range(0..b))))
            .collect();
        n.push_query(entries);
    }
    n
}

#[test]
fn grad_sparse_attention_with_bias_and_dropout() {
    let mut s = store_with(
        &[
            ("q", &[5, 6]),
            ("k", &[4, 6]),
            ("v", &[4, 6]),
            ("bias", &[3, 3]),
        ],
        6,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let nb = Arc::new(random_neighborhood(&mut rng, 5, 4, Some(3)));
    for dropout in [0.0, 0.25] {
        let nb = nb.clone();
        check(&mut s, move |t, s| {
            let (q, k, v, b) = (p(t, s, "q"), p(t, s, "k"), p(t, s, "v"), p(t, s, "bias"));
            let out = t
                .attention(AttentionArgs {
                    q,
                    k,
                    v,
                    bias: Some(b),
                    heads: 2,
                    neighbors: nb.clone(),
                    dropout,
                })
                .unwrap();
            probe(t, out, 12)
        });
    }
}

#[test]
fn grad_dense_attention_without_bias() {
    let mut s = store_with(&[("q", &[3, 4]), ("k", &[5, 4]), ("v", &[5, 4])], 7);
    let nb = Arc::new(Neighborhood::dense(3, 5));
    check(&mut s, |t, s| {
        let (q, k, v) = (p(t, s, "q"), p(t, s, "k"), p(t, s, "v"));
        let out = t
            .attention(AttentionArgs {
                q,
                k,
                v,
                bias: None,
                heads: 1,
                neighbors: nb.clone(),
                dropout: 0.0,
            })
            .unwrap();
        probe(t, out, 13)
    });
}

#[test]
fn single_neighbor_gets_full_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut t = Tape::<f64>::new(false, 0);
    let q = t.constant(random(&mut rng, &[1, 4]));
    let k = t.constant(random(&mut rng, &[3, 4]));
    let v = t.constant(random(&mut rng, &[3, 4]));
    let mut nb = Neighborhood::new();
    nb.push_query([(2, None)]);
    let out = t
        .attention(AttentionArgs {
            q,
            k,
            v,
            bias: None,
            heads: 2,
            neighbors: Arc::new(nb),
            dropout: 0.0,
        })
        .unwrap();
    assert_eq!(t.value(out).data(), t.value(v).row_slice(2));
    let (_, _, probs) = t.attention_probs(out).unwrap();
    assert_eq!(probs, &[1.0, 1.0]);
}

#[test]
fn equal_logits_give_uniform_weights() {
    let mut t = Tape::<f64>::new(false, 0);
    let q = t.constant(Tensor::full(&[1, 2], 0.5));
    let k = t.constant(Tensor::full(&[4, 2], 1.0));
    let v = t.constant(Tensor::from_vec(&[4, 2], vec![1., 0., 2., 0., 3., 0., 4., 0.]).unwrap());
    let out = t
        .attention(AttentionArgs {
            q,
            k,
            v,
            bias: None,
            heads: 1,
            neighbors: Arc::new(Neighborhood::dense(1, 4)),
            dropout: 0.0,
        })
        .unwrap();
    let (_, _, probs) = t.attention_probs(out).unwrap();
    for &w in probs {
        assert!((w - 0.25).abs() < 1e-15);
    }
    assert!((t.value(out).get(0, 0) - 2.5).abs() < 1e-12);
}

#[test]
fn softmax_rows_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = rng.gen_range(1..20);
        let logits: Vec<f32> = (0..n).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let p = softmax(&logits);
        let s: f32 = p.iter().sum();
        assert!((s - 1.0).abs() < 1e-6);
        assert!(p.iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn layer_norm_of_constant_rows_is_zero() {
    let mut t = Tape::<f64>::new(false, 0);
    let x = t.constant(Tensor::full(&[2, 5], 3.25));
    let g = t.constant(Tensor::full(&[1, 5], 1.0));
    let b = t.constant(Tensor::zeros(&[1, 5]));
    let y = t.layer_norm(x, g, b, 1e-5).unwrap();
    assert!(t.value(y).data().iter().all(|&v| v == 0.0));
}

#[test]
fn linear_sum_gradient_is_input() {
    let mut s = ParamStore::new();
    let w = s
        .insert(
            "w",
            Tensor::from_vec(&[2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap(),
        )
        .unwrap();
    let unused = s.insert("unused", Tensor::full(&[2, 2], 1.0)).unwrap();
    let mut t = Tape::new(false, 0);
    let wv = t.param(&s, w);
    let x = t.constant(Tensor::from_vec(&[3, 1], vec![0.5, -1.0, 2.0]).unwrap());
    let y = t.matmul(wv, x).unwrap();
    let loss = t.sum(y);
    let grads = t.backward(loss).unwrap();
    assert_eq!(
        grads.get(w).unwrap().data(),
        &[0.5, -1.0, 2.0, 0.5, -1.0, 2.0]
    );
    assert!(grads.get(unused).is_none());
    s.accumulate(&grads, 1.0);
    assert!(s.grad(unused).data().iter().all(|&g| g == 0.0));
}

#[test]
fn second_backward_is_stale() {
    let mut t = Tape::<f32>::new(false, 0);
    let x = t.constant(Tensor::scalar(2.0));
    let l = t.sum(x);
    t.backward(l).unwrap();
    assert!(matches!(t.backward(l), Err(Error::StaleTape)));
    t.reset();
    let x = t.constant(Tensor::scalar(2.0));
    let l = t.sum(x);
    assert!(t.backward(l).is_ok());
}

#[test]
fn dropout_eval_identity_and_train_scaling() {
    let mut t = Tape::<f64>::new(false, 0);
    let x = t.constant(Tensor::full(&[100, 100], 1.0));
    let y = t.dropout(x, 0.5).unwrap();
    assert_eq!(t.value(y), t.value(x));

    let mut t = Tape::<f64>::new(true, 42);
    let x = t.constant(Tensor::full(&[100, 100], 1.0));
    let y = t.dropout(x, 0.2).unwrap();
    let vals = t.value(y).data();
    let zeros = vals.iter().filter(|&&v| v == 0.0).count() as f64 / vals.len() as f64;
    assert!((zeros - 0.2).abs() < 0.02, "{zeros}");
    assert!(vals.iter().all(|&v| v == 0.0 || (v - 1.25).abs() < 1e-12));
    assert!(matches!(t.dropout(x, 1.0), Err(Error::Config(_))));
}

#[test]
fn shape_mismatch_is_reported() {
    let mut t = Tape::<f32>::new(false, 0);
    let a = t.constant(Tensor::zeros(&[2, 3]));
    let b = t.constant(Tensor::zeros(&[3, 2]));
    match t.add(a, b) {
        Err(Error::Shape { left, right, .. }) => {
            assert_eq!(left, vec![2, 3]);
            assert_eq!(right, vec![3, 2]);
        }
        other => panic!("expected shape error, got {other:?}"),
    }
}
