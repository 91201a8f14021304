use proptest::prelude::*;

use super::*;
use crate::dom::tests_support::EVENT_PAGE;
use crate::dom::{ingest, Caps, Vocab};
use crate::numerics::{finite_diff_grad, relative_error};

fn vocab() -> Vocab {
    let words =
        "fun family fest this is a event for all ages saturday afternoon spark social sf dec 13";
    Vocab::new(
        words.split(' ').map(String::from),
        ["html", "body", "img", "div", "h1", "p", "span", "h3"].map(String::from),
        ["name", "date", "location"].map(String::from),
    )
}

fn small_config() -> ModelConfig {
    ModelConfig {
        layers: 2,
        d: 8,
        heads: 2,
        d_ffn: 12,
        radius: 2,
        d_seg: 2,
        dropout: 0.0,
        max_span_len: 4,
        ..ModelConfig::desk()
    }
}

fn setup<T: Scalar>(cfg: ModelConfig) -> (WebFormer<T>, DocPlan) {
    let v = vocab();
    let ing = ingest(EVENT_PAGE, &v, Caps::default()).unwrap();
    let plan = DocPlan::new(&ing, &cfg).unwrap();
    let sizes = TableSizes {
        words: v.n_words(),
        tags: v.n_tags(),
        fields: v.n_fields(),
    };
    (WebFormer::new(cfg, sizes, 3).unwrap(), plan)
}

fn text_output(m: &WebFormer<f64>, plan: &DocPlan, field: u32) -> Tensor<f64> {
    let mut t = Tape::new(false, 0);
    let z = m.encode(&mut t, plan, field).unwrap();
    t.value(z.text).clone()
}

#[test]
fn embedding_layout() {
    let (m, plan) = setup::<f64>(ModelConfig::desk());
    let mut t = Tape::new(false, 0);
    let x = m.embed(&mut t, &plan, 1).unwrap();
    let xt = t.value(x.text);
    assert_eq!(xt.shape(), &[plan.n_text(), 64]);
    let seg = m.tensor("emb.segment").unwrap();
    assert_eq!(
        &xt.row_slice(0)[56..],
        seg.row_slice(Stream::Text.segment())
    );
    let word = m.tensor("emb.word").unwrap();
    assert_eq!(
        &xt.row_slice(0)[..56],
        word.row_slice(plan.word_ids[0] as usize)
    );
}

#[test]
fn same_word_gives_same_row() {
    let (m, mut plan) = setup::<f64>(small_config());
    plan.word_ids[1] = plan.word_ids[0];
    let mut t = Tape::new(false, 0);
    let x = m.embed(&mut t, &plan, 0).unwrap();
    assert_eq!(t.value(x.text).row_slice(0), t.value(x.text).row_slice(1));
}

#[test]
fn fields_differ_only_in_lexical_part() {
    let (m, plan) = setup::<f64>(small_config());
    let mut t = Tape::new(false, 0);
    let a = m.embed(&mut t, &plan, 1).unwrap();
    let b = m.embed(&mut t, &plan, 2).unwrap();
    let (fa, fb) = (t.value(a.field), t.value(b.field));
    assert_eq!(fa.row_slice(0)[6..], fb.row_slice(0)[6..]);
    assert_ne!(fa.row_slice(0)[..6], fb.row_slice(0)[..6]);
}

#[test]
fn out_of_range_ids_are_vocab_errors() {
    let (m, mut plan) = setup::<f32>(small_config());
    assert!(matches!(
        m.embed(&mut Tape::new(false, 0), &plan, 99),
        Err(Error::Vocab { kind: "field", .. })
    ));
    plan.word_ids[0] = 10_000;
    assert!(matches!(
        m.embed(&mut Tape::new(false, 0), &plan, 0),
        Err(Error::Vocab { kind: "word", .. })
    ));
}

#[test]
fn layers_preserve_shape_and_stay_finite() {
    let (m, plan) = setup::<f32>(ModelConfig::desk());
    let mut t = Tape::new(true, 5);
    let z = m.encode(&mut t, &plan, 1).unwrap();
    assert_eq!(t.value(z.text).shape(), &[plan.n_text(), 64]);
    assert_eq!(t.value(z.html).shape(), &[plan.n_html(), 64]);
    assert_eq!(t.value(z.field).shape(), &[1, 64]);
    assert!(t.value(z.text).is_finite() && t.value(z.html).is_finite());
}

#[test]
fn field_independence_without_h2f() {
    let mut cfg = small_config();
    cfg.flags.enable_h2f = false;
    let (m, plan) = setup::<f64>(cfg);
    assert_eq!(text_output(&m, &plan, 1), text_output(&m, &plan, 2));
    let (m, plan) = setup::<f64>(small_config());
    assert!(text_output(&m, &plan, 1).max_abs_diff(&text_output(&m, &plan, 2)) > 1e-9);
}

#[test]
fn all_flags_off_is_tokenwise() {
    let mut cfg = small_config();
    cfg.flags = AttentionFlags::none();
    let (m, mut plan) = setup::<f64>(cfg);
    let before = text_output(&m, &plan, 0);
    plan.word_ids.swap(0, 1);
    let after = text_output(&m, &plan, 0);
    assert_eq!(before.row_slice(0), after.row_slice(1));
    assert_eq!(before.row_slice(2), after.row_slice(2));
}

#[test]
fn end_candidates_respect_node_and_cap() {
    let (_, plan) = setup::<f32>(small_config());
    let t2 = 3..11;
    assert_eq!(plan.node_end[t2.start], t2.end);
    assert_eq!(plan.end_candidates(t2.start, 4), 3..7);
    assert_eq!(plan.end_candidates(9, 4), 9..11);
    assert_eq!(plan.end_candidates(10, 4), 10..11);
}

#[test]
fn loss_matches_hand_rolled_cross_entropy() {
    let (m, plan) = setup::<f64>(small_config());
    let mut t = Tape::new(false, 0);
    let z = m.encode(&mut t, &plan, 1).unwrap();
    let loss = m.loss(&mut t, z.text, &plan, (3, 5)).unwrap();
    let begin = m.begin_logits(&mut t, z.text).unwrap();
    let end = m.end_logits(&mut t, z.text, &plan, 3).unwrap();
    let ce = |xs: &[f64], k: usize| {
        let z: f64 = xs.iter().map(|x| x.exp()).sum();
        z.ln() - xs[k]
    };
    let want = 0.5 * (ce(t.value(begin).data(), 3) + ce(t.value(end).data(), 2));
    assert!((t.value(loss).item() - want).abs() < 1e-9);
}

#[test]
fn invalid_gold_spans_are_label_errors() {
    let (m, plan) = setup::<f64>(small_config());
    for gold in [(5, 4), (9, 11), (3, 7), (0, 100)] {
        let mut t = Tape::new(false, 0);
        let z = m.encode(&mut t, &plan, 1).unwrap();
        assert!(
            matches!(m.loss(&mut t, z.text, &plan, gold), Err(Error::Label(_))),
            "{gold:?}"
        );
    }
}

#[test]
fn predict_stays_inside_one_node() {
    let (m, plan) = setup::<f32>(ModelConfig::desk());
    for f in 0..3 {
        let p = m.predict(&plan, f).unwrap();
        assert!(p.begin <= p.end && p.end < plan.node_end[p.begin]);
        assert_eq!(plan.token_node[p.begin], p.node);
        assert!(p.score <= 0.0);
    }
}

#[test]
fn end_softmax_normalizes_over_finite_positions() {
    let (m, plan) = setup::<f64>(small_config());
    let mut t = Tape::new(false, 0);
    let z = m.encode(&mut t, &plan, 0).unwrap();
    let full = m.end_logits_full(&mut t, z.text, &plan, 4).unwrap();
    assert_eq!(full.iter().filter(|v| v.is_finite()).count(), 4);
    let p = crate::numerics::softmax(&full);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn full_model_gradients_match_finite_differences() {
    for share in [false, true] {
        let cfg = ModelConfig {
            share_qk_by_token_type: share,
            ..small_config()
        };
        let (mut m, plan) = setup::<f64>(cfg);
        // Non-zero tables so their gradients are exercised away from the origin.
        for name in ["layer0.edge", "layer0.rel", "layer1.edge", "layer1.rel"] {
            let id = m.store.id(name).unwrap();
            let n = m.store.value(id).len();
            for (i, v) in m.store.value_mut(id).data_mut().iter_mut().enumerate() {
                *v = ((i * 7 % 11) as f64 - 5.0) * 0.05 / n as f64 * 10.0;
            }
        }
        let (_, grads) = m.gradients(&plan, 1, (3, 5), false, 0).unwrap();
        let ids: Vec<_> = m.store.ids().collect();
        let mut worst = 0.0f64;
        for id in ids {
            let n = m.store.value(id).len();
            let analytic = grads
                .get(id)
                .map(|g| g.data().to_vec())
                .unwrap_or(vec![0.0; n]);
            for c in (0..n).step_by(1 + n / 6) {
                let cfg = m.config.clone();
                let num = finite_diff_grad(&mut m.store, id, c, 1e-5, |s| {
                    let mm = WebFormer::from_store(cfg.clone(), s.clone()).unwrap();
                    let mut t = Tape::new(false, 0);
                    let l = mm.example_loss(&mut t, &plan, 1, (3, 5)).unwrap();
                    t.value(l).item()
                });
                let err = relative_error(analytic[c], num, 1e-4);
                worst = worst.max(err);
                assert!(
                    err < 1e-5,
                    "{}[{c}] {} vs {}",
                    m.store.name(id),
                    analytic[c],
                    num
                );
            }
        }
        assert!(worst < 1e-5);
    }
}

proptest! {
    #[test]
    fn decode_respects_span_bounds(
        begin in prop::collection::vec(-5.0f64..5.0, 18),
        end in prop::collection::vec(-5.0f64..5.0, 18),
        cap in 1usize..6,
    ) {
        let (_, plan) = setup::<f32>(small_config());
        let n = plan.n_text();
        let p = decode(&begin[..n], &end[..n], &plan, cap);
        prop_assert!(p.begin <= p.end);
        prop_assert!(p.end - p.begin < cap);
        prop_assert!(p.end < plan.node_end[p.begin]);
        prop_assert!(p.score.is_finite() && p.score <= 0.0);
    }
}

#[test]
fn decode_ties_go_to_smallest_index() {
    let (_, plan) = setup::<f32>(small_config());
    let n = plan.n_text();
    let mut begin = vec![0.0; n];
    begin[3] = 5.0;
    begin[4] = 5.0;
    let p = decode(&begin, &vec![1.0; n], &plan, 64);
    assert_eq!((p.begin, p.end), (3, 3));
    let mut end = vec![0.0; n];
    end[4] = 9.0;
    let p = decode(&begin, &end, &plan, 64);
    assert_eq!((p.begin, p.end), (3, 4));
}

#[test]
fn grown_tables_copy_unk_and_keep_outputs() {
    let (m, plan) = setup::<f64>(small_config());
    let old = m.sizes();
    let sizes = TableSizes {
        words: old.words + 3,
        tags: old.tags + 1,
        fields: old.fields + 1,
    };
    let g = m.grow_tables(sizes).unwrap();
    assert_eq!(g.sizes(), sizes);
    let word = g.tensor("emb.word").unwrap();
    for r in old.words..sizes.words {
        assert_eq!(word.row_slice(r), word.row_slice(UNK_ID as usize));
    }
    let tag = g.tensor("emb.tag").unwrap();
    assert_eq!(tag.row_slice(old.tags), tag.row_slice(UNK_TAG_ID as usize));
    assert!(g
        .tensor("emb.field")
        .unwrap()
        .row_slice(old.fields)
        .iter()
        .all(|&x| x == 0.0));
    assert_eq!(
        text_output(&g, &plan, 1).data(),
        text_output(&m, &plan, 1).data()
    );

    let mut unk = plan.clone();
    unk.word_ids[0] = UNK_ID;
    let mut new = plan.clone();
    new.word_ids[0] = old.words as u32 + 1;
    assert_eq!(
        text_output(&g, &unk, 1).data(),
        text_output(&g, &new, 1).data()
    );
    assert!(m.grow_tables(TableSizes { words: 1, ..old }).is_err());
}
