use proptest::prelude::*;

use super::*;
use crate::dom::{ingest, locate_answer, Caps, UNK_ID};

#[test]
fn events_page_has_each_field_once() {
    let page = gen_page(&FieldSchema::events(), 7, 1.0);
    let fields: Vec<_> = page.labels.iter().map(|l| l.field.as_str()).collect();
    assert_eq!(fields, ["name", "description", "date", "location"]);
    assert_eq!(page.domain, "events");
}

#[test]
fn zero_noise_template_is_fixed() {
    let a = gen_page(&FieldSchema::movies(), 1, 0.0);
    let b = gen_page(&FieldSchema::movies(), 2, 0.0);
    let skeleton = |html: &str| {
        let tree = parse_html(html).unwrap();
        tree.preorder()
            .iter()
            .map(|&i| tree.nodes[i].tag.clone())
            .collect::<Vec<_>>()
    };
    assert_eq!(skeleton(&a.html), skeleton(&b.html));
    assert_eq!(a, gen_page(&FieldSchema::movies(), 1, 0.0));
}

#[test]
fn generated_labels_align_and_round_trip() {
    let splits = generate_corpus(&DOMAINS, 40, 3, 1.0).unwrap();
    let vocab = build_vocab(&splits.train, 1).unwrap();
    for page in splits.train.iter().chain(&splits.test) {
        let ing = ingest(&page.html, &vocab, Caps::default()).unwrap();
        for l in &page.labels {
            let loc = locate_answer(&ing.doc, &l.value)
                .unwrap_or_else(|| panic!("{} {:?}", l.field, l.value));
            let (b, e) = loc.global(&ing.doc).unwrap();
            assert_eq!(em_f1(&ing.doc.detokenize(b, e), &l.value).unwrap().0, 1.0);
        }
    }
}

#[test]
fn depth_and_distractors_vary_with_noise() {
    let lens: Vec<usize> = (0..30)
        .map(|s| {
            parse_html(&gen_page(&FieldSchema::products(), s, 1.0).html)
                .unwrap()
                .nodes
                .len()
        })
        .collect();
    assert!(
        lens.iter().max().unwrap() - lens.iter().min().unwrap() > 10,
        "{lens:?}"
    );
}

#[test]
fn splits_are_eight_one_one() {
    let s = generate_corpus(&["events", "products"], 20, 0, 1.0).unwrap();
    assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (32, 4, 4));
    assert_eq!(
        s,
        generate_corpus(&["events", "products"], 20, 0, 1.0).unwrap()
    );
    assert!(matches!(
        generate_corpus(&["events"], 0, 0, 1.0),
        Err(Error::Config(_))
    ));
    assert!(generate_corpus(&["recipes"], 5, 0, 1.0).is_err());
}

#[test]
fn dataset_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    let pages = generate_corpus(&DOMAINS, 34, 9, 1.0).unwrap().train;
    assert!(pages.len() >= 78);
    write_dataset(&path, &pages).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(read_dataset(&path).unwrap(), pages);
    write_dataset(&path, &read_dataset(&path).unwrap()).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
}

#[test]
fn truncated_last_line_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    let pages = generate_corpus(&["events"], 10, 1, 1.0).unwrap().train;
    write_dataset(&path, &pages).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() - 20]).unwrap();
    match read_dataset(&path) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, pages.len()),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn empty_file_is_empty_dataset() {
    let f = tempfile::NamedTempFile::new().unwrap();
    assert!(read_dataset(f.path()).unwrap().is_empty());
    assert!(matches!(build_vocab(&[], 2), Err(Error::EmptyDataset)));
}

#[test]
fn vocab_frequency_threshold_and_fields() {
    let mut pages = generate_corpus(&DOMAINS, 20, 4, 1.0).unwrap().train;
    pages.push(LabeledPage {
        html: "<p>zyzzyva price price</p>".into(),
        domain: "products".into(),
        labels: vec![],
    });
    let v = build_vocab(&pages, 2).unwrap();
    assert!(v.contains_word("price"));
    assert_eq!(v.word_id("zyzzyva"), UNK_ID);
    assert_eq!(v.n_fields(), 12);
    for f in [
        "name",
        "description",
        "date",
        "location",
        "brand",
        "price",
        "color",
        "genre",
        "duration",
        "director",
        "actor",
        "published_date",
    ] {
        v.field_id(f).unwrap();
    }
}

#[test]
fn em_f1_examples() {
    assert_eq!(em_f1("Dec 13", "Dec 13").unwrap(), (1.0, 1.0));
    let (em, f1) = em_f1("Fun Festival", "Fun Festival at Square Park").unwrap();
    assert_eq!(em, 0.0);
    assert!((f1 - 4.0 / 7.0).abs() < 1e-12);
    assert_eq!(em_f1("", "x").unwrap(), (0.0, 0.0));
    assert!(matches!(em_f1("x", "  "), Err(Error::InvalidGold)));
}

#[test]
fn buckets_and_metrics() {
    assert_eq!(length_bucket(600), "512-1024");
    assert_eq!(length_bucket(0), "0-512");
    assert_eq!(length_bucket(512), "512-1024");
    assert_eq!(length_bucket(5000), "2048+");
    let records = vec![
        PredictionRecord {
            field: "date".into(),
            length: 600,
            predicted: "Dec 13".into(),
            gold: "Dec 13".into(),
        },
        PredictionRecord {
            field: "name".into(),
            length: 100,
            predicted: "".into(),
            gold: "Fun Fest".into(),
        },
    ];
    let m = Metrics::from_records(&records).unwrap();
    assert_eq!((m.exact_match, m.f1, m.count), (0.5, 0.5, 2));
    assert_eq!(m.per_bucket.len(), 4);
    assert_eq!(m.per_bucket["512-1024"].exact_match, 1.0);
    assert_eq!(m.field_em("name"), 0.0);
    let mut csv = Vec::new();
    m.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(csv.lines().count(), 1 + 1 + 2 + 4);
    assert!(csv.starts_with("scope,key,count,exact_match,f1\noverall,all,2,0.500000,0.500000"));
}

proptest! {
    #[test]
    fn f1_is_symmetric_and_bounded(a in "[a-c ]{1,12}", b in "[a-c ]{1,12}") {
        prop_assume!(!tokenize_text(&a).is_empty() && !tokenize_text(&b).is_empty());
        let (em1, f1) = em_f1(&a, &b).unwrap();
        let (em2, f2) = em_f1(&b, &a).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-12);
        prop_assert_eq!(em1, em2);
        prop_assert!(0.0 <= em1 && em1 <= f1 && f1 <= 1.0);
    }
}
