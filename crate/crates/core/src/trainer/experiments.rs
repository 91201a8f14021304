use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    continue_training, evaluate_prepared, fine_tune, prepare, table_sizes, train_prepared,
    TrainConfig,
};
use crate::corpus::{build_vocab, generate_corpus, FieldSchema, LabeledPage, Splits};
use crate::dom::Vocab;
use crate::error::{Error, Result};
use crate::model::{Pattern, WebFormer};

pub const DEFAULT_SHOTS: [usize; 7] = [0, 1, 2, 5, 10, 50, 100];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferConfig {
    pub source_domains: Vec<String>,
    pub target_domain: String,
    pub shots: Vec<usize>,
    pub seeds: Vec<u64>,
    pub pages_per_domain: usize,
    pub noise: f64,
    /// Pretraining on the source domains; its seed is replaced per run.
    pub pretrain: TrainConfig,
    pub finetune_steps: usize,
    pub finetune_batch: usize,
    pub finetune_lr: f64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            source_domains: vec!["products".into(), "movies".into()],
            target_domain: "events".into(),
            shots: DEFAULT_SHOTS.to_vec(),
            seeds: vec![0, 1, 2],
            pages_per_domain: 500,
            noise: 0.5,
            pretrain: TrainConfig {
                word_dropout: 0.15,
                ..TrainConfig::default()
            },
            finetune_steps: 2000,
            finetune_batch: 16,
            finetune_lr: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    pub shots: usize,
    /// `None` for the seed average.
    pub seed: Option<u64>,
    pub exact_match: f64,
    pub per_field: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub runs: Vec<TransferRow>,
    /// One row per shot count, averaged over seeds.
    pub mean: Vec<TransferRow>,
}

impl TransferReport {
    pub fn mean_field_em(&self, shots: usize, field: &str) -> Option<f64> {
        self.mean
            .iter()
            .find(|r| r.shots == shots)?
            .per_field
            .get(field)
            .copied()
    }
}

fn average(shots: usize, rows: &[&TransferRow]) -> TransferRow {
    let n = rows.len().max(1) as f64;
    let mut per_field: BTreeMap<String, f64> = BTreeMap::new();
    for r in rows {
        for (f, v) in &r.per_field {
            *per_field.entry(f.clone()).or_default() += v / n;
        }
    }
    TransferRow {
        shots,
        seed: None,
        exact_match: rows.iter().map(|r| r.exact_match).sum::<f64>() / n,
        per_field,
    }
}

/// Pretrain on the source domains, then fine-tune on `k` target pages for
/// every shot count `k` and score the target test split.
pub fn transfer_experiment(cfg: &TransferConfig) -> Result<TransferReport> {
    if cfg.seeds.is_empty() || cfg.shots.is_empty() {
        return Err(Error::Config(
            "transfer needs at least one seed and one shot count".into(),
        ));
    }
    if cfg.source_domains.iter().any(|d| *d == cfg.target_domain) {
        return Err(Error::Config(format!(
            "target domain {} is also a source",
            cfg.target_domain
        )));
    }
    let mut report = TransferReport::default();
    for &seed in &cfg.seeds {
        let mut domains: Vec<&str> = cfg.source_domains.iter().map(String::as_str).collect();
        domains.push(&cfg.target_domain);
        let splits = generate_corpus(&domains, cfg.pages_per_domain, seed, cfg.noise)?;
        let is_target = |p: &&LabeledPage| p.domain == cfg.target_domain;
        let target_train: Vec<LabeledPage> =
            splits.train.iter().filter(is_target).cloned().collect();
        if let Some(&k) = cfg.shots.iter().find(|&&k| k > target_train.len()) {
            return Err(Error::Config(format!(
                "{k} shots requested but only {} target training pages exist",
                target_train.len()
            )));
        }
        let source = |pages: &[LabeledPage]| -> Vec<LabeledPage> {
            pages
                .iter()
                .filter(|p| p.domain != cfg.target_domain)
                .cloned()
                .collect()
        };
        let target_test: Vec<LabeledPage> = splits.test.iter().filter(is_target).cloned().collect();

        // Target text is UNK until fine-tuning adds the shot pages' words.
        let target_fields = FieldSchema::by_domain(&cfg.target_domain)?;
        let target_fields = Vocab::new([], [], target_fields.field_names().map(String::from));
        let vocab = build_vocab(&source(&splits.train), 1)?.extend(&target_fields);
        let pre_cfg = TrainConfig {
            seed,
            ..cfg.pretrain.clone()
        };
        let model_cfg = &pre_cfg.model;
        let src_train = prepare(&source(&splits.train), &vocab, model_cfg, pre_cfg.caps)?;
        let src_dev = prepare(&source(&splits.dev), &vocab, model_cfg, pre_cfg.caps)?;
        let pretrained =
            train_prepared(&pre_cfg, table_sizes(&vocab), &src_train, Some(&src_dev))?.model;

        for &k in &cfg.shots {
            let (model, vocab) = if k > 0 {
                let vocab = vocab.extend(&build_vocab(&target_train[..k], 1)?);
                let mut model = pretrained.grow_tables(table_sizes(&vocab))?;
                let shots = prepare(&target_train[..k], &vocab, model_cfg, pre_cfg.caps)?;
                fine_tune(
                    &mut model,
                    &shots,
                    cfg.finetune_steps,
                    cfg.finetune_batch,
                    cfg.finetune_lr,
                    seed ^ k as u64,
                )?;
                (model, vocab)
            } else {
                (pretrained.clone(), vocab.clone())
            };
            let test = prepare(&target_test, &vocab, model_cfg, pre_cfg.caps)?;
            let m = evaluate_prepared(&model, &test)?;
            log::info!("transfer seed {seed} shots {k}: EM {:.4}", m.exact_match);
            report.runs.push(TransferRow {
                shots: k,
                seed: Some(seed),
                exact_match: m.exact_match,
                per_field: m
                    .per_field
                    .iter()
                    .map(|(f, s)| (f.clone(), s.exact_match))
                    .collect(),
            });
        }
    }
    for &k in &cfg.shots {
        let rows: Vec<&TransferRow> = report.runs.iter().filter(|r| r.shots == k).collect();
        report.mean.push(average(k, &rows));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub train: TrainConfig,
    /// Patterns removed one at a time; the full model always runs too.
    pub disable: Vec<Pattern>,
    pub seeds: Vec<u64>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            train: TrainConfig::default(),
            disable: Pattern::ALL.to_vec(),
            seeds: vec![0, 1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// `full` or `-<pattern>`.
    pub variant: String,
    pub test_em: Vec<f64>,
    pub test_f1: Vec<f64>,
    pub mean_em: f64,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seeds: Vec<u64>,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn mean_em(&self, variant: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.variant == variant)
            .map(|r| r.mean_em)
    }
}

/// Train and test the full model and every single-pattern ablation on the
/// same corpus, once per seed.
pub fn ablation(cfg: &AblationConfig, splits: &Splits, vocab: &Vocab) -> Result<AblationReport> {
    if cfg.seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    let mut variants = vec![("full".to_string(), cfg.train.model.flags)];
    for p in &cfg.disable {
        variants.push((format!("-{}", p.name()), cfg.train.model.flags.without(*p)));
    }
    let base = &cfg.train;
    let mut report = AblationReport {
        seeds: cfg.seeds.clone(),
        rows: Vec::new(),
    };
    for (name, flags) in variants {
        let mut model_cfg = base.model.clone();
        model_cfg.flags = flags;
        let train_set = prepare(&splits.train, vocab, &model_cfg, base.caps)?;
        let dev_set = prepare(&splits.dev, vocab, &model_cfg, base.caps)?;
        let test_set = prepare(&splits.test, vocab, &model_cfg, base.caps)?;
        let mut row = AblationRow {
            variant: name.clone(),
            test_em: Vec::new(),
            test_f1: Vec::new(),
            mean_em: 0.0,
            mean_f1: 0.0,
        };
        for &seed in &cfg.seeds {
            let mut tc = base.clone();
            tc.seed = seed;
            tc.model = model_cfg.clone();
            let model = WebFormer::new(tc.model.clone(), table_sizes(vocab), seed)?;
            let out = continue_training(&tc, model, &train_set, Some(&dev_set))?;
            let m = evaluate_prepared(&out.model, &test_set)?;
            log::info!("ablation {name} seed {seed}: test EM {:.4}", m.exact_match);
            row.test_em.push(m.exact_match);
            row.test_f1.push(m.f1);
        }
        let n = row.test_em.len() as f64;
        row.mean_em = row.test_em.iter().sum::<f64>() / n;
        row.mean_f1 = row.test_f1.iter().sum::<f64>() / n;
        report.rows.push(row);
    }
    Ok(report)
}
