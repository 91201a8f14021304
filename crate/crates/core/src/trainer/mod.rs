//! Training loop, evaluation, checkpoints and the transfer/ablation drivers.

mod checkpoint;
mod experiments;

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Manifest, TensorEntry, MANIFEST_FILE, PARAMS_FILE,
};
pub use experiments::{
    ablation, transfer_experiment, AblationConfig, AblationReport, AblationRow, TransferConfig,
    TransferReport, TransferRow, DEFAULT_SHOTS,
};

use crate::corpus::{LabeledPage, Metrics, PredictionRecord};
use crate::dom::{ingest, locate_answer, Caps, TokenizedDoc, Vocab, UNK_ID};
use crate::error::{Error, Result};
use crate::model::{DocPlan, ModelConfig, TableSizes, WebFormer};
use crate::numerics::{Adam, ParamStore};

/// Largest tolerated fraction of pages skipped during preparation.
pub const MAX_SKIP_RATE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Constant Adam learning rate; 0 freezes the parameters.
    pub lr: f64,
    pub seed: u64,
    pub train_path: Option<PathBuf>,
    pub dev_path: Option<PathBuf>,
    pub vocab_path: Option<PathBuf>,
    /// Checkpoint directory.
    pub out_dir: Option<PathBuf>,
    pub model: ModelConfig,
    pub caps: Caps,
    /// Dev evaluation every this many epochs; the last epoch is always evaluated.
    pub eval_every: usize,
    /// Also score the training set with the returned parameters.
    pub eval_train: bool,
    /// Stop after this many dev evaluations without improvement.
    pub patience: Option<usize>,
    /// Probability of replacing each input word with UNK in a training example.
    pub word_dropout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 16,
            lr: 1e-3,
            seed: 0,
            train_path: None,
            dev_path: None,
            vocab_path: None,
            out_dir: None,
            model: ModelConfig::desk(),
            caps: Caps::default(),
            eval_every: 1,
            eval_train: false,
            patience: None,
            word_dropout: 0.0,
        }
    }
}

impl TrainConfig {
    /// Full-size model with batch 64 and lr 3e-5.
    pub fn base() -> TrainConfig {
        TrainConfig {
            batch_size: 64,
            lr: 3e-5,
            model: ModelConfig::base(),
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be at least 1".into()));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!(
                "lr must be finite and non-negative, got {}",
                self.lr
            )));
        }
        if !(0.0..1.0).contains(&self.word_dropout) {
            return Err(Error::Config(format!(
                "word_dropout {} not in [0, 1)",
                self.word_dropout
            )));
        }
        self.model.validate()
    }
}

pub fn table_sizes(vocab: &Vocab) -> TableSizes {
    TableSizes {
        words: vocab.n_words(),
        tags: vocab.n_tags(),
        fields: vocab.n_fields(),
    }
}

/// One labeled field of a prepared page.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedLabel {
    pub field: String,
    pub field_id: u32,
    pub gold: String,
    /// Inclusive global text span, if the value occurs in a single node
    /// within the span length limit.
    pub span: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct PreparedPage {
    pub doc: TokenizedDoc,
    pub plan: DocPlan,
    pub labels: Vec<PreparedLabel>,
}

/// Pages ready for the model, with the count of pages that failed ingest.
#[derive(Debug, Clone, Default)]
pub struct PreparedSet {
    pub pages: Vec<PreparedPage>,
    pub skipped: usize,
    pub total: usize,
}

impl PreparedSet {
    /// `(page, label)` indices of every example with a trainable span.
    pub fn examples(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (p, page) in self.pages.iter().enumerate() {
            for (l, label) in page.labels.iter().enumerate() {
                if label.span.is_some() {
                    out.push((p, l));
                }
            }
        }
        out
    }

    pub fn n_labels(&self) -> usize {
        self.pages.iter().map(|p| p.labels.len()).sum()
    }
}

/// Ingest and plan every page. Pages that fail ingest are skipped with a
/// warning; more than [`MAX_SKIP_RATE`] of them is an error. Fields missing
/// from the vocabulary are an error.
pub fn prepare(
    pages: &[LabeledPage],
    vocab: &Vocab,
    model: &ModelConfig,
    caps: Caps,
) -> Result<PreparedSet> {
    let mut out = PreparedSet {
        total: pages.len(),
        ..PreparedSet::default()
    };
    for (i, page) in pages.iter().enumerate() {
        let ing = match ingest(&page.html, vocab, caps) {
            Ok(ing) => ing,
            Err(e) => {
                log::warn!("skipping page {i}: {e}");
                out.skipped += 1;
                continue;
            }
        };
        let plan = DocPlan::new(&ing, model)?;
        let mut labels = Vec::with_capacity(page.labels.len());
        for label in &page.labels {
            let field_id = vocab.field_id(&label.field)?;
            let span = locate_answer(&ing.doc, &label.value)
                .and_then(|loc| loc.global(&ing.doc))
                .filter(|&(b, e)| e - b < model.max_span_len);
            labels.push(PreparedLabel {
                field: label.field.clone(),
                field_id,
                gold: label.value.clone(),
                span,
            });
        }
        out.pages.push(PreparedPage {
            doc: ing.doc,
            plan,
            labels,
        });
    }
    if out.total > 0 && out.skipped as f64 > MAX_SKIP_RATE * out.total as f64 {
        return Err(Error::DataQuality {
            skipped: out.skipped,
            total: out.total,
        });
    }
    Ok(out)
}

/// Predictions for every label of every prepared page, scored against gold.
/// Pages are split across the available cores.
pub fn predict_records(model: &WebFormer<f32>, set: &PreparedSet) -> Result<Vec<PredictionRecord>> {
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(set.pages.len().max(1));
    let chunk = set.pages.len().div_ceil(threads).max(1);
    let score_pages = |pages: &[PreparedPage]| -> Result<Vec<PredictionRecord>> {
        let mut out = Vec::new();
        for page in pages {
            for label in &page.labels {
                let pred = model.predict(&page.plan, label.field_id)?;
                out.push(PredictionRecord {
                    field: label.field.clone(),
                    length: page.doc.n_text(),
                    predicted: page.doc.detokenize(pred.begin, pred.end),
                    gold: label.gold.clone(),
                });
            }
        }
        Ok(out)
    };
    if threads <= 1 {
        return score_pages(&set.pages);
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = set
            .pages
            .chunks(chunk)
            .map(|c| s.spawn(move || score_pages(c)))
            .collect();
        let mut out = Vec::new();
        for h in handles {
            out.extend(h.join().expect("evaluation worker panicked")?);
        }
        Ok(out)
    })
}

pub fn evaluate_prepared(model: &WebFormer<f32>, set: &PreparedSet) -> Result<Metrics> {
    Metrics::from_records(&predict_records(model, set)?)
}

/// Metrics of a checkpointed model on raw pages. The vocabulary must be the
/// one the checkpoint was trained with.
pub fn evaluate(
    model: &WebFormer<f32>,
    manifest: &Manifest,
    vocab: &Vocab,
    pages: &[LabeledPage],
    caps: Caps,
) -> Result<Metrics> {
    let actual = vocab.hash();
    if manifest.vocab_hash != actual {
        return Err(Error::VocabHash {
            expected: manifest.vocab_hash.clone(),
            actual,
        });
    }
    let set = prepare(pages, vocab, &model.config, caps)?;
    evaluate_prepared(model, &set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev: Option<Metrics>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best dev EM (the last epoch if no
    /// dev set was given).
    pub model: WebFormer<f32>,
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
    pub train_metrics: Option<Metrics>,
    pub skipped: usize,
}

fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn drop_words(plan: &DocPlan, rate: f64, seed: u64) -> DocPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = plan.clone();
    for w in &mut out.word_ids {
        if rng.gen_bool(rate) {
            *w = UNK_ID;
        }
    }
    out
}

/// Adam steps over `(page, label)` examples in the given order, in batches.
/// Returns the mean example loss.
fn run_batches(
    model: &mut WebFormer<f32>,
    set: &PreparedSet,
    order: &[(usize, usize)],
    batch_size: usize,
    word_dropout: f64,
    adam: Option<&Adam>,
    seed: u64,
) -> Result<f64> {
    let mut total = 0.0;
    for (step, batch) in order.chunks(batch_size).enumerate() {
        let scale = 1.0 / batch.len() as f32;
        for (k, &(p, l)) in batch.iter().enumerate() {
            let page = &set.pages[p];
            let label = &page.labels[l];
            let gold = label.span.expect("examples have spans");
            let dropout_seed = mix(seed, (step * batch_size + k) as u64);
            let dropped;
            let plan = if word_dropout > 0.0 {
                dropped = drop_words(&page.plan, word_dropout, !dropout_seed);
                &dropped
            } else {
                &page.plan
            };
            let (loss, grads) = model.gradients(plan, label.field_id, gold, true, dropout_seed)?;
            total += loss as f64;
            if adam.is_some() {
                model.store.accumulate(&grads, scale);
            }
        }
        if let Some(adam) = adam {
            adam.step(&mut model.store);
        }
    }
    Ok(total / order.len().max(1) as f64)
}

/// Train from scratch on prepared sets.
pub fn train_prepared(
    cfg: &TrainConfig,
    sizes: TableSizes,
    train: &PreparedSet,
    dev: Option<&PreparedSet>,
) -> Result<TrainOutcome> {
    let model = WebFormer::new(cfg.model.clone(), sizes, cfg.seed)?;
    continue_training(cfg, model, train, dev)
}

/// Train an existing model. Examples are shuffled each epoch from the seed;
/// the parameters with the best dev EM are returned.
pub fn continue_training(
    cfg: &TrainConfig,
    mut model: WebFormer<f32>,
    train: &PreparedSet,
    dev: Option<&PreparedSet>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut order = train.examples();
    if order.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let adam = if cfg.lr > 0.0 {
        Some(Adam::new(cfg.lr)?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ParamStore<f32>)> = None;
    let mut stale = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let loss = run_batches(
            &mut model,
            train,
            &order,
            cfg.batch_size,
            cfg.word_dropout,
            adam.as_ref(),
            mix(cfg.seed, epoch as u64),
        )?;
        let dev_metrics = match dev {
            Some(d)
                if !d.pages.is_empty() && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) =>
            {
                Some(evaluate_prepared(&model, d)?)
            }
            _ => None,
        };
        log::info!(
            "epoch {epoch}: train loss {loss:.4}{}",
            dev_metrics
                .as_ref()
                .map(|m| format!(", dev EM {:.4} F1 {:.4}", m.exact_match, m.f1))
                .unwrap_or_default()
        );
        if let Some(m) = &dev_metrics {
            if best.as_ref().is_none_or(|b| m.exact_match > b.0) {
                best = Some((m.exact_match, epoch, model.store.clone()));
                stale = 0;
            } else {
                stale += 1;
            }
        }
        history.push(EpochLog {
            epoch,
            train_loss: loss,
            dev: dev_metrics,
        });
        if cfg.patience.is_some_and(|p| stale >= p) {
            log::info!("no dev improvement in {stale} evaluations, stopping");
            break;
        }
    }
    let best_epoch = match best {
        Some((_, epoch, store)) => {
            model.store = store;
            epoch
        }
        None => history.len(),
    };
    let train_metrics = if cfg.eval_train {
        Some(evaluate_prepared(&model, train)?)
    } else {
        None
    };
    Ok(TrainOutcome {
        model,
        best_epoch,
        history,
        train_metrics,
        skipped: train.skipped,
    })
}

/// `steps` Adam updates on batches drawn with replacement from the examples
/// of `set`.
pub fn fine_tune(
    model: &mut WebFormer<f32>,
    set: &PreparedSet,
    steps: usize,
    batch_size: usize,
    lr: f64,
    seed: u64,
) -> Result<f64> {
    let examples = set.examples();
    if examples.is_empty() || steps == 0 {
        return Ok(0.0);
    }
    let adam = if lr > 0.0 { Some(Adam::new(lr)?) } else { None };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bs = batch_size.max(1).min(examples.len());
    let mut loss = 0.0;
    for step in 0..steps {
        let batch: Vec<(usize, usize)> = examples.choose_multiple(&mut rng, bs).copied().collect();
        loss = run_batches(
            model,
            set,
            &batch,
            bs,
            0.0,
            adam.as_ref(),
            mix(seed, step as u64),
        )?;
    }
    Ok(loss)
}

/// Train on raw pages with a given vocabulary.
pub fn train(
    cfg: &TrainConfig,
    vocab: &Vocab,
    train_pages: &[LabeledPage],
    dev_pages: &[LabeledPage],
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_pages.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let train_set = prepare(train_pages, vocab, &cfg.model, cfg.caps)?;
    let dev_set = prepare(dev_pages, vocab, &cfg.model, cfg.caps)?;
    train_prepared(cfg, table_sizes(vocab), &train_set, Some(&dev_set))
}
