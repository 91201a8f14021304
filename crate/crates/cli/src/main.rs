//! `webformer` command-line driver.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use config::{print_resolved, resolve, Overrides};
use webformer::corpus::{
    build_vocab, generate_corpus, read_dataset, write_dataset, Metrics, DOMAINS,
};
use webformer::diagnostics::{
    bench_attention, gradcheck, ingest_dump, BenchMode, GradcheckOptions,
};
use webformer::dom::{ingest, Caps, Vocab};
use webformer::model::{DocPlan, ModelConfig, Pattern};
use webformer::trainer::{
    self, ablation, load_checkpoint, save_checkpoint, transfer_experiment, AblationConfig,
    TrainConfig, TransferConfig,
};
use webformer::{Error, Result};

const VOCAB_FILE: &str = "vocab.json";

#[derive(Debug, Parser)]
#[command(
    name = "webformer",
    version,
    about = "Structured field extraction from web pages"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// JSON config file; flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic labeled corpus as train/dev/test JSONL.
    GenCorpus(GenCorpusArgs),
    /// Build a vocabulary file from a training set.
    BuildVocab(BuildVocabArgs),
    /// Train a model and write the best-dev checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Extract one field from one HTML file.
    Extract(ExtractArgs),
    /// Finite-difference check of the analytic gradients.
    Gradcheck(GradcheckArgs),
    /// Attention FLOPs and forward time against text length.
    BenchAttn(BenchArgs),
    /// Train the full model and single-pattern ablations.
    Ablate(AblateArgs),
    /// Pretrain on source domains, fine-tune on few target pages.
    Transfer(TransferArgs),
    /// Print the parsed graph, tokens and attention topology of a page.
    IngestDump(IngestDumpArgs),
}

fn parse_list<T: std::str::FromStr>(items: &[String]) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    items
        .iter()
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| Error::Config(format!("{s:?}: {e}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GenCorpusConfig {
    domains: Vec<String>,
    pages_per_domain: usize,
    seed: u64,
    noise: f64,
    out: PathBuf,
}

impl Default for GenCorpusConfig {
    fn default() -> Self {
        GenCorpusConfig {
            domains: DOMAINS.iter().map(|d| d.to_string()).collect(),
            pages_per_domain: 1000,
            seed: 0,
            noise: 0.5,
            out: PathBuf::from("data"),
        }
    }
}

#[derive(Debug, Args)]
struct GenCorpusArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_delimiter = ',')]
    domains: Option<Vec<String>>,
    #[arg(long)]
    pages_per_domain: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Template variation in [0, 1].
    #[arg(long)]
    noise: Option<f64>,
    /// Output directory for train.jsonl, dev.jsonl and test.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn gen_corpus(a: GenCorpusArgs) -> Result<()> {
    let mut o = Overrides::default();
    o.set("domains", a.domains)
        .set("pages_per_domain", a.pages_per_domain)
        .set("seed", a.seed)
        .set("noise", a.noise)
        .set("out", a.out);
    let cfg: GenCorpusConfig = resolve(a.config.config.as_deref(), &o)?;
    print_resolved("gen-corpus", &cfg);
    let domains: Vec<&str> = cfg.domains.iter().map(String::as_str).collect();
    let splits = generate_corpus(&domains, cfg.pages_per_domain, cfg.seed, cfg.noise)?;
    fs::create_dir_all(&cfg.out)?;
    for (name, pages) in [
        ("train", &splits.train),
        ("dev", &splits.dev),
        ("test", &splits.test),
    ] {
        let path = cfg.out.join(format!("{name}.jsonl"));
        write_dataset(&path, pages)?;
        println!("wrote {} pages to {}", pages.len(), path.display());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BuildVocabConfig {
    train: PathBuf,
    min_freq: usize,
    out: PathBuf,
}

impl Default for BuildVocabConfig {
    fn default() -> Self {
        BuildVocabConfig {
            train: PathBuf::from("data/train.jsonl"),
            min_freq: 1,
            out: PathBuf::from("data/vocab.json"),
        }
    }
}

#[derive(Debug, Args)]
struct BuildVocabArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    min_freq: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_vocab_cmd(a: BuildVocabArgs) -> Result<()> {
    let mut o = Overrides::default();
    o.set("train", a.train)
        .set("min_freq", a.min_freq)
        .set("out", a.out);
    let cfg: BuildVocabConfig = resolve(a.config.config.as_deref(), &o)?;
    print_resolved("build-vocab", &cfg);
    let vocab = build_vocab(&read_dataset(&cfg.train)?, cfg.min_freq)?;
    vocab.save(&cfg.out)?;
    println!(
        "wrote {} words, {} tags, {} fields to {} (hash {})",
        vocab.n_words(),
        vocab.n_tags(),
        vocab.n_fields(),
        cfg.out.display(),
        vocab.hash()
    );
    Ok(())
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Checkpoint directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    patience: Option<usize>,
    /// Chance of replacing each input word with UNK during training.
    #[arg(long)]
    word_dropout: Option<f64>,
    /// Remove one attention pattern (h2h, h2t, t2h, t2t).
    #[arg(long)]
    disable: Option<Pattern>,
}

fn required<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("{what} path is required")))
}

fn write_metrics(metrics: &Metrics, json: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    if let Some(p) = json {
        fs::write(p, serde_json::to_string_pretty(metrics)? + "\n")?;
    }
    if let Some(p) = csv {
        metrics.write_csv(fs::File::create(p)?)?;
    }
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let mut o = Overrides::default();
    o.set("train_path", a.train)
        .set("dev_path", a.dev)
        .set("vocab_path", a.vocab)
        .set("out_dir", a.out)
        .set("epochs", a.epochs)
        .set("batch_size", a.batch_size)
        .set("lr", a.lr)
        .set("seed", a.seed)
        .set("patience", a.patience)
        .set("word_dropout", a.word_dropout);
    let mut cfg: TrainConfig = resolve(a.config.config.as_deref(), &o)?;
    if let Some(p) = a.disable {
        cfg.model.flags = cfg.model.flags.without(p);
    }
    print_resolved("train", &cfg);
    cfg.validate()?;
    let vocab = Vocab::load(required(&cfg.vocab_path, "vocab")?)?;
    let train_pages = read_dataset(required(&cfg.train_path, "train")?)?;
    let dev_pages = match &cfg.dev_path {
        Some(p) => read_dataset(p)?,
        None => Vec::new(),
    };
    let out_dir = required(&cfg.out_dir, "out")?.to_path_buf();
    let outcome = trainer::train(&cfg, &vocab, &train_pages, &dev_pages)?;
    for h in &outcome.history {
        match &h.dev {
            Some(m) => println!(
                "epoch {:>2}  loss {:.4}  dev EM {:.4}  F1 {:.4}",
                h.epoch, h.train_loss, m.exact_match, m.f1
            ),
            None => println!("epoch {:>2}  loss {:.4}", h.epoch, h.train_loss),
        }
    }
    save_checkpoint(&out_dir, &outcome.model, &vocab.hash())?;
    vocab.save(out_dir.join(VOCAB_FILE))?;
    fs::write(
        out_dir.join("history.json"),
        serde_json::to_string_pretty(&outcome.history)? + "\n",
    )?;
    if let Some(m) = outcome.history.iter().rev().find_map(|h| h.dev.as_ref()) {
        write_metrics(
            m,
            Some(&out_dir.join("dev_metrics.json")),
            Some(&out_dir.join("dev_metrics.csv")),
        )?;
    }
    println!(
        "best epoch {}; checkpoint in {}",
        outcome.best_epoch,
        out_dir.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Defaults to the vocabulary stored with the checkpoint.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct EvalResolved<'a> {
    checkpoint: &'a Path,
    vocab: &'a Path,
    data: &'a Path,
    out_json: Option<&'a Path>,
    out_csv: Option<&'a Path>,
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let vocab_path = a
        .vocab
        .clone()
        .unwrap_or_else(|| a.checkpoint.join(VOCAB_FILE));
    print_resolved(
        "eval",
        &EvalResolved {
            checkpoint: &a.checkpoint,
            vocab: &vocab_path,
            data: &a.data,
            out_json: a.out_json.as_deref(),
            out_csv: a.out_csv.as_deref(),
        },
    );
    let (model, manifest) = load_checkpoint(&a.checkpoint)?;
    let vocab = Vocab::load(&vocab_path)?;
    let pages = read_dataset(&a.data)?;
    let metrics = trainer::evaluate(&model, &manifest, &vocab, &pages, Caps::default())?;
    write_metrics(&metrics, a.out_json.as_deref(), a.out_csv.as_deref())?;
    println!("{}", serde_json::to_string_pretty(&metrics)?);
    Ok(())
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    html: PathBuf,
    #[arg(long)]
    field: String,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Extraction {
    field: String,
    value: String,
    score: f64,
    begin: usize,
    end: usize,
}

fn extract_cmd(a: ExtractArgs) -> Result<()> {
    let vocab_path = a
        .vocab
        .clone()
        .unwrap_or_else(|| a.checkpoint.join(VOCAB_FILE));
    print_resolved(
        "extract",
        &serde_json::json!({
            "html": a.html, "field": a.field, "checkpoint": a.checkpoint, "vocab": vocab_path,
        }),
    );
    let (model, manifest) = load_checkpoint(&a.checkpoint)?;
    let vocab = Vocab::load(&vocab_path)?;
    if manifest.vocab_hash != vocab.hash() {
        return Err(Error::VocabHash {
            expected: manifest.vocab_hash,
            actual: vocab.hash(),
        });
    }
    let field = vocab.field_id(&a.field)?;
    let ing = ingest(&fs::read_to_string(&a.html)?, &vocab, Caps::default())?;
    let plan = DocPlan::new(&ing, &model.config)?;
    let pred = model.predict(&plan, field)?;
    let out = Extraction {
        field: a.field,
        value: ing.doc.detokenize(pred.begin, pred.end),
        score: pred.score,
        begin: pred.begin,
        end: pred.end,
    };
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GradcheckConfig {
    model: ModelConfig,
    coords: usize,
    seed: u64,
    tolerance: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        let o = GradcheckOptions::default();
        GradcheckConfig {
            model: ModelConfig::desk(),
            coords: o.coords,
            seed: o.seed,
            tolerance: o.tolerance,
        }
    }
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    coords: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tolerance: Option<f64>,
}

/// Ran to completion; `false` means the check's criterion was not met.
type Verdict = bool;

fn gradcheck_cmd(a: GradcheckArgs) -> Result<Verdict> {
    let mut o = Overrides::default();
    o.set("coords", a.coords)
        .set("seed", a.seed)
        .set("tolerance", a.tolerance);
    let cfg: GradcheckConfig = resolve(a.config.config.as_deref(), &o)?;
    print_resolved("gradcheck", &cfg);
    let opts = GradcheckOptions {
        coords: cfg.coords,
        seed: cfg.seed,
        tolerance: cfg.tolerance,
        ..GradcheckOptions::default()
    };
    let r = gradcheck(&cfg.model, opts)?;
    println!(
        "worst relative error {:.3e} at {}[{}] (analytic {:.6e}, numeric {:.6e})",
        r.worst.relative_error, r.worst.tensor, r.worst.index, r.worst.analytic, r.worst.numeric
    );
    for f in &r.failures {
        println!(
            "FAIL {}[{}]: analytic {:.6e} numeric {:.6e} relative error {:.3e}",
            f.tensor, f.index, f.analytic, f.numeric, f.relative_error
        );
    }
    println!(
        "{} of {} coordinates within {:e}",
        r.coords - r.failures.len(),
        r.coords,
        r.tolerance
    );
    Ok(r.passed())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BenchConfig {
    model: ModelConfig,
    lengths: Vec<usize>,
    modes: Vec<BenchMode>,
    repeats: usize,
    out: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            model: ModelConfig::desk(),
            lengths: vec![512, 1024, 2048],
            modes: vec![BenchMode::Webformer, BenchMode::Full],
            repeats: 5,
            out: None,
        }
    }
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<String>>,
    /// webformer, full, or a comma list of both.
    #[arg(long, value_delimiter = ',')]
    mode: Option<Vec<String>>,
    #[arg(long)]
    repeats: Option<usize>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Analytic ratio bounds checked on the 512 to 2048 span when both lengths run.
const WEBFORMER_FLOP_RATIO_MAX: f64 = 4.2;
const WEBFORMER_TIME_RATIO_MAX: f64 = 6.0;

fn bench_cmd(a: BenchArgs) -> Result<Verdict> {
    let mut o = Overrides::default();
    o.set(
        "lengths",
        a.lengths.as_deref().map(parse_list::<usize>).transpose()?,
    )
    .set(
        "modes",
        a.mode.as_deref().map(parse_list::<BenchMode>).transpose()?,
    )
    .set("repeats", a.repeats)
    .set("out", a.out);
    let cfg: BenchConfig = resolve(a.config.config.as_deref(), &o)?;
    print_resolved("bench-attn", &cfg);
    let rows = bench_attention(&cfg.model, &cfg.lengths, &cfg.modes, cfg.repeats)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["mode", "length", "flops", "ms"])
            .map_err(csv_err)?;
        for r in &rows {
            w.write_record([
                r.mode.name().to_string(),
                r.length.to_string(),
                r.flops.to_string(),
                format!("{:.4}", r.ms),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
    }
    match &cfg.out {
        Some(p) => fs::write(p, &buf)?,
        None => print!("{}", String::from_utf8_lossy(&buf)),
    }
    let find = |l: usize| {
        rows.iter()
            .find(|r| r.mode == BenchMode::Webformer && r.length == l)
    };
    if let (Some(a), Some(b)) = (find(512), find(2048)) {
        let flops = b.flops as f64 / a.flops as f64;
        let time = b.ms / a.ms;
        eprintln!("webformer 2048/512: flops ratio {flops:.3}, time ratio {time:.2}");
        return Ok(flops <= WEBFORMER_FLOP_RATIO_MAX && time <= WEBFORMER_TIME_RATIO_MAX);
    }
    Ok(true)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AblateConfig {
    train: TrainConfig,
    disable: Vec<Pattern>,
    seeds: Vec<u64>,
    train_path: Option<PathBuf>,
    dev_path: Option<PathBuf>,
    test_path: Option<PathBuf>,
    vocab_path: Option<PathBuf>,
    out: Option<PathBuf>,
}

impl Default for AblateConfig {
    fn default() -> Self {
        let d = AblationConfig::default();
        AblateConfig {
            train: d.train,
            disable: d.disable,
            seeds: d.seeds,
            train_path: None,
            dev_path: None,
            test_path: None,
            vocab_path: None,
            out: None,
        }
    }
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Patterns to ablate one at a time (h2h, h2t, t2h, t2t).
    #[arg(long, value_delimiter = ',')]
    disable: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<String>>,
    #[arg(long)]
    epochs: Option<usize>,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn ablate_cmd(a: AblateArgs) -> Result<()> {
    let mut o = Overrides::default();
    o.set("train_path", a.train)
        .set("dev_path", a.dev)
        .set("test_path", a.test)
        .set("vocab_path", a.vocab)
        .set(
            "disable",
            a.disable
                .as_deref()
                .map(parse_list::<Pattern>)
                .transpose()?,
        )
        .set(
            "seeds",
            a.seeds.as_deref().map(parse_list::<u64>).transpose()?,
        )
        .set("train.epochs", a.epochs)
        .set("out", a.out);
    let cfg: AblateConfig = resolve(a.config.config.as_deref(), &o)?;
    print_resolved("ablate", &cfg);
    let vocab = Vocab::load(required(&cfg.vocab_path, "vocab")?)?;
    let splits = webformer::corpus::Splits {
        train: read_dataset(required(&cfg.train_path, "train")?)?,
        dev: read_dataset(required(&cfg.dev_path, "dev")?)?,
        test: read_dataset(required(&cfg.test_path, "test")?)?,
    };
    let ab = AblationConfig {
        train: cfg.train.clone(),
        disable: cfg.disable.clone(),
        seeds: cfg.seeds.clone(),
    };
    let report = ablation(&ab, &splits, &vocab)?;
    println!("{:<8} {:>8} {:>8}  per-seed EM", "variant", "EM", "F1");
    for r in &report.rows {
        let per: Vec<String> = r.test_em.iter().map(|e| format!("{e:.4}")).collect();
        println!(
            "{:<8} {:>8.4} {:>8.4}  {}",
            r.variant,
            r.mean_em,
            r.mean_f1,
            per.join(" ")
        );
    }
    if let Some(p) = &cfg.out {
        fs::write(p, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(())
}

#[derive(Debug, Args)]
struct TransferArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_delimiter = ',')]
    source_domains: Option<Vec<String>>,
    #[arg(long)]
    target_domain: Option<String>,
    #[arg(long, value_delimiter = ',')]
    shots: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<String>>,
    #[arg(long)]
    pages_per_domain: Option<usize>,
    #[arg(long)]
    finetune_steps: Option<usize>,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TransferRun {
    experiment: TransferConfig,
    out: Option<PathBuf>,
}

fn transfer_cmd(a: TransferArgs) -> Result<()> {
    let mut o = Overrides::default();
    o.set("experiment.source_domains", a.source_domains)
        .set("experiment.target_domain", a.target_domain)
        .set(
            "experiment.shots",
            a.shots.as_deref().map(parse_list::<usize>).transpose()?,
        )
        .set(
            "experiment.seeds",
            a.seeds.as_deref().map(parse_list::<u64>).transpose()?,
        )
        .set("experiment.pages_per_domain", a.pages_per_domain)
        .set("experiment.finetune_steps", a.finetune_steps)
        .set("out", a.out);
    let cfg: TransferRun = resolve(a.config.config.as_deref(), &o)?;
    print_resolved("transfer", &cfg);
    let report = transfer_experiment(&cfg.experiment)?;
    let fields: Vec<&String> = report
        .mean
        .first()
        .map(|r| r.per_field.keys().collect())
        .unwrap_or_default();
    print!("{:>6}", "shots");
    for f in &fields {
        print!(" {f:>14}");
    }
    println!();
    for row in &report.mean {
        print!("{:>6}", row.shots);
        for f in &fields {
            print!(" {:>14.4}", row.per_field[*f]);
        }
        println!();
    }
    if let Some(p) = &cfg.out {
        fs::write(p, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(())
}

#[derive(Debug, Args)]
struct IngestDumpArgs {
    #[arg(long)]
    html: PathBuf,
    /// Without a vocabulary every word maps to UNK.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long, default_value_t = ModelConfig::desk().radius)]
    radius: usize,
    /// Leave out the field edges of the H2H lists.
    #[arg(long)]
    no_field_edges: bool,
}

fn ingest_dump_cmd(a: IngestDumpArgs) -> Result<()> {
    print_resolved(
        "ingest-dump",
        &serde_json::json!({
            "html": a.html, "vocab": a.vocab, "radius": a.radius, "field_edges": !a.no_field_edges,
        }),
    );
    let vocab = match &a.vocab {
        Some(p) => Vocab::load(p)?,
        None => Vocab::new([], [], []),
    };
    let dump = ingest_dump(
        &fs::read_to_string(&a.html)?,
        &vocab,
        Caps::default(),
        a.radius,
        !a.no_field_edges,
    )?;
    println!("{}", serde_json::to_string_pretty(&dump)?);
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::UnknownField(_) => 2,
        Error::Io(_) => 3,
        Error::Parse { .. } | Error::Json(_) => 4,
        Error::CorruptCheckpoint(_) => 5,
        Error::VocabHash { .. } => 6,
        Error::DataQuality { .. } => 7,
        _ => 1,
    }
}

/// Exit status when a check ran but its criterion failed.
const CHECK_FAILED: u8 = 10;

fn run(cli: Cli) -> Result<Verdict> {
    match cli.command {
        Command::GenCorpus(a) => gen_corpus(a).map(|_| true),
        Command::BuildVocab(a) => build_vocab_cmd(a).map(|_| true),
        Command::Train(a) => train_cmd(a).map(|_| true),
        Command::Eval(a) => eval_cmd(a).map(|_| true),
        Command::Extract(a) => extract_cmd(a).map(|_| true),
        Command::Gradcheck(a) => gradcheck_cmd(a),
        Command::BenchAttn(a) => bench_cmd(a),
        Command::Ablate(a) => ablate_cmd(a).map(|_| true),
        Command::Transfer(a) => transfer_cmd(a).map(|_| true),
        Command::IngestDump(a) => ingest_dump_cmd(a).map(|_| true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
