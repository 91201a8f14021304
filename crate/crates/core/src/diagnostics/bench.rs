use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dom::{ingest, Caps, Vocab};
use crate::error::{Error, Result};
use crate::model::{DocPlan, ModelConfig, TableSizes, WebFormer};
use crate::numerics::{flop_count, full_attention_flops, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMode {
    /// Structured sparse attention.
    Webformer,
    /// Dense self-attention over all text tokens in place of T2T.
    Full,
}

impl std::str::FromStr for BenchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "webformer" => Ok(BenchMode::Webformer),
            "full" => Ok(BenchMode::Full),
            other => Err(Error::Config(format!("unknown bench mode {other:?}"))),
        }
    }
}

impl BenchMode {
    pub fn name(self) -> &'static str {
        match self {
            BenchMode::Webformer => "webformer",
            BenchMode::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub mode: BenchMode,
    pub length: usize,
    /// Attention score and aggregation FLOPs.
    pub flops: u64,
    /// Median forward time.
    pub ms: f64,
}

const BENCH_WORDS: [&str; 8] = [
    "alpha", "beta", "gamma", "delta", "omega", "sigma", "kappa", "theta",
];
const BENCH_PARAGRAPHS: usize = 4;

/// A page with `length` text tokens spread over four paragraphs and a fixed
/// set of seven HTML nodes.
pub fn synth_bench_page(length: usize) -> String {
    let mut html = String::from("<html><body><div>");
    for p in 0..BENCH_PARAGRAPHS {
        let n = length / BENCH_PARAGRAPHS + usize::from(p < length % BENCH_PARAGRAPHS);
        let words: Vec<&str> = (0..n)
            .map(|i| BENCH_WORDS[(i * 7 + p) % BENCH_WORDS.len()])
            .collect();
        html.push_str("<p>");
        html.push_str(&words.join(" "));
        html.push_str("</p>");
    }
    html.push_str("</div></body></html>");
    html
}

/// Analytic attention FLOPs and measured forward time for every length and
/// mode, one row per pair in the order given.
pub fn bench_attention(
    cfg: &ModelConfig,
    lengths: &[usize],
    modes: &[BenchMode],
    repeats: usize,
) -> Result<Vec<BenchRow>> {
    let mut cfg = cfg.clone();
    cfg.dropout = 0.0;
    let vocab = Vocab::new(
        BENCH_WORDS.map(String::from),
        ["html", "body", "div", "p"].map(String::from),
        ["field".to_string()],
    );
    let sizes = TableSizes {
        words: vocab.n_words(),
        tags: vocab.n_tags(),
        fields: vocab.n_fields(),
    };
    let model = WebFormer::<f32>::new(cfg.clone(), sizes, 0)?;
    let mut rows = Vec::new();
    for &length in lengths {
        if length == 0 {
            return Err(Error::Config("bench lengths must be positive".into()));
        }
        let caps = Caps {
            max_text_tokens: length.max(Caps::default().max_text_tokens),
            ..Caps::default()
        };
        let ing = ingest(&synth_bench_page(length), &vocab, caps)?;
        for &mode in modes {
            let (plan, flops) = match mode {
                BenchMode::Webformer => {
                    let plan = DocPlan::new(&ing, &cfg)?;
                    let flops = flop_count(&cfg, &plan.topology).attention.total();
                    (plan, flops)
                }
                BenchMode::Full => {
                    let plan = DocPlan::new(&ing, &cfg)?.with_dense_text_attention();
                    (
                        plan,
                        full_attention_flops(ing.doc.n_text(), cfg.d, cfg.layers),
                    )
                }
            };
            let mut times = Vec::with_capacity(repeats.max(1));
            for _ in 0..repeats.max(1) {
                let start = Instant::now();
                let mut tape = Tape::new(false, 0);
                model.encode(&mut tape, &plan, 0)?;
                times.push(start.elapsed().as_secs_f64() * 1e3);
            }
            times.sort_by(f64::total_cmp);
            rows.push(BenchRow {
                mode,
                length,
                flops,
                ms: times[times.len() / 2],
            });
        }
    }
    Ok(rows)
}
