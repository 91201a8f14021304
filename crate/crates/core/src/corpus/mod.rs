//! Synthetic labeled pages, JSONL datasets, vocabulary building and EM/F1.

mod generate;
mod lexicon;
mod metrics;
mod schema;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use generate::gen_page;
pub use metrics::{em_f1, length_bucket, Metrics, PredictionRecord, Score, BUCKETS};
pub use schema::{FieldSchema, FieldSpec, ValueKind, DOMAINS};

use crate::dom::{parse_html, tokenize_text, Vocab};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub field: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPage {
    pub html: String,
    pub domain: String,
    pub labels: Vec<Label>,
}

/// Train/dev/test partition of a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<LabeledPage>,
    pub dev: Vec<LabeledPage>,
    pub test: Vec<LabeledPage>,
}

/// Pages of every domain, split 8:1:1 per domain. Each page has its own
/// seed, so the three splits never share a page seed.
pub fn generate_corpus(
    domains: &[&str],
    pages_per_domain: usize,
    seed: u64,
    noise: f64,
) -> Result<Splits> {
    if pages_per_domain == 0 {
        return Err(Error::Config("pages per domain must be positive".into()));
    }
    let mut out = Splits::default();
    for (d, domain) in domains.iter().enumerate() {
        let schema = FieldSchema::by_domain(domain)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((d as u64 + 1) << 48));
        let pages: Vec<LabeledPage> = (0..pages_per_domain)
            .map(|_| gen_page(&schema, rng.gen(), noise))
            .collect();
        let n_train = pages_per_domain * 8 / 10;
        let n_dev = pages_per_domain / 10;
        let mut it = pages.into_iter();
        out.train.extend(it.by_ref().take(n_train));
        out.dev.extend(it.by_ref().take(n_dev));
        out.test.extend(it);
    }
    Ok(out)
}

pub fn write_dataset(path: impl AsRef<Path>, pages: &[LabeledPage]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in pages {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one page per line; blank lines are skipped.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<LabeledPage>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let page = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(page);
    }
    Ok(out)
}

/// Word vocabulary over visible text (frequency ≥ `min_freq`), every
/// observed tag, and the schema fields of every domain present.
pub fn build_vocab(pages: &[LabeledPage], min_freq: usize) -> Result<Vocab> {
    if pages.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    let mut tags = BTreeSet::new();
    let mut fields = BTreeSet::new();
    for page in pages {
        match FieldSchema::by_domain(&page.domain) {
            Ok(s) => fields.extend(s.field_names().map(String::from)),
            Err(_) => fields.extend(page.labels.iter().map(|l| l.field.clone())),
        }
        let Ok(tree) = parse_html(&page.html) else {
            continue;
        };
        for node in &tree.nodes {
            tags.insert(node.tag.clone());
            if let Some(text) = &node.direct_text {
                for w in tokenize_text(text) {
                    *freq.entry(w).or_default() += 1;
                }
            }
        }
    }
    let words = freq
        .into_iter()
        .filter(|&(_, n)| n >= min_freq.max(1))
        .map(|(w, _)| w);
    Ok(Vocab::new(words, tags, fields))
}

#[cfg(test)]
mod tests;
