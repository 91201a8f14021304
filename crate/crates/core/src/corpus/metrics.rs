use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dom::tokenize_text;
use crate::error::{Error, Result};

/// Length buckets over the number of text tokens, lower bound inclusive.
pub const BUCKETS: [(&str, usize, usize); 4] = [
    ("0-512", 0, 512),
    ("512-1024", 512, 1024),
    ("1024-2048", 1024, 2048),
    ("2048+", 2048, usize::MAX),
];

pub fn length_bucket(n_tokens: usize) -> &'static str {
    BUCKETS
        .iter()
        .find(|&&(_, lo, hi)| n_tokens >= lo && n_tokens < hi)
        .map(|b| b.0)
        .expect("buckets cover all lengths")
}

/// Exact match and token-multiset F1 of a prediction against gold.
pub fn em_f1(predicted: &str, gold: &str) -> Result<(f64, f64)> {
    let g = tokenize_text(gold);
    if g.is_empty() {
        return Err(Error::InvalidGold);
    }
    let p = tokenize_text(predicted);
    let em = if p == g { 1.0 } else { 0.0 };
    let mut counts: HashMap<&str, i64> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return Ok((em, 0.0));
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    Ok((em, 2.0 * precision * recall / (precision + recall)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub count: usize,
    pub exact_match: f64,
    pub f1: f64,
}

impl Score {
    fn add(&mut self, em: f64, f1: f64) {
        let n = self.count as f64;
        self.exact_match = (self.exact_match * n + em) / (n + 1.0);
        self.f1 = (self.f1 * n + f1) / (n + 1.0);
        self.count += 1;
    }
}

/// One scored prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub field: String,
    /// Text tokens in the document.
    pub length: usize,
    pub predicted: String,
    pub gold: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub exact_match: f64,
    pub f1: f64,
    pub count: usize,
    pub per_field: BTreeMap<String, Score>,
    /// Always holds all four buckets, empty ones with count 0.
    pub per_bucket: BTreeMap<String, Score>,
}

impl Metrics {
    pub fn from_records(records: &[PredictionRecord]) -> Result<Metrics> {
        let mut total = Score::default();
        let mut per_field: BTreeMap<String, Score> = BTreeMap::new();
        let mut per_bucket: BTreeMap<String, Score> = BUCKETS
            .iter()
            .map(|b| (b.0.to_string(), Score::default()))
            .collect();
        for r in records {
            let (em, f1) = em_f1(&r.predicted, &r.gold)?;
            total.add(em, f1);
            per_field.entry(r.field.clone()).or_default().add(em, f1);
            per_bucket
                .get_mut(length_bucket(r.length))
                .expect("all buckets present")
                .add(em, f1);
        }
        Ok(Metrics {
            exact_match: total.exact_match,
            f1: total.f1,
            count: total.count,
            per_field,
            per_bucket,
        })
    }

    pub fn field_em(&self, field: &str) -> f64 {
        self.per_field.get(field).map_or(0.0, |s| s.exact_match)
    }

    /// Rows `scope,key,count,exact_match,f1` for overall, per-field and
    /// per-bucket scores.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["scope", "key", "count", "exact_match", "f1"])
            .map_err(csv_err)?;
        let mut row = |scope: &str, key: &str, s: &Score| {
            out.write_record([
                scope.to_string(),
                key.to_string(),
                s.count.to_string(),
                format!("{:.6}", s.exact_match),
                format!("{:.6}", s.f1),
            ])
        };
        let overall = Score {
            count: self.count,
            exact_match: self.exact_match,
            f1: self.f1,
        };
        row("overall", "all", &overall).map_err(csv_err)?;
        for (k, s) in &self.per_field {
            row("field", k, s).map_err(csv_err)?;
        }
        for (k, s) in &self.per_bucket {
            row("bucket", k, s).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
