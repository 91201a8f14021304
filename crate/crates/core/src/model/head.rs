use serde::{Deserialize, Serialize};

use super::plan::DocPlan;

/// A decoded span in global text coordinates, `end` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanPrediction {
    pub begin: usize,
    pub end: usize,
    /// Sum of the begin and end log-probabilities.
    pub score: f64,
    /// Graph node owning the span.
    pub node: usize,
}

/// Index of the largest value; ties go to the smallest index.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn log_softmax_at(xs: &[f64], i: usize) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    xs[i] - max - z.ln()
}

/// Picks `b = argmax begin`, then the best admissible end for `b`.
///
/// `end` holds end logits conditioned on that `b`; positions outside the
/// owning node or beyond `max_span_len` are ignored whatever their value.
pub fn decode(begin: &[f64], end: &[f64], plan: &DocPlan, max_span_len: usize) -> SpanPrediction {
    let b = argmax(begin);
    let cands = plan.end_candidates(b, max_span_len);
    let admissible = &end[cands.clone()];
    let k = argmax(admissible);
    SpanPrediction {
        begin: b,
        end: cands.start + k,
        score: log_softmax_at(begin, b) + log_softmax_at(admissible, k),
        node: plan.token_node[b],
    }
}
