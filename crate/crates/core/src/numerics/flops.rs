//! Analytic multiply-add counts for one encoder forward pass.

use serde::{Deserialize, Serialize};

use crate::model::ModelConfig;
use crate::topology::AttentionTopology;

/// Score plus aggregation cost of each pattern, summed over layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PatternFlops {
    pub h2h: u64,
    pub h2t: u64,
    pub t2h: u64,
    pub t2t: u64,
    pub f2h: u64,
}

impl PatternFlops {
    pub fn total(&self) -> u64 {
        self.h2h + self.h2t + self.t2h + self.t2t + self.f2h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FlopCount {
    pub attention: PatternFlops,
    /// Query, key and value projections.
    pub projections: u64,
    /// Per-stream output projections.
    pub output: u64,
    pub ffn: u64,
}

impl FlopCount {
    pub fn total(&self) -> u64 {
        self.attention.total() + self.projections + self.output + self.ffn
    }
}

/// Multiply-adds of `cfg.layers` encoder layers on `topo`.
///
/// A scored (query, key) pair costs `d` for the logit and `d` for the
/// weighted value, summed over heads.
pub fn flop_count(cfg: &ModelConfig, topo: &AttentionTopology) -> FlopCount {
    let f = cfg.flags;
    let d = cfg.d as u64;
    let layers = cfg.layers as u64;
    let (nh, nt) = (topo.n_html as u64, topo.n_text as u64);
    let e = topo.entry_counts();
    let pair = |entries: usize, on: bool| {
        if on {
            2 * d * entries as u64 * layers
        } else {
            0
        }
    };
    let h2h_entries = if f.enable_h2h {
        e.h2h
    } else if f.enable_h2f {
        topo.n_html
    } else {
        0
    };
    let attention = PatternFlops {
        h2h: pair(h2h_entries, h2h_entries > 0),
        h2t: pair(e.h2t, f.enable_h2t),
        t2h: pair(e.t2h, f.enable_t2h),
        t2t: pair(e.t2t, f.enable_t2t),
        f2h: pair(e.f2h, true),
    };

    // (queries, keys) per flow; shared query/key tensors on the same input
    // are projected once.
    let h2h_keys = nh + u64::from(f.enable_h2f);
    let mut rows = 0;
    let mut q_text = false;
    let mut q_html = false;
    let mut k_text = false;
    let share = cfg.share_qk_by_token_type;
    let mut add_flow = |on: bool,
                        q_rows: u64,
                        k_rows: u64,
                        q_once: Option<&mut bool>,
                        k_once: Option<&mut bool>| {
        if !on {
            return;
        }
        rows += k_rows;
        for (n, once) in [(q_rows, q_once), (k_rows, k_once)] {
            match once {
                Some(flag) if share && *flag => {}
                Some(flag) => {
                    *flag = true;
                    rows += n;
                }
                None => rows += n,
            }
        }
    };
    add_flow(f.enable_t2t, nt, nt, Some(&mut q_text), Some(&mut k_text));
    add_flow(f.enable_t2h, nt, nh, Some(&mut q_text), None);
    add_flow(h2h_entries > 0, nh, h2h_keys, Some(&mut q_html), None);
    add_flow(f.enable_h2t, nh, nt, Some(&mut q_html), Some(&mut k_text));
    add_flow(true, 1, nh, None, None);
    let projections = rows * d * d * layers;

    let html_out = u64::from(h2h_entries > 0 || f.enable_h2t) * nh;
    let text_out = u64::from(f.enable_t2t || f.enable_t2h) * nt;
    let output = (1 + html_out + text_out) * d * d * layers;
    let ffn = 2 * (1 + nh + nt) * d * cfg.d_ffn as u64 * layers;
    FlopCount {
        attention,
        projections,
        output,
        ffn,
    }
}

/// Score plus aggregation cost of full self-attention over `n` tokens.
pub fn full_attention_flops(n: usize, d: usize, layers: usize) -> u64 {
    2 * (n * n * d * layers) as u64
}
