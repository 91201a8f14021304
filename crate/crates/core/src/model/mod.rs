//! The encoder: embeddings, structured-attention layers, and the span head.

mod config;
mod head;
mod params;
mod plan;

use std::collections::HashMap;
use std::sync::Arc;

pub use config::{AttentionFlags, ModelConfig, Pattern};
pub use head::{decode, SpanPrediction};
pub use params::{init_params, resolve_ids, Flow, LayerIds, ModelIds, Stream, TableSizes};
pub use plan::DocPlan;

use crate::dom::{UNK_ID, UNK_TAG_ID};
use crate::error::{Error, Result};
use crate::numerics::{
    AttentionArgs, Neighborhood, ParamId, ParamStore, Scalar, Tape, Tensor, Var,
};

const LN_EPS: f64 = 1e-5;

/// Field, HTML and text token matrices flowing through the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    pub field: Var,
    pub html: Var,
    pub text: Var,
}

/// Per-flow attention outputs of one layer, before output projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerContexts {
    pub h2h: Option<Var>,
    pub h2t: Option<Var>,
    pub t2h: Option<Var>,
    pub t2t: Option<Var>,
    pub f2h: Var,
}

#[derive(Debug, Clone)]
pub struct WebFormer<T: Scalar> {
    pub config: ModelConfig,
    pub store: ParamStore<T>,
    ids: ModelIds,
    sizes: TableSizes,
}

impl<T: Scalar> WebFormer<T> {
    pub fn new(config: ModelConfig, sizes: TableSizes, seed: u64) -> Result<Self> {
        config.validate()?;
        let store = init_params(&config, sizes, seed)?;
        Self::from_store(config, store)
    }

    pub fn from_store(config: ModelConfig, store: ParamStore<T>) -> Result<Self> {
        config.validate()?;
        let (ids, sizes) = resolve_ids(&config, &store)?;
        Ok(WebFormer {
            config,
            store,
            ids,
            sizes,
        })
    }

    pub fn ids(&self) -> &ModelIds {
        &self.ids
    }

    pub fn sizes(&self) -> TableSizes {
        self.sizes
    }

    /// Enlarges the embedding tables to `sizes`. New word and tag rows copy
    /// the UNK row; new field rows are zero.
    pub fn grow_tables(&self, sizes: TableSizes) -> Result<Self> {
        let old = self.sizes;
        if sizes.words < old.words || sizes.tags < old.tags || sizes.fields < old.fields {
            return Err(Error::Config(format!(
                "cannot shrink embedding tables {old:?} to {sizes:?}"
            )));
        }
        let grown = |t: &Tensor<T>, rows: usize, fill: Option<usize>| -> Result<Tensor<T>> {
            let cols = t.cols();
            let mut data = t.data().to_vec();
            for _ in t.rows()..rows {
                match fill {
                    Some(r) => data.extend_from_slice(t.row_slice(r)),
                    None => data.extend(std::iter::repeat_n(T::zero(), cols)),
                }
            }
            Tensor::from_vec(&[rows, cols], data)
        };
        let mut store = ParamStore::new();
        for id in self.store.ids() {
            let name = self.store.name(id);
            let value = self.store.value(id);
            let value = match name {
                "emb.word" => grown(value, sizes.words, Some(UNK_ID as usize))?,
                "emb.tag" => grown(value, sizes.tags, Some(UNK_TAG_ID as usize))?,
                "emb.field" => grown(value, sizes.fields, None)?,
                _ => value.clone(),
            };
            store.insert(name, value)?;
        }
        Self::from_store(self.config.clone(), store)
    }

    pub fn cast<U: Scalar>(&self) -> WebFormer<U> {
        WebFormer {
            config: self.config.clone(),
            store: self.store.cast(),
            ids: self.ids.clone(),
            sizes: self.sizes,
        }
    }

    fn p(&self, tape: &mut Tape<T>, id: ParamId) -> Var {
        tape.param(&self.store, id)
    }

    /// Input layer: lookup plus segment embedding for every token.
    pub fn embed(&self, tape: &mut Tape<T>, plan: &DocPlan, field: u32) -> Result<Streams> {
        let check = |kind: &'static str, ids: &[u32], size: usize| -> Result<Vec<usize>> {
            ids.iter()
                .map(|&i| {
                    if (i as usize) < size {
                        Ok(i as usize)
                    } else {
                        Err(Error::Vocab {
                            kind,
                            id: i as usize,
                            size,
                        })
                    }
                })
                .collect()
        };
        let words = check("word", &plan.word_ids, self.sizes.words)?;
        let tags = check("tag", &plan.tag_ids, self.sizes.tags)?;
        let field = check("field", &[field], self.sizes.fields)?;
        let seg = self.p(tape, self.ids.segment);
        let one =
            |tape: &mut Tape<T>, table: ParamId, rows: Vec<usize>, stream: Stream| -> Result<Var> {
                let n = rows.len();
                let t = tape.param(&self.store, table);
                let lex = tape.gather_rows(t, rows)?;
                let s = tape.gather_rows(seg, vec![stream.segment(); n])?;
                tape.concat_cols(lex, s)
            };
        Ok(Streams {
            field: one(tape, self.ids.field, field, Stream::Field)?,
            html: one(tape, self.ids.tag, tags, Stream::Html)?,
            text: one(tape, self.ids.word, words, Stream::Text)?,
        })
    }

    /// Attention contexts of layer `l` for every enabled flow.
    pub fn contexts(
        &self,
        tape: &mut Tape<T>,
        l: usize,
        x: Streams,
        plan: &DocPlan,
    ) -> Result<LayerContexts> {
        let cfg = &self.config;
        let ids = &self.ids.layers[l];
        let flags = cfg.flags;
        let mut cache: HashMap<(Var, ParamId), Var> = HashMap::new();
        let mut proj = |tape: &mut Tape<T>, input: Var, id: ParamId| -> Result<Var> {
            if let Some(&v) = cache.get(&(input, id)) {
                return Ok(v);
            }
            let w = tape.param(&self.store, id);
            let v = tape.matmul(input, w)?;
            cache.insert((input, id), v);
            Ok(v)
        };
        let mut attend = |tape: &mut Tape<T>,
                          flow: Flow,
                          queries: Var,
                          keys: Var,
                          bias: Option<ParamId>,
                          nb: &Arc<Neighborhood>|
         -> Result<Var> {
            let f = flow as usize;
            let q = proj(tape, queries, ids.q[f])?;
            let k = proj(tape, keys, ids.k[f])?;
            let v = proj(tape, keys, ids.v[f])?;
            let bias = bias.map(|b| tape.param(&self.store, b));
            tape.attention(AttentionArgs {
                q,
                k,
                v,
                bias,
                heads: cfg.heads,
                neighbors: nb.clone(),
                dropout: cfg.dropout,
            })
        };

        let t2t = flags
            .enable_t2t
            .then(|| attend(tape, Flow::T2t, x.text, x.text, Some(ids.rel), &plan.t2t))
            .transpose()?;
        let t2h = flags
            .enable_t2h
            .then(|| attend(tape, Flow::T2h, x.text, x.html, None, &plan.t2h))
            .transpose()?;
        let h2h = match &plan.h2h {
            Some(nb) => {
                let keys = if flags.enable_h2f {
                    tape.concat_rows(&[x.html, x.field])?
                } else {
                    x.html
                };
                Some(attend(tape, Flow::H2h, x.html, keys, Some(ids.edge), nb)?)
            }
            None => None,
        };
        let h2t = flags
            .enable_h2t
            .then(|| attend(tape, Flow::H2t, x.html, x.text, None, &plan.h2t))
            .transpose()?;
        let f2h = attend(tape, Flow::F2h, x.field, x.html, None, &plan.f2h)?;
        Ok(LayerContexts {
            h2h,
            h2t,
            t2h,
            t2t,
            f2h,
        })
    }

    /// One encoder layer: summed contexts, per-stream output projection,
    /// residual + norm, then a shared position-wise FFN + residual + norm.
    pub fn layer(
        &self,
        tape: &mut Tape<T>,
        l: usize,
        x: Streams,
        plan: &DocPlan,
    ) -> Result<Streams> {
        let ids = &self.ids.layers[l];
        let c = self.contexts(tape, l, x, plan)?;
        let attended =
            |tape: &mut Tape<T>, input: Var, parts: &[Option<Var>], s: Stream| -> Result<Var> {
                let mut parts = parts.iter().flatten().copied();
                let Some(first) = parts.next() else {
                    return Ok(input);
                };
                let mut sum = first;
                for p in parts {
                    sum = tape.add(sum, p)?;
                }
                let w = tape.param(&self.store, ids.out_w[s as usize]);
                let b = tape.param(&self.store, ids.out_b[s as usize]);
                let o = tape.matmul(sum, w)?;
                let o = tape.add_row(o, b)?;
                tape.add(input, o)
            };
        let af = attended(tape, x.field, &[Some(c.f2h)], Stream::Field)?;
        let ah = attended(tape, x.html, &[c.h2h, c.h2t], Stream::Html)?;
        let at = attended(tape, x.text, &[c.t2t, c.t2h], Stream::Text)?;

        let all = tape.concat_rows(&[af, ah, at])?;
        let (g1, b1) = (self.p(tape, ids.ln1.0), self.p(tape, ids.ln1.1));
        let a = tape.layer_norm(all, g1, b1, LN_EPS)?;
        let (w1, bb1) = (self.p(tape, ids.ffn_w1), self.p(tape, ids.ffn_b1));
        let (w2, bb2) = (self.p(tape, ids.ffn_w2), self.p(tape, ids.ffn_b2));
        let h = tape.matmul(a, w1)?;
        let h = tape.add_row(h, bb1)?;
        let h = tape.gelu(h);
        let h = tape.matmul(h, w2)?;
        let h = tape.add_row(h, bb2)?;
        let r = tape.add(a, h)?;
        let (g2, b2) = (self.p(tape, ids.ln2.0), self.p(tape, ids.ln2.1));
        let out = tape.layer_norm(r, g2, b2, LN_EPS)?;

        let (nh, nt) = (plan.n_html(), plan.n_text());
        Ok(Streams {
            field: tape.gather_rows(out, vec![0])?,
            html: tape.gather_rows(out, (1..1 + nh).collect())?,
            text: tape.gather_rows(out, (1 + nh..1 + nh + nt).collect())?,
        })
    }

    pub fn encode(&self, tape: &mut Tape<T>, plan: &DocPlan, field: u32) -> Result<Streams> {
        if plan.n_text() == 0 {
            return Err(Error::EmptyDocument);
        }
        let mut x = self.embed(tape, plan, field)?;
        for l in 0..self.config.layers {
            x = self.layer(tape, l, x, plan)?;
        }
        Ok(x)
    }

    /// Begin logits as a 1×N_text row.
    pub fn begin_logits(&self, tape: &mut Tape<T>, z_text: Var) -> Result<Var> {
        let w = self.p(tape, self.ids.begin);
        let col = tape.matmul(z_text, w)?;
        Ok(tape.transpose(col))
    }

    /// End logits over the admissible ends of a span starting at `b`, as a
    /// 1×m row whose entry `k` scores end position `b + k`.
    pub fn end_logits(
        &self,
        tape: &mut Tape<T>,
        z_text: Var,
        plan: &DocPlan,
        b: usize,
    ) -> Result<Var> {
        let cands: Vec<usize> = plan.end_candidates(b, self.config.max_span_len).collect();
        let m = cands.len();
        let zb = tape.gather_rows(z_text, vec![b; m])?;
        let zj = tape.gather_rows(z_text, cands)?;
        let pair = tape.concat_cols(zb, zj)?;
        let (w1, b1, w2) = (
            self.p(tape, self.ids.end_w1),
            self.p(tape, self.ids.end_b1),
            self.p(tape, self.ids.end_w2),
        );
        let h = tape.matmul(pair, w1)?;
        let h = tape.add_row(h, b1)?;
        let h = tape.gelu(h);
        let col = tape.matmul(h, w2)?;
        Ok(tape.transpose(col))
    }

    /// End logits over all text positions, -inf where inadmissible.
    pub fn end_logits_full(
        &self,
        tape: &mut Tape<T>,
        z_text: Var,
        plan: &DocPlan,
        b: usize,
    ) -> Result<Vec<T>> {
        let row = self.end_logits(tape, z_text, plan, b)?;
        let mut full = vec![T::neg_infinity(); plan.n_text()];
        for (k, &v) in tape.value(row).data().iter().enumerate() {
            full[b + k] = v;
        }
        Ok(full)
    }

    /// Mean of begin cross-entropy and end cross-entropy given the gold begin.
    pub fn loss(
        &self,
        tape: &mut Tape<T>,
        z_text: Var,
        plan: &DocPlan,
        gold: (usize, usize),
    ) -> Result<Var> {
        let (b, e) = gold;
        let n = plan.n_text();
        if b >= n || e >= n || e < b || e >= plan.node_end[b] || e - b >= self.config.max_span_len {
            return Err(Error::Label(format!(
                "gold span ({b}, {e}) is not a single-node span shorter than {} in {n} tokens",
                self.config.max_span_len
            )));
        }
        let begin = self.begin_logits(tape, z_text)?;
        let lb = tape.cross_entropy(begin, b)?;
        let end = self.end_logits(tape, z_text, plan, b)?;
        let le = tape.cross_entropy(end, e - b)?;
        let s = tape.add(lb, le)?;
        Ok(tape.scale(s, T::c(0.5)))
    }

    /// Encode and return the training loss for one example.
    pub fn example_loss(
        &self,
        tape: &mut Tape<T>,
        plan: &DocPlan,
        field: u32,
        gold: (usize, usize),
    ) -> Result<Var> {
        let z = self.encode(tape, plan, field)?;
        self.loss(tape, z.text, plan, gold)
    }

    /// Best span for `field` in eval mode.
    pub fn predict(&self, plan: &DocPlan, field: u32) -> Result<SpanPrediction> {
        let mut tape = Tape::new(false, 0);
        let z = self.encode(&mut tape, plan, field)?;
        let begin = self.begin_logits(&mut tape, z.text)?;
        let begin: Vec<f64> = tape
            .value(begin)
            .data()
            .iter()
            .map(|v| v.to_f64().unwrap())
            .collect();
        let b = head::argmax(&begin);
        let end: Vec<f64> = self
            .end_logits_full(&mut tape, z.text, plan, b)?
            .into_iter()
            .map(|v| v.to_f64().unwrap())
            .collect();
        Ok(decode(&begin, &end, plan, self.config.max_span_len))
    }

    /// Parameter gradients of one example loss, in train or eval mode.
    pub fn gradients(
        &self,
        plan: &DocPlan,
        field: u32,
        gold: (usize, usize),
        train: bool,
        seed: u64,
    ) -> Result<(T, crate::numerics::Gradients<T>)> {
        let mut tape = Tape::new(train, seed);
        let loss = self.example_loss(&mut tape, plan, field, gold)?;
        let value = tape.value(loss).item();
        Ok((value, tape.backward(loss)?))
    }

    /// Parameter values keyed by name, for inspection.
    pub fn tensor(&self, name: &str) -> Option<&Tensor<T>> {
        self.store.get(name)
    }
}

#[cfg(test)]
mod tests;
