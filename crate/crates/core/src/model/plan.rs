use std::sync::Arc;

use super::config::ModelConfig;
use crate::dom::{Ingested, TokenizedDoc};
use crate::error::{Error, Result};
use crate::numerics::Neighborhood;
use crate::topology::AttentionTopology;

/// Everything the encoder needs from one document, independent of the field.
#[derive(Debug, Clone)]
pub struct DocPlan {
    pub word_ids: Vec<u32>,
    pub tag_ids: Vec<u32>,
    pub topology: AttentionTopology,
    /// Exclusive end of the owning text node, per text token.
    pub node_end: Vec<usize>,
    /// Graph node owning each text token.
    pub token_node: Vec<usize>,
    pub(crate) h2h: Option<Arc<Neighborhood>>,
    pub(crate) h2t: Arc<Neighborhood>,
    pub(crate) t2h: Arc<Neighborhood>,
    pub(crate) t2t: Arc<Neighborhood>,
    pub(crate) f2h: Arc<Neighborhood>,
}

impl DocPlan {
    pub fn new(ing: &Ingested, cfg: &ModelConfig) -> Result<DocPlan> {
        let doc: &TokenizedDoc = &ing.doc;
        if doc.n_text() == 0 {
            return Err(Error::EmptyDocument);
        }
        let flags = cfg.flags;
        let topology = AttentionTopology::build(&ing.graph, doc, cfg.radius, flags.enable_h2f);
        let h2h = match (flags.enable_h2h, flags.enable_h2f) {
            (true, _) => Some(topology.h2h_neighborhood()),
            (false, true) => Some(topology.field_only_neighborhood()),
            (false, false) => None,
        };
        Ok(DocPlan {
            word_ids: doc.word_ids(),
            tag_ids: doc.html_tags.clone(),
            node_end: (0..doc.n_text()).map(|i| doc.owner_span(i).end).collect(),
            token_node: doc
                .token_owner
                .iter()
                .map(|&t| doc.text_nodes[t].node)
                .collect(),
            h2h: h2h.map(Arc::new),
            h2t: Arc::new(topology.h2t_neighborhood()),
            t2h: Arc::new(topology.t2h_neighborhood()),
            t2t: Arc::new(topology.t2t_neighborhood()),
            f2h: Arc::new(topology.f2h_neighborhood()),
            topology,
        })
    }

    /// Replaces local text attention with dense attention over all text
    /// tokens, without relative position bias.
    pub fn with_dense_text_attention(mut self) -> DocPlan {
        let n = self.n_text();
        self.t2t = Arc::new(Neighborhood::dense(n, n));
        self
    }

    pub fn n_text(&self) -> usize {
        self.word_ids.len()
    }

    pub fn n_html(&self) -> usize {
        self.tag_ids.len()
    }

    /// Admissible end positions for a span starting at `b`.
    pub fn end_candidates(&self, b: usize, max_span_len: usize) -> std::ops::Range<usize> {
        b..self.node_end[b].min(b + max_span_len)
    }
}
