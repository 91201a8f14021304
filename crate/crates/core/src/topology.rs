//! Index structures for the structured attention patterns of one document.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dom::{DomGraph, TokenizedDoc};
use crate::numerics::Neighborhood;

/// Relation between an HTML token and one of its H2H neighbors. The
/// discriminant is the row of the edge-type vector table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeType {
    #[serde(rename = "SELF")]
    SelfLoop = 0,
    Parent = 1,
    Child = 2,
    Sibling = 3,
    Field = 4,
}

impl EdgeType {
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Neighbor structure of every attention pattern for one document.
///
/// The field token, when present, is addressed as HTML index `n_html` in
/// the H2H lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionTopology {
    pub n_html: usize,
    pub n_text: usize,
    pub radius: usize,
    pub h2h: Vec<Vec<(usize, EdgeType)>>,
    /// Global text range owned by each HTML token (empty for non-text nodes).
    pub node_token_span: Vec<Range<usize>>,
    /// Inclusive global bounds of each text token's T2T window.
    pub t2t_window: Vec<(usize, usize)>,
}

/// Relative offset `i - j` of two text positions.
pub fn rel_bucket(i: usize, j: usize) -> i64 {
    i as i64 - j as i64
}

/// H2H neighbor lists: self, parent, children, then same-parent siblings.
pub fn build_h2h(graph: &DomGraph) -> Vec<Vec<(usize, EdgeType)>> {
    graph
        .nodes
        .iter()
        .map(|n| {
            let mut out = vec![(n.id, EdgeType::SelfLoop)];
            if let Some(p) = n.parent {
                out.push((p, EdgeType::Parent));
            }
            out.extend(n.children.iter().map(|&c| (c, EdgeType::Child)));
            if let Some(p) = n.parent {
                out.extend(
                    graph.nodes[p]
                        .children
                        .iter()
                        .filter(|&&s| s != n.id)
                        .map(|&s| (s, EdgeType::Sibling)),
                );
            }
            out
        })
        .collect()
}

/// Inclusive window bounds per text token, clipped to the owning node.
pub fn build_t2t(doc: &TokenizedDoc, radius: usize) -> Vec<(usize, usize)> {
    (0..doc.n_text())
        .map(|i| {
            let span = doc.owner_span(i);
            (
                i.saturating_sub(radius).max(span.start),
                (i + radius).min(span.end - 1),
            )
        })
        .collect()
}

/// Text span owned by each HTML token.
pub fn build_h2t_t2h(doc: &TokenizedDoc) -> Vec<Range<usize>> {
    let mut spans = vec![0..0; doc.n_html()];
    for t in &doc.text_nodes {
        spans[t.node] = t.start..t.end();
    }
    spans
}

impl AttentionTopology {
    pub fn build(graph: &DomGraph, doc: &TokenizedDoc, radius: usize, field_edges: bool) -> Self {
        let n_html = graph.len();
        let mut h2h = build_h2h(graph);
        if field_edges {
            for list in &mut h2h {
                list.push((n_html, EdgeType::Field));
            }
        }
        AttentionTopology {
            n_html,
            n_text: doc.n_text(),
            radius,
            h2h,
            node_token_span: build_h2t_t2h(doc),
            t2t_window: build_t2t(doc, radius),
        }
    }

    pub fn has_field_edges(&self) -> bool {
        self.h2h
            .first()
            .is_some_and(|l| l.iter().any(|&(_, e)| e == EdgeType::Field))
    }

    /// Row of the relative-position table for the pair `(i, j)`.
    pub fn rel_row(&self, i: usize, j: usize) -> usize {
        (rel_bucket(i, j) + self.radius as i64) as usize
    }

    /// Keys index `[X_H; x_F]`; bias rows are edge types.
    pub fn h2h_neighborhood(&self) -> Neighborhood {
        let mut nb = Neighborhood::new();
        for list in &self.h2h {
            nb.push_query(list.iter().map(|&(j, e)| (j, Some(e.index()))));
        }
        nb
    }

    /// HTML tokens whose only H2H neighbor is the field token.
    pub fn field_only_neighborhood(&self) -> Neighborhood {
        let mut nb = Neighborhood::new();
        for _ in 0..self.n_html {
            nb.push_query([(self.n_html, Some(EdgeType::Field.index()))]);
        }
        nb
    }

    pub fn h2t_neighborhood(&self) -> Neighborhood {
        let mut nb = Neighborhood::new();
        for span in &self.node_token_span {
            nb.push_query(span.clone().map(|j| (j, None)));
        }
        nb
    }

    pub fn t2h_neighborhood(&self) -> Neighborhood {
        Neighborhood::dense(self.n_text, self.n_html)
    }

    /// Bias rows are relative-position rows `(i - j) + r`.
    pub fn t2t_neighborhood(&self) -> Neighborhood {
        let mut nb = Neighborhood::new();
        for (i, &(lo, hi)) in self.t2t_window.iter().enumerate() {
            nb.push_query((lo..=hi).map(|j| (j, Some(self.rel_row(i, j)))));
        }
        nb
    }

    pub fn f2h_neighborhood(&self) -> Neighborhood {
        Neighborhood::dense(1, self.n_html)
    }

    /// Total neighbor entries per query set, used by the FLOP counter.
    pub fn entry_counts(&self) -> PatternEntries {
        PatternEntries {
            h2h: self.h2h.iter().map(Vec::len).sum(),
            h2t: self.node_token_span.iter().map(|s| s.len()).sum(),
            t2h: self.n_text * self.n_html,
            t2t: self.t2t_window.iter().map(|&(lo, hi)| hi - lo + 1).sum(),
            f2h: self.n_html,
        }
    }
}

/// Number of (query, key) pairs scored by each pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PatternEntries {
    pub h2h: usize,
    pub h2t: usize,
    pub t2h: usize,
    pub t2t: usize,
    pub f2h: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::tests_support::EVENT_PAGE;
    use crate::dom::{ingest, Caps, Vocab};

    fn event_page() -> (crate::dom::Ingested, AttentionTopology) {
        let vocab = Vocab::new(
            Vec::<String>::new(),
            Vec::<String>::new(),
            Vec::<String>::new(),
        );
        let ing = ingest(EVENT_PAGE, &vocab, Caps::default()).unwrap();
        let topo = AttentionTopology::build(&ing.graph, &ing.doc, 1, false);
        (ing, topo)
    }

    fn find(ing: &crate::dom::Ingested, tag: &str) -> usize {
        ing.graph.nodes.iter().position(|n| n.tag == tag).unwrap()
    }

    #[test]
    fn div1_neighbors() {
        let (ing, topo) = event_page();
        let div1 = 3;
        assert_eq!(ing.graph.nodes[div1].tag, "div");
        let body = find(&ing, "body");
        let img = find(&ing, "img");
        let h3 = find(&ing, "h3");
        let mut got = topo.h2h[div1].clone();
        got.sort_by_key(|&(j, _)| j);
        let mut want = vec![
            (div1, EdgeType::SelfLoop),
            (body, EdgeType::Parent),
            (4, EdgeType::Child),
            (h3, EdgeType::Child),
            (img, EdgeType::Sibling),
        ];
        want.sort_by_key(|&(j, _)| j);
        assert_eq!(got, want);
    }

    #[test]
    fn root_has_self_and_children_only() {
        let (ing, topo) = event_page();
        let root = &topo.h2h[ing.graph.root_id];
        assert!(root
            .iter()
            .all(|&(_, e)| e == EdgeType::SelfLoop || e == EdgeType::Child));
        assert_eq!(root.len(), 1 + ing.graph.nodes[0].children.len());
    }

    #[test]
    fn t2t_window_for_is_in_second_node() {
        let (ing, topo) = event_page();
        let t2 = &ing.doc.text_nodes[1];
        assert_eq!(t2.words[..3], ["this", "is", "a"]);
        let is = t2.start + 1;
        assert_eq!(topo.t2t_window[is], (t2.start, t2.start + 2));
        assert_eq!(topo.rel_row(is, t2.start), 2);
        assert_eq!(topo.rel_row(is, is), 1);
    }

    #[test]
    fn radius_zero_is_self_only() {
        let (ing, _) = event_page();
        let windows = build_t2t(&ing.doc, 0);
        assert!(windows.iter().enumerate().all(|(i, &w)| w == (i, i)));
    }

    #[test]
    fn h2t_spans_follow_text_nodes() {
        let (ing, topo) = event_page();
        let p2 = ing.doc.text_nodes[3].node;
        assert_eq!(ing.doc.text_nodes[3].words, ["spark", "social", "sf"]);
        assert_eq!(topo.node_token_span[p2].len(), 3);
        assert!(topo.node_token_span[3].is_empty());
        let nb = topo.t2h_neighborhood();
        assert!((0..topo.n_text).all(|i| nb.range(i).len() == topo.n_html));
    }

    #[test]
    fn field_edges_are_optional() {
        let (ing, topo) = event_page();
        assert!(!topo.has_field_edges());
        let with = AttentionTopology::build(&ing.graph, &ing.doc, 1, true);
        assert!(with.has_field_edges());
        assert!(with
            .h2h
            .iter()
            .all(|l| l.last() == Some(&(with.n_html, EdgeType::Field))));
    }
}
