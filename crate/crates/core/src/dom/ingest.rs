use serde::{Deserialize, Serialize};

use super::graph::DomGraph;
use super::parse::parse_html;
use super::tokenize::tokenize_text;
use super::vocab::Vocab;
use crate::error::{Error, Result};

/// Token budgets applied during ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    pub max_html_tokens: usize,
    pub max_text_tokens: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_html_tokens: 256,
            max_text_tokens: 2048,
        }
    }
}

/// Tokens of one text node, placed at `start..start + len` in the flat text sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextNode {
    pub node: usize,
    pub start: usize,
    pub word_ids: Vec<u32>,
    pub words: Vec<String>,
}

impl TextNode {
    pub fn len(&self) -> usize {
        self.word_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_ids.is_empty()
    }

    pub fn end(&self) -> usize {
        self.start + self.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    /// Tag id per graph node.
    pub html_tags: Vec<u32>,
    /// Text nodes in preorder.
    pub text_nodes: Vec<TextNode>,
    /// For each global text position, the index into `text_nodes`.
    pub token_owner: Vec<usize>,
}

impl TokenizedDoc {
    pub fn n_html(&self) -> usize {
        self.html_tags.len()
    }

    pub fn n_text(&self) -> usize {
        self.token_owner.len()
    }

    pub fn word_ids(&self) -> Vec<u32> {
        self.text_nodes
            .iter()
            .flat_map(|t| t.word_ids.iter().copied())
            .collect()
    }

    pub fn text_node_of(&self, node: usize) -> Option<&TextNode> {
        self.text_nodes.iter().find(|t| t.node == node)
    }

    /// (graph node, local offset) -> global text position.
    pub fn global_index(&self, node: usize, offset: usize) -> Option<usize> {
        self.text_node_of(node)
            .filter(|t| offset < t.len())
            .map(|t| t.start + offset)
    }

    /// Global text position -> (graph node, local offset).
    pub fn local_index(&self, pos: usize) -> Option<(usize, usize)> {
        let t = &self.text_nodes[*self.token_owner.get(pos)?];
        Some((t.node, pos - t.start))
    }

    /// Span of the text node owning `pos`, as a global half-open range.
    pub fn owner_span(&self, pos: usize) -> std::ops::Range<usize> {
        let t = &self.text_nodes[self.token_owner[pos]];
        t.start..t.end()
    }

    /// Surface words of `begin..=end`, joined by single spaces.
    pub fn detokenize(&self, begin: usize, end: usize) -> String {
        (begin..=end)
            .map(|p| {
                let t = &self.text_nodes[self.token_owner[p]];
                t.words[p - t.start].as_str()
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ingested {
    pub graph: DomGraph,
    pub doc: TokenizedDoc,
}

/// Parse, prune and tokenize one page.
///
/// Text tokens are kept in preorder until `max_text_tokens` is reached; text
/// nodes left with no tokens stop being text nodes and their empty branches
/// are pruned again.
pub fn ingest(html: &str, vocab: &Vocab, caps: Caps) -> Result<Ingested> {
    let tree = parse_html(html)?;
    let mut graph = DomGraph::build(&tree, caps.max_html_tokens);

    let mut budget = caps.max_text_tokens;
    let mut keep = vec![true; graph.len()];
    let mut tokens: Vec<Vec<String>> = vec![Vec::new(); graph.len()];
    let mut truncated = false;
    for &id in &graph.text_node_ids {
        let text = graph.nodes[id].direct_text.as_deref().unwrap_or_default();
        let mut words = tokenize_text(text);
        if words.len() > budget {
            words.truncate(budget);
        }
        budget -= words.len();
        if words.is_empty() {
            keep[id] = false;
            truncated = true;
        }
        tokens[id] = words;
    }
    if truncated {
        let mut kept_tokens = Vec::new();
        for &id in &graph.text_node_ids {
            if keep[id] {
                kept_tokens.push(std::mem::take(&mut tokens[id]));
            }
        }
        graph = graph.retain_text_nodes(&keep);
        tokens = vec![Vec::new(); graph.len()];
        for (&id, words) in graph.text_node_ids.iter().zip(kept_tokens) {
            tokens[id] = words;
        }
    }
    if graph.text_node_ids.is_empty() {
        return Err(Error::EmptyDocument);
    }

    let html_tags = graph.nodes.iter().map(|n| vocab.tag_id(&n.tag)).collect();
    let mut text_nodes = Vec::with_capacity(graph.text_node_ids.len());
    let mut token_owner = Vec::new();
    for (k, &id) in graph.text_node_ids.iter().enumerate() {
        let words = std::mem::take(&mut tokens[id]);
        let word_ids = words.iter().map(|w| vocab.word_id(w)).collect();
        text_nodes.push(TextNode {
            node: id,
            start: token_owner.len(),
            word_ids,
            words,
        });
        token_owner.extend(std::iter::repeat_n(k, text_nodes[k].len()));
    }
    Ok(Ingested {
        graph,
        doc: TokenizedDoc {
            html_tags,
            text_nodes,
            token_owner,
        },
    })
}

/// Location of an answer: graph node and inclusive local token offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerLocation {
    pub node: usize,
    pub begin: usize,
    pub end: usize,
}

impl AnswerLocation {
    /// Inclusive global text positions.
    pub fn global(&self, doc: &TokenizedDoc) -> Option<(usize, usize)> {
        Some((
            doc.global_index(self.node, self.begin)?,
            doc.global_index(self.node, self.end)?,
        ))
    }
}

/// First occurrence (preorder, then offset) of the answer's token sequence
/// inside a single text node. Matching is on surface tokens, so rare words
/// that map to UNK still align.
pub fn locate_answer(doc: &TokenizedDoc, answer: &str) -> Option<AnswerLocation> {
    let needle = tokenize_text(answer);
    if needle.is_empty() {
        return None;
    }
    doc.text_nodes.iter().find_map(|t| {
        t.words
            .windows(needle.len())
            .position(|w| w == needle.as_slice())
            .map(|begin| AnswerLocation {
                node: t.node,
                begin,
                end: begin + needle.len() - 1,
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::tests_support::EVENT_PAGE;

    fn vocab() -> Vocab {
        Vocab::new(
            ["fun", "family", "fest", "dec", "13"].map(String::from),
            ["div", "p", "h1", "h3"].map(String::from),
            ["date"].map(String::from),
        )
    }

    #[test]
    fn event_page_has_five_text_nodes() {
        let ing = ingest(EVENT_PAGE, &vocab(), Caps::default()).unwrap();
        assert_eq!(ing.doc.text_nodes.len(), 5);
        assert_eq!(ing.doc.n_html(), ing.graph.len());
        assert_eq!(ing.doc.text_nodes[0].words, ["fun", "family", "fest"]);
        assert_eq!(ing.doc.text_nodes[3].words, ["spark", "social", "sf"]);
        // unknown words keep their surface form but map to UNK
        assert_eq!(ing.doc.text_nodes[3].word_ids, [1, 1, 1]);
        assert_eq!(ing.doc.n_text(), 3 + 8 + 2 + 3 + 2);
    }

    #[test]
    fn locate_date_on_event_page() {
        let ing = ingest(EVENT_PAGE, &vocab(), Caps::default()).unwrap();
        let loc = locate_answer(&ing.doc, "Dec 13").unwrap();
        let h3 = ing.graph.nodes.iter().find(|n| n.tag == "h3").unwrap().id;
        assert_eq!(
            loc,
            AnswerLocation {
                node: h3,
                begin: 0,
                end: 1
            }
        );
        let (b, e) = loc.global(&ing.doc).unwrap();
        assert_eq!(ing.doc.detokenize(b, e), "dec 13");
        assert_eq!(locate_answer(&ing.doc, "Nowhere"), None);
    }

    #[test]
    fn whole_node_and_first_occurrence() {
        let ing = ingest("<p>x</p><p>y</p><div>a y</div>", &vocab(), Caps::default()).unwrap();
        let loc = locate_answer(&ing.doc, "x").unwrap();
        assert_eq!((loc.begin, loc.end), (0, 0));
        let loc = locate_answer(&ing.doc, "y").unwrap();
        assert_eq!(loc.node, ing.doc.text_nodes[1].node);
    }

    #[test]
    fn text_truncation_respects_cap() {
        let html = "<p>one two three four five six seven eight nine ten</p>";
        let caps = Caps {
            max_html_tokens: 256,
            max_text_tokens: 8,
        };
        let ing = ingest(html, &vocab(), caps).unwrap();
        assert_eq!(ing.doc.n_text(), 8);
        assert_eq!(ing.doc.text_nodes[0].words.last().unwrap(), "eight");
    }

    #[test]
    fn truncated_nodes_are_reprunded() {
        let html = "<p>a b c</p><div><span>d e</span></div><p>f</p>";
        let caps = Caps {
            max_html_tokens: 256,
            max_text_tokens: 3,
        };
        let ing = ingest(html, &vocab(), caps).unwrap();
        let tags: Vec<_> = ing.graph.nodes.iter().map(|n| n.tag.as_str()).collect();
        assert_eq!(tags, ["html", "body", "p"]);
        assert_eq!(ing.doc.n_text(), 3);
    }

    #[test]
    fn flat_index_is_a_bijection() {
        let ing = ingest(EVENT_PAGE, &vocab(), Caps::default()).unwrap();
        for pos in 0..ing.doc.n_text() {
            let (node, off) = ing.doc.local_index(pos).unwrap();
            assert_eq!(ing.doc.global_index(node, off), Some(pos));
        }
        assert_eq!(ing.doc.local_index(ing.doc.n_text()), None);
    }

    #[test]
    fn ingest_is_deterministic() {
        let a = ingest(EVENT_PAGE, &vocab(), Caps::default()).unwrap();
        let b = ingest(EVENT_PAGE, &vocab(), Caps::default()).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn root_only_page_is_empty() {
        let caps = Caps {
            max_html_tokens: 3,
            max_text_tokens: 2048,
        };
        assert!(matches!(
            ingest("<div><div><p>x</p></div></div>", &vocab(), caps),
            Err(Error::EmptyDocument)
        ));
    }
}
