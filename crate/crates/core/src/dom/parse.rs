use scraper::{Html, Node};

use super::graph::DomNode;
use crate::error::{Error, Result};

/// Elements whose whole subtree is dropped before graph construction.
const STRIPPED: &[&str] = &[
    "head", "script", "style", "template", "noscript", "iframe", "object", "svg",
];

/// A parsed element tree. Node ids are arena indices; the root is always `html`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomTree {
    pub nodes: Vec<DomNode>,
    pub root: usize,
}

impl DomTree {
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }
}

pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parse a (possibly malformed) HTML document into an element tree.
///
/// Parsing follows the HTML5 tree-construction rules, so fragments get a
/// synthesized `html`/`body` wrapper and unclosed tags are closed the way a
/// browser would. Entity references are decoded; comments and non-visible
/// elements are removed.
pub fn parse_html(html: &str) -> Result<DomTree> {
    let doc = Html::parse_document(html);
    let root_el = doc.root_element();

    let mut nodes: Vec<DomNode> = Vec::new();
    // (scraper node, parent arena id)
    let mut stack = vec![(root_el.id(), None::<usize>)];
    let mut any_text = false;

    while let Some((node_id, parent)) = stack.pop() {
        let node = doc.tree.get(node_id).expect("node id from same tree");
        let Node::Element(el) = node.value() else {
            continue;
        };
        let tag = el.name().to_ascii_lowercase();
        if parent.is_some() && STRIPPED.contains(&tag.as_str()) {
            continue;
        }

        let id = nodes.len();
        let mut pieces = Vec::new();
        let mut element_children = Vec::new();
        for child in node.children() {
            match child.value() {
                Node::Text(t) => pieces.push(t.text.to_string()),
                Node::Element(_) => element_children.push(child.id()),
                _ => {}
            }
        }
        let text = normalize_whitespace(&pieces.join(" "));
        let direct_text = if text.is_empty() {
            None
        } else {
            any_text = true;
            Some(text)
        };
        nodes.push(DomNode {
            id,
            tag,
            parent,
            children: Vec::new(),
            direct_text,
        });
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        for child in element_children.into_iter().rev() {
            stack.push((child, Some(id)));
        }
    }

    if !any_text {
        return Err(Error::EmptyDocument);
    }
    Ok(DomTree { nodes, root: 0 })
}
