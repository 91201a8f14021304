use serde::{Deserialize, Serialize};

use super::parse::DomTree;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomNode {
    pub id: usize,
    pub tag: String,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Normalized direct text; present only on text nodes.
    pub direct_text: Option<String>,
}

/// A pruned DOM tree: every non-root node has a text node in its subtree,
/// and ids are assigned in depth-first preorder starting at the root (0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomGraph {
    pub nodes: Vec<DomNode>,
    pub text_node_ids: Vec<usize>,
    pub root_id: usize,
}

impl DomGraph {
    /// Prune `tree` down to text-bearing branches, then drop trailing text
    /// nodes (in preorder) until at most `max_html_tokens` nodes remain.
    pub fn build(tree: &DomTree, max_html_tokens: usize) -> DomGraph {
        let keep: Vec<bool> = tree.nodes.iter().map(|n| n.direct_text.is_some()).collect();
        prune(&tree.nodes, tree.root, keep, max_html_tokens.max(1))
    }

    /// Re-prune after demoting some text nodes; `keep[i]` refers to this
    /// graph's node ids. Demoted nodes lose their text.
    pub fn retain_text_nodes(&self, keep: &[bool]) -> DomGraph {
        let keep = self
            .nodes
            .iter()
            .map(|n| n.direct_text.is_some() && keep[n.id])
            .collect();
        prune(&self.nodes, self.root_id, keep, usize::MAX)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_text(&self, id: usize) -> bool {
        self.nodes[id].direct_text.is_some()
    }

    pub fn depth(&self, id: usize) -> usize {
        let mut d = 0;
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            d += 1;
            cur = self.nodes[p].parent;
        }
        d
    }
}

fn preorder(nodes: &[DomNode], root: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        out.push(id);
        stack.extend(nodes[id].children.iter().rev());
    }
    out
}

/// Content-bearing leaves kept as HTML tokens when their parent survives.
/// They never keep an otherwise empty ancestor alive.
const MEDIA: &[&str] = &["img", "picture", "video", "audio", "canvas"];

fn is_media_leaf(n: &DomNode) -> bool {
    n.children.is_empty() && n.direct_text.is_none() && MEDIA.contains(&n.tag.as_str())
}

fn prune(nodes: &[DomNode], root: usize, mut keep: Vec<bool>, cap: usize) -> DomGraph {
    let order = preorder(nodes, root);
    let media_children: Vec<usize> = nodes
        .iter()
        .map(|n| {
            n.children
                .iter()
                .filter(|&&c| is_media_leaf(&nodes[c]))
                .count()
        })
        .collect();

    // support[n] = number of kept text nodes in the subtree of n
    let mut support = vec![0usize; nodes.len()];
    for &id in &order {
        if keep[id] {
            let mut cur = Some(id);
            while let Some(c) = cur {
                support[c] += 1;
                cur = nodes[c].parent;
            }
        }
    }
    let retained = |id: usize, support: &[usize]| id == root || support[id] > 0;
    let mut count: usize = order
        .iter()
        .filter(|&&id| retained(id, &support))
        .map(|&id| 1 + media_children[id])
        .sum();

    let mut kept_text: Vec<usize> = order.iter().copied().filter(|&id| keep[id]).collect();
    while count > cap {
        let Some(last) = kept_text.pop() else { break };
        keep[last] = false;
        let mut cur = Some(last);
        while let Some(c) = cur {
            support[c] -= 1;
            if support[c] == 0 && c != root {
                count -= 1 + media_children[c];
            }
            cur = nodes[c].parent;
        }
    }

    let mut new_id = vec![usize::MAX; nodes.len()];
    let mut out: Vec<DomNode> = Vec::with_capacity(count);
    for &old in &order {
        let keep_node = if is_media_leaf(&nodes[old]) {
            nodes[old].parent.is_some_and(|p| retained(p, &support))
        } else {
            retained(old, &support)
        };
        if !keep_node {
            continue;
        }
        let id = out.len();
        new_id[old] = id;
        let parent = nodes[old].parent.map(|p| new_id[p]);
        if let Some(p) = parent {
            out[p].children.push(id);
        }
        out.push(DomNode {
            id,
            tag: nodes[old].tag.clone(),
            parent: if old == root { None } else { parent },
            children: Vec::new(),
            direct_text: if keep[old] {
                nodes[old].direct_text.clone()
            } else {
                None
            },
        });
    }
    let text_node_ids = out
        .iter()
        .filter(|n| n.direct_text.is_some())
        .map(|n| n.id)
        .collect();
    DomGraph {
        nodes: out,
        text_node_ids,
        root_id: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_html;

    use crate::dom::tests_support::EVENT_PAGE;

    fn layout(g: &DomGraph) -> Vec<(String, Option<usize>)> {
        g.nodes.iter().map(|n| (n.tag.clone(), n.parent)).collect()
    }

    #[test]
    fn event_page_layout_is_retained_in_preorder() {
        let g = DomGraph::build(&parse_html(EVENT_PAGE).unwrap(), 256);
        let expected = [
            ("html", None),
            ("body", Some(0)),
            ("img", Some(1)),
            ("div", Some(1)),
            ("div", Some(3)),
            ("h1", Some(4)),
            ("p", Some(4)),
            ("span", Some(4)),
            ("p", Some(4)),
            ("h3", Some(3)),
        ];
        let got = layout(&g);
        assert_eq!(got.len(), expected.len());
        for (g, e) in got.iter().zip(expected) {
            assert_eq!((g.0.as_str(), g.1), e);
        }
        assert_eq!(g.text_node_ids, vec![5, 6, 7, 8, 9]);
        for n in &g.nodes {
            for &c in &n.children {
                assert_eq!(g.nodes[c].parent, Some(n.id));
                assert!(c > n.id);
            }
        }
    }

    #[test]
    fn media_leaf_needs_a_retained_parent() {
        let g = DomGraph::build(
            &parse_html("<div><img src=a></div><section><img src=b><p>x</p></section>").unwrap(),
            256,
        );
        let tags: Vec<_> = g.nodes.iter().map(|n| n.tag.as_str()).collect();
        assert_eq!(tags, ["html", "body", "section", "img", "p"]);
        // media leaves count against the cap and go with their parent
        let g = DomGraph::build(
            &parse_html("<p>a</p><section><img src=b><p>x</p></section>").unwrap(),
            4,
        );
        let tags: Vec<_> = g.nodes.iter().map(|n| n.tag.as_str()).collect();
        assert_eq!(tags, ["html", "body", "p"]);
    }

    #[test]
    fn empty_branch_is_pruned() {
        let g = DomGraph::build(
            &parse_html("<body><div></div><div><span></span></div><p>x</p></body>").unwrap(),
            256,
        );
        let tags: Vec<_> = g.nodes.iter().map(|n| n.tag.as_str()).collect();
        assert_eq!(tags, ["html", "body", "p"]);
    }

    #[test]
    fn cap_exhaustion_leaves_root_only() {
        // html > body > div > div > p("x"): five nodes on one chain
        let tree = parse_html("<div><div><p>x</p></div></div>").unwrap();
        assert_eq!(tree.nodes.len(), 5);
        let g = DomGraph::build(&tree, 3);
        assert_eq!(g.len(), 1);
        assert!(g.text_node_ids.is_empty());
        let g = DomGraph::build(&tree, 5);
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn cap_drops_trailing_text_nodes_first() {
        let tree = parse_html("<p>a</p><div><p>b</p></div><p>c</p>").unwrap();
        let full = DomGraph::build(&tree, 256);
        assert_eq!(full.len(), 6);
        let g = DomGraph::build(&tree, 4);
        let texts: Vec<_> = g
            .text_node_ids
            .iter()
            .map(|&i| g.nodes[i].direct_text.clone().unwrap())
            .collect();
        assert_eq!(texts, ["a"]);
        assert!(g.len() <= 4);
        let g = DomGraph::build(&tree, 5);
        assert_eq!(g.len(), 5);
        assert_eq!(g.text_node_ids.len(), 2);
    }

    #[test]
    fn retain_demotes_and_reprunes() {
        let g = DomGraph::build(&parse_html("<p>a</p><div><p>b</p></div>").unwrap(), 256);
        let mut keep = vec![true; g.len()];
        let b = *g.text_node_ids.last().unwrap();
        keep[b] = false;
        let h = g.retain_text_nodes(&keep);
        let tags: Vec<_> = h.nodes.iter().map(|n| n.tag.as_str()).collect();
        assert_eq!(tags, ["html", "body", "p"]);
    }
}
