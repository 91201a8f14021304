#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use webformer::dom::Vocab;

pub const WORDS: [&str; 12] = [
    "red", "fox", "jumps", "over", "lazy", "dog", "on", "sunny", "day", "near", "old", "barn",
];
const TAGS: [&str; 6] = ["div", "section", "article", "span", "strong", "em"];

/// A random element tree. Every text-bearing element carries a unique
/// marker word first, so text nodes can be matched across renderings.
#[derive(Debug, Clone)]
pub struct RandTree {
    pub tag: &'static str,
    pub text: Option<Vec<String>>,
    pub children: Vec<RandTree>,
}

pub struct TreeBudget {
    pub elements: usize,
    pub tokens: usize,
    next_marker: usize,
}

impl TreeBudget {
    pub fn new(elements: usize, tokens: usize) -> Self {
        TreeBudget {
            elements,
            tokens,
            next_marker: 0,
        }
    }
}

pub fn random_tree(rng: &mut ChaCha8Rng, budget: &mut TreeBudget, depth: usize) -> RandTree {
    budget.elements = budget.elements.saturating_sub(1);
    let tag = TAGS[rng.gen_range(0..TAGS.len())];
    let text = if budget.tokens >= 2 && (depth > 3 || rng.gen_bool(0.6)) {
        let n = rng.gen_range(1..=budget.tokens.min(8));
        budget.tokens -= n;
        let mut words = vec![format!("m{}", budget.next_marker)];
        budget.next_marker += 1;
        words.extend((1..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())].to_string()));
        Some(words)
    } else {
        None
    };
    let mut children = Vec::new();
    if depth < 5 {
        let n = rng.gen_range(0..=3);
        for _ in 0..n {
            if budget.elements == 0 {
                break;
            }
            children.push(random_tree(rng, budget, depth + 1));
        }
    }
    RandTree {
        tag,
        text,
        children,
    }
}

impl RandTree {
    /// HTML with children in document order, or shuffled when `rng` is given.
    pub fn render(&self, rng: Option<&mut ChaCha8Rng>) -> String {
        let mut out = String::from("<html><body>");
        let mut rng = rng;
        self.render_into(&mut out, &mut rng);
        out.push_str("</body></html>");
        out
    }

    fn render_into(&self, out: &mut String, rng: &mut Option<&mut ChaCha8Rng>) {
        out.push('<');
        out.push_str(self.tag);
        out.push('>');
        if let Some(t) = &self.text {
            out.push_str(&t.join(" "));
        }
        let mut order: Vec<usize> = (0..self.children.len()).collect();
        if let Some(r) = rng.as_deref_mut() {
            order.shuffle(r);
        }
        for i in order {
            self.children[i].render_into(out, rng);
        }
        out.push_str("</");
        out.push_str(self.tag);
        out.push('>');
    }

    pub fn markers(&self) -> usize {
        usize::from(self.text.is_some())
            + self.children.iter().map(RandTree::markers).sum::<usize>()
    }
}

/// A random page with at least one text node, within the given element and
/// token budgets.
pub fn random_page(rng: &mut ChaCha8Rng, max_elements: usize, max_tokens: usize) -> RandTree {
    loop {
        let mut budget = TreeBudget::new(max_elements, max_tokens);
        let t = random_tree(rng, &mut budget, 0);
        if t.markers() > 0 {
            return t;
        }
    }
}

pub fn test_vocab(markers: usize) -> Vocab {
    let words = WORDS
        .iter()
        .map(|w| w.to_string())
        .chain((0..markers).map(|i| format!("m{i}")));
    Vocab::new(
        words,
        [
            "html", "body", "div", "section", "article", "span", "strong", "em",
        ]
        .map(String::from),
        ["name", "date"].map(String::from),
    )
}
