use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lexicon::*;
use super::schema::{FieldSchema, ValueKind};
use super::{Label, LabeledPage};
use crate::dom::tokenize_text;

/// Minimal element tree used to render generated pages.
#[derive(Debug, Clone)]
struct El {
    tag: &'static str,
    text: Option<String>,
    children: Vec<El>,
}

impl El {
    fn text(tag: &'static str, text: impl Into<String>) -> El {
        El {
            tag,
            text: Some(text.into()),
            children: Vec::new(),
        }
    }

    fn wrap(tag: &'static str, children: Vec<El>) -> El {
        El {
            tag,
            text: None,
            children,
        }
    }

    fn render(&self, out: &mut String) {
        out.push('<');
        out.push_str(self.tag);
        out.push('>');
        if let Some(t) = &self.text {
            out.push_str(&escape(t));
        }
        for c in &self.children {
            c.render(out);
        }
        out.push_str("</");
        out.push_str(self.tag);
        out.push('>');
    }

    fn texts<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let Some(t) = &self.text {
            out.push(t);
        }
        for c in &self.children {
            c.texts(out);
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn title_case(words: &str) -> String {
    words
        .split(' ')
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

struct Gen {
    rng: ChaCha8Rng,
    noise: f64,
}

impl Gen {
    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        xs.choose(&mut self.rng).expect("non-empty pool")
    }

    /// Random choice when noisy, first option otherwise.
    fn style<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        if self.noise > 0.0 {
            self.pick(xs)
        } else {
            &xs[0]
        }
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool((p * self.noise).clamp(0.0, 1.0))
    }

    fn date(&mut self) -> String {
        let m = title_case(self.pick(MONTHS));
        format!("{m} {}", self.rng.gen_range(1..=28))
    }

    fn price(&mut self) -> String {
        format!(
            "${}.{:02}",
            self.rng.gen_range(5..400),
            self.rng.gen_range(0..100)
        )
    }

    fn person(&mut self) -> String {
        title_case(&format!("{} {}", self.pick(FIRST), self.pick(LAST)))
    }

    fn name(&mut self, domain: &str) -> String {
        let adj = *self.pick(NAME_ADJ);
        let noun = *self.pick(NAME_NOUN);
        let text = match domain {
            "events" => format!("{adj} {noun} {}", self.pick(EVENT_KIND)),
            "products" => format!("{adj} {noun} {}", self.pick(PRODUCT_KIND)),
            _ => format!("{} {adj} {noun}", self.pick(MOVIE_LEAD)),
        };
        title_case(&text)
    }

    fn description(&mut self, domain: &str) -> String {
        let noun = match domain {
            "events" => "event",
            "products" => "product",
            _ => "film",
        };
        let mut s = format!(
            "{} {} is a {} {} {}",
            self.pick(DESC_OPEN),
            noun,
            self.pick(DESC_ADJ),
            self.pick(DESC_NOUN),
            self.pick(DESC_TAIL)
        );
        if self.rng.gen_bool(0.5) {
            s.push_str(&format!(
                " and a {} {}",
                self.pick(DESC_ADJ),
                self.pick(DESC_NOUN)
            ));
        }
        let mut c = s.chars();
        let first = c
            .next()
            .map(|f| f.to_uppercase().collect::<String>())
            .unwrap_or_default();
        first + c.as_str()
    }

    /// The value plus the surrounding text of its node (without label).
    fn value(&mut self, kind: ValueKind, domain: &str) -> (String, String) {
        match kind {
            ValueKind::Name => {
                let v = self.name(domain);
                (v.clone(), v)
            }
            ValueKind::Description => {
                let v = self.description(domain);
                (v.clone(), v)
            }
            ValueKind::Date => {
                let v = self.date();
                let mut other = self.date();
                while other == v {
                    other = self.date();
                }
                let text = match self.style(&[0, 1, 2]) {
                    0 => v.clone(),
                    1 => format!("starts {v} ends {other}"),
                    _ => format!("ends {other} starts {v}"),
                };
                (v, text)
            }
            ValueKind::Location => {
                let v = title_case(&format!(
                    "{} {} {}",
                    self.pick(VENUE_NAME),
                    self.pick(VENUE_KIND),
                    self.pick(CITY)
                ));
                (v.clone(), v)
            }
            ValueKind::Brand => {
                let mut v = title_case(self.pick(BRAND));
                if self.rng.gen_bool(0.5) {
                    v = format!("{v} {}", title_case(self.pick(BRAND_SUFFIX)));
                }
                (v.clone(), v)
            }
            ValueKind::Price => {
                let v = self.price();
                let mut other = self.price();
                while other == v {
                    other = self.price();
                }
                let text = match self.style(&[0, 1, 2]) {
                    0 => v.clone(),
                    1 => format!("now {v} was {other}"),
                    _ => format!("was {other} now {v}"),
                };
                (v, text)
            }
            ValueKind::Color => {
                let mut v = self.pick(COLOR).to_string();
                if self.rng.gen_bool(0.4) {
                    v = format!("{} {v}", self.pick(COLOR_SHADE));
                }
                let v = title_case(&v);
                (v.clone(), v)
            }
            ValueKind::Genre => {
                let v = title_case(self.pick(GENRE));
                (v.clone(), v)
            }
            ValueKind::Duration => {
                let mins = self.rng.gen_range(70..200);
                let v = if self.rng.gen_bool(0.5) {
                    format!("{mins} min")
                } else {
                    format!("{} h {} min", mins / 60, mins % 60)
                };
                (v.clone(), v)
            }
            ValueKind::Person => {
                let v = self.person();
                (v.clone(), v)
            }
            ValueKind::Cast => {
                let v = self.person();
                let others: Vec<String> = (0..self.rng.gen_range(1..=2))
                    .map(|_| self.person())
                    .collect();
                let text = format!("{v}, {}", others.join(", "));
                let text = if self.noise > 0.0 { text } else { v.clone() };
                (v, text)
            }
            ValueKind::ReleaseDate => {
                let v = format!("{} {}", self.date(), self.rng.gen_range(1950..2024));
                (v.clone(), v)
            }
        }
    }

    fn value_tag(&mut self) -> &'static str {
        *self.style(&["span", "div", "p", "li"])
    }

    /// One field rendered as a block element.
    fn block(&mut self, kind: ValueKind, domain: &str) -> (El, String) {
        let (value, text) = self.value(kind, domain);
        let el = match kind {
            ValueKind::Name => {
                let tag = *self.style(&["h1", "h2"]);
                let h = El::text(tag, text);
                if self.chance(0.5) {
                    El::wrap("header", vec![h])
                } else {
                    h
                }
            }
            ValueKind::Description => {
                let p = El::text("p", text);
                if self.chance(0.5) {
                    El::wrap("div", vec![p])
                } else {
                    p
                }
            }
            _ => {
                let label = *self.style(kind.labels());
                let tag = self.value_tag();
                let value_el = |tag: &'static str, t: String| {
                    if tag == "li" {
                        El::wrap("ul", vec![El::text("li", t)])
                    } else {
                        El::text(tag, t)
                    }
                };
                match *self.style(&[0, 1, 2]) {
                    0 => El::wrap("div", vec![El::text("span", label), value_el(tag, text)]),
                    1 => value_el(tag, format!("{label}: {text}")),
                    _ => El::wrap("div", vec![value_el(tag, text)]),
                }
            }
        };
        (el, value)
    }

    fn distractor(&mut self) -> El {
        let text = title_case(self.pick(DISTRACTOR));
        match self.rng.gen_range(0..4) {
            0 => El::wrap("ul", vec![El::text("li", text)]),
            1 => El::wrap("div", vec![El::text("a", text)]),
            2 => El::text("small", text),
            _ => El::wrap("div", vec![El::text("span", text)]),
        }
    }
}

fn count_occurrences(nodes: &[Vec<String>], needle: &[String]) -> usize {
    if needle.is_empty() {
        return 0;
    }
    nodes
        .iter()
        .map(|toks| toks.windows(needle.len()).filter(|w| *w == needle).count())
        .sum()
}

/// One synthetic page for `schema`.
///
/// `noise` in [0, 1] scales template variation: nesting depth (2 to 8
/// wrappers), block shuffling, distractor count (up to 20), tag and layout
/// choices. At 0 the template is fixed and only the values depend on `seed`.
pub fn gen_page(schema: &FieldSchema, seed: u64, noise: f64) -> LabeledPage {
    let noise = noise.clamp(0.0, 1.0);
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        noise,
    };
    loop {
        if let Some(page) = try_page(&mut g, schema) {
            return page;
        }
    }
}

fn try_page(g: &mut Gen, schema: &FieldSchema) -> Option<LabeledPage> {
    let domain = schema.domain.as_str();
    let mut blocks = Vec::new();
    let mut labels = Vec::new();
    let mut pair = Vec::new();
    for f in &schema.fields {
        let (el, value) = g.block(f.kind, domain);
        labels.push(Label {
            field: f.name.clone(),
            value,
        });
        // Event date and location share a parent so they are siblings.
        if domain == "events" && matches!(f.kind, ValueKind::Date | ValueKind::Location) {
            pair.push(el);
        } else {
            blocks.push(el);
        }
    }
    if !pair.is_empty() {
        if g.noise > 0.0 {
            pair.shuffle(&mut g.rng);
        }
        blocks.push(El::wrap("div", pair));
    }

    let max_distractors = (20.0 * g.noise).round() as usize;
    let n_distractors = g.rng.gen_range(0..=max_distractors);
    let mut nav = Vec::new();
    let mut footer = Vec::new();
    for _ in 0..n_distractors {
        let d = g.distractor();
        match g.rng.gen_range(0..3) {
            0 => nav.push(d),
            1 => footer.push(d),
            _ => blocks.push(d),
        }
    }
    if g.noise > 0.0 {
        blocks.shuffle(&mut g.rng);
    }

    let depth = 2 + g.rng.gen_range(0..=(6.0 * g.noise).round() as usize);
    let mut main = El::wrap("div", blocks);
    for _ in 1..depth {
        main = El::wrap(*g.style(&["div", "section", "article", "main"]), vec![main]);
    }
    let mut body = Vec::new();
    if !nav.is_empty() {
        body.push(El::wrap("nav", nav));
    }
    body.push(main);
    if !footer.is_empty() {
        body.push(El::wrap("footer", footer));
    }
    let body = El::wrap("body", body);

    let mut texts = Vec::new();
    body.texts(&mut texts);
    let node_tokens: Vec<Vec<String>> = texts.iter().map(|t| tokenize_text(t)).collect();
    for l in &labels {
        if count_occurrences(&node_tokens, &tokenize_text(&l.value)) != 1 {
            return None;
        }
    }

    let title = escape(&labels[0].value);
    let mut html = format!("<!DOCTYPE html><html><head><title>{title}</title></head>");
    body.render(&mut html);
    html.push_str("</html>");
    Some(LabeledPage {
        html,
        domain: domain.to_string(),
        labels,
    })
}
