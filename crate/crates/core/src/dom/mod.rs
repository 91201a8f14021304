//! HTML front-end: parse raw pages into a pruned DOM graph plus tokenized
//! text nodes, and align labeled answer strings to token spans.

mod graph;
mod ingest;
mod parse;
mod tokenize;
mod vocab;

pub use graph::{DomGraph, DomNode};
pub use ingest::{ingest, locate_answer, AnswerLocation, Caps, Ingested, TextNode, TokenizedDoc};
pub use parse::{normalize_whitespace, parse_html, DomTree};
pub use tokenize::tokenize_text;
pub use vocab::{Vocab, PAD_ID, UNK_ID, UNK_TAG_ID};
