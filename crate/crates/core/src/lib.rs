//! Structured field extraction from web pages.
//!
//! Pages are parsed into a DOM graph of HTML tokens plus per-node text
//! tokens, encoded with a transformer whose attention is restricted to four
//! structured patterns (HTML-to-HTML graph edges, HTML-to-own-text,
//! text-to-HTML, and local text windows with relative positions) plus a
//! field token, and decoded into a single text span per requested field.

pub mod dom;
pub mod error;

pub use error::{Error, Result};
pub mod corpus;
pub mod diagnostics;
pub mod model;
pub mod numerics;
pub mod topology;
pub mod trainer;
