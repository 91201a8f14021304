use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which attention patterns run inside each encoder layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttentionFlags {
    pub enable_h2h: bool,
    pub enable_h2t: bool,
    pub enable_t2h: bool,
    pub enable_t2t: bool,
    /// Field token joins every HTML token's H2H neighbor set.
    pub enable_h2f: bool,
}

impl Default for AttentionFlags {
    fn default() -> Self {
        AttentionFlags {
            enable_h2h: true,
            enable_h2t: true,
            enable_t2h: true,
            enable_t2t: true,
            enable_h2f: true,
        }
    }
}

/// The four structured patterns that can be ablated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    H2h,
    H2t,
    T2h,
    T2t,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [Pattern::H2h, Pattern::H2t, Pattern::T2h, Pattern::T2t];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::H2h => "h2h",
            Pattern::H2t => "h2t",
            Pattern::T2h => "t2h",
            Pattern::T2t => "t2t",
        }
    }
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Pattern> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown attention pattern {s:?}")))
    }
}

impl AttentionFlags {
    pub fn without(mut self, p: Pattern) -> Self {
        match p {
            Pattern::H2h => self.enable_h2h = false,
            Pattern::H2t => self.enable_h2t = false,
            Pattern::T2h => self.enable_t2h = false,
            Pattern::T2t => self.enable_t2t = false,
        }
        self
    }

    pub fn none() -> Self {
        AttentionFlags {
            enable_h2h: false,
            enable_h2t: false,
            enable_t2h: false,
            enable_t2t: false,
            enable_h2f: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub layers: usize,
    pub d: usize,
    pub heads: usize,
    pub d_ffn: usize,
    pub radius: usize,
    pub d_seg: usize,
    pub dropout: f64,
    pub flags: AttentionFlags,
    pub share_qk_by_token_type: bool,
    pub max_span_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::desk()
    }
}

impl ModelConfig {
    pub fn desk() -> Self {
        ModelConfig {
            layers: 2,
            d: 64,
            heads: 4,
            d_ffn: 256,
            radius: 8,
            d_seg: 8,
            dropout: 0.1,
            flags: AttentionFlags::default(),
            share_qk_by_token_type: false,
            max_span_len: 64,
        }
    }

    /// 12 layers, width 768, 3072 FFN units.
    pub fn base() -> Self {
        ModelConfig {
            layers: 12,
            d: 768,
            heads: 12,
            d_ffn: 3072,
            radius: 64,
            d_seg: 32,
            ..ModelConfig::desk()
        }
    }

    pub fn d_head(&self) -> usize {
        self.d / self.heads
    }

    /// Width of word, tag and field embeddings.
    pub fn d_word(&self) -> usize {
        self.d - self.d_seg
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.layers == 0 || self.d == 0 || self.heads == 0 || self.d_ffn == 0 {
            return fail("layers, d, heads and d_ffn must be positive".into());
        }
        if self.d % self.heads != 0 {
            return fail(format!(
                "d={} not divisible by heads={}",
                self.d, self.heads
            ));
        }
        if self.d_seg == 0 || self.d_seg >= self.d {
            return fail(format!("d_seg={} must lie in 1..d={}", self.d_seg, self.d));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} not in [0, 1)", self.dropout));
        }
        if self.max_span_len == 0 {
            return fail("max_span_len must be positive".into());
        }
        Ok(())
    }
}
