use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::numerics::{ParamId, ParamStore, Scalar, Tensor};
use crate::topology::EdgeType;

/// Query/key/value projection sets, one per attention flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flow {
    H2h = 0,
    H2t = 1,
    T2h = 2,
    T2t = 3,
    F2h = 4,
}

impl Flow {
    pub const ALL: [Flow; 5] = [Flow::H2h, Flow::H2t, Flow::T2h, Flow::T2t, Flow::F2h];

    pub fn name(self) -> &'static str {
        ["h2h", "h2t", "t2h", "t2t", "f2h"][self as usize]
    }
}

/// Output stream of an encoder layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Field = 0,
    Html = 1,
    Text = 2,
}

impl Stream {
    pub const ALL: [Stream; 3] = [Stream::Field, Stream::Html, Stream::Text];

    pub fn name(self) -> &'static str {
        ["field", "html", "text"][self as usize]
    }

    /// Row of the segment-embedding table.
    pub fn segment(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone)]
pub struct LayerIds {
    pub q: [ParamId; 5],
    pub k: [ParamId; 5],
    pub v: [ParamId; 5],
    pub edge: ParamId,
    pub rel: ParamId,
    pub out_w: [ParamId; 3],
    pub out_b: [ParamId; 3],
    pub ln1: (ParamId, ParamId),
    pub ln2: (ParamId, ParamId),
    pub ffn_w1: ParamId,
    pub ffn_b1: ParamId,
    pub ffn_w2: ParamId,
    pub ffn_b2: ParamId,
}

#[derive(Debug, Clone)]
pub struct ModelIds {
    pub word: ParamId,
    pub tag: ParamId,
    pub field: ParamId,
    pub segment: ParamId,
    pub layers: Vec<LayerIds>,
    pub begin: ParamId,
    pub end_w1: ParamId,
    pub end_b1: ParamId,
    pub end_w2: ParamId,
}

/// Row counts of the three lookup tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableSizes {
    pub words: usize,
    pub tags: usize,
    pub fields: usize,
}

#[derive(Debug, Clone, Copy)]
enum Init {
    Uniform(f64),
    Zeros,
    Ones,
}

struct Spec {
    name: String,
    shape: Vec<usize>,
    init: Init,
}

/// Stored name of a projection. With QK sharing, queries and keys are
/// stored per token type instead of per flow.
fn projection_name(cfg: &ModelConfig, layer: usize, flow: Flow, kind: char) -> String {
    if cfg.share_qk_by_token_type {
        let shared = match (kind, flow) {
            ('q', Flow::T2t | Flow::T2h) => Some("text"),
            ('q', Flow::H2h | Flow::H2t) => Some("html"),
            ('k', Flow::T2t | Flow::H2t) => Some("text"),
            ('k', Flow::H2h | Flow::T2h) => Some("html"),
            _ => None,
        };
        if let Some(s) = shared {
            return format!("layer{layer}.{s}.{kind}");
        }
    }
    format!("layer{layer}.{}.{kind}", flow.name())
}

fn specs(cfg: &ModelConfig, sizes: TableSizes) -> Vec<Spec> {
    let (d, dw, dh) = (cfg.d, cfg.d_word(), cfg.d_head());
    let emb = Init::Uniform(1.0 / (d as f64).sqrt());
    let fan = |n: usize| Init::Uniform(1.0 / (n as f64).sqrt());
    let mut out = Vec::new();
    let mut push = |name: String, shape: &[usize], init: Init| {
        if !out.iter().any(|s: &Spec| s.name == name) {
            out.push(Spec {
                name,
                shape: shape.to_vec(),
                init,
            });
        }
    };
    push("emb.word".into(), &[sizes.words, dw], emb);
    push("emb.tag".into(), &[sizes.tags, dw], emb);
    push("emb.field".into(), &[sizes.fields, dw], emb);
    push("emb.segment".into(), &[3, cfg.d_seg], emb);
    for l in 0..cfg.layers {
        for flow in Flow::ALL {
            for kind in ['q', 'k', 'v'] {
                push(projection_name(cfg, l, flow, kind), &[d, d], fan(d));
            }
        }
        push(
            format!("layer{l}.edge"),
            &[EdgeType::COUNT, dh],
            Init::Zeros,
        );
        push(
            format!("layer{l}.rel"),
            &[2 * cfg.radius + 1, dh],
            Init::Zeros,
        );
        for s in Stream::ALL {
            push(format!("layer{l}.out.{}.w", s.name()), &[d, d], fan(d));
            push(format!("layer{l}.out.{}.b", s.name()), &[1, d], Init::Zeros);
        }
        push(format!("layer{l}.ln1.g"), &[1, d], Init::Ones);
        push(format!("layer{l}.ln1.b"), &[1, d], Init::Zeros);
        push(format!("layer{l}.ffn.w1"), &[d, cfg.d_ffn], fan(d));
        push(format!("layer{l}.ffn.b1"), &[1, cfg.d_ffn], Init::Zeros);
        push(format!("layer{l}.ffn.w2"), &[cfg.d_ffn, d], fan(cfg.d_ffn));
        push(format!("layer{l}.ffn.b2"), &[1, d], Init::Zeros);
        push(format!("layer{l}.ln2.g"), &[1, d], Init::Ones);
        push(format!("layer{l}.ln2.b"), &[1, d], Init::Zeros);
    }
    push("head.begin".into(), &[d, 1], fan(d));
    push("head.end.w1".into(), &[2 * d, d], fan(2 * d));
    push("head.end.b1".into(), &[1, d], Init::Zeros);
    push("head.end.w2".into(), &[d, 1], fan(d));
    out
}

/// Fresh parameters for `cfg`, deterministic in `seed`.
pub fn init_params<T: Scalar>(
    cfg: &ModelConfig,
    sizes: TableSizes,
    seed: u64,
) -> Result<ParamStore<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    for spec in specs(cfg, sizes) {
        let n: usize = spec.shape.iter().product();
        let data = match spec.init {
            Init::Uniform(a) => (0..n).map(|_| T::c(rng.gen_range(-a..a))).collect(),
            Init::Zeros => vec![T::zero(); n],
            Init::Ones => vec![T::one(); n],
        };
        store.insert(&spec.name, Tensor::from_vec(&spec.shape, data)?)?;
    }
    Ok(store)
}

/// Resolves every expected parameter and checks its shape.
pub fn resolve_ids<T: Scalar>(
    cfg: &ModelConfig,
    store: &ParamStore<T>,
) -> Result<(ModelIds, TableSizes)> {
    let rows = |name: &str| -> Result<usize> {
        store
            .get(name)
            .map(|t| t.rows())
            .ok_or_else(|| Error::Config(format!("missing parameter {name}")))
    };
    let sizes = TableSizes {
        words: rows("emb.word")?,
        tags: rows("emb.tag")?,
        fields: rows("emb.field")?,
    };
    let expected = specs(cfg, sizes);
    if expected.len() != store.len() {
        return Err(Error::Config(format!(
            "parameter count {} does not match configuration ({})",
            store.len(),
            expected.len()
        )));
    }
    for spec in &expected {
        let t = store
            .get(&spec.name)
            .ok_or_else(|| Error::Config(format!("missing parameter {}", spec.name)))?;
        if t.shape() != spec.shape.as_slice() {
            return Err(Error::Config(format!(
                "parameter {} has shape {:?}, expected {:?}",
                spec.name,
                t.shape(),
                spec.shape
            )));
        }
    }
    let id = |name: String| store.id(&name).expect("checked above");
    let layers = (0..cfg.layers)
        .map(|l| {
            let proj = |kind: char| Flow::ALL.map(|f| id(projection_name(cfg, l, f, kind)));
            LayerIds {
                q: proj('q'),
                k: proj('k'),
                v: proj('v'),
                edge: id(format!("layer{l}.edge")),
                rel: id(format!("layer{l}.rel")),
                out_w: Stream::ALL.map(|s| id(format!("layer{l}.out.{}.w", s.name()))),
                out_b: Stream::ALL.map(|s| id(format!("layer{l}.out.{}.b", s.name()))),
                ln1: (id(format!("layer{l}.ln1.g")), id(format!("layer{l}.ln1.b"))),
                ln2: (id(format!("layer{l}.ln2.g")), id(format!("layer{l}.ln2.b"))),
                ffn_w1: id(format!("layer{l}.ffn.w1")),
                ffn_b1: id(format!("layer{l}.ffn.b1")),
                ffn_w2: id(format!("layer{l}.ffn.w2")),
                ffn_b2: id(format!("layer{l}.ffn.b2")),
            }
        })
        .collect();
    let ids = ModelIds {
        word: id("emb.word".into()),
        tag: id("emb.tag".into()),
        field: id("emb.field".into()),
        segment: id("emb.segment".into()),
        layers,
        begin: id("head.begin".into()),
        end_w1: id("head.end.w1".into()),
        end_b1: id("head.end.b1".into()),
        end_w2: id("head.end.w2".into()),
    };
    Ok((ids, sizes))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIZES: TableSizes = TableSizes {
        words: 30,
        tags: 10,
        fields: 4,
    };

    #[test]
    fn sharing_collapses_query_and_key_storage() {
        let plain = ModelConfig::desk();
        let shared = ModelConfig {
            share_qk_by_token_type: true,
            ..ModelConfig::desk()
        };
        let a = init_params::<f32>(&plain, SIZES, 0).unwrap();
        let b = init_params::<f32>(&shared, SIZES, 0).unwrap();
        assert_eq!(a.len() - b.len(), 4 * plain.layers);
        let (ids, _) = resolve_ids(&shared, &b).unwrap();
        let l = &ids.layers[0];
        assert_eq!(l.q[Flow::T2t as usize], l.q[Flow::T2h as usize]);
        assert_eq!(l.q[Flow::H2h as usize], l.q[Flow::H2t as usize]);
        assert_eq!(l.k[Flow::T2t as usize], l.k[Flow::H2t as usize]);
        assert_eq!(l.k[Flow::H2h as usize], l.k[Flow::T2h as usize]);
        assert_ne!(l.q[Flow::T2t as usize], l.q[Flow::H2h as usize]);
        assert_ne!(l.v[Flow::T2t as usize], l.v[Flow::T2h as usize]);
    }

    #[test]
    fn relative_and_edge_tables_start_at_zero() {
        let cfg = ModelConfig::desk();
        let s = init_params::<f32>(&cfg, SIZES, 1).unwrap();
        let rel = s.get("layer0.rel").unwrap();
        assert_eq!(rel.shape(), &[2 * cfg.radius + 1, cfg.d_head()]);
        assert!(rel.data().iter().all(|&x| x == 0.0));
        assert_eq!(s.get("layer1.edge").unwrap().shape(), &[5, 16]);
        assert_eq!(s.get("emb.segment").unwrap().shape(), &[3, 8]);
    }

    #[test]
    fn resolve_rejects_wrong_config() {
        let s = init_params::<f32>(&ModelConfig::desk(), SIZES, 1).unwrap();
        let other = ModelConfig {
            layers: 3,
            ..ModelConfig::desk()
        };
        assert!(resolve_ids(&other, &s).is_err());
    }
}
