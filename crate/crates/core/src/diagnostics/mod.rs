//! Verification and inspection drivers: finite-difference gradient check,
//! attention cost benchmark, and ingest dumps.

mod bench;
mod gradcheck;

use serde::{Deserialize, Serialize};

pub use bench::{bench_attention, synth_bench_page, BenchMode, BenchRow};
pub use gradcheck::{gradcheck, gradcheck_with, CoordCheck, GradcheckOptions, GradcheckReport};

use crate::dom::{ingest, Caps, DomGraph, TokenizedDoc, Vocab};
use crate::error::Result;
use crate::topology::AttentionTopology;

/// Everything ingest produces for one page, for inspection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestDump {
    pub graph: DomGraph,
    pub doc: TokenizedDoc,
    pub topology: AttentionTopology,
}

pub fn ingest_dump(
    html: &str,
    vocab: &Vocab,
    caps: Caps,
    radius: usize,
    field_edges: bool,
) -> Result<IngestDump> {
    let ing = ingest(html, vocab, caps)?;
    let topology = AttentionTopology::build(&ing.graph, &ing.doc, radius, field_edges);
    Ok(IngestDump {
        graph: ing.graph,
        doc: ing.doc,
        topology,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::tests_support::EVENT_PAGE;
    use crate::error::Error;
    use crate::model::ModelConfig;

    #[test]
    fn gradcheck_passes_on_desk_model() {
        let opts = GradcheckOptions {
            coords: 40,
            ..GradcheckOptions::default()
        };
        let r = gradcheck(&ModelConfig::desk(), opts).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        assert!(r.worst.relative_error <= 1e-5);
    }

    #[test]
    fn corrupted_adjoint_fails() {
        let opts = GradcheckOptions {
            coords: 40,
            ..GradcheckOptions::default()
        };
        let r = gradcheck_with(&ModelConfig::desk(), opts, |name, g| {
            if name.ends_with(".q") || name.ends_with(".k") || name.ends_with(".v") {
                g.iter_mut().for_each(|x| *x *= 1.01);
            }
        })
        .unwrap();
        assert!(!r.passed());
        assert!(r.failures.iter().all(|f| f.tensor.starts_with("layer")));
    }

    #[test]
    fn gradcheck_needs_coordinates() {
        let opts = GradcheckOptions {
            coords: 0,
            ..GradcheckOptions::default()
        };
        assert!(matches!(
            gradcheck(&ModelConfig::desk(), opts),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn bench_rows_and_flop_ratios() {
        let lengths = [512, 1024, 2048];
        let modes = [BenchMode::Webformer, BenchMode::Full];
        let rows = bench_attention(&ModelConfig::desk(), &lengths, &modes, 1).unwrap();
        assert_eq!(rows.len(), 6);
        let flops = |m: BenchMode, l: usize| {
            rows.iter()
                .find(|r| r.mode == m && r.length == l)
                .unwrap()
                .flops as f64
        };
        let sparse = flops(BenchMode::Webformer, 2048) / flops(BenchMode::Webformer, 512);
        assert!(sparse <= 4.2, "{sparse}");
        assert_eq!(
            flops(BenchMode::Full, 2048) / flops(BenchMode::Full, 512),
            16.0
        );
        assert!("dense".parse::<BenchMode>().is_err());
    }

    #[test]
    fn bench_page_has_fixed_html_and_requested_length() {
        let vocab = Vocab::new([], [], []);
        for n in [5, 512, 777] {
            let caps = Caps {
                max_text_tokens: 4096,
                ..Caps::default()
            };
            let ing = ingest(&synth_bench_page(n), &vocab, caps).unwrap();
            assert_eq!(ing.doc.n_text(), n);
            assert_eq!(ing.doc.n_html(), 7);
        }
    }

    #[test]
    fn dump_round_trips_through_json() {
        let vocab = Vocab::new(
            ["fun".to_string()],
            ["div".to_string()],
            ["date".to_string()],
        );
        let d = ingest_dump(EVENT_PAGE, &vocab, Caps::default(), 2, true).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        let back: IngestDump = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert_eq!(d.topology.n_text, d.doc.n_text());
    }
}
