use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocab, gen_page, FieldSchema, DOMAINS};
use crate::dom::{ingest, locate_answer, Caps};
use crate::error::{Error, Result};
use crate::model::{DocPlan, ModelConfig, WebFormer};
use crate::numerics::{finite_diff_grad, relative_error, Gradients, ParamId, Tape};
use crate::trainer::table_sizes;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradcheckOptions {
    pub coords: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Central-difference step.
    pub step: f64,
    /// Denominator floor of the relative error.
    pub floor: f64,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions {
            coords: 200,
            seed: 0,
            tolerance: 1e-5,
            step: 1e-6,
            floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordCheck {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub coords: usize,
    pub tolerance: f64,
    pub worst: CoordCheck,
    pub failures: Vec<CoordCheck>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compare the analytic gradient of a random model's span loss on a random
/// synthetic page with central differences, in 64-bit, at `coords` sampled
/// coordinates.
pub fn gradcheck(cfg: &ModelConfig, opts: GradcheckOptions) -> Result<GradcheckReport> {
    gradcheck_with(cfg, opts, |_, _| {})
}

/// As [`gradcheck`], with a hook that may alter the analytic gradients
/// before comparison.
pub fn gradcheck_with<F>(
    cfg: &ModelConfig,
    opts: GradcheckOptions,
    tamper: F,
) -> Result<GradcheckReport>
where
    F: Fn(&str, &mut [f64]),
{
    if opts.coords == 0 {
        return Err(Error::Config(
            "gradcheck needs at least one coordinate".into(),
        ));
    }
    let mut cfg = cfg.clone();
    cfg.dropout = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let schema = FieldSchema::by_domain(DOMAINS[rng.gen_range(0..DOMAINS.len())])?;
    let page = gen_page(&schema, rng.gen(), 0.5);
    let vocab = build_vocab(std::slice::from_ref(&page), 1)?;
    let ing = ingest(&page.html, &vocab, Caps::default())?;
    let plan = DocPlan::new(&ing, &cfg)?;
    let label = &page.labels[rng.gen_range(0..page.labels.len())];
    let field = vocab.field_id(&label.field)?;
    let gold = locate_answer(&ing.doc, &label.value)
        .and_then(|l| l.global(&ing.doc))
        .filter(|&(b, e)| e - b < cfg.max_span_len)
        .ok_or_else(|| Error::Label(format!("{} not found on the generated page", label.field)))?;

    let mut model = WebFormer::<f64>::new(cfg, table_sizes(&vocab), rng.gen())?;
    let (_, grads) = model.gradients(&plan, field, gold, false, 0)?;
    let analytic = |id: ParamId, grads: &Gradients<f64>| -> Vec<f64> {
        let mut g = match grads.get(id) {
            Some(t) => t.data().to_vec(),
            None => vec![0.0; model.store.value(id).len()],
        };
        tamper(model.store.name(id), &mut g);
        g
    };
    let all: Vec<(ParamId, Vec<f64>)> = model
        .store
        .ids()
        .map(|id| (id, analytic(id, &grads)))
        .collect();

    // Half the samples come from nonzero analytic entries, half uniformly.
    let mut picks = Vec::with_capacity(opts.coords);
    for k in 0..opts.coords {
        let (id, g) = &all[rng.gen_range(0..all.len())];
        let nonzero: Vec<usize> = g
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        let coord = if k % 2 == 0 && !nonzero.is_empty() {
            nonzero[rng.gen_range(0..nonzero.len())]
        } else {
            rng.gen_range(0..g.len())
        };
        picks.push((*id, coord, g[coord]));
    }

    let config = model.config.clone();
    let mut checks = Vec::with_capacity(picks.len());
    for (id, coord, a) in picks {
        let numeric = finite_diff_grad(&mut model.store, id, coord, opts.step, |store| {
            let m = WebFormer::from_store(config.clone(), store.clone()).expect("same layout");
            let mut tape = Tape::new(false, 0);
            let loss = m
                .example_loss(&mut tape, &plan, field, gold)
                .expect("loss evaluates");
            tape.value(loss).item()
        });
        checks.push(CoordCheck {
            tensor: model.store.name(id).to_string(),
            index: coord,
            analytic: a,
            numeric,
            relative_error: relative_error(a, numeric, opts.floor),
        });
    }
    let worst = checks
        .iter()
        .max_by(|a, b| a.relative_error.total_cmp(&b.relative_error))
        .cloned()
        .expect("at least one coordinate");
    let failures = checks
        .into_iter()
        .filter(|c| !(c.relative_error <= opts.tolerance))
        .collect();
    Ok(GradcheckReport {
        coords: opts.coords,
        tolerance: opts.tolerance,
        worst,
        failures,
    })
}
