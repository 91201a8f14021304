//! Python bindings: vocabulary, model checkpoints, extraction, training and
//! the diagnostic drivers. Structured values cross the boundary as plain
//! dicts and lists.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use webformer::corpus::{self, em_f1 as core_em_f1, LabeledPage};
use webformer::diagnostics::{self, BenchMode, GradcheckOptions};
use webformer::dom::{self, Caps};
use webformer::model::{DocPlan, ModelConfig, WebFormer};
use webformer::trainer::{self, Manifest, TrainConfig};

create_exception!(webformer_py, WebFormerError, PyException);

fn err(e: webformer::Error) -> PyErr {
    WebFormerError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| WebFormerError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj
        .py()
        .import("json")?
        .call_method1("dumps", (obj,))?
        .extract()?;
    serde_json::from_str(&text).map_err(|e| WebFormerError::new_err(e.to_string()))
}

#[pyclass(name = "Vocab", module = "webformer_py", frozen)]
struct PyVocab {
    inner: dom::Vocab,
}

#[pymethods]
impl PyVocab {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyVocab {
            inner: dom::Vocab::load(path).map_err(err)?,
        })
    }

    /// Vocabulary over the words, tags and fields of labeled pages.
    #[staticmethod]
    #[pyo3(signature = (pages, min_freq = 1))]
    fn build(pages: &Bound<'_, PyAny>, min_freq: usize) -> PyResult<Self> {
        let pages: Vec<LabeledPage> = from_py(pages)?;
        Ok(PyVocab {
            inner: corpus::build_vocab(&pages, min_freq).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    fn fields(&self) -> Vec<String> {
        self.inner.fields().to_vec()
    }

    #[getter]
    fn n_words(&self) -> usize {
        self.inner.n_words()
    }

    fn __repr__(&self) -> String {
        format!(
            "Vocab(words={}, tags={}, fields={})",
            self.inner.n_words(),
            self.inner.n_tags(),
            self.inner.n_fields()
        )
    }
}

#[pyclass(name = "Model", module = "webformer_py", frozen)]
struct PyModel {
    inner: WebFormer<f32>,
    vocab_hash: String,
}

impl PyModel {
    fn check_vocab(&self, vocab: &PyVocab) -> PyResult<()> {
        if vocab.inner.hash() != self.vocab_hash {
            return Err(err(webformer::Error::VocabHash {
                expected: self.vocab_hash.clone(),
                actual: vocab.inner.hash(),
            }));
        }
        Ok(())
    }

    fn manifest(&self) -> Manifest {
        Manifest {
            format: String::new(),
            version: 1,
            tensors: Vec::new(),
            total_count: self.inner.store.numel(),
            config: self.inner.config.clone(),
            vocab_hash: self.vocab_hash.clone(),
        }
    }
}

#[pymethods]
impl PyModel {
    /// Freshly initialized model sized for `vocab`.
    #[new]
    #[pyo3(signature = (vocab, config = None, seed = 0))]
    fn new(vocab: &PyVocab, config: Option<&Bound<'_, PyAny>>, seed: u64) -> PyResult<Self> {
        let cfg: ModelConfig = match config {
            Some(c) => from_py(c)?,
            None => ModelConfig::desk(),
        };
        Ok(PyModel {
            inner: WebFormer::new(cfg, trainer::table_sizes(&vocab.inner), seed).map_err(err)?,
            vocab_hash: vocab.inner.hash(),
        })
    }

    #[staticmethod]
    fn load(dir: &str) -> PyResult<Self> {
        let (inner, manifest) = trainer::load_checkpoint(dir).map_err(err)?;
        Ok(PyModel {
            inner,
            vocab_hash: manifest.vocab_hash,
        })
    }

    fn save(&self, dir: &str) -> PyResult<()> {
        trainer::save_checkpoint(dir, &self.inner, &self.vocab_hash)
            .map(|_| ())
            .map_err(err)
    }

    #[getter]
    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.config)
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.inner.store.numel()
    }

    #[getter]
    fn vocab_hash(&self) -> &str {
        &self.vocab_hash
    }

    /// Best span for `field` as a dict with value, score, begin and end.
    fn extract<'py>(
        &self,
        py: Python<'py>,
        html: &str,
        field: &str,
        vocab: &PyVocab,
    ) -> PyResult<Bound<'py, PyAny>> {
        self.check_vocab(vocab)?;
        let field_id = vocab.inner.field_id(field).map_err(err)?;
        let ing = dom::ingest(html, &vocab.inner, Caps::default()).map_err(err)?;
        let plan = DocPlan::new(&ing, &self.inner.config).map_err(err)?;
        let pred = self.inner.predict(&plan, field_id).map_err(err)?;
        to_py(
            py,
            &serde_json::json!({
                "field": field,
                "value": ing.doc.detokenize(pred.begin, pred.end),
                "score": pred.score,
                "begin": pred.begin,
                "end": pred.end,
            }),
        )
    }

    /// Exact match and F1 overall, per field and per length bucket.
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        pages: &Bound<'py, PyAny>,
        vocab: &PyVocab,
    ) -> PyResult<Bound<'py, PyAny>> {
        let pages: Vec<LabeledPage> = from_py(pages)?;
        let m = trainer::evaluate(
            &self.inner,
            &self.manifest(),
            &vocab.inner,
            &pages,
            Caps::default(),
        )
        .map_err(err)?;
        to_py(py, &m)
    }

    fn __repr__(&self) -> String {
        let c = &self.inner.config;
        format!(
            "Model(layers={}, d={}, heads={}, params={})",
            c.layers,
            c.d,
            c.heads,
            self.inner.store.numel()
        )
    }
}

/// Synthetic labeled corpus as `{"train": [...], "dev": [...], "test": [...]}`.
#[pyfunction]
#[pyo3(signature = (domains, pages_per_domain, seed = 0, noise = 0.5))]
fn generate_corpus<'py>(
    py: Python<'py>,
    domains: Vec<String>,
    pages_per_domain: usize,
    seed: u64,
    noise: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let domains: Vec<&str> = domains.iter().map(String::as_str).collect();
    let s = corpus::generate_corpus(&domains, pages_per_domain, seed, noise).map_err(err)?;
    to_py(
        py,
        &serde_json::json!({ "train": s.train, "dev": s.dev, "test": s.test }),
    )
}

/// Train from scratch; returns the best-dev model and the epoch history.
#[pyfunction]
#[pyo3(signature = (vocab, train_pages, dev_pages = None, config = None))]
fn train<'py>(
    py: Python<'py>,
    vocab: &PyVocab,
    train_pages: &Bound<'py, PyAny>,
    dev_pages: Option<&Bound<'py, PyAny>>,
    config: Option<&Bound<'py, PyAny>>,
) -> PyResult<(PyModel, Bound<'py, PyAny>)> {
    let cfg: TrainConfig = match config {
        Some(c) => from_py(c)?,
        None => TrainConfig::default(),
    };
    cfg.validate().map_err(err)?;
    let train_pages: Vec<LabeledPage> = from_py(train_pages)?;
    let dev_pages: Vec<LabeledPage> = match dev_pages {
        Some(d) => from_py(d)?,
        None => Vec::new(),
    };
    let out = trainer::train(&cfg, &vocab.inner, &train_pages, &dev_pages).map_err(err)?;
    let history = to_py(py, &out.history)?;
    Ok((
        PyModel {
            inner: out.model,
            vocab_hash: vocab.inner.hash(),
        },
        history,
    ))
}

/// Parsed graph, tokens and attention topology of one page.
#[pyfunction]
#[pyo3(signature = (html, vocab = None, radius = None, field_edges = true))]
fn ingest_dump<'py>(
    py: Python<'py>,
    html: &str,
    vocab: Option<&PyVocab>,
    radius: Option<usize>,
    field_edges: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let empty;
    let vocab = match vocab {
        Some(v) => &v.inner,
        None => {
            empty = dom::Vocab::new([], [], []);
            &empty
        }
    };
    let radius = radius.unwrap_or(ModelConfig::desk().radius);
    let dump =
        diagnostics::ingest_dump(html, vocab, Caps::default(), radius, field_edges).map_err(err)?;
    to_py(py, &dump)
}

/// Token-level exact match and F1 after answer normalization.
#[pyfunction]
fn em_f1(predicted: &str, gold: &str) -> PyResult<(f64, f64)> {
    core_em_f1(predicted, gold).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (coords = 200, seed = 0, tolerance = 1e-5))]
fn gradcheck<'py>(
    py: Python<'py>,
    coords: usize,
    seed: u64,
    tolerance: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = GradcheckOptions {
        coords,
        seed,
        tolerance,
        ..GradcheckOptions::default()
    };
    let r = diagnostics::gradcheck(&ModelConfig::desk(), opts).map_err(err)?;
    let out = to_py(py, &r)?;
    out.set_item("passed", r.passed())?;
    Ok(out)
}

/// Rows of `{mode, length, flops, ms}`.
#[pyfunction]
#[pyo3(signature = (lengths, modes = None, repeats = 3))]
fn bench_attention<'py>(
    py: Python<'py>,
    lengths: Vec<usize>,
    modes: Option<Vec<String>>,
    repeats: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let modes: Vec<BenchMode> = match modes {
        Some(m) => m
            .iter()
            .map(|s| s.parse::<BenchMode>())
            .collect::<webformer::Result<_>>()
            .map_err(err)?,
        None => vec![BenchMode::Webformer, BenchMode::Full],
    };
    let rows = diagnostics::bench_attention(&ModelConfig::desk(), &lengths, &modes, repeats)
        .map_err(err)?;
    to_py(py, &rows)
}

#[pymodule]
fn webformer_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("WebFormerError", m.py().get_type::<WebFormerError>())?;
    m.add_class::<PyVocab>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(ingest_dump, m)?)?;
    m.add_function(wrap_pyfunction!(em_f1, m)?)?;
    m.add_function(wrap_pyfunction!(gradcheck, m)?)?;
    m.add_function(wrap_pyfunction!(bench_attention, m)?)?;
    Ok(())
}
