//! Reverse-mode tape. One tape records one forward pass; `backward` runs
//! once and returns parameter gradients.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{Gradients, ParamId, ParamStore};
use super::tensor::{gemm_into, Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Per-query neighbor lists in CSR form. Each entry names a key row and,
/// optionally, a row of the additive key-bias table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Neighborhood {
    offsets: Vec<usize>,
    keys: Vec<u32>,
    bias: Vec<u32>,
}

impl Neighborhood {
    pub fn new() -> Self {
        Neighborhood {
            offsets: vec![0],
            keys: Vec::new(),
            bias: Vec::new(),
        }
    }

    /// Appends the neighbor list of the next query.
    pub fn push_query<I>(&mut self, entries: I)
    where
        I: IntoIterator<Item = (usize, Option<usize>)>,
    {
        for (k, b) in entries {
            self.keys.push(k as u32);
            self.bias.push(b.map_or(u32::MAX, |b| b as u32));
        }
        self.offsets.push(self.keys.len());
    }

    /// Every query attends to the same contiguous key range.
    pub fn dense(n_queries: usize, n_keys: usize) -> Self {
        let mut nb = Neighborhood::new();
        for _ in 0..n_queries {
            nb.push_query((0..n_keys).map(|k| (k, None)));
        }
        nb
    }

    pub fn n_queries(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_entries(&self) -> usize {
        self.keys.len()
    }

    pub fn range(&self, q: usize) -> std::ops::Range<usize> {
        self.offsets[q]..self.offsets[q + 1]
    }

    pub fn neighbors(&self, q: usize) -> impl Iterator<Item = (usize, Option<usize>)> + '_ {
        self.range(q).map(move |e| {
            let b = self.bias[e];
            (self.keys[e] as usize, (b != u32::MAX).then_some(b as usize))
        })
    }

    fn max_key(&self) -> Option<usize> {
        self.keys.iter().map(|&k| k as usize).max()
    }

    fn max_bias(&self) -> Option<usize> {
        self.bias
            .iter()
            .filter(|&&b| b != u32::MAX)
            .map(|&b| b as usize)
            .max()
    }
}

/// Inputs of one sparse multi-head attention.
///
/// Query `i` attends to the keys listed in `neighbors` for row `i`:
/// `logit = q_i·(k_j + bias_t)/sqrt(d_head)` per head, normalized with a
/// softmax over the listed entries only. Queries with no neighbors produce
/// zero rows.
pub struct AttentionArgs {
    pub q: Var,
    pub k: Var,
    pub v: Var,
    pub bias: Option<Var>,
    pub heads: usize,
    pub neighbors: Arc<Neighborhood>,
    pub dropout: f64,
}

struct AttentionRecord<T> {
    q: Var,
    k: Var,
    v: Var,
    bias: Option<Var>,
    heads: usize,
    neighbors: Arc<Neighborhood>,
    /// Softmax weights, `[entry * heads + head]`.
    probs: Vec<T>,
    /// Inverted-dropout multipliers, same layout as `probs`.
    mask: Option<Vec<T>>,
}

enum Op<T> {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, T),
    Transpose(Var),
    ConcatCols(Var, Var),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<T>,
        rstd: Vec<T>,
    },
    Gelu(Var),
    Dropout(Var, Vec<T>),
    Attention(Box<AttentionRecord<T>>),
    CrossEntropy {
        logits: Var,
        target: usize,
        probs: Vec<T>,
    },
    Sum(Var),
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
    params: HashMap<ParamId, Var>,
    train: bool,
    rng: ChaCha8Rng,
    consumed: bool,
}

fn shape_err(op: &'static str, a: &[usize], b: &[usize]) -> Error {
    Error::Shape {
        op,
        left: a.to_vec(),
        right: b.to_vec(),
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

fn gelu<T: Scalar>(x: T) -> T {
    let (c, a, half) = (T::c(GELU_C), T::c(GELU_A), T::c(0.5));
    half * x * (T::one() + (c * (x + a * x * x * x)).tanh())
}

fn gelu_grad<T: Scalar>(x: T) -> T {
    let (c, a, half) = (T::c(GELU_C), T::c(GELU_A), T::c(0.5));
    let t = (c * (x + a * x * x * x)).tanh();
    half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + T::c(3.0) * a * x * x)
}

impl<T: Scalar> Tape<T> {
    /// `train` enables dropout; `seed` drives the dropout masks.
    pub fn new(train: bool, seed: u64) -> Self {
        Tape {
            nodes: Vec::new(),
            params: HashMap::new(),
            train,
            rng: ChaCha8Rng::seed_from_u64(seed),
            consumed: false,
        }
    }

    pub fn is_train(&self) -> bool {
        self.train
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Clears the recording so the tape can be reused.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.params.clear();
        self.consumed = false;
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        debug_assert!(
            !value.data().iter().any(|v| v.is_nan()),
            "NaN forward value"
        );
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf)
    }

    /// Records a parameter leaf; repeated requests return the same variable.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.push(store.value(id).clone(), Op::Param(id));
        self.params.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(shape_err("add", va.shape(), vb.shape()));
        }
        let mut out = va.clone();
        out.add_assign(vb);
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Adds a 1×m row to every row of an n×m matrix.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var> {
        let (vx, vb) = (self.value(x), self.value(b));
        if vb.rows() != 1 || vb.cols() != vx.cols() {
            return Err(shape_err("add_row", vx.shape(), vb.shape()));
        }
        let mut out = vx.clone();
        let m = vx.cols();
        for (i, o) in out.data_mut().iter_mut().enumerate() {
            *o += vb.data()[i % m];
        }
        Ok(self.push(out, Op::AddRow(x, b)))
    }

    pub fn scale(&mut self, x: Var, s: T) -> Var {
        let out = self.value(x).map(|v| v * s);
        self.push(out, Op::Scale(x, s))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let out = self.value(x).transpose();
        self.push(out, Op::Transpose(x))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.rows() != vb.rows() {
            return Err(shape_err("concat_cols", va.shape(), vb.shape()));
        }
        let (n, ca, cb) = (va.rows(), va.cols(), vb.cols());
        let mut data = Vec::with_capacity(n * (ca + cb));
        for r in 0..n {
            data.extend_from_slice(va.row_slice(r));
            data.extend_from_slice(vb.row_slice(r));
        }
        let out = Tensor::from_vec(&[n, ca + cb], data)?;
        Ok(self.push(out, Op::ConcatCols(a, b)))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            if v.cols() != cols {
                return Err(shape_err(
                    "concat_rows",
                    self.value(parts[0]).shape(),
                    v.shape(),
                ));
            }
            rows += v.rows();
            data.extend_from_slice(v.data());
        }
        let out = Tensor::from_vec(&[rows, cols], data)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    /// Row lookup (embedding gather); rows may repeat.
    pub fn gather_rows(&mut self, table: Var, rows: Vec<usize>) -> Result<Var> {
        let t = self.value(table);
        let c = t.cols();
        let mut data = Vec::with_capacity(rows.len() * c);
        for &r in &rows {
            if r >= t.rows() {
                return Err(shape_err("gather_rows", t.shape(), &[r]));
            }
            data.extend_from_slice(t.row_slice(r));
        }
        let out = Tensor::from_vec(&[rows.len(), c], data)?;
        Ok(self.push(out, Op::GatherRows(table, rows)))
    }

    /// Per-row normalization over columns followed by `gamma`/`beta` (1×m each).
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let vx = self.value(x);
        let (n, m) = (vx.rows(), vx.cols());
        let (vg, vb) = (self.value(gamma), self.value(beta));
        if vg.cols() != m || vb.cols() != m || vg.rows() != 1 || vb.rows() != 1 {
            return Err(shape_err("layer_norm", vx.shape(), vg.shape()));
        }
        let eps = T::c(eps);
        let mf = T::from_usize(m).expect("width");
        let mut xhat = Vec::with_capacity(n * m);
        let mut rstd = Vec::with_capacity(n);
        let mut out = Vec::with_capacity(n * m);
        for r in 0..n {
            let row = vx.row_slice(r);
            let mean = row.iter().copied().sum::<T>() / mf;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / mf;
            let rs = T::one() / (var + eps).sqrt();
            rstd.push(rs);
            for c in 0..m {
                let h = (row[c] - mean) * rs;
                xhat.push(h);
                out.push(h * vg.data()[c] + vb.data()[c]);
            }
        }
        let out = Tensor::from_vec(&[n, m], out)?;
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            },
        ))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(gelu);
        self.push(out, Op::Gelu(x))
    }

    /// Inverted dropout: identity outside training mode.
    pub fn dropout(&mut self, x: Var, p: f64) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Config(format!(
                "dropout probability {p} not in [0, 1)"
            )));
        }
        if !self.train || p == 0.0 {
            return Ok(x);
        }
        let keep = T::c(1.0 / (1.0 - p));
        let n = self.value(x).len();
        let mask: Vec<T> = (0..n)
            .map(|_| {
                if self.rng.gen::<f64>() < p {
                    T::zero()
                } else {
                    keep
                }
            })
            .collect();
        let mut out = self.value(x).clone();
        for (o, &m) in out.data_mut().iter_mut().zip(&mask) {
            *o *= m;
        }
        Ok(self.push(out, Op::Dropout(x, mask)))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().copied().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    /// Softmax cross-entropy of a 1×n logit row against `target`.
    /// Entries equal to -inf are excluded from the normalization.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let l = self.value(logits);
        if l.rows() != 1 || target >= l.cols() || l.data()[target] == T::neg_infinity() {
            return Err(Error::Label(format!(
                "target {target} not admissible for logits {:?}",
                l.shape()
            )));
        }
        let probs = softmax(l.data());
        let loss = -(probs[target].ln());
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                target,
                probs,
            },
        ))
    }

    pub fn attention(&mut self, args: AttentionArgs) -> Result<Var> {
        let AttentionArgs {
            q,
            k,
            v,
            bias,
            heads,
            neighbors,
            dropout,
        } = args;
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Config(format!(
                "dropout probability {dropout} not in [0, 1)"
            )));
        }
        let mask = if self.train && dropout > 0.0 && heads > 0 {
            let keep = T::c(1.0 / (1.0 - dropout));
            let rng = &mut self.rng;
            Some(
                (0..neighbors.n_entries() * heads)
                    .map(|_| {
                        if rng.gen::<f64>() < dropout {
                            T::zero()
                        } else {
                            keep
                        }
                    })
                    .collect::<Vec<T>>(),
            )
        } else {
            None
        };
        let (vq, vk, vv) = (self.value(q), self.value(k), self.value(v));
        let d = vq.cols();
        if heads == 0
            || d % heads != 0
            || vk.cols() != d
            || vv.cols() != d
            || vk.rows() != vv.rows()
        {
            return Err(shape_err("attention", vq.shape(), vk.shape()));
        }
        if neighbors.n_queries() != vq.rows() || neighbors.max_key().is_some_and(|m| m >= vk.rows())
        {
            return Err(shape_err(
                "attention.neighbors",
                vq.shape(),
                &[neighbors.n_queries(), vk.rows()],
            ));
        }
        let dh = d / heads;
        let vb = bias.map(|b| self.value(b));
        if let Some(vb) = vb {
            if vb.cols() != dh || neighbors.max_bias().is_some_and(|m| m >= vb.rows()) {
                return Err(shape_err("attention.bias", vb.shape(), &[dh]));
            }
        } else if neighbors.max_bias().is_some() {
            return Err(Error::Config(
                "neighborhood references a bias table that was not supplied".into(),
            ));
        }
        let scale = T::one() / T::from_usize(dh).expect("head width").sqrt();
        let n_entries = neighbors.n_entries();
        let mut probs = vec![T::zero(); n_entries * heads];
        let mut out = Tensor::zeros(&[vq.rows(), d]);
        let mut logits = Vec::new();
        let mut kb = vec![T::zero(); dh];

        for i in 0..vq.rows() {
            let range = neighbors.range(i);
            if range.is_empty() {
                continue;
            }
            let qrow = vq.row_slice(i);
            for h in 0..heads {
                let qh = &qrow[h * dh..(h + 1) * dh];
                logits.clear();
                for (j, b) in neighbors.neighbors(i) {
                    let kh = &vk.row_slice(j)[h * dh..(h + 1) * dh];
                    let dot = match (b, vb) {
                        (Some(b), Some(vb)) => {
                            let br = vb.row_slice(b);
                            for c in 0..dh {
                                kb[c] = kh[c] + br[c];
                            }
                            dot(qh, &kb)
                        }
                        _ => dot(qh, kh),
                    };
                    logits.push(dot * scale);
                }
                let p = softmax(&logits);
                for (off, &pe) in p.iter().enumerate() {
                    probs[(range.start + off) * heads + h] = pe;
                }
            }
        }

        {
            let od = out.data_mut();
            for i in 0..vq.rows() {
                for e in neighbors.range(i) {
                    let j = neighbors.keys[e] as usize;
                    let vrow = vv.row_slice(j);
                    for h in 0..heads {
                        let mut w = probs[e * heads + h];
                        if let Some(m) = &mask {
                            w *= m[e * heads + h];
                        }
                        let o = &mut od[i * d + h * dh..i * d + (h + 1) * dh];
                        for (oc, &vc) in o.iter_mut().zip(&vrow[h * dh..(h + 1) * dh]) {
                            *oc += w * vc;
                        }
                    }
                }
            }
        }
        Ok(self.push(
            out,
            Op::Attention(Box::new(AttentionRecord {
                q,
                k,
                v,
                bias,
                heads,
                neighbors,
                probs,
                mask,
            })),
        ))
    }

    /// Softmax weights recorded by an attention node, `[entry * heads + head]`.
    pub fn attention_probs(&self, v: Var) -> Option<(&Neighborhood, usize, &[T])> {
        match &self.nodes[v.0].op {
            Op::Attention(rec) => Some((&rec.neighbors, rec.heads, &rec.probs)),
            _ => None,
        }
    }

    /// Reverse pass from a 1×1 loss. A tape can be differentiated once.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>> {
        if self.consumed {
            return Err(Error::StaleTape);
        }
        if self.value(loss).len() != 1 {
            return Err(shape_err("backward", self.value(loss).shape(), &[1, 1]));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(self.value(loss).shape(), T::one()));
        let mut out = Vec::new();

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => out.push((*id, g)),
                Op::MatMul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let mut ga = Tensor::zeros(va.shape());
                    gemm_into(&g, false, vb, true, &mut ga, T::zero());
                    let mut gb = Tensor::zeros(vb.shape());
                    gemm_into(va, true, &g, false, &mut gb, T::zero());
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *b, g.clone());
                    acc(&mut grads, *a, g);
                }
                Op::AddRow(x, b) => {
                    let m = g.cols();
                    let mut gb = Tensor::zeros(&[1, m]);
                    for (i, &v) in g.data().iter().enumerate() {
                        gb.data_mut()[i % m] += v;
                    }
                    acc(&mut grads, *b, gb);
                    acc(&mut grads, *x, g);
                }
                Op::Scale(x, s) => {
                    let s = *s;
                    acc(&mut grads, *x, g.map(|v| v * s));
                }
                Op::Transpose(x) => acc(&mut grads, *x, g.transpose()),
                Op::ConcatCols(a, b) => {
                    let (ca, cb) = (self.nodes[a.0].value.cols(), self.nodes[b.0].value.cols());
                    let n = g.rows();
                    let mut ga = Vec::with_capacity(n * ca);
                    let mut gb = Vec::with_capacity(n * cb);
                    for r in 0..n {
                        let row = g.row_slice(r);
                        ga.extend_from_slice(&row[..ca]);
                        gb.extend_from_slice(&row[ca..]);
                    }
                    acc(&mut grads, *a, Tensor::from_vec(&[n, ca], ga)?);
                    acc(&mut grads, *b, Tensor::from_vec(&[n, cb], gb)?);
                }
                Op::ConcatRows(parts) => {
                    let cols = g.cols();
                    let mut start = 0;
                    for p in parts {
                        let rows = self.nodes[p.0].value.rows();
                        let slice = g.data()[start * cols..(start + rows) * cols].to_vec();
                        acc(&mut grads, *p, Tensor::from_vec(&[rows, cols], slice)?);
                        start += rows;
                    }
                }
                Op::GatherRows(table, rows) => {
                    let t = &self.nodes[table.0].value;
                    let c = t.cols();
                    let mut gt = Tensor::zeros(t.shape());
                    for (i, &r) in rows.iter().enumerate() {
                        let dst = &mut gt.data_mut()[r * c..(r + 1) * c];
                        for (d, &s) in dst.iter_mut().zip(g.row_slice(i)) {
                            *d += s;
                        }
                    }
                    acc(&mut grads, *table, gt);
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    rstd,
                } => {
                    let (n, m) = (g.rows(), g.cols());
                    let vg = &self.nodes[gamma.0].value;
                    let mf = T::from_usize(m).expect("width");
                    let mut gx = Tensor::zeros(&[n, m]);
                    let mut ggamma = Tensor::zeros(&[1, m]);
                    let mut gbeta = Tensor::zeros(&[1, m]);
                    let mut dxhat = vec![T::zero(); m];
                    for r in 0..n {
                        let gr = g.row_slice(r);
                        let xr = &xhat[r * m..(r + 1) * m];
                        let mut mean_d = T::zero();
                        let mut mean_dx = T::zero();
                        for c in 0..m {
                            ggamma.data_mut()[c] += gr[c] * xr[c];
                            gbeta.data_mut()[c] += gr[c];
                            dxhat[c] = gr[c] * vg.data()[c];
                            mean_d += dxhat[c];
                            mean_dx += dxhat[c] * xr[c];
                        }
                        mean_d = mean_d / mf;
                        mean_dx = mean_dx / mf;
                        let out = &mut gx.data_mut()[r * m..(r + 1) * m];
                        for c in 0..m {
                            out[c] = rstd[r] * (dxhat[c] - mean_d - xr[c] * mean_dx);
                        }
                    }
                    acc(&mut grads, *gamma, ggamma);
                    acc(&mut grads, *beta, gbeta);
                    acc(&mut grads, *x, gx);
                }
                Op::Gelu(x) => {
                    let vx = &self.nodes[x.0].value;
                    let mut gx = g;
                    for (o, &xv) in gx.data_mut().iter_mut().zip(vx.data()) {
                        *o *= gelu_grad(xv);
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::Dropout(x, mask) => {
                    let mut gx = g;
                    for (o, &m) in gx.data_mut().iter_mut().zip(mask) {
                        *o *= m;
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::Sum(x) => {
                    let s = g.item();
                    acc(
                        &mut grads,
                        *x,
                        Tensor::full(self.nodes[x.0].value.shape(), s),
                    );
                }
                Op::CrossEntropy {
                    logits,
                    target,
                    probs,
                } => {
                    let s = g.item();
                    let mut gl = probs.clone();
                    gl[*target] -= T::one();
                    let gl = gl.into_iter().map(|v| v * s).collect();
                    acc(&mut grads, *logits, Tensor::row(gl));
                }
                Op::Attention(rec) => {
                    let (gq, gk, gv, gb) = attention_backward(&self.nodes, rec, &g);
                    acc(&mut grads, rec.q, gq);
                    acc(&mut grads, rec.k, gk);
                    acc(&mut grads, rec.v, gv);
                    if let (Some(b), Some(gb)) = (rec.bias, gb) {
                        acc(&mut grads, b, gb);
                    }
                }
            }
        }
        out.sort_by_key(|(id, _)| *id);
        Ok(Gradients { entries: out })
    }
}

fn acc<T: Scalar>(grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Softmax that treats -inf entries as excluded (weight 0).
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return vec![T::zero(); logits.len()];
    }
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[allow(clippy::type_complexity)]
fn attention_backward<T: Scalar>(
    nodes: &[Node<T>],
    rec: &AttentionRecord<T>,
    g: &Tensor<T>,
) -> (Tensor<T>, Tensor<T>, Tensor<T>, Option<Tensor<T>>) {
    let (vq, vk, vv) = (
        &nodes[rec.q.0].value,
        &nodes[rec.k.0].value,
        &nodes[rec.v.0].value,
    );
    let vb = rec.bias.map(|b| &nodes[b.0].value);
    let heads = rec.heads;
    let d = vq.cols();
    let dh = d / heads;
    let scale = T::one() / T::from_usize(dh).expect("head width").sqrt();
    let nb = &rec.neighbors;

    let mut gq = Tensor::zeros(vq.shape());
    let mut gk = Tensor::zeros(vk.shape());
    let mut gv = Tensor::zeros(vv.shape());
    let mut gb = vb.map(|b| Tensor::zeros(b.shape()));
    let mut dp = Vec::new();

    for i in 0..vq.rows() {
        let range = nb.range(i);
        if range.is_empty() {
            continue;
        }
        let gi = g.row_slice(i);
        let qi = vq.row_slice(i);
        for h in 0..heads {
            let hs = h * dh..(h + 1) * dh;
            let go = &gi[hs.clone()];
            // d(out)/d(weight) and value gradients
            dp.clear();
            for e in range.clone() {
                let j = nb.keys[e] as usize;
                let p = rec.probs[e * heads + h];
                let m = rec.mask.as_ref().map_or(T::one(), |m| m[e * heads + h]);
                let vrow = &vv.row_slice(j)[hs.clone()];
                dp.push(dot(go, vrow) * m);
                let w = p * m;
                let gvr = &mut gv.data_mut()[j * d + h * dh..j * d + (h + 1) * dh];
                for (o, &gc) in gvr.iter_mut().zip(go) {
                    *o += w * gc;
                }
            }
            let pdot: T = range
                .clone()
                .zip(&dp)
                .map(|(e, &dpe)| rec.probs[e * heads + h] * dpe)
                .sum();
            let qh = &qi[hs.clone()];
            for (off, e) in range.clone().enumerate() {
                let p = rec.probs[e * heads + h];
                let dl = p * (dp[off] - pdot) * scale;
                if dl == T::zero() {
                    continue;
                }
                let j = nb.keys[e] as usize;
                let b = nb.bias[e];
                let kh = &vk.row_slice(j)[hs.clone()];
                {
                    let gqr = &mut gq.data_mut()[i * d + h * dh..i * d + (h + 1) * dh];
                    for c in 0..dh {
                        gqr[c] += dl * kh[c];
                    }
                    if b != u32::MAX {
                        let br = vb.expect("bias table").row_slice(b as usize);
                        for c in 0..dh {
                            gqr[c] += dl * br[c];
                        }
                    }
                }
                let gkr = &mut gk.data_mut()[j * d + h * dh..j * d + (h + 1) * dh];
                for c in 0..dh {
                    gkr[c] += dl * qh[c];
                }
                if b != u32::MAX {
                    let gbr = gb.as_mut().expect("bias grad").data_mut();
                    let row = &mut gbr[b as usize * dh..(b as usize + 1) * dh];
                    for c in 0..dh {
                        row[c] += dl * qh[c];
                    }
                }
            }
        }
    }
    (gq, gk, gv, gb)
}
