//! Embedding → LSTM → ReLU → dense(2) → softmax sequence classifier with
//! hand-written back-propagation through time.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{QueryClass, QueryLabel};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::text::tokenize;

pub const PAD: u32 = 0;
pub const OOV: u32 = 1;
pub const N_CLASSES: usize = 2;

/// Trainable tensors. Gradients use the same layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    /// `vocab × embed_dim`.
    pub embedding: Matrix,
    /// `4H × embed_dim`, gate blocks ordered input, forget, cell, output.
    pub w_x: Matrix,
    /// `4H × H`.
    pub w_h: Matrix,
    pub bias: Vec<f64>,
    /// `2 × H`.
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
}

impl LstmParams {
    pub fn zeros_like(other: &LstmParams) -> Self {
        Self {
            embedding: Matrix::zeros(other.embedding.rows, other.embedding.cols),
            w_x: Matrix::zeros(other.w_x.rows, other.w_x.cols),
            w_h: Matrix::zeros(other.w_h.rows, other.w_h.cols),
            bias: vec![0.0; other.bias.len()],
            w_out: Matrix::zeros(other.w_out.rows, other.w_out.cols),
            b_out: vec![0.0; other.b_out.len()],
        }
    }

    pub fn slices(&self) -> [&[f64]; 6] {
        [
            &self.embedding.data,
            &self.w_x.data,
            &self.w_h.data,
            &self.bias,
            &self.w_out.data,
            &self.b_out,
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 6] {
        [
            &mut self.embedding.data,
            &mut self.w_x.data,
            &mut self.w_h.data,
            &mut self.bias,
            &mut self.w_out.data,
            &mut self.b_out,
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceClassifier {
    pub vocab: BTreeMap<String, u32>,
    pub max_sequence_length: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub params: LstmParams,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

struct Step {
    id: u32,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Everything the backward pass needs from one forward pass.
pub struct Trace {
    steps: Vec<Step>,
    hidden: Vec<f64>,
    pub logits: [f64; N_CLASSES],
    pub probs: [f64; N_CLASSES],
}

impl SequenceClassifier {
    /// Vocabulary comes from `training_texts` only; ids are assigned in
    /// lexical order after the pad and OOV slots.
    pub fn init<R: Rng>(
        training_texts: &[&str],
        embed_dim: usize,
        hidden: usize,
        max_sequence_length: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if embed_dim == 0 || hidden == 0 || max_sequence_length == 0 {
            return Err(Error::validation("classifier dimensions must be positive"));
        }
        let words: BTreeSet<String> = training_texts.iter().flat_map(|t| tokenize(t)).collect();
        let vocab: BTreeMap<String, u32> = words.into_iter().zip(2u32..).collect();
        let v = vocab.len() + 2;
        let h4 = 4 * hidden;
        let glorot = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();
        let embedding = Matrix::uniform(v, embed_dim, 0.05, rng);
        let w_x = Matrix::uniform(h4, embed_dim, glorot(embed_dim, h4), rng);
        let w_h = Matrix::uniform(h4, hidden, glorot(hidden, h4), rng);
        let mut bias = vec![0.0; h4];
        bias[hidden..2 * hidden].fill(1.0);
        let w_out = Matrix::uniform(N_CLASSES, hidden, glorot(hidden, N_CLASSES), rng);
        Ok(Self {
            vocab,
            max_sequence_length,
            embed_dim,
            hidden,
            params: LstmParams {
                embedding,
                w_x,
                w_h,
                bias,
                w_out,
                b_out: vec![0.0; N_CLASSES],
            },
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len() + 2
    }

    /// Token ids, unknown tokens mapped to the OOV slot, truncated from the
    /// right to `max_sequence_length`.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        tokenize(text)
            .iter()
            .take(self.max_sequence_length)
            .map(|t| self.vocab.get(t).copied().unwrap_or(OOV))
            .collect()
    }

    /// Runs the network over `ids`; pad ids are masked out.
    pub fn forward(&self, ids: &[u32]) -> Trace {
        forward_with(&self.params, self.hidden, ids)
    }

    pub fn probabilities(&self, text: &str) -> [f64; N_CLASSES] {
        self.forward(&self.encode(text)).probs
    }

    pub fn classify(&self, text: &str) -> QueryClass {
        QueryClass::from_probs(self.probabilities(text))
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.vocab_size();
        let h4 = 4 * self.hidden;
        let p = &self.params;
        let ok = p.embedding.rows == v
            && p.embedding.cols == self.embed_dim
            && p.embedding.data.len() == v * self.embed_dim
            && p.w_x.rows == h4
            && p.w_x.cols == self.embed_dim
            && p.w_x.data.len() == h4 * self.embed_dim
            && p.w_h.rows == h4
            && p.w_h.cols == self.hidden
            && p.w_h.data.len() == h4 * self.hidden
            && p.bias.len() == h4
            && p.w_out.rows == N_CLASSES
            && p.w_out.cols == self.hidden
            && p.w_out.data.len() == N_CLASSES * self.hidden
            && p.b_out.len() == N_CLASSES
            && self.vocab.values().all(|&i| (i as usize) < v && i >= 2);
        if !ok {
            return Err(Error::validation("classifier tensors disagree with declared dimensions"));
        }
        if !p.all_finite() {
            return Err(Error::validation("classifier has non-finite parameters"));
        }
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        crate::corpus::io::write_json(path, self)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let m: Self = crate::corpus::io::read_json(path)?;
        m.validate()?;
        Ok(m)
    }
}

pub(crate) fn forward_with(p: &LstmParams, hidden: usize, ids: &[u32]) -> Trace {
    let hd = hidden;
    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    let mut steps = Vec::with_capacity(ids.len());
    for &id in ids {
        if id == PAD {
            continue;
        }
        let x = p.embedding.row(id as usize);
        let mut a = p.w_x.matvec(x);
        for ((ai, wh), b) in a.iter_mut().zip(p.w_h.matvec(&h)).zip(&p.bias) {
            *ai += wh + b;
        }
        for (j, v) in a.iter_mut().enumerate() {
            *v = if (2 * hd..3 * hd).contains(&j) { v.tanh() } else { sigmoid(*v) };
        }
        let mut c_new = vec![0.0; hd];
        let mut tanh_c = vec![0.0; hd];
        let mut h_new = vec![0.0; hd];
        for j in 0..hd {
            let (i, f, g, o) = (a[j], a[hd + j], a[2 * hd + j], a[3 * hd + j]);
            c_new[j] = f * c[j] + i * g;
            tanh_c[j] = c_new[j].tanh();
            h_new[j] = o * tanh_c[j];
        }
        steps.push(Step {
            id,
            h_prev: std::mem::replace(&mut h, h_new),
            c_prev: std::mem::replace(&mut c, c_new),
            gates: a,
            tanh_c,
        });
    }
    let relu: Vec<f64> = h.iter().map(|v| v.max(0.0)).collect();
    let mut logits = [0.0; N_CLASSES];
    for (k, l) in logits.iter_mut().enumerate() {
        *l = dot(p.w_out.row(k), &relu) + p.b_out[k];
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    let mut probs = [0.0; N_CLASSES];
    for (p, e) in probs.iter_mut().zip(&exps) {
        *p = e / z;
    }
    Trace {
        steps,
        hidden: h,
        logits,
        probs,
    }
}

/// Cross-entropy of `trace` against `label`.
pub(crate) fn cross_entropy(trace: &Trace, label: usize) -> f64 {
    let m = trace.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + trace.logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    lse - trace.logits[label]
}

/// Adds `scale · ∂CE/∂θ` into `grads`. ReLU and hinge-like kinks take the
/// zero subgradient.
pub(crate) fn backward(p: &LstmParams, hidden: usize, trace: &Trace, label: usize, scale: f64, grads: &mut LstmParams) {
    let hd = hidden;
    let mut d_logits = trace.probs;
    d_logits[label] -= 1.0;
    for v in d_logits.iter_mut() {
        *v *= scale;
    }
    let relu: Vec<f64> = trace.hidden.iter().map(|v| v.max(0.0)).collect();
    grads.w_out.add_outer(&d_logits, &relu, 1.0);
    for (g, d) in grads.b_out.iter_mut().zip(&d_logits) {
        *g += d;
    }
    let mut dh: Vec<f64> = p
        .w_out
        .matvec_t(&d_logits)
        .into_iter()
        .zip(&trace.hidden)
        .map(|(d, &h)| if h > 0.0 { d } else { 0.0 })
        .collect();
    let mut dc = vec![0.0; hd];
    let mut da = vec![0.0; 4 * hd];
    for step in trace.steps.iter().rev() {
        let a = &step.gates;
        for j in 0..hd {
            let (i, f, g, o) = (a[j], a[hd + j], a[2 * hd + j], a[3 * hd + j]);
            let tc = step.tanh_c[j];
            let d_o = dh[j] * tc;
            dc[j] += dh[j] * o * (1.0 - tc * tc);
            let d_i = dc[j] * g;
            let d_g = dc[j] * i;
            let d_f = dc[j] * step.c_prev[j];
            da[j] = d_i * i * (1.0 - i);
            da[hd + j] = d_f * f * (1.0 - f);
            da[2 * hd + j] = d_g * (1.0 - g * g);
            da[3 * hd + j] = d_o * o * (1.0 - o);
            dc[j] *= f;
        }
        let x = p.embedding.row(step.id as usize);
        grads.w_x.add_outer(&da, x, 1.0);
        grads.w_h.add_outer(&da, &step.h_prev, 1.0);
        for (g, d) in grads.bias.iter_mut().zip(&da) {
            *g += d;
        }
        let dx = p.w_x.matvec_t(&da);
        for (g, d) in grads.embedding.row_mut(step.id as usize).iter_mut().zip(&dx) {
            *g += d;
        }
        dh = p.w_h.matvec_t(&da);
    }
}

impl QueryClass {
    /// Argmax over the two classes; an exact tie goes to Visual.
    pub fn from_probs(probs: [f64; N_CLASSES]) -> Self {
        let q = probs[QueryLabel::QuoteSpeech.index()];
        let v = probs[QueryLabel::Visual.index()];
        if q > v {
            QueryClass {
                label: QueryLabel::QuoteSpeech,
                confidence: q,
            }
        } else {
            QueryClass {
                label: QueryLabel::Visual,
                confidence: v,
            }
        }
    }
}

/// Mean cross-entropy of a labelled batch and its gradient.
pub fn batch_gradient(model: &SequenceClassifier, batch: &[(Vec<u32>, QueryLabel)]) -> (f64, LstmParams) {
    let mut grads = LstmParams::zeros_like(&model.params);
    let scale = 1.0 / batch.len().max(1) as f64;
    let mut loss = 0.0;
    for (ids, label) in batch {
        let trace = model.forward(ids);
        loss += cross_entropy(&trace, label.index()) * scale;
        backward(&model.params, model.hidden, &trace, label.index(), scale, &mut grads);
    }
    (loss, grads)
}

/// Mean cross-entropy without gradients.
pub fn batch_loss(model: &SequenceClassifier, batch: &[(Vec<u32>, QueryLabel)]) -> f64 {
    let scale = 1.0 / batch.len().max(1) as f64;
    batch
        .iter()
        .map(|(ids, label)| cross_entropy(&model.forward(ids), label.index()) * scale)
        .sum()
}
