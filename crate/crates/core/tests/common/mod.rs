//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the code under test except for plain data types.
#![allow(dead_code)]

pub mod checks;

use clipseek::classifier::{LstmParams, QueryLabel, PAD};
use clipseek::linalg::Matrix;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;
/// Hinge arguments and pre-ReLU activations closer than this to zero make a
/// finite difference straddle a kink.
pub const KINK_GUARD: f64 = 1e-3;

fn matvec(m: &Matrix, x: &[f64]) -> Vec<f64> {
    (0..m.rows)
        .map(|r| (0..m.cols).map(|c| m.data[r * m.cols + c] * x[c]).sum())
        .collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.into_iter().map(|x| x / n).collect()
    } else {
        v
    }
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity matrix `s[i][j]` between text `i` and video `j`.
pub fn sim_matrix(w_text: &Matrix, w_video: &Matrix, batch: &[(Vec<f64>, Vec<f64>)]) -> Vec<Vec<f64>> {
    let us: Vec<Vec<f64>> = batch.iter().map(|(t, _)| unit(matvec(w_text, t))).collect();
    let vs: Vec<Vec<f64>> = batch.iter().map(|(_, v)| unit(matvec(w_video, v))).collect();
    us.iter().map(|u| vs.iter().map(|v| inner(u, v)).collect()).collect()
}

/// All `m + s_ij - s_ii` and `m + s_ji - s_ii` for `i != j`.
pub fn hinge_args(sims: &[Vec<f64>], margin: f64) -> Vec<f64> {
    let b = sims.len();
    let mut out = Vec::new();
    for i in 0..b {
        for j in (0..b).filter(|&j| j != i) {
            out.push(margin + sims[i][j] - sims[i][i]);
            out.push(margin + sims[j][i] - sims[i][i]);
        }
    }
    out
}

/// Bi-directional max-margin loss with `c = 1/(B(B-1))`.
pub fn ranking_loss_oracle(w_text: &Matrix, w_video: &Matrix, margin: f64, batch: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let b = batch.len() as f64;
    let sims = sim_matrix(w_text, w_video, batch);
    hinge_args(&sims, margin).into_iter().map(|a| a.max(0.0)).sum::<f64>() / (b * (b - 1.0))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Straight-line LSTM forward pass; returns `(cross-entropy, h_T)`.
pub fn lstm_loss_oracle(p: &LstmParams, hidden: usize, ids: &[u32], label: QueryLabel) -> (f64, Vec<f64>) {
    let h_dim = hidden;
    let mut h = vec![0.0; h_dim];
    let mut c = vec![0.0; h_dim];
    for &id in ids.iter().filter(|&&id| id != PAD) {
        let e = &p.embedding;
        let x: Vec<f64> = (0..e.cols).map(|k| e.data[id as usize * e.cols + k]).collect();
        let zx = matvec(&p.w_x, &x);
        let zh = matvec(&p.w_h, &h);
        let z = |gate: usize, j: usize| zx[gate * h_dim + j] + zh[gate * h_dim + j] + p.bias[gate * h_dim + j];
        let mut h_next = vec![0.0; h_dim];
        for j in 0..h_dim {
            let i = sigmoid(z(0, j));
            let f = sigmoid(z(1, j));
            let g = z(2, j).tanh();
            let o = sigmoid(z(3, j));
            c[j] = f * c[j] + i * g;
            h_next[j] = o * c[j].tanh();
        }
        h = h_next;
    }
    let r: Vec<f64> = h.iter().map(|v| v.max(0.0)).collect();
    let logits: Vec<f64> = (0..2).map(|k| inner(p.w_out.row(k), &r) + p.b_out[k]).collect();
    let lse = logits.iter().map(|l| l.exp()).sum::<f64>().ln();
    let target = match label {
        QueryLabel::QuoteSpeech => 0,
        QueryLabel::Visual => 1,
    };
    (lse - logits[target], h)
}

pub fn lstm_batch_loss_oracle(p: &LstmParams, hidden: usize, batch: &[(Vec<u32>, QueryLabel)]) -> f64 {
    batch.iter().map(|(ids, l)| lstm_loss_oracle(p, hidden, ids, *l).0).sum::<f64>() / batch.len() as f64
}

/// Relative error with a floor so that near-zero entries compare absolutely.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Exhaustive cosine ranking: every clip scored, sorted by score descending
/// then clip id ascending, truncated to `k`.
pub fn embedding_rank_oracle(
    w_text: &Matrix,
    w_video: &Matrix,
    query_feature: &[f64],
    clips: &[(String, Vec<f64>)],
    k: usize,
) -> Vec<(String, f64)> {
    let q = unit(matvec(w_text, query_feature));
    let mut scored: Vec<(String, f64)> = clips
        .iter()
        .map(|(id, x)| (id.clone(), inner(&q, &unit(matvec(w_video, x)))))
        .collect();
    sort_and_cut(&mut scored, k);
    scored
}

fn sort_and_cut(scored: &mut Vec<(String, f64)>, k: usize) {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(k);
}

/// BM25 over pre-tokenized documents, recomputing every statistic from the
/// raw token lists.
pub fn bm25_oracle(docs: &[(String, Vec<String>)], query: &[String], k1: f64, b: f64, k: usize) -> Vec<(String, f64)> {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|(_, t)| t.len()).sum::<usize>() as f64 / n;
    let mut scored = Vec::new();
    for (id, toks) in docs {
        let mut s = 0.0;
        for term in query {
            let tf = toks.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = docs.iter().filter(|(_, t)| t.contains(term)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let len_ratio = toks.len() as f64 / avgdl;
            s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len_ratio));
        }
        if s > 0.0 {
            scored.push((id.clone(), s));
        }
    }
    sort_and_cut(&mut scored, k);
    scored
}

/// Recall at `n` over 1-based ranks.
pub fn recall_oracle(ranks: &[usize], n: usize) -> f64 {
    ranks.iter().filter(|&&r| r <= n).count() as f64 / ranks.len() as f64
}

/// Median of 1-based ranks; even counts average the two middle values.
pub fn median_oracle(ranks: &[usize]) -> f64 {
    let mut r = ranks.to_vec();
    r.sort_unstable();
    let m = r.len() / 2;
    if r.len() % 2 == 1 {
        r[m] as f64
    } else {
        (r[m - 1] + r[m]) as f64 / 2.0
    }
}
