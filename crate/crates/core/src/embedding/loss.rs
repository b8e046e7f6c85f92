//! Bi-directional max-margin ranking loss with in-batch negatives.
//!
//! With `s_ij` the similarity of text `i` and video `j`:
//!
//! ```text
//! L = 1/(B(B−1)) · Σ_{i≠j} [ max(0, m + s_ij − s_ii) + max(0, m + s_ji − s_ii) ]
//! ```

use super::TwoTowerModel;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub w_text: Matrix,
    pub w_video: Matrix,
}

struct Tower {
    raw_norm: Vec<f64>,
    unit: Vec<Vec<f64>>,
}

fn project(w: &Matrix, xs: &[&[f64]], expected: usize) -> Result<Tower> {
    let mut raw_norm = Vec::with_capacity(xs.len());
    let mut unit = Vec::with_capacity(xs.len());
    for x in xs {
        if x.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: x.len(),
            });
        }
        let raw = w.matvec(x);
        let n = norm(&raw);
        raw_norm.push(n);
        unit.push(if n > 0.0 { raw.iter().map(|v| v / n).collect() } else { raw });
    }
    Ok(Tower { raw_norm, unit })
}

struct Forward {
    text: Tower,
    video: Tower,
    sims: Vec<Vec<f64>>,
}

fn forward(model: &TwoTowerModel, batch: &[(&[f64], &[f64])]) -> Result<Forward> {
    if batch.len() < 2 {
        return Err(Error::validation("ranking loss needs a batch of at least 2 pairs"));
    }
    let texts: Vec<&[f64]> = batch.iter().map(|p| p.0).collect();
    let videos: Vec<&[f64]> = batch.iter().map(|p| p.1).collect();
    let text = project(&model.w_text, &texts, model.text_dim)?;
    let video = project(&model.w_video, &videos, model.video_dim)?;
    let sims = text
        .unit
        .iter()
        .map(|u| video.unit.iter().map(|v| dot(u, v)).collect())
        .collect();
    Ok(Forward { text, video, sims })
}

/// Hinge terms accumulated into `dL/ds`; returns the loss.
fn hinge_terms(sims: &[Vec<f64>], margin: f64, mut ds: Option<&mut Vec<Vec<f64>>>) -> f64 {
    let b = sims.len();
    let scale = 1.0 / (b * (b - 1)) as f64;
    let mut loss = 0.0;
    for i in 0..b {
        for j in 0..b {
            if i == j {
                continue;
            }
            let t2v = margin + sims[i][j] - sims[i][i];
            if t2v > 0.0 {
                loss += t2v;
                if let Some(g) = ds.as_deref_mut() {
                    g[i][j] += scale;
                    g[i][i] -= scale;
                }
            }
            let v2t = margin + sims[j][i] - sims[i][i];
            if v2t > 0.0 {
                loss += v2t;
                if let Some(g) = ds.as_deref_mut() {
                    g[j][i] += scale;
                    g[i][i] -= scale;
                }
            }
        }
    }
    loss * scale
}

pub fn ranking_loss(model: &TwoTowerModel, batch: &[(&[f64], &[f64])]) -> Result<f64> {
    let fwd = forward(model, batch)?;
    Ok(hinge_terms(&fwd.sims, model.margin, None))
}

/// Back-propagates `dL/d(unit)` through `unit = raw/|raw|` and the linear map.
fn accumulate(grad: &mut Matrix, tower: &Tower, d_unit: &[Vec<f64>], inputs: &[&[f64]]) {
    for ((u, du), (&n, x)) in tower.unit.iter().zip(d_unit).zip(tower.raw_norm.iter().zip(inputs)) {
        if n == 0.0 {
            continue;
        }
        let along = dot(u, du);
        let d_raw: Vec<f64> = u.iter().zip(du).map(|(ui, dui)| (dui - ui * along) / n).collect();
        grad.add_outer(&d_raw, x, 1.0);
    }
}

/// Loss and exact (sub)gradients with respect to both projection matrices.
/// Hinges exactly at their kink contribute zero.
pub fn loss_gradient(model: &TwoTowerModel, batch: &[(&[f64], &[f64])]) -> Result<Gradients> {
    let fwd = forward(model, batch)?;
    let b = batch.len();
    let mut ds = vec![vec![0.0; b]; b];
    let loss = hinge_terms(&fwd.sims, model.margin, Some(&mut ds));

    let k = model.joint_dim;
    let mut d_text = vec![vec![0.0; k]; b];
    let mut d_video = vec![vec![0.0; k]; b];
    for i in 0..b {
        for j in 0..b {
            let g = ds[i][j];
            if g == 0.0 {
                continue;
            }
            for (d, w) in d_text[i].iter_mut().zip(&fwd.video.unit[j]) {
                *d += g * w;
            }
            for (d, u) in d_video[j].iter_mut().zip(&fwd.text.unit[i]) {
                *d += g * u;
            }
        }
    }

    let texts: Vec<&[f64]> = batch.iter().map(|p| p.0).collect();
    let videos: Vec<&[f64]> = batch.iter().map(|p| p.1).collect();
    let mut w_text = Matrix::zeros(k, model.text_dim);
    let mut w_video = Matrix::zeros(k, model.video_dim);
    accumulate(&mut w_text, &fwd.text, &d_text, &texts);
    accumulate(&mut w_video, &fwd.video, &d_video, &videos);
    Ok(Gradients { loss, w_text, w_video })
}
