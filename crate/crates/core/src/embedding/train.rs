use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{loss_gradient, ranking_loss, TwoTowerModel};
use crate::corpus::{Annotation, Corpus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::validation("learning_rate must be a positive real"));
        }
        if self.epochs < 1 {
            return Err(Error::validation("epochs must be at least 1"));
        }
        if self.batch_size < 2 {
            return Err(Error::validation("batch_size must be at least 2 (in-batch negatives)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean batch loss of each epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
    /// Training-set loss before the first update, over a fixed batching.
    pub initial_loss: f64,
    /// Training-set loss after the last update, same batching.
    pub final_loss: f64,
    /// Training-set loss after each epoch, same batching. Unlike
    /// `epoch_losses` it does not move with the per-epoch reshuffle.
    pub fixed_batch_losses: Vec<f64>,
    pub n_pairs: usize,
}

fn batches(order: &[usize], size: usize) -> impl Iterator<Item = &[usize]> {
    order.chunks(size).filter(|c| c.len() >= 2)
}

fn dataset_loss(
    model: &TwoTowerModel,
    texts: &[Vec<f64>],
    videos: &[&[f64]],
    order: &[usize],
    size: usize,
) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for chunk in batches(order, size) {
        let batch: Vec<(&[f64], &[f64])> = chunk.iter().map(|&i| (texts[i].as_slice(), videos[i])).collect();
        total += ranking_loss(model, &batch)?;
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

/// Mini-batch gradient descent over `(annotation, clip feature)` pairs.
pub fn train(
    init: TwoTowerModel,
    annotations: &[Annotation],
    corpus: &Corpus,
    config: &TrainConfig,
) -> Result<(TwoTowerModel, TrainReport)> {
    config.validate()?;
    init.validate()?;
    let mut texts = Vec::with_capacity(annotations.len());
    let mut videos: Vec<&[f64]> = Vec::with_capacity(annotations.len());
    for a in annotations {
        let feature = corpus
            .feature(&a.clip_id)
            .ok_or_else(|| Error::validation(format!("training clip {:?} has no video feature", a.clip_id)))?;
        if feature.len() != init.video_dim {
            return Err(Error::DimensionMismatch {
                expected: init.video_dim,
                actual: feature.len(),
            });
        }
        texts.push(init.featurize(&a.text));
        videos.push(feature);
    }
    if texts.len() < 2 {
        return Err(Error::validation("training needs at least 2 annotation pairs"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut eval_order: Vec<usize> = (0..texts.len()).collect();
    eval_order.shuffle(&mut rng);
    let mut model = init;
    let initial_loss = dataset_loss(&model, &texts, &videos, &eval_order, config.batch_size)?;

    let mut order = eval_order.clone();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut fixed_batch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut n = 0usize;
        for chunk in batches(&order, config.batch_size) {
            let batch: Vec<(&[f64], &[f64])> = chunk.iter().map(|&i| (texts[i].as_slice(), videos[i])).collect();
            let g = loss_gradient(&model, &batch)?;
            if !g.loss.is_finite() {
                return Err(Error::Diverged { epoch, loss: g.loss });
            }
            model.w_text.descend(&g.w_text, config.learning_rate);
            model.w_video.descend(&g.w_video, config.learning_rate);
            total += g.loss;
            n += 1;
        }
        let mean = if n == 0 { 0.0 } else { total / n as f64 };
        if !mean.is_finite() || !(model.w_text.all_finite() && model.w_video.all_finite()) {
            return Err(Error::Diverged { epoch, loss: mean });
        }
        epoch_losses.push(mean);
        fixed_batch_losses.push(dataset_loss(&model, &texts, &videos, &eval_order, config.batch_size)?);
    }
    let final_loss = *fixed_batch_losses.last().expect("at least one epoch");
    Ok((
        model,
        TrainReport {
            epoch_losses,
            initial_loss,
            final_loss,
            fixed_batch_losses,
            n_pairs: texts.len(),
        },
    ))
}
