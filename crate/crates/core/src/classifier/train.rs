use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{batch_gradient, LstmParams};
use super::{LabeledQuery, QueryLabel, SequenceClassifier};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub batch_size: usize,
    pub epochs: usize,
    /// Adam step size.
    pub learning_rate: f64,
    pub seed: u64,
    pub max_sequence_length: usize,
    pub embed_dim: usize,
    pub hidden: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            epochs: 7,
            learning_rate: 0.01,
            seed: 0,
            max_sequence_length: 32,
            embed_dim: 16,
            hidden: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub mean_loss: f64,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub epochs: Vec<EpochRecord>,
}

struct Adam {
    m: LstmParams,
    v: LstmParams,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-7;

    fn new(params: &LstmParams, lr: f64) -> Self {
        Self {
            m: LstmParams::zeros_like(params),
            v: LstmParams::zeros_like(params),
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut LstmParams, grads: &LstmParams) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let g = grads.slices();
        for (k, ((p, m), v)) in params
            .slices_mut()
            .into_iter()
            .zip(self.m.slices_mut())
            .zip(self.v.slices_mut())
            .enumerate()
        {
            for (((w, mi), vi), gi) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g[k]) {
                *mi = Self::BETA1 * *mi + (1.0 - Self::BETA1) * gi;
                *vi = Self::BETA2 * *vi + (1.0 - Self::BETA2) * gi * gi;
                *w -= self.lr * (*mi / c1) / ((*vi / c2).sqrt() + Self::EPS);
            }
        }
    }
}

/// Trains the sequence classifier on `train` with mini-batch Adam on the
/// cross-entropy loss.
pub fn train_classifier(
    train: &[LabeledQuery],
    config: &ClassifierConfig,
) -> Result<(SequenceClassifier, TrainingCurve)> {
    if config.epochs < 1 || config.batch_size < 1 {
        return Err(Error::validation("classifier epochs and batch_size must be at least 1"));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::validation("classifier learning_rate must be a positive real"));
    }
    if train.is_empty() {
        return Err(Error::validation("classifier training set is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let texts: Vec<&str> = train.iter().map(|q| q.text.as_str()).collect();
    let mut model = SequenceClassifier::init(
        &texts,
        config.embed_dim,
        config.hidden,
        config.max_sequence_length,
        &mut rng,
    )?;
    let encoded: Vec<(Vec<u32>, QueryLabel)> = train.iter().map(|q| (model.encode(&q.text), q.label)).collect();
    let mut adam = Adam::new(&model.params, config.learning_rate);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut curve = TrainingCurve { epochs: Vec::new() };
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut n_batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(Vec<u32>, QueryLabel)> = chunk.iter().map(|&i| encoded[i].clone()).collect();
            let (loss, grads) = batch_gradient(&model, &batch);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            adam.step(&mut model.params, &grads);
            total += loss;
            n_batches += 1;
        }
        if !model.params.all_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: f64::NAN,
            });
        }
        let correct = encoded
            .iter()
            .filter(|(ids, label)| super::QueryClass::from_probs(model.forward(ids).probs).label == *label)
            .count();
        curve.epochs.push(EpochRecord {
            mean_loss: total / n_batches as f64,
            train_accuracy: correct as f64 / encoded.len() as f64,
        });
    }
    Ok((model, curve))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRecall {
    pub total: usize,
    pub correct: usize,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMetrics {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub quote_speech: ClassRecall,
    pub visual: ClassRecall,
    /// `confusion[truth][predicted]`, indexed quote_speech = 0, visual = 1.
    pub confusion: [[usize; 2]; 2],
}

/// Accuracy, per-class recall and confusion counts over `(truth, predicted)`.
pub fn evaluate_predictions(pairs: impl IntoIterator<Item = (QueryLabel, QueryLabel)>) -> Result<ClassifierMetrics> {
    let mut confusion = [[0usize; 2]; 2];
    for (t, p) in pairs {
        confusion[t.index()][p.index()] += 1;
    }
    let n: usize = confusion.iter().flatten().sum();
    if n == 0 {
        return Err(Error::validation("cannot evaluate on an empty test split"));
    }
    let recall = |l: QueryLabel| {
        let row = confusion[l.index()];
        let total = row[0] + row[1];
        let correct = row[l.index()];
        ClassRecall {
            total,
            correct,
            recall: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        }
    };
    let correct = confusion[0][0] + confusion[1][1];
    Ok(ClassifierMetrics {
        n,
        correct,
        accuracy: correct as f64 / n as f64,
        quote_speech: recall(QueryLabel::QuoteSpeech),
        visual: recall(QueryLabel::Visual),
        confusion,
    })
}

pub fn evaluate_classifier(classifier: &SequenceClassifier, test: &[LabeledQuery]) -> Result<ClassifierMetrics> {
    evaluate_predictions(test.iter().map(|q| (q.label, classifier.classify(&q.text).label)))
}
