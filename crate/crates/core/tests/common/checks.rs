//! Randomised checks shared by the focused tests and the acceptance run.
//! Each returns a short summary on success and the first violation on
//! failure.

use std::sync::Arc;

use clipseek::classifier::{batch_gradient, batch_loss, QueryLabel, SequenceClassifier};
use clipseek::embedding::{
    loss_gradient, ranking_loss, retrieve, Backend, EmbeddingIndex, RankedResult, TextFeaturizer, TwoTowerModel,
};
use clipseek::linalg::Matrix;
use clipseek::textsearch::{Bm25Params, InvertedIndex, TranscriptDoc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

#[derive(Debug, Clone, Copy)]
pub struct GradSummary {
    pub instances: usize,
    pub resampled: usize,
    pub max_rel_err: f64,
}

impl std::fmt::Display for GradSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} instances, {} resampled near a kink, max rel err {:.2e}",
            self.instances, self.resampled, self.max_rel_err
        )
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Central difference of `f` with respect to every entry of `data`.
fn numeric_grad(data: &mut [f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..data.len())
        .map(|i| {
            let orig = data[i];
            data[i] = orig + FD_STEP;
            let up = f(data);
            data[i] = orig - FD_STEP;
            let down = f(data);
            data[i] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

fn worst(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| rel_err(a, n))
        .fold(0.0, f64::max)
}

/// Ranking-loss gradients on random models with `k, D ≤ 8` and `B ≤ 4`.
pub fn ranking_gradient_check(instances: usize, seed: u64) -> Result<GradSummary, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = GradSummary {
        instances: 0,
        resampled: 0,
        max_rel_err: 0.0,
    };
    let mut active = 0;
    while s.instances < instances {
        let k = rng.gen_range(1..=8);
        let d_text = rng.gen_range(1..=8);
        let d_video = rng.gen_range(1..=8);
        let b = rng.gen_range(2..=4);
        let margin = 0.2;
        let w_text = Matrix::uniform(k, d_text, 1.0, &mut rng);
        let w_video = Matrix::uniform(k, d_video, 1.0, &mut rng);
        let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..b)
            .map(|_| (random_vec(&mut rng, d_text), random_vec(&mut rng, d_video)))
            .collect();
        let sims = sim_matrix(&w_text, &w_video, &batch);
        if hinge_args(&sims, margin).iter().any(|a| a.abs() < KINK_GUARD) {
            s.resampled += 1;
            continue;
        }
        s.instances += 1;

        let model = TwoTowerModel::from_matrices(w_text.clone(), w_video.clone(), margin, TextFeaturizer::new(d_text, 0))
            .map_err(|e| e.to_string())?;
        let refs: Vec<(&[f64], &[f64])> = batch.iter().map(|(t, v)| (t.as_slice(), v.as_slice())).collect();
        let expected = ranking_loss_oracle(&w_text, &w_video, margin, &batch);
        let grads = loss_gradient(&model, &refs).map_err(|e| e.to_string())?;
        let direct = ranking_loss(&model, &refs).map_err(|e| e.to_string())?;
        ensure!(
            (grads.loss - expected).abs() < 1e-12 && (direct - expected).abs() < 1e-12,
            "instance {}: loss {} vs reference {expected}",
            s.instances,
            grads.loss
        );
        if expected > 0.0 {
            active += 1;
        }

        let mut wt = w_text.clone();
        let num_t = numeric_grad(&mut w_text.data.clone(), |d| {
            wt.data.copy_from_slice(d);
            ranking_loss_oracle(&wt, &w_video, margin, &batch)
        });
        let mut wv = w_video.clone();
        let num_v = numeric_grad(&mut w_video.data.clone(), |d| {
            wv.data.copy_from_slice(d);
            ranking_loss_oracle(&w_text, &wv, margin, &batch)
        });
        let err = worst(&grads.w_text.data, &num_t).max(worst(&grads.w_video.data, &num_v));
        ensure!(err < FD_TOL, "instance {}: relative error {err:e}", s.instances);
        s.max_rel_err = s.max_rel_err.max(err);
    }
    ensure!(active * 2 >= instances, "only {active} instances had an active hinge");
    Ok(s)
}

/// Tiny classifier with every weight redrawn from U(-1, 1).
fn random_classifier(rng: &mut ChaCha8Rng) -> SequenceClassifier {
    let n_words = rng.gen_range(2..=6);
    let words: Vec<String> = (0..n_words).map(|i| format!("w{i}")).collect();
    let refs: Vec<&str> = words.iter().map(String::as_str).collect();
    let embed = rng.gen_range(1..=4);
    let hidden = rng.gen_range(1..=4);
    let mut model = SequenceClassifier::init(&refs, embed, hidden, 6, rng).unwrap();
    for s in model.params.slices_mut() {
        for v in s.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
    model
}

/// Cross-entropy gradients of random tiny classifiers on random batches.
pub fn cross_entropy_gradient_check(instances: usize, seed: u64) -> Result<GradSummary, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = GradSummary {
        instances: 0,
        resampled: 0,
        max_rel_err: 0.0,
    };
    while s.instances < instances {
        let model = random_classifier(&mut rng);
        let vocab = model.vocab_size() as u32;
        let batch: Vec<(Vec<u32>, QueryLabel)> = (0..rng.gen_range(1..=4))
            .map(|_| {
                let len = rng.gen_range(1..=6);
                let ids = (0..len).map(|_| rng.gen_range(0..vocab)).collect();
                let label = if rng.gen_bool(0.5) { QueryLabel::QuoteSpeech } else { QueryLabel::Visual };
                (ids, label)
            })
            .collect();
        let near_kink = batch.iter().any(|(ids, l)| {
            lstm_loss_oracle(&model.params, model.hidden, ids, *l)
                .1
                .iter()
                .any(|h| h.abs() < KINK_GUARD)
        });
        if near_kink {
            s.resampled += 1;
            continue;
        }
        s.instances += 1;

        let expected = lstm_batch_loss_oracle(&model.params, model.hidden, &batch);
        let (loss, grads) = batch_gradient(&model, &batch);
        ensure!(
            (loss - expected).abs() < 1e-12 && (batch_loss(&model, &batch) - expected).abs() < 1e-12,
            "instance {}: loss {loss} vs reference {expected}",
            s.instances
        );
        for (slot, analytic) in grads.slices().iter().enumerate() {
            let mut params = model.params.clone();
            let mut data = params.slices()[slot].to_vec();
            let numeric = numeric_grad(&mut data, |d| {
                params.slices_mut()[slot].copy_from_slice(d);
                lstm_batch_loss_oracle(&params, model.hidden, &batch)
            });
            let err = worst(analytic, &numeric);
            ensure!(err < FD_TOL, "instance {}, tensor {slot}: relative error {err:e}", s.instances);
            s.max_rel_err = s.max_rel_err.max(err);
        }
    }
    Ok(s)
}

const QUERIES_PER_CORPUS: usize = 10;
const WORDS: &[&str] = &[
    "harbour", "crane", "minister", "flood", "market", "choir", "tram", "snow", "bridge", "strike", "orchard", "parade",
];

fn random_words(rng: &mut ChaCha8Rng, len: usize) -> Vec<String> {
    (0..len).map(|_| (*WORDS.choose(rng).unwrap()).to_owned()).collect()
}

fn same_ranking(got: &[RankedResult], want: &[(String, f64)], backend: Backend, ctx: &str) -> Result<(), String> {
    let got_ids: Vec<(&str, usize)> = got.iter().map(|r| (r.clip_id.as_str(), r.rank)).collect();
    let want_ids: Vec<(&str, usize)> = want.iter().enumerate().map(|(i, (id, _))| (id.as_str(), i + 1)).collect();
    ensure!(got_ids == want_ids, "{ctx}: got {got_ids:?}, oracle {want_ids:?}");
    for (r, (_, s)) in got.iter().zip(want) {
        ensure!(r.backend == backend, "{ctx}: backend {:?}", r.backend);
        ensure!(
            (r.score - s).abs() <= 1e-12 * s.abs().max(1.0),
            "{ctx}: score {} vs oracle {s}",
            r.score
        );
    }
    Ok(())
}

/// Embedding retrieval on random corpora of at most 50 clips; returns the
/// number of queries compared.
pub fn embedding_oracle_check(corpora: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queries = 0;
    for corpus_no in 0..corpora {
        let n = rng.gen_range(1..=50);
        let d_video = rng.gen_range(2..=8);
        let joint = rng.gen_range(2..=8);
        let featurizer = TextFeaturizer::new(32, corpus_no as u64);
        let w_text = Matrix::uniform(joint, 32, 1.0, &mut rng);
        let w_video = Matrix::uniform(joint, d_video, 1.0, &mut rng);
        let mut clips: Vec<(String, Vec<f64>)> = Vec::with_capacity(n);
        for i in 0..n {
            // Every fifth clip copies an earlier feature vector to force exact ties.
            let x = if i % 5 == 4 {
                clips[rng.gen_range(0..i)].1.clone()
            } else {
                random_vec(&mut rng, d_video)
            };
            clips.push((format!("clip{:03}", rng.gen_range(0..1000) * 100 + i), x));
        }
        let model = TwoTowerModel::from_matrices(w_text.clone(), w_video.clone(), 0.2, featurizer.clone())
            .map_err(|e| e.to_string())?;
        let index = EmbeddingIndex::build(Arc::new(model.clone()), &clips).map_err(|e| e.to_string())?;
        for _ in 0..QUERIES_PER_CORPUS {
            let len = rng.gen_range(1..=5);
            let query = random_words(&mut rng, len).join(" ");
            let k = rng.gen_range(1..=n + 2);
            let want = embedding_rank_oracle(&w_text, &w_video, &featurizer.featurize(&query), &clips, k);
            let ctx = format!("corpus {corpus_no}, query {query:?}, k {k}");
            same_ranking(&index.retrieve(&query, k).map_err(|e| e.to_string())?, &want, Backend::Embedding, &ctx)?;
            let one_shot = retrieve(&model, &query, &clips, k).map_err(|e| e.to_string())?;
            same_ranking(&one_shot, &want, Backend::Embedding, &ctx)?;
            queries += 1;
        }
    }
    Ok(queries)
}

/// BM25 search on random corpora of at most 50 transcripts with random
/// `k1` and `b`; returns the number of queries compared.
pub fn fulltext_oracle_check(corpora: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queries = 0;
    for corpus_no in 0..corpora {
        let n = rng.gen_range(1..=50);
        let params = Bm25Params {
            k1: rng.gen_range(0.5..2.0),
            b: rng.gen_range(0.0..=1.0),
        };
        let docs: Vec<(String, Vec<String>)> = (0..n)
            .map(|i| {
                let len = rng.gen_range(1..=15);
                (format!("d{:02}", (i * 37) % 100), random_words(&mut rng, len))
            })
            .collect();
        let transcripts: Vec<TranscriptDoc> = docs
            .iter()
            .map(|(id, toks)| TranscriptDoc {
                clip_id: id.clone(),
                text: format!("\"{}.\"", toks.join(", ").to_uppercase()),
            })
            .collect();
        let index = InvertedIndex::build(&transcripts, params).map_err(|e| e.to_string())?;
        for _ in 0..QUERIES_PER_CORPUS {
            let len = rng.gen_range(1..=4);
            let mut terms = random_words(&mut rng, len);
            if rng.gen_bool(0.2) {
                terms.push("unseen".to_owned());
            }
            let query = terms.join(" ");
            let k = rng.gen_range(1..=n + 2);
            let want = bm25_oracle(&docs, &terms, params.k1, params.b, k);
            let ctx = format!("corpus {corpus_no}, query {query:?}, k {k}");
            same_ranking(&index.search(&query, k), &want, Backend::FullText, &ctx)?;
            for (id, s) in &want {
                let direct = index.bm25_score(&terms, id).map_err(|e| e.to_string())?;
                ensure!((direct - s).abs() <= 1e-12 * s.max(1.0), "{ctx}: bm25_score {direct} vs {s}");
            }
            queries += 1;
        }
    }
    Ok(queries)
}
