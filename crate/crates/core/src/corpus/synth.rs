//! Deterministic synthetic archives for desk-scale experiments.
//!
//! Every clip draws a latent topic: a small bag of visual-vocabulary words.
//! Captions are sampled from that bag, and the video feature is the bag's
//! indicator vector plus Gaussian noise. Transcripts are quote-styled
//! sentences over a disjoint speech vocabulary; two of their words echo the
//! clip's topic (speech word `i` pairs with visual word `i`), the rest are
//! drawn at random so each transcript is lexically distinctive.
//!
//! Visual words always end in a vowel, speech words always end in `n`, and
//! the quote scaffolding uses ordinary English words, so the three token
//! sets never overlap.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Annotation, Clip, Corpus, FeatureRecord};
use crate::error::{Error, Result};
use crate::textsearch::TranscriptDoc;

const CONSONANTS: &[u8] = b"bdfgklmprstvz";
const VOWELS: &[u8] = b"aeiou";

const SPEAKERS: &[&str] = &[
    "he",
    "she",
    "they",
    "the mayor",
    "the reporter",
    "the minister",
    "a witness",
    "the presenter",
];
const SOURCES: &[&str] = &["the mayor", "officials", "the report", "the minister", "witnesses"];

/// Tokens that quote templates may add around the quoted body.
pub const SCAFFOLD_WORDS: &[&str] = &[
    "he", "she", "they", "the", "mayor", "reporter", "minister", "a", "witness", "presenter", "said",
    "according", "to", "officials", "report", "witnesses", "declared", "told", "reporters", "added",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_clips: usize,
    pub visual_vocab: usize,
    pub speech_vocab: usize,
    pub transcript_coverage: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub captions_per_clip: usize,
    pub topic_size: usize,
    pub clips_per_video: usize,
    /// Topic words each transcript echoes through their speech-vocabulary
    /// counterparts; this is the only link between what is said and what is
    /// shown.
    pub echo_words: usize,
    /// Unrelated speech words added to each transcript.
    pub filler_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_clips: 200,
            visual_vocab: 100,
            speech_vocab: 200,
            transcript_coverage: 0.6,
            noise_sigma: 0.1,
            seed: 7,
            captions_per_clip: 20,
            topic_size: 5,
            clips_per_video: 10,
            echo_words: 5,
            filler_words: 3,
        }
    }
}

fn syllable(i: usize) -> [u8; 2] {
    [CONSONANTS[i / VOWELS.len() % CONSONANTS.len()], VOWELS[i % VOWELS.len()]]
}

fn syllable_word(mut i: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut parts = Vec::new();
    loop {
        parts.push(syllable(i % base));
        i /= base;
        if i == 0 && parts.len() >= 2 {
            break;
        }
    }
    parts.iter().rev().flat_map(|s| s.iter().map(|&b| b as char)).collect()
}

/// The `i`-th visual-vocabulary word.
pub fn visual_word(i: usize) -> String {
    syllable_word(i)
}

/// The `i`-th speech-vocabulary word.
pub fn speech_word(i: usize) -> String {
    let mut w = syllable_word(i);
    w.push('n');
    w
}

/// Wraps `body` in one of the quote templates.
fn quote_template<R: Rng>(body: &str, rng: &mut R) -> String {
    let speaker = SPEAKERS[rng.gen_range(0..SPEAKERS.len())];
    match rng.gen_range(0..5) {
        0 => format!("{} said, \"{body}\"", capitalise(speaker)),
        1 => format!("According to {}, {body}", SOURCES[rng.gen_range(0..SOURCES.len())]),
        2 => format!("{} declared: \"{body}\"", capitalise(speaker)),
        3 => format!("\"{body}\""),
        _ => format!("\"{body},\" {speaker} told reporters."),
    }
}

fn capitalise(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn synth_corpus(cfg: &SynthConfig) -> Result<Corpus> {
    if cfg.visual_vocab < 10 || cfg.speech_vocab < 10 {
        return Err(Error::validation("vocabulary sizes must be at least 10"));
    }
    if !(0.0..=1.0).contains(&cfg.transcript_coverage) {
        return Err(Error::validation("transcript_coverage must lie in [0, 1]"));
    }
    if !(cfg.noise_sigma >= 0.0 && cfg.noise_sigma.is_finite()) {
        return Err(Error::validation("noise_sigma must be a non-negative real"));
    }
    if cfg.topic_size < 1 || cfg.topic_size > cfg.visual_vocab || cfg.captions_per_clip < 1 {
        return Err(Error::validation("topic_size must lie in 1..=visual_vocab and captions_per_clip ≥ 1"));
    }
    if cfg.echo_words + cfg.filler_words == 0 {
        return Err(Error::validation("transcripts need at least one echo or filler word"));
    }
    let per_video = cfg.clips_per_video.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");

    let mut clips = Vec::with_capacity(cfg.n_clips);
    let mut topics = Vec::with_capacity(cfg.n_clips);
    let mut captions = Vec::with_capacity(cfg.n_clips * cfg.captions_per_clip);
    let mut features = Vec::with_capacity(cfg.n_clips);
    for i in 0..cfg.n_clips {
        let clip_id = format!("clip{i:05}");
        let start = (i % per_video) as f64 * 15.0;
        clips.push(Clip::new(&clip_id, format!("video{:04}", i / per_video), start, start + 15.0));

        let topic: Vec<usize> = index::sample(&mut rng, cfg.visual_vocab, cfg.topic_size).into_vec();
        let caption_len = cfg.topic_size.min(3);
        for _ in 0..cfg.captions_per_clip {
            let len = rng.gen_range(caption_len..=cfg.topic_size.min(caption_len + 1));
            let words: Vec<String> = topic.choose_multiple(&mut rng, len).map(|&w| visual_word(w)).collect();
            captions.push(Annotation::caption(&clip_id, words.join(" ")));
        }

        let mut vector = vec![0.0; cfg.visual_vocab];
        for &w in &topic {
            vector[w] = 1.0;
        }
        if cfg.noise_sigma > 0.0 {
            for v in &mut vector {
                *v += noise.sample(&mut rng);
            }
        }
        features.push(FeatureRecord { clip_id, vector });
        topics.push(topic);
    }

    let n_transcribed = ((cfg.transcript_coverage * cfg.n_clips as f64) + 1e-9).floor() as usize;
    let mut chosen = index::sample(&mut rng, cfg.n_clips, n_transcribed).into_vec();
    chosen.sort_unstable();
    let mut transcripts = Vec::with_capacity(n_transcribed);
    for i in chosen {
        let topic = &topics[i];
        let mut words: Vec<String> = topic
            .choose_multiple(&mut rng, cfg.echo_words.min(topic.len()))
            .map(|&w| speech_word(w % cfg.speech_vocab))
            .collect();
        for _ in 0..cfg.filler_words {
            words.push(speech_word(rng.gen_range(0..cfg.speech_vocab)));
        }
        words.shuffle(&mut rng);
        let text = quote_template(&words.join(" "), &mut rng);
        transcripts.push(TranscriptDoc {
            clip_id: clips[i].clip_id.clone(),
            text,
        });
    }

    let mut corpus = Corpus::new(clips)?;
    corpus.add_annotations(captions)?;
    corpus.add_transcripts(transcripts)?;
    corpus.set_features(features)?;
    Ok(corpus)
}

/// Quote-source sentences for classifier training: mostly templated quotes
/// over the speech vocabulary, plus a share of unquoted speech-word
/// sentences that the quote rules are expected to filter out.
pub fn synth_quote_sources(n: usize, speech_vocab: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(3..=8);
            let body: Vec<String> = (0..len)
                .map(|_| speech_word(rng.gen_range(0..speech_vocab.max(1))))
                .collect();
            let body = body.join(" ");
            if rng.gen_bool(0.1) {
                body
            } else {
                quote_template(&body, &mut rng)
            }
        })
        .collect()
}
