use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{QueryLabel, QuoteRuleSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    QuoteSource,
    Transcript,
    Caption,
}

/// One record of `labeled_queries.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledQuery {
    pub text: String,
    pub label: QueryLabel,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub train: Vec<LabeledQuery>,
    pub test: Vec<LabeledQuery>,
    /// Quote sources discarded because no quote rule fired on them.
    pub rejected_quote_sources: usize,
    pub warnings: Vec<String>,
}

const TRAIN_SHARE: f64 = 0.8;
const MIN_PER_CLASS: usize = 10;
const MAX_IMBALANCE: f64 = 10.0;

/// Quote class: rule-matching quote sources plus transcripts; visual class:
/// captions. Labels follow provenance, so a caption stays visual even if it
/// happens to contain a quotation. Each class is split 80/20 on its own.
pub fn build_training_set(
    rules: &QuoteRuleSet,
    quote_sources: &[String],
    transcripts: &[String],
    captions: &[String],
    seed: u64,
) -> Result<LabeledSet> {
    let mut quotes: Vec<LabeledQuery> = Vec::new();
    let mut rejected = 0;
    for s in quote_sources {
        if rules.label(s) == QueryLabel::QuoteSpeech {
            quotes.push(LabeledQuery {
                text: s.clone(),
                label: QueryLabel::QuoteSpeech,
                provenance: Provenance::QuoteSource,
            });
        } else {
            rejected += 1;
        }
    }
    quotes.extend(transcripts.iter().filter(|t| !t.trim().is_empty()).map(|t| LabeledQuery {
        text: t.clone(),
        label: QueryLabel::QuoteSpeech,
        provenance: Provenance::Transcript,
    }));
    let mut visual: Vec<LabeledQuery> = captions
        .iter()
        .filter(|t| !t.trim().is_empty())
        .map(|t| LabeledQuery {
            text: t.clone(),
            label: QueryLabel::Visual,
            provenance: Provenance::Caption,
        })
        .collect();

    for (name, class) in [("quote/speech", &quotes), ("visual", &visual)] {
        if class.len() < MIN_PER_CLASS {
            return Err(Error::validation(format!(
                "{name} class has {} items, at least {MIN_PER_CLASS} required",
                class.len()
            )));
        }
    }
    let mut warnings = Vec::new();
    let (big, small) = (quotes.len().max(visual.len()), quotes.len().min(visual.len()));
    if big as f64 > MAX_IMBALANCE * small as f64 {
        warnings.push(format!("class imbalance {big}:{small} exceeds 10:1"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [&mut quotes, &mut visual] {
        class.shuffle(&mut rng);
        let n_train = (TRAIN_SHARE * class.len() as f64 + 1e-9).floor() as usize;
        test.extend(class.drain(n_train..));
        train.append(class);
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok(LabeledSet {
        train,
        test,
        rejected_quote_sources: rejected,
        warnings,
    })
}
