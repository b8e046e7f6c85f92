//! Query-type recognition: quote/speech queries versus plain visual
//! descriptions.

mod dataset;
mod model;
mod rules;
mod train;

use serde::{Deserialize, Serialize};

pub use dataset::{build_training_set, LabeledQuery, LabeledSet, Provenance};
pub use model::{batch_gradient, batch_loss, LstmParams, SequenceClassifier, N_CLASSES, OOV, PAD};
pub use rules::{rule_label, QuoteRule, QuoteRuleSet};
pub use train::{
    evaluate_classifier, evaluate_predictions, train_classifier, ClassRecall, ClassifierConfig,
    ClassifierMetrics, EpochRecord, TrainingCurve,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryLabel {
    QuoteSpeech,
    Visual,
}

impl QueryLabel {
    pub fn index(self) -> usize {
        match self {
            QueryLabel::QuoteSpeech => 0,
            QueryLabel::Visual => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QueryLabel::QuoteSpeech => "quote_speech",
            QueryLabel::Visual => "visual",
        }
    }
}

/// Predicted label with its softmax probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryClass {
    pub label: QueryLabel,
    pub confidence: f64,
}
