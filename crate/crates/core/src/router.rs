//! Dispatches a query to exactly one retrieval backend according to the
//! bound method.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classifier::{QueryClass, QueryLabel, QuoteRuleSet, SequenceClassifier};
use crate::embedding::{Backend, EmbeddingIndex, RankedResult};
use crate::error::{Error, Result};
use crate::textsearch::InvertedIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Baseline,
    Customised,
    ClassifierEnhanced,
}

impl MethodKind {
    pub const ALL: [MethodKind; 3] = [MethodKind::Baseline, MethodKind::Customised, MethodKind::ClassifierEnhanced];

    /// Short label used on the CLI, in URLs and in reports.
    pub fn label(self) -> &'static str {
        match self {
            MethodKind::Baseline => "baseline",
            MethodKind::Customised => "customised",
            MethodKind::ClassifierEnhanced => "classifier",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(MethodKind::Baseline),
            "customised" | "customized" => Ok(MethodKind::Customised),
            "classifier" | "classifier_enhanced" | "classifier-enhanced" => Ok(MethodKind::ClassifierEnhanced),
            _ => Err(Error::UnknownMethod(s.to_owned())),
        }
    }
}

/// How a classifier-enhanced method decides the query type.
#[derive(Debug, Clone)]
pub enum RoutingPolicy {
    Classifier(Arc<SequenceClassifier>),
    /// Rule-only fallback for when no trained classifier is available.
    Rules(Arc<QuoteRuleSet>),
}

impl RoutingPolicy {
    pub fn decide(&self, text: &str) -> QueryClass {
        match self {
            RoutingPolicy::Classifier(c) => c.classify(text),
            RoutingPolicy::Rules(r) => QueryClass {
                label: r.label(text),
                confidence: 1.0,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RoutingPolicy::Classifier(_) => "classifier",
            RoutingPolicy::Rules(_) => "rules",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedQuery {
    pub query_text: String,
    /// Present only for classifier-enhanced routing.
    pub decided_class: Option<QueryClass>,
    pub backend_used: Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub routed: RoutedQuery,
    pub results: Vec<RankedResult>,
}

/// A retrieval method with its models bound. Immutable once built.
#[derive(Debug, Clone)]
pub struct RetrievalMethod {
    pub kind: MethodKind,
    pub embedding: Option<Arc<EmbeddingIndex>>,
    pub fulltext: Option<Arc<InvertedIndex>>,
    pub policy: Option<RoutingPolicy>,
    /// When full-text search finds nothing, answer from the embedding
    /// backend instead of returning an empty list. Off by default.
    pub fallback_to_embedding: bool,
}

impl RetrievalMethod {
    pub fn baseline(embedding: Arc<EmbeddingIndex>) -> Self {
        Self::embedding_only(MethodKind::Baseline, embedding)
    }

    pub fn customised(embedding: Arc<EmbeddingIndex>) -> Self {
        Self::embedding_only(MethodKind::Customised, embedding)
    }

    fn embedding_only(kind: MethodKind, embedding: Arc<EmbeddingIndex>) -> Self {
        Self {
            kind,
            embedding: Some(embedding),
            fulltext: None,
            policy: None,
            fallback_to_embedding: false,
        }
    }

    pub fn classifier_enhanced(
        embedding: Arc<EmbeddingIndex>,
        fulltext: Arc<InvertedIndex>,
        policy: RoutingPolicy,
    ) -> Self {
        Self {
            kind: MethodKind::ClassifierEnhanced,
            embedding: Some(embedding),
            fulltext: Some(fulltext),
            policy: Some(policy),
            fallback_to_embedding: false,
        }
    }

    pub fn check_bound(&self) -> Result<()> {
        let missing = |what: &str| Err(Error::Config(format!("{} method has no {what} bound", self.kind)));
        if self.embedding.is_none() {
            return missing("embedding model");
        }
        if self.kind == MethodKind::ClassifierEnhanced {
            if self.fulltext.is_none() {
                return missing("full-text index");
            }
            if self.policy.is_none() {
                return missing("classifier or rule policy");
            }
        }
        Ok(())
    }

    pub fn route(&self, query: &str) -> Result<RoutedQuery> {
        self.check_bound()?;
        let (decided_class, backend_used) = match (&self.kind, &self.policy) {
            (MethodKind::ClassifierEnhanced, Some(policy)) => {
                let class = policy.decide(query);
                let backend = match class.label {
                    QueryLabel::QuoteSpeech => Backend::FullText,
                    QueryLabel::Visual => Backend::Embedding,
                };
                (Some(class), backend)
            }
            _ => (None, Backend::Embedding),
        };
        Ok(RoutedQuery {
            query_text: query.to_owned(),
            decided_class,
            backend_used,
        })
    }

    /// Routes and retrieves. An unencodable query on the embedding backend
    /// surfaces as [`Error::Unencodable`]; an empty full-text match is an
    /// empty list.
    pub fn query(&self, query: &str, k: usize) -> Result<QueryOutcome> {
        if k < 1 {
            return Err(Error::validation("k must be at least 1"));
        }
        let mut routed = self.route(query)?;
        let embedding = self.embedding.as_ref().expect("checked by route");
        let results = match routed.backend_used {
            Backend::Embedding => embedding.retrieve(query, k)?,
            Backend::FullText => {
                let hits = self.fulltext.as_ref().expect("checked by route").search(query, k);
                if hits.is_empty() && self.fallback_to_embedding {
                    routed.backend_used = Backend::Embedding;
                    embedding.retrieve(query, k)?
                } else {
                    hits
                }
            }
        };
        Ok(QueryOutcome { routed, results })
    }
}
