//! Regular-expression rules for recognising quoted or reported speech.

use regex::Regex;

use super::QueryLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QuoteRule {
    pub name: String,
    pub pattern: String,
    regex: Regex,
}

impl QuoteRule {
    pub fn new(name: impl Into<String>, pattern: impl Into<String>) -> Result<Self> {
        let pattern = pattern.into();
        let regex = Regex::new(&pattern)
            .map_err(|e| Error::Config(format!("quote rule pattern does not compile: {e}")))?;
        Ok(Self {
            name: name.into(),
            pattern,
            regex,
        })
    }

    pub fn is_match(&self, text: &str) -> bool {
        self.regex.is_match(text)
    }
}

const OPEN_Q: &str = r#"["“”]"#;
const CLOSE_Q: &str = r#"["“”]"#;
const SPEECH_VERBS: &str = r"said|says|say|asked|asks|replied|replies|added|adds|explained|explains|stated|states|declared|declares|wrote|writes|exclaimed|insisted|remarked|recalled|told\s+\w+|tells\s+\w+";

/// Ordered rule list; a text is quote/speech if any rule fires.
#[derive(Debug, Clone)]
pub struct QuoteRuleSet {
    rules: Vec<QuoteRule>,
}

impl Default for QuoteRuleSet {
    fn default() -> Self {
        Self::standard()
    }
}

impl QuoteRuleSet {
    /// Sentences every usable rule set must flag, one per canonical scaffold.
    pub const CANONICAL_SCAFFOLDS: [&'static str; 4] = [
        "She said, \"I will never give up\"",
        "According to the minister, taxes will fall next year",
        "The coach was blunt: \"We played badly tonight\"",
        "\"nothing is impossible today\"",
    ];

    pub fn standard() -> Self {
        let rules = [
            ("said-comma-quote", format!(r"(?i)\b(?:{SPEECH_VERBS})\s*,?\s*{OPEN_Q}")),
            ("according-to", r"(?i)\baccording\s+to\b".to_owned()),
            ("colon-quote", format!(r":\s*{OPEN_Q}")),
            (
                "bare-quoted-span",
                format!(r"{OPEN_Q}\s*[\w'’-]+(?:[\s,.;:!?]+[\w'’-]+){{2,}}[\s,.;:!?]*{CLOSE_Q}"),
            ),
            (
                "quote-attribution",
                format!(r"(?i){CLOSE_Q}\s*,?\s*(?:\w+\s+){{1,3}}(?:{SPEECH_VERBS})\b"),
            ),
        ];
        let rules = rules
            .into_iter()
            .map(|(n, p)| QuoteRule::new(n, p).expect("built-in quote rules compile"))
            .collect();
        Self { rules }
    }

    /// Builds a rule set from `(name, pattern)` pairs, rejecting patterns
    /// that do not compile or sets that miss a canonical scaffold.
    pub fn from_patterns<N: Into<String>, P: Into<String>>(patterns: Vec<(N, P)>) -> Result<Self> {
        let rules = patterns
            .into_iter()
            .map(|(n, p)| QuoteRule::new(n, p))
            .collect::<Result<Vec<_>>>()?;
        let set = Self { rules };
        for s in Self::CANONICAL_SCAFFOLDS {
            if set.label(s) != QueryLabel::QuoteSpeech {
                return Err(Error::Config(format!("quote rules miss canonical scaffold {s:?}")));
            }
        }
        Ok(set)
    }

    pub fn rules(&self) -> &[QuoteRule] {
        &self.rules
    }

    pub fn matching_rules(&self, text: &str) -> Vec<&str> {
        self.rules
            .iter()
            .filter(|r| r.is_match(text))
            .map(|r| r.name.as_str())
            .collect()
    }

    pub fn label(&self, text: &str) -> QueryLabel {
        if self.rules.iter().any(|r| r.is_match(text)) {
            QueryLabel::QuoteSpeech
        } else {
            QueryLabel::Visual
        }
    }
}

/// Labels `text` with the given rules.
pub fn rule_label(rules: &QuoteRuleSet, text: &str) -> QueryLabel {
    rules.label(text)
}
