//! Tokenization shared by the featurizer, the inverted index and the
//! query classifier.

/// Lowercases, splits on every non-alphanumeric character and drops empty
/// tokens. No stemming, no stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, true)
}

pub fn tokenize_with(text: &str, lowercase: bool) -> Vec<String> {
    let split = |s: &str| -> Vec<String> {
        s.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_owned)
            .collect()
    };
    if lowercase {
        split(&text.to_lowercase())
    } else {
        split(text)
    }
}

/// Shortens `text` to at most `max_chars` characters, appending an ellipsis
/// when something was cut.
pub fn preview(text: &str, max_chars: usize) -> String {
    let mut chars = text.chars();
    let head: String = chars.by_ref().take(max_chars).collect();
    if chars.next().is_some() {
        format!("{head}…")
    } else {
        head
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn punctuation_and_case() {
        assert_eq!(tokenize("He said, \"Hello!\""), vec!["he", "said", "hello"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("A a A"), vec!["a", "a", "a"]);
    }

    #[test]
    fn case_preserving_variant() {
        assert_eq!(tokenize_with("Dog dog", false), vec!["Dog", "dog"]);
    }

    #[test]
    fn preview_truncates_on_char_boundary() {
        assert_eq!(preview("héllo world", 5), "héllo…");
        assert_eq!(preview("short", 10), "short");
    }
}
