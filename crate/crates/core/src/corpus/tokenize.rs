//! Whitespace tokenizer with social-media token classes.
//!
//! Splitting is on Unicode whitespace. Mentions, URLs, and hashtags are
//! recognized by prefix and kept verbatim (mentions and hashtags
//! lowercased); everything else is lowercased and stripped of leading
//! and trailing non-alphanumeric characters. The class of a token is a
//! pure function of its final text — see [`token_class`] — so classes
//! can be re-derived later from stored token strings.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenClass {
    Word,
    Mention,
    Url,
    Hashtag,
    Numeric,
    Other,
}

impl TokenClass {
    #[must_use]
    pub fn as_str(self) -> &'static str {
        match self {
            TokenClass::Word => "word",
            TokenClass::Mention => "mention",
            TokenClass::Url => "url",
            TokenClass::Hashtag => "hashtag",
            TokenClass::Numeric => "numeric",
            TokenClass::Other => "other",
        }
    }
}

/// Ordered tokens with a parallel class list.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    tokens: Vec<String>,
    classes: Vec<TokenClass>,
}

impl TokenSequence {
    #[must_use]
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    #[must_use]
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    #[must_use]
    pub fn classes(&self) -> &[TokenClass] {
        &self.classes
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, TokenClass)> {
        self.tokens
            .iter()
            .map(String::as_str)
            .zip(self.classes.iter().copied())
    }

    /// Word-class tokens only, in order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.iter()
            .filter(|(_, c)| *c == TokenClass::Word)
            .map(|(t, _)| t)
    }
}

/// Classifies a finalized token string.
#[must_use]
pub fn token_class(token: &str) -> TokenClass {
    if token.len() > 1 && token.starts_with('@') {
        return TokenClass::Mention;
    }
    let lower_prefix = token.get(..8).unwrap_or(token).to_ascii_lowercase();
    if lower_prefix.starts_with("http://") || lower_prefix.starts_with("https://") {
        return TokenClass::Url;
    }
    if token.len() > 1 && token.starts_with('#') {
        return TokenClass::Hashtag;
    }
    let mut saw_digit = false;
    let mut numeric_shape = !token.is_empty();
    let mut saw_alnum = false;
    for c in token.chars() {
        if c.is_numeric() {
            saw_digit = true;
        } else if !matches!(c, '.' | ',' | ':' | '+' | '-' | '%') {
            numeric_shape = false;
        }
        if c.is_alphanumeric() {
            saw_alnum = true;
        }
    }
    if saw_digit && numeric_shape {
        TokenClass::Numeric
    } else if saw_alnum {
        TokenClass::Word
    } else {
        TokenClass::Other
    }
}

/// Tokenizes message text. Deterministic; empty text gives an empty
/// sequence. Idempotent over its own word-token output joined by spaces.
#[must_use]
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    let mut classes = Vec::new();
    for raw in text.split_whitespace() {
        let emitted = match prefix_kind(raw) {
            PrefixKind::MentionOrHashtag => raw.to_lowercase(),
            PrefixKind::Url => raw.to_string(),
            PrefixKind::Plain => {
                let lower = raw.to_lowercase();
                let stripped = lower.trim_matches(|c: char| !c.is_alphanumeric());
                if stripped.is_empty() {
                    lower
                } else {
                    stripped.to_string()
                }
            }
        };
        classes.push(token_class(&emitted));
        tokens.push(emitted);
    }
    TokenSequence { tokens, classes }
}

enum PrefixKind {
    MentionOrHashtag,
    Url,
    Plain,
}

fn prefix_kind(raw: &str) -> PrefixKind {
    if raw.len() > 1 && (raw.starts_with('@') || raw.starts_with('#')) {
        return PrefixKind::MentionOrHashtag;
    }
    let head = raw.get(..8).unwrap_or(raw).to_ascii_lowercase();
    if head.starts_with("http://") || head.starts_with("https://") {
        return PrefixKind::Url;
    }
    PrefixKind::Plain
}
