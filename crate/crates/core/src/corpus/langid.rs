//! English-vs-rest language identification.
//!
//! The pipeline only needs a binary English gate, so the contract is a
//! trait; the built-in implementation is a character-trigram naive
//! Bayes model trained at first use on a small bundled multilingual
//! corpus. The model is immutable after construction and shareable
//! across workers.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::{tokenize, TokenSequence};

/// Outcome of classifying one token sequence.
///
/// `confidence` is the posterior probability that the text is English;
/// `english` is true exactly when that posterior reaches 0.5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangVerdict {
    pub english: bool,
    pub confidence: f64,
}

pub trait LanguageClassifier: Send + Sync {
    fn classify(&self, tokens: &TokenSequence) -> LangVerdict;
}

/// Evidence cap: long messages stop accumulating trigrams here, which
/// bounds cost and keeps posteriors away from 0/1 saturation.
const MAX_TRIGRAMS: usize = 96;

#[derive(Debug)]
struct LangModel {
    name: String,
    log_probs: HashMap<[char; 3], f64>,
    log_unseen: f64,
}

/// Character-trigram naive Bayes over word tokens.
#[derive(Debug)]
pub struct TrigramClassifier {
    models: Vec<LangModel>,
    english_idx: usize,
}

impl TrigramClassifier {
    /// Trains from `(language, sentence)` pairs. One language must be
    /// `"en"`. Sentences run through the pipeline tokenizer so the model
    /// sees exactly the normalization used at classification time.
    pub fn train<'a, I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut counts: HashMap<String, HashMap<[char; 3], u64>> = HashMap::new();
        let mut vocab: HashMap<[char; 3], ()> = HashMap::new();
        for (lang, sentence) in pairs {
            let entry = counts.entry(lang.to_string()).or_default();
            let text = normalized_words(&tokenize(sentence));
            for tri in trigrams(&text, usize::MAX) {
                *entry.entry(tri).or_insert(0) += 1;
                vocab.entry(tri).or_insert(());
            }
        }
        let smoothing_bins = vocab.len() as f64 + 1.0;

        let mut langs: Vec<String> = counts.keys().cloned().collect();
        langs.sort();
        let models: Vec<LangModel> = langs
            .iter()
            .map(|lang| {
                let tri_counts = &counts[lang];
                let total: u64 = tri_counts.values().sum();
                let denom = total as f64 + smoothing_bins;
                let log_probs = tri_counts
                    .iter()
                    .map(|(tri, c)| (*tri, ((*c as f64 + 1.0) / denom).ln()))
                    .collect();
                LangModel {
                    name: lang.clone(),
                    log_probs,
                    log_unseen: (1.0 / denom).ln(),
                }
            })
            .collect();
        let english_idx = models
            .iter()
            .position(|m| m.name == "en")
            .expect("training corpus must include language \"en\"");
        TrigramClassifier { models, english_idx }
    }

    /// The classifier trained on the bundled corpus, built once per
    /// process.
    pub fn bundled() -> &'static TrigramClassifier {
        static MODEL: OnceLock<TrigramClassifier> = OnceLock::new();
        MODEL.get_or_init(|| {
            let raw = include_str!("../../data/langid_corpus.tsv");
            let pairs = raw.lines().filter(|l| !l.is_empty()).map(|line| {
                line.split_once('\t')
                    .expect("bundled langid corpus rows are `lang\\tsentence`")
            });
            TrigramClassifier::train(pairs)
        })
    }
}

impl LanguageClassifier for TrigramClassifier {
    fn classify(&self, tokens: &TokenSequence) -> LangVerdict {
        let text = normalized_words(tokens);
        let tris = trigrams(&text, MAX_TRIGRAMS);
        if tris.is_empty() {
            return LangVerdict {
                english: false,
                confidence: 0.0,
            };
        }
        // Uniform prior; posterior via log-sum-exp.
        let scores: Vec<f64> = self
            .models
            .iter()
            .map(|m| {
                tris.iter()
                    .map(|t| m.log_probs.get(t).copied().unwrap_or(m.log_unseen))
                    .sum()
            })
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = scores.iter().map(|s| (s - max).exp()).sum();
        let confidence = (scores[self.english_idx] - max).exp() / denom;
        LangVerdict {
            english: confidence >= 0.5,
            confidence,
        }
    }
}

/// Word tokens joined and padded with spaces so boundary trigrams carry
/// word-initial and word-final signal.
fn normalized_words(tokens: &TokenSequence) -> Vec<char> {
    let mut chars = vec![' '];
    for word in tokens.words() {
        chars.extend(word.chars());
        chars.push(' ');
    }
    if chars.len() == 1 {
        chars.clear();
    }
    chars
}

fn trigrams(chars: &[char], cap: usize) -> Vec<[char; 3]> {
    chars
        .windows(3)
        .take(cap)
        .map(|w| [w[0], w[1], w[2]])
        .collect()
}
