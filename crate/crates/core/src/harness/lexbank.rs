//! Lexical-bank export: per-county aggregated word counts plus topic
//! values, anonymized by dropping mention/url/hashtag tokens and any
//! token rarer than a privacy floor. County-level counts with user
//! structure erased are the whole point of the format.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::Serialize;

use crate::aggregate::{CountAccumulator, CountyFeatureMatrix, MatrixProvenance, Scheme};
use crate::corpus::{token_class, TokenClass};
use crate::features::{filter_vocabulary, topic_loadings, TopicModel, Vocabulary};

use super::HarnessError;

const WORDS_FILE: &str = "lexbank_words.tsv";
const TOPICS_FILE: &str = "lexbank_topics.tsv";
const COUNTIES_FILE: &str = "lexbank_counties.tsv";

#[derive(Debug, Clone, Serialize)]
pub struct LexbankSummary {
    pub words_path: PathBuf,
    pub topics_path: Option<PathBuf>,
    pub counties_path: PathBuf,
    /// Tokens that survived both exclusion rules.
    pub exported_tokens: usize,
    pub excluded_by_class: usize,
    pub excluded_by_floor: usize,
    pub n_counties: usize,
    /// Content hash of the exported (reduced) vocabulary.
    pub vocab_hash: String,
}

fn export_class_ok(token: &str) -> bool {
    !matches!(
        token_class(token),
        TokenClass::Mention | TokenClass::Url | TokenClass::Hashtag
    )
}

/// The vocabulary actually released: class filter plus privacy floor
/// on corpus counts.
pub(crate) fn exported_vocabulary(vocab: &Vocabulary, privacy_floor: u64) -> Vocabulary {
    filter_vocabulary(vocab, |t, c| export_class_ok(t) && c >= privacy_floor)
}

/// Writes the three bank files into `dir` and reports what happened.
pub fn export_lexical_bank(
    acc: &CountAccumulator,
    vocab: &Vocabulary,
    topics: Option<&TopicModel>,
    privacy_floor: u64,
    span_label: &str,
    dir: &Path,
) -> Result<LexbankSummary, HarnessError> {
    fs::create_dir_all(dir)?;
    let exported = exported_vocabulary(vocab, privacy_floor);
    let excluded_by_class = vocab
        .tokens()
        .iter()
        .filter(|t| !export_class_ok(t))
        .count();
    let excluded_by_floor = vocab.len() - exported.len() - excluded_by_class;

    let counties = acc.counties();

    let words_path = dir.join(WORDS_FILE);
    {
        let mut w = fs::File::create(&words_path)?;
        writeln!(w, "# countylex-lexbank v1")?;
        writeln!(w, "# span={span_label}")?;
        writeln!(w, "# config={}", acc.config_tag())?;
        writeln!(w, "# vocab={}", exported.content_hash())?;
        writeln!(w, "# privacy_floor={privacy_floor}")?;
        writeln!(w, "fips\ttoken\tcount")?;
        for county in &counties {
            let mut row: BTreeMap<&str, u64> = BTreeMap::new();
            for user in &county.users {
                for (token, tally) in acc.user_tallies(user) {
                    if exported.contains(token) {
                        *row.entry(token).or_insert(0) += tally.occurrences;
                    }
                }
            }
            for (token, count) in row {
                writeln!(w, "{}\t{}\t{}", county.fips, token, count)?;
            }
        }
    }

    let counties_path = dir.join(COUNTIES_FILE);
    {
        let mut w = fs::File::create(&counties_path)?;
        writeln!(w, "# countylex-lexbank-counties v1")?;
        writeln!(w, "# span={span_label}")?;
        writeln!(w, "fips\tn_users\tn_tweets\tn_tokens")?;
        for county in &counties {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                county.fips,
                county.users.len(),
                county.tweets,
                county.tokens
            )?;
        }
    }

    let topics_path = if let Some(tm) = topics {
        let p = dir.join(TOPICS_FILE);
        let mut w = fs::File::create(&p)?;
        writeln!(w, "# countylex-lexbank-topics v1")?;
        writeln!(w, "# span={span_label}")?;
        writeln!(w, "# vocab={}", exported.content_hash())?;
        writeln!(w, "fips\ttopic\tvalue")?;
        for county in &counties {
            if county.tokens == 0 {
                continue;
            }
            let denom = county.tokens as f64;
            let mut rel: std::collections::HashMap<String, f64> = std::collections::HashMap::new();
            for user in &county.users {
                for (token, tally) in acc.user_tallies(user) {
                    if exported.contains(token) {
                        *rel.entry(token.to_string()).or_insert(0.0) += tally.occurrences as f64;
                    }
                }
            }
            for v in rel.values_mut() {
                *v /= denom;
            }
            let loadings = topic_loadings(&rel, tm);
            for (topic_id, value) in tm.topic_ids().iter().zip(loadings) {
                writeln!(w, "{}\t{}\t{}", county.fips, topic_id, value)?;
            }
        }
        Some(p)
    } else {
        None
    };

    Ok(LexbankSummary {
        words_path,
        topics_path,
        counties_path,
        exported_tokens: exported.len(),
        excluded_by_class,
        excluded_by_floor,
        n_counties: counties.len(),
        vocab_hash: exported.content_hash().to_string(),
    })
}

/// A re-imported bank.
#[derive(Debug)]
pub struct LexbankContents {
    pub span: String,
    pub vocab_hash: String,
    pub privacy_floor: u64,
    /// (fips, token) → county occurrence count.
    pub word_counts: BTreeMap<(String, String), u64>,
    /// fips → (users, tweets, tokens).
    pub county_stats: BTreeMap<String, (u64, u64, u64)>,
    /// (fips, topic id) → value; empty when no topic file exists.
    pub topic_values: BTreeMap<(String, u32), f64>,
    /// County bag-of-words rebuilt as counts / county token total,
    /// features sorted lexicographically.
    pub county_bow: CountyFeatureMatrix,
}

fn bad_row(path: &Path, lineno: usize, reason: &str) -> HarnessError {
    HarnessError::BadSpec {
        reason: format!("{}:{}: {}", path.display(), lineno, reason),
    }
}

fn headered_rows(path: &Path) -> Result<(Vec<(usize, String)>, BTreeMap<String, String>), HarnessError> {
    let file = fs::File::open(path).map_err(|source| HarnessError::FileIo {
        path: path.display().to_string(),
        source,
    })?;
    let mut meta = BTreeMap::new();
    let mut rows = Vec::new();
    let mut saw_columns = false;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once('=') {
                meta.insert(k.to_string(), v.to_string());
            }
            continue;
        }
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !saw_columns {
            saw_columns = true; // column header line
            continue;
        }
        rows.push((idx + 1, line));
    }
    Ok((rows, meta))
}

pub fn load_lexical_bank(dir: &Path) -> Result<LexbankContents, HarnessError> {
    let words_path = dir.join(WORDS_FILE);
    let (rows, meta) = headered_rows(&words_path)?;
    let mut word_counts = BTreeMap::new();
    for (lineno, line) in rows {
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(fips), Some(token), Some(count)) => {
                let count: u64 = count
                    .parse()
                    .map_err(|_| bad_row(&words_path, lineno, "bad count"))?;
                word_counts.insert((fips.to_string(), token.to_string()), count);
            }
            _ => return Err(bad_row(&words_path, lineno, "expected fips\\ttoken\\tcount")),
        }
    }
    let span = meta.get("span").cloned().unwrap_or_default();
    let vocab_hash = meta.get("vocab").cloned().unwrap_or_default();
    let privacy_floor = meta
        .get("privacy_floor")
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);

    let counties_path = dir.join(COUNTIES_FILE);
    let (rows, _) = headered_rows(&counties_path)?;
    let mut county_stats = BTreeMap::new();
    for (lineno, line) in rows {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(bad_row(
                &counties_path,
                lineno,
                "expected fips\\tn_users\\tn_tweets\\tn_tokens",
            ));
        }
        let parse = |s: &str| -> Result<u64, HarnessError> {
            s.parse()
                .map_err(|_| bad_row(&counties_path, lineno, "bad integer"))
        };
        county_stats.insert(
            fields[0].to_string(),
            (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?),
        );
    }

    let topics_path = dir.join(TOPICS_FILE);
    let mut topic_values = BTreeMap::new();
    if topics_path.exists() {
        let (rows, _) = headered_rows(&topics_path)?;
        for (lineno, line) in rows {
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(fips), Some(topic), Some(value)) => {
                    let topic: u32 = topic
                        .parse()
                        .map_err(|_| bad_row(&topics_path, lineno, "bad topic id"))?;
                    let value: f64 = value
                        .parse()
                        .map_err(|_| bad_row(&topics_path, lineno, "bad value"))?;
                    topic_values.insert((fips.to_string(), topic), value);
                }
                _ => return Err(bad_row(&topics_path, lineno, "expected fips\\ttopic\\tvalue")),
            }
        }
    }

    // Rebuild the bag-of-words matrix. Denominators are the county
    // token totals (including unexported tokens), matching the
    // county_bow definition.
    let counties: Vec<String> = county_stats.keys().cloned().collect();
    let mut features: Vec<String> = word_counts
        .keys()
        .map(|(_, token)| token.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    features.sort();
    let feature_index: BTreeMap<&str, usize> = features
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let county_index: BTreeMap<&str, usize> = counties
        .iter()
        .enumerate()
        .map(|(i, f)| (f.as_str(), i))
        .collect();
    let mut values = Array2::zeros((counties.len(), features.len()));
    for ((fips, token), count) in &word_counts {
        let Some(&r) = county_index.get(fips.as_str()) else {
            return Err(HarnessError::BadSpec {
                reason: format!("county {fips} in word file but not in county stats"),
            });
        };
        let total = county_stats[fips].2;
        if total == 0 {
            continue;
        }
        values[[r, feature_index[token.as_str()]]] = *count as f64 / total as f64;
    }
    let county_bow = CountyFeatureMatrix {
        counties: counties.clone(),
        features,
        values,
        scheme: Scheme::CountyBow,
        provenance: MatrixProvenance {
            county_users: counties.iter().map(|f| county_stats[f].0).collect(),
            county_tweets: counties.iter().map(|f| county_stats[f].1).collect(),
            county_tokens: counties.iter().map(|f| county_stats[f].2).collect(),
            filters: None,
            binary_per_tweet: false,
        },
    };

    Ok(LexbankContents {
        span,
        vocab_hash,
        privacy_floor,
        word_counts,
        county_stats,
        topic_values,
        county_bow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::county_bow;
    use crate::features::build_vocabulary;

    fn sample_acc() -> CountAccumulator {
        let mut acc = CountAccumulator::new("test");
        let t = |s: &str| s.split(' ').map(str::to_string).collect::<Vec<_>>();
        acc.add_user_tweet("u1", "10001", &t("hello world @bob https://x.co #wow"));
        acc.add_user_tweet("u1", "10001", &t("hello rare"));
        acc.add_user_tweet("u2", "10001", &t("world world hello"));
        acc.add_user_tweet("u3", "10002", &t("hello hello world"));
        acc
    }

    #[test]
    fn excludes_classes_and_rare_tokens() {
        let acc = sample_acc();
        let vocab = build_vocabulary(&acc, 100);
        let dir = tempfile::tempdir().unwrap();
        let summary =
            export_lexical_bank(&acc, &vocab, None, 2, "2012-2013", dir.path()).unwrap();
        // @bob, https://x.co, #wow excluded by class; "rare" (count 1)
        // by the floor; hello and world survive.
        assert_eq!(summary.exported_tokens, 2);
        assert_eq!(summary.excluded_by_class, 3);
        assert_eq!(summary.excluded_by_floor, 1);

        let body = fs::read_to_string(&summary.words_path).unwrap();
        for line in body.lines().filter(|l| !l.starts_with('#')) {
            assert!(!line.contains("@bob"));
            assert!(!line.contains("https://"));
            assert!(!line.contains("#wow"));
            assert!(!line.contains("rare"));
        }
        assert!(body.contains("10001\thello\t3"));
        assert!(body.contains("10002\thello\t2"));
    }

    #[test]
    fn round_trip_reproduces_county_bow_exactly() {
        let acc = sample_acc();
        let vocab = build_vocabulary(&acc, 100);
        let dir = tempfile::tempdir().unwrap();
        let summary =
            export_lexical_bank(&acc, &vocab, None, 0, "all", dir.path()).unwrap();
        let bank = load_lexical_bank(dir.path()).unwrap();

        let exported = exported_vocabulary(&vocab, 0);
        assert_eq!(bank.vocab_hash, exported.content_hash());
        assert_eq!(summary.vocab_hash, exported.content_hash());
        let reference = county_bow(&acc, &exported);
        assert_eq!(bank.county_bow.counties, reference.counties);
        for fips in &reference.counties {
            for token in exported.tokens() {
                let want = reference.value(fips, token).unwrap();
                let got = bank.county_bow.value(fips, token).unwrap_or(0.0);
                assert_eq!(
                    want.to_bits(),
                    got.to_bits(),
                    "county {fips} token {token}: {want} vs {got}"
                );
            }
        }
        // County stats reproduce the accumulator totals.
        assert_eq!(bank.county_stats["10001"], (2, 3, 10));
        assert_eq!(bank.county_stats["10002"], (1, 1, 3));
    }

    #[test]
    fn topic_values_export_and_reload() {
        let acc = sample_acc();
        let vocab = build_vocabulary(&acc, 100);
        let topics = crate::features::load_topic_model(
            std::io::Cursor::new("0\thello\t1.0\n1\tworld\t1.0\n"),
            crate::features::TopicNormalization::Raw,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_lexical_bank(&acc, &vocab, Some(&topics), 0, "all", dir.path()).unwrap();
        let bank = load_lexical_bank(dir.path()).unwrap();
        // County 10002: 2/3 hello, 1/3 world.
        let hello = bank.topic_values[&("10002".to_string(), 0u32)];
        let world = bank.topic_values[&("10002".to_string(), 1u32)];
        assert!((hello - 2.0 / 3.0).abs() < 1e-12);
        assert!((world - 1.0 / 3.0).abs() < 1e-12);
    }
}
