//! Corpus vocabulary: top-k tokens by frequency.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use log::warn;

use crate::aggregate::CountAccumulator;
use crate::stablehash::Fnv1a;

use super::FeatureError;

/// Ordered token list: descending corpus frequency, ties broken
/// lexicographically, so construction is independent of input order.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    content_hash: String,
}

impl Vocabulary {
    fn from_ranked(ranked: Vec<(String, u64)>) -> Vocabulary {
        let mut digest = Fnv1a::new();
        for (token, count) in &ranked {
            digest.update(token.as_bytes());
            digest.update(b"\t");
            digest.update(count.to_string().as_bytes());
            digest.update(b"\n");
        }
        let index = ranked
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        let (tokens, counts) = ranked.into_iter().unzip();
        Vocabulary {
            tokens,
            counts,
            index,
            content_hash: digest.hex(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, rank: usize) -> u64 {
        self.counts[rank]
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// FNV-64 hex digest over the ranked (token, count) list; goes
    /// into output provenance headers.
    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }
}

/// Top-`size` tokens of the accumulator's corpus counts.
pub fn build_vocabulary(acc: &CountAccumulator, size: usize) -> Vocabulary {
    let mut ranked: Vec<(String, u64)> = acc
        .corpus_counts()
        .into_iter()
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    // corpus_counts is token-sorted, so a stable sort on descending
    // count leaves ties lexicographic.
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    ranked.truncate(size);
    Vocabulary::from_ranked(ranked)
}

/// Subsequence of an existing vocabulary, rank order preserved. The
/// content hash is recomputed over the survivors.
pub fn filter_vocabulary<F>(v: &Vocabulary, mut keep: F) -> Vocabulary
where
    F: FnMut(&str, u64) -> bool,
{
    let ranked: Vec<(String, u64)> = v
        .tokens
        .iter()
        .zip(&v.counts)
        .filter(|(t, c)| keep(t, **c))
        .map(|(t, c)| (t.clone(), *c))
        .collect();
    Vocabulary::from_ranked(ranked)
}

/// Prefix of an existing vocabulary (the model-size reduction).
pub fn reduce_vocabulary(v: &Vocabulary, size: usize) -> Vocabulary {
    if size == 0 {
        warn!("vocabulary reduced to zero tokens");
    }
    let keep = size.min(v.len());
    let ranked: Vec<(String, u64)> = v.tokens[..keep]
        .iter()
        .cloned()
        .zip(v.counts[..keep].iter().copied())
        .collect();
    Vocabulary::from_ranked(ranked)
}

/// `rank \t token \t count`, rank 1-based.
pub fn write_vocabulary<W: Write>(v: &Vocabulary, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# countylex-vocab v1")?;
    for (i, (token, count)) in v.tokens.iter().zip(&v.counts).enumerate() {
        writeln!(w, "{}\t{}\t{}", i + 1, token, count)?;
    }
    Ok(())
}

pub fn load_vocabulary<R: BufRead>(reader: R) -> Result<Vocabulary, FeatureError> {
    let mut ranked = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (rank, token, count) = match (parts.next(), parts.next(), parts.next()) {
            (Some(r), Some(t), Some(c)) => (r, t, c),
            _ => {
                return Err(FeatureError::SchemaError {
                    line: lineno,
                    reason: "expected `rank\\ttoken\\tcount`".to_string(),
                })
            }
        };
        let rank: usize = rank.parse().map_err(|_| FeatureError::SchemaError {
            line: lineno,
            reason: "bad rank".to_string(),
        })?;
        if rank != ranked.len() + 1 {
            return Err(FeatureError::SchemaError {
                line: lineno,
                reason: format!("rank {rank} out of order"),
            });
        }
        let count: u64 = count.parse().map_err(|_| FeatureError::SchemaError {
            line: lineno,
            reason: "bad count".to_string(),
        })?;
        ranked.push((token.to_string(), count));
    }
    Ok(Vocabulary::from_ranked(ranked))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc_with(counts: &[(&str, u64)]) -> CountAccumulator {
        let mut acc = CountAccumulator::new("test");
        let block: Vec<(&str, u64, u64)> = counts.iter().map(|&(t, c)| (t, c, 1)).collect();
        acc.add_user_block("u1", "99001", 1, &block);
        acc
    }

    #[test]
    fn top_k_by_count() {
        let acc = acc_with(&[("a", 5), ("b", 3), ("c", 1)]);
        let v = build_vocabulary(&acc, 2);
        assert_eq!(v.tokens(), ["a", "b"]);
        assert_eq!(v.count(0), 5);
    }

    #[test]
    fn ties_break_lexicographically() {
        let acc = acc_with(&[("b", 2), ("a", 2)]);
        let v = build_vocabulary(&acc, 1);
        assert_eq!(v.tokens(), ["a"]);
    }

    #[test]
    fn small_corpus_returns_everything() {
        let acc = acc_with(&[("a", 1), ("b", 1)]);
        let v = build_vocabulary(&acc, 25000);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn reduce_takes_prefix() {
        let acc = acc_with(&[("a", 5), ("b", 3), ("c", 1)]);
        let v = build_vocabulary(&acc, 3);
        let r = reduce_vocabulary(&v, 2);
        assert_eq!(r.tokens(), ["a", "b"]);
        let same = reduce_vocabulary(&v, 3);
        assert_eq!(same.tokens(), v.tokens());
        assert_eq!(same.content_hash(), v.content_hash());
        let empty = reduce_vocabulary(&v, 0);
        assert!(empty.is_empty());
    }

    #[test]
    fn input_order_does_not_matter() {
        let mut a = CountAccumulator::new("test");
        a.add_user_tweet("u1", "99001", &["x".into(), "y".into()]);
        a.add_user_tweet("u2", "99001", &["y".into()]);
        let mut b = CountAccumulator::new("test");
        b.add_user_tweet("u2", "99001", &["y".into()]);
        b.add_user_tweet("u1", "99001", &["y".into(), "x".into()]);
        let va = build_vocabulary(&a, 10);
        let vb = build_vocabulary(&b, 10);
        assert_eq!(va.tokens(), vb.tokens());
        assert_eq!(va.content_hash(), vb.content_hash());
    }

    #[test]
    fn dump_roundtrip() {
        let acc = acc_with(&[("a", 5), ("b", 3)]);
        let v = build_vocabulary(&acc, 2);
        let mut buf = Vec::new();
        write_vocabulary(&v, &mut buf).unwrap();
        let back = load_vocabulary(buf.as_slice()).unwrap();
        assert_eq!(back.tokens(), v.tokens());
        assert_eq!(back.content_hash(), v.content_hash());
        assert_eq!(back.index_of("b"), Some(1));
    }

    #[test]
    fn out_of_order_rank_rejected() {
        let data = "2\ta\t5\n";
        assert!(load_vocabulary(data.as_bytes()).is_err());
    }
}
