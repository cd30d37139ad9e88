//! Accumulator checkpoints: a sorted, versioned TSV dump.
//!
//! Layout:
//! ```text
//! # countylex-accumulator v1
//! # config=<tag>
//! user_id \t fips \t tweet_count \t token:occurrences:tweets,...
//! ```
//! Rows sort by user_id and token lists by token string, so two
//! accumulators holding the same logical counts dump byte-identical
//! checkpoints regardless of how their input was sharded.

use std::io::{BufRead, Write};

use super::{AggregateError, CountAccumulator};

const HEADER: &str = "# countylex-accumulator v1";

/// Bytes that collide with the TSV structure or the encoding itself.
fn needs_escape(b: u8) -> bool {
    matches!(b, b'%' | b'\t' | b'\n' | b'\r' | b':' | b',')
}

pub(super) fn encode_field(s: &str) -> String {
    if !s.bytes().any(needs_escape) {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len() + 8);
    for b in s.bytes() {
        if needs_escape(b) {
            out.push('%');
            out.push_str(&format!("{b:02X}"));
        } else {
            out.push(b as char);
        }
    }
    out
}

pub(super) fn decode_field(s: &str, line: usize) -> Result<String, AggregateError> {
    if !s.contains('%') {
        return Ok(s.to_string());
    }
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = bytes.get(i + 1..i + 3).ok_or(AggregateError::SchemaError {
                line,
                reason: "truncated percent escape".to_string(),
            })?;
            let hv = u8::from_str_radix(std::str::from_utf8(hex).unwrap_or("zz"), 16).map_err(
                |_| AggregateError::SchemaError {
                    line,
                    reason: "bad percent escape".to_string(),
                },
            )?;
            out.push(hv);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| AggregateError::SchemaError {
        line,
        reason: "escape decodes to invalid UTF-8".to_string(),
    })
}

pub fn dump_checkpoint<W: Write>(acc: &CountAccumulator, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "# config={}", encode_field(acc.config_tag()))?;
    let mut user_ids: Vec<&str> = acc.users_map().keys().map(String::as_str).collect();
    user_ids.sort_unstable();
    for user_id in user_ids {
        let counts = &acc.users_map()[user_id];
        // Users observed only through county notes never reach
        // users_map, so the county lookup cannot miss here.
        let fips = acc.user_county(user_id).expect("stored user has a county");
        let mut tallies: Vec<(&str, u64, u64)> = counts
            .tallies
            .iter()
            .map(|(&id, t)| (acc.interner().resolve(id), t.occurrences, t.tweets))
            .collect();
        tallies.sort_unstable_by_key(|&(token, _, _)| token);
        let cells: Vec<String> = tallies
            .iter()
            .map(|(token, occ, tw)| format!("{}:{occ}:{tw}", encode_field(token)))
            .collect();
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            encode_field(user_id),
            encode_field(fips),
            counts.tweet_count,
            cells.join(",")
        )?;
    }
    Ok(())
}

/// The checkpoint as a string; the canonical equality probe in tests.
pub fn checkpoint_string(acc: &CountAccumulator) -> String {
    let mut buf = Vec::new();
    dump_checkpoint(acc, &mut buf).expect("write to Vec cannot fail");
    String::from_utf8(buf).expect("checkpoint is ASCII-escaped text")
}

pub fn load_checkpoint<R: BufRead>(reader: R) -> Result<CountAccumulator, AggregateError> {
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or(AggregateError::SchemaError {
        line: 1,
        reason: "empty checkpoint".to_string(),
    })?;
    if first? != HEADER {
        return Err(AggregateError::SchemaError {
            line: 1,
            reason: format!("expected header `{HEADER}`"),
        });
    }
    let (_, second) = lines.next().ok_or(AggregateError::SchemaError {
        line: 2,
        reason: "missing config line".to_string(),
    })?;
    let second = second?;
    let tag = second
        .strip_prefix("# config=")
        .ok_or(AggregateError::SchemaError {
            line: 2,
            reason: "missing `# config=` line".to_string(),
        })?;
    let mut acc = CountAccumulator::new(&decode_field(tag, 2)?);

    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (user, fips, tweets, tokens) =
            match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                _ => {
                    return Err(AggregateError::SchemaError {
                        line: lineno,
                        reason: "expected 4 tab-separated fields".to_string(),
                    })
                }
            };
        let user = decode_field(user, lineno)?;
        let fips = decode_field(fips, lineno)?;
        let tweet_count: u64 = tweets.parse().map_err(|_| AggregateError::SchemaError {
            line: lineno,
            reason: "tweet_count is not an integer".to_string(),
        })?;
        let mut block: Vec<(String, u64, u64)> = Vec::new();
        for cell in tokens.split(',').filter(|c| !c.is_empty()) {
            let mut bits = cell.rsplitn(3, ':');
            let (tw, occ, token) = match (bits.next(), bits.next(), bits.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(AggregateError::SchemaError {
                        line: lineno,
                        reason: format!("bad token cell `{cell}`"),
                    })
                }
            };
            let occ: u64 = occ.parse().map_err(|_| AggregateError::SchemaError {
                line: lineno,
                reason: format!("bad occurrence count in `{cell}`"),
            })?;
            let tw: u64 = tw.parse().map_err(|_| AggregateError::SchemaError {
                line: lineno,
                reason: format!("bad tweet count in `{cell}`"),
            })?;
            block.push((decode_field(token, lineno)?, occ, tw));
        }
        let block_refs: Vec<(&str, u64, u64)> =
            block.iter().map(|(t, o, w)| (t.as_str(), *o, *w)).collect();
        acc.add_user_block(&user, &fips, tweet_count, &block_refs);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CountAccumulator {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("u2", "99002", &["b".into(), "a".into()]);
        acc.add_user_tweet("u1", "99001", &["a".into(), "a".into(), "b".into()]);
        acc.add_user_tweet("u1", "99001", &["a".into()]);
        acc
    }

    #[test]
    fn dump_is_sorted_and_versioned() {
        let s = checkpoint_string(&sample());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# countylex-accumulator v1");
        assert_eq!(lines[1], "# config=test");
        assert_eq!(lines[2], "u1\t99001\t2\ta:3:2,b:1:1");
        assert_eq!(lines[3], "u2\t99002\t1\ta:1:1,b:1:1");
    }

    #[test]
    fn roundtrip_preserves_state() {
        let acc = sample();
        let s = checkpoint_string(&acc);
        let loaded = load_checkpoint(s.as_bytes()).unwrap();
        assert_eq!(checkpoint_string(&loaded), s);
        assert_eq!(loaded.config_tag(), "test");
        assert_eq!(loaded.n_tweets(), 3);
    }

    #[test]
    fn awkward_bytes_roundtrip() {
        let mut acc = CountAccumulator::new("tag:with,specials\t%");
        acc.add_user_tweet(
            "user\twith\ttabs",
            "99001",
            &["a:b".into(), "c,d".into(), "e%f".into()],
        );
        let s = checkpoint_string(&acc);
        let loaded = load_checkpoint(s.as_bytes()).unwrap();
        assert_eq!(checkpoint_string(&loaded), s);
        assert_eq!(loaded.user_token_count("user\twith\ttabs", "a:b"), 1);
    }

    #[test]
    fn zero_token_user_roundtrips() {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("quiet", "99001", &[]);
        let s = checkpoint_string(&acc);
        let loaded = load_checkpoint(s.as_bytes()).unwrap();
        assert_eq!(loaded.user("quiet").unwrap().tweet_count, 1);
        assert_eq!(loaded.user("quiet").unwrap().token_count, 0);
    }

    #[test]
    fn bad_header_rejected() {
        let err = load_checkpoint("# other v9\n".as_bytes()).unwrap_err();
        assert!(matches!(err, AggregateError::SchemaError { line: 1, .. }));
    }

    #[test]
    fn merged_shards_dump_identically() {
        let full = sample();
        let mut a = CountAccumulator::new("test");
        a.add_user_tweet("u1", "99001", &["a".into(), "a".into(), "b".into()]);
        let mut b = CountAccumulator::new("test");
        b.add_user_tweet("u2", "99002", &["b".into(), "a".into()]);
        b.add_user_tweet("u1", "99001", &["a".into()]);
        a.merge(b).unwrap();
        assert_eq!(checkpoint_string(&a), checkpoint_string(&full));
    }

    #[test]
    fn config_mismatch_refused() {
        let mut a = CountAccumulator::new("x");
        let b = CountAccumulator::new("y");
        assert!(matches!(
            a.merge(b),
            Err(AggregateError::ConfigMismatch { .. })
        ));
    }
}
