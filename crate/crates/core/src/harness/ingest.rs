//! Two-pass sharded ingestion. Pass one scans the stream for each
//! user's home county (earliest county-mapped tweet); pass two
//! accumulates every tweet of every assigned user into that county.
//! Shards are fixed-size record chunks, so the result is identical
//! for any worker count, and shard merging relies only on the
//! mergeable-accumulator contract.

use rayon::prelude::*;
use serde::Serialize;

use crate::aggregate::CountAccumulator;
use crate::corpus::{parse_record, LanguageClassifier, TrigramClassifier, TweetRecord, tokenize};
use crate::geomap::{map_record, Gazetteer, UserAssignments};

use super::subsample::keep_record;
use super::timeslice::in_year;

/// Records per shard. Fixed (not derived from worker count) so that
/// shard boundaries, and therefore merged results, never depend on
/// parallelism.
const SHARD_RECORDS: usize = 8192;

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Stored in the accumulator; merges refuse mismatched tags.
    pub config_tag: String,
    /// `(fraction, seed)` hash-subsampling applied before anything else.
    pub subsample: Option<(f64, u64)>,
    /// Keep only records inside this calendar year (UTC).
    pub year: Option<i32>,
    /// Drop records whose text does not classify as English.
    pub english_only: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            config_tag: "default".to_string(),
            subsample: None,
            year: None,
            english_only: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub records_in: u64,
    pub parse_failures: u64,
    pub subsample_dropped: u64,
    pub outside_year: u64,
    /// Records of users who never mapped to any county.
    pub unassigned_user: u64,
    pub non_english: u64,
    pub accumulated: u64,
    pub users_assigned: u64,
}

impl IngestStats {
    fn absorb(&mut self, o: &IngestStats) {
        self.records_in += o.records_in;
        self.parse_failures += o.parse_failures;
        self.subsample_dropped += o.subsample_dropped;
        self.outside_year += o.outside_year;
        self.unassigned_user += o.unassigned_user;
        self.non_english += o.non_english;
        self.accumulated += o.accumulated;
    }
}

fn survives_filters(rec: &TweetRecord, opts: &IngestOptions, stats: &mut IngestStats) -> bool {
    if let Some((fraction, seed)) = opts.subsample {
        if !keep_record(&rec.tweet_id, fraction, seed) {
            stats.subsample_dropped += 1;
            return false;
        }
    }
    if let Some(year) = opts.year {
        if !in_year(rec.created_at, year) {
            stats.outside_year += 1;
            return false;
        }
    }
    true
}

/// Ingests already-parsed records. Returns the merged accumulator,
/// the user-county assignments behind it, and counting stats.
pub fn ingest_records(
    records: &[TweetRecord],
    gaz: &Gazetteer,
    opts: &IngestOptions,
) -> (CountAccumulator, UserAssignments, IngestStats) {
    // Pass 1: per-shard assignment minima, merged.
    let partials: Vec<(UserAssignments, IngestStats)> = records
        .par_chunks(SHARD_RECORDS)
        .map(|chunk| {
            let mut local = UserAssignments::new();
            let mut stats = IngestStats::default();
            for rec in chunk {
                stats.records_in += 1;
                if !survives_filters(rec, opts, &mut stats) {
                    continue;
                }
                if let Some(mapped) =
                    map_record(rec.coordinates, rec.profile_location.as_deref(), gaz)
                {
                    local.observe(
                        &rec.user_id,
                        &rec.tweet_id,
                        rec.created_at,
                        &mapped.fips,
                        mapped.source,
                    );
                }
            }
            (local, stats)
        })
        .collect();

    let mut assignments = UserAssignments::new();
    let mut stats = IngestStats::default();
    for (partial, s) in partials {
        assignments.merge(partial);
        stats.absorb(&s);
    }
    stats.users_assigned = assignments.len() as u64;

    // Pass 2: accumulate every surviving tweet of an assigned user
    // into that user's home county.
    let classifier = TrigramClassifier::bundled();
    let shards: Vec<(CountAccumulator, IngestStats)> = records
        .par_chunks(SHARD_RECORDS)
        .map(|chunk| {
            let mut acc = CountAccumulator::new(&opts.config_tag);
            let mut stats = IngestStats::default();
            for rec in chunk {
                if !survives_filters(rec, opts, &mut stats) {
                    continue;
                }
                let Some(assignment) = assignments.get(&rec.user_id) else {
                    stats.unassigned_user += 1;
                    continue;
                };
                let tokens = tokenize(&rec.text);
                if opts.english_only && !classifier.classify(&tokens).english {
                    stats.non_english += 1;
                    continue;
                }
                acc.accumulate(rec, &assignment.fips, &tokens);
                stats.accumulated += 1;
            }
            (acc, stats)
        })
        .collect();

    let mut acc = CountAccumulator::new(&opts.config_tag);
    for (shard, s) in shards {
        acc.merge(shard).expect("shards share one config tag");
        // records_in was already counted in pass 1; keep the rest.
        stats.unassigned_user += s.unassigned_user;
        stats.non_english += s.non_english;
        stats.accumulated += s.accumulated;
    }
    (acc, assignments, stats)
}

/// Parses JSONL lines in parallel, then ingests. Unparseable lines
/// are counted, logged at debug level, and skipped.
pub fn ingest_lines(
    lines: &[String],
    gaz: &Gazetteer,
    opts: &IngestOptions,
) -> (CountAccumulator, UserAssignments, IngestStats) {
    let parsed: Vec<(Vec<TweetRecord>, u64)> = lines
        .par_chunks(SHARD_RECORDS)
        .map(|chunk| {
            let mut records = Vec::with_capacity(chunk.len());
            let mut failures = 0u64;
            for line in chunk {
                if line.trim().is_empty() {
                    continue;
                }
                match parse_record(line) {
                    Ok(rec) => records.push(rec),
                    Err(e) => {
                        log::debug!("skipping malformed record: {e}");
                        failures += 1;
                    }
                }
            }
            (records, failures)
        })
        .collect();

    let mut records = Vec::new();
    let mut parse_failures = 0u64;
    for (mut chunk, failures) in parsed {
        records.append(&mut chunk);
        parse_failures += failures;
    }
    let (acc, assignments, mut stats) = ingest_records(&records, gaz, opts);
    stats.parse_failures = parse_failures;
    stats.records_in += parse_failures;
    (acc, assignments, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomap::{load_gazetteer, load_polygons};
    use std::io::Cursor;

    fn tiny_gazetteer() -> Gazetteer {
        let rows = "springfield\til\t17167\nshelby county\ttn\t47157\n";
        let mut g = load_gazetteer(Cursor::new(rows)).unwrap();
        // Unit square around (40, -90).
        let polys = "17167\t0\t39.5,-90.5;39.5,-89.5;40.5,-89.5;40.5,-90.5;39.5,-90.5\n";
        load_polygons(&mut g, Cursor::new(polys)).unwrap();
        g
    }

    fn rec(tweet_id: &str, user_id: &str, created_at: i64, text: &str) -> TweetRecord {
        TweetRecord {
            tweet_id: tweet_id.into(),
            user_id: user_id.into(),
            created_at,
            text: text.into(),
            coordinates: None,
            profile_location: Some("Springfield, IL".into()),
        }
    }

    #[test]
    fn assigns_then_accumulates_all_user_tweets() {
        let g = tiny_gazetteer();
        let mut records = vec![rec("t1", "u1", 100, "the quick brown fox")];
        // Second tweet has no location info at all, but u1 already has
        // a home county, so it still counts there.
        let mut r2 = rec("t2", "u1", 200, "jumps over the lazy dog");
        r2.profile_location = None;
        records.push(r2);
        let (acc, assignments, stats) = ingest_records(&records, &g, &IngestOptions::default());
        assert_eq!(assignments.len(), 1);
        assert_eq!(acc.n_tweets(), 2);
        assert_eq!(acc.user_county("u1"), Some("17167"));
        assert_eq!(stats.accumulated, 2);
        assert_eq!(stats.unassigned_user, 0);
    }

    #[test]
    fn coordinates_beat_profile_text() {
        let g = tiny_gazetteer();
        let mut r = rec("t1", "u1", 100, "hello there friend");
        r.coordinates = Some((40.0, -90.0));
        r.profile_location = Some("Shelby County, TN".into());
        let (acc, _, _) = ingest_records(&[r], &g, &IngestOptions::default());
        assert_eq!(acc.user_county("u1"), Some("17167"));
    }

    #[test]
    fn unmappable_users_are_counted_not_stored() {
        let g = tiny_gazetteer();
        let mut r = rec("t1", "u1", 100, "hello world again");
        r.profile_location = Some("nowhere".into());
        let (acc, assignments, stats) = ingest_records(&[r], &g, &IngestOptions::default());
        assert_eq!(assignments.len(), 0);
        assert_eq!(acc.n_users(), 0);
        assert_eq!(stats.unassigned_user, 1);
    }

    #[test]
    fn year_filter_applies_before_assignment() {
        let g = tiny_gazetteer();
        // 2012 tweet maps the user; 2013 tweet would map elsewhere.
        let mut r2013 = rec("t1", "u1", 1357000000, "one two three four");
        r2013.profile_location = Some("Shelby County, TN".into());
        let r2012 = rec("t2", "u1", 1338508800, "five six seven eight");
        let opts = IngestOptions {
            year: Some(2012),
            ..IngestOptions::default()
        };
        let (acc, _, stats) = ingest_records(&[r2013, r2012], &g, &opts);
        assert_eq!(acc.user_county("u1"), Some("17167"));
        assert_eq!(acc.n_tweets(), 1);
        assert_eq!(stats.outside_year, 1);
    }

    #[test]
    fn lines_path_counts_parse_failures() {
        let g = tiny_gazetteer();
        let lines = vec![
            r#"{"id":"t1","user_id":"u1","created_at":100,"text":"good morning world","profile_location":"Springfield, IL"}"#.to_string(),
            "not json".to_string(),
            String::new(),
        ];
        let (acc, _, stats) = ingest_lines(&lines, &g, &IngestOptions::default());
        assert_eq!(stats.parse_failures, 1);
        assert_eq!(acc.n_tweets(), 1);
        assert_eq!(stats.records_in, 2);
    }

    #[test]
    fn non_english_text_is_dropped_when_asked() {
        let g = tiny_gazetteer();
        let records = vec![
            rec("t1", "u1", 100, "the weather is very nice today and i like it"),
            rec(
                "t2",
                "u1",
                200,
                "der schnelle braune fuchs springt ueber den faulen hund heute",
            ),
        ];
        let (acc, _, stats) = ingest_records(&records, &g, &IngestOptions::default());
        assert_eq!(stats.non_english, 1);
        assert_eq!(acc.n_tweets(), 1);
        let opts = IngestOptions {
            english_only: false,
            ..IngestOptions::default()
        };
        let (acc2, _, _) = ingest_records(&records, &g, &opts);
        assert_eq!(acc2.n_tweets(), 2);
    }
}
