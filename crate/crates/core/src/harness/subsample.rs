//! Deterministic stream subsampling keyed on tweet id, so every shard
//! and every rerun keeps exactly the same records.

use crate::corpus::TweetRecord;
use crate::stablehash::{stable_hash64, unit_interval};

/// Whether a record survives subsampling. Order-independent: the
/// decision is a pure function of (seed, tweet_id, fraction).
pub fn keep_record(tweet_id: &str, fraction: f64, seed: u64) -> bool {
    debug_assert!(
        fraction > 0.0 && fraction <= 1.0,
        "subsample fraction {fraction} outside (0, 1]"
    );
    if fraction >= 1.0 {
        return true;
    }
    unit_interval(stable_hash64(seed, tweet_id.as_bytes())) < fraction
}

pub fn subsample_stream<I>(records: I, fraction: f64, seed: u64) -> impl Iterator<Item = TweetRecord>
where
    I: IntoIterator<Item = TweetRecord>,
{
    records
        .into_iter()
        .filter(move |r| keep_record(&r.tweet_id, fraction, seed))
}
