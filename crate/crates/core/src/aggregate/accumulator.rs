//! The mergeable count accumulator.

use std::collections::{BTreeMap, HashMap};

use crate::corpus::{TokenSequence, TweetRecord};

use super::AggregateError;

/// Interned token table. Ids are assignment-ordered and therefore
/// shard-dependent; anything observable (checkpoints, matrices) must
/// sort by token string, never by id.
#[derive(Debug, Default, Clone)]
pub(super) struct TokenInterner {
    ids: HashMap<String, u32>,
    strings: Vec<String>,
}

impl TokenInterner {
    fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.strings.len() as u32;
        self.ids.insert(token.to_string(), id);
        self.strings.push(token.to_string());
        id
    }

    pub(super) fn resolve(&self, id: u32) -> &str {
        &self.strings[id as usize]
    }

    pub(super) fn len(&self) -> usize {
        self.strings.len()
    }
}

/// Counts for one (user, token) pair.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct TokenTally {
    /// Total occurrences across the user's tweets.
    pub occurrences: u64,
    /// Number of distinct tweets containing the token at least once.
    pub tweets: u64,
    /// Serial of the last tweet that bumped `tweets`. Transient
    /// bookkeeping: excluded from checkpoints, reset on merge.
    last_serial: u64,
}

#[derive(Debug, Default, Clone)]
pub struct UserCounts {
    pub tallies: HashMap<u32, TokenTally>,
    pub tweet_count: u64,
    /// Total token occurrences over the user's full stream; the r_k
    /// denominator.
    pub token_count: u64,
}

/// One county's derived view, users sorted for deterministic float
/// summation downstream.
#[derive(Debug)]
pub struct CountyBreakdown<'a> {
    pub fips: &'a str,
    pub users: Vec<&'a str>,
    pub tweets: u64,
    pub tokens: u64,
}

/// Exact streaming counts, sharded by worker and merged pairwise.
///
/// Each user carries exactly one county. The pipeline guarantees that
/// by routing all of a user's records through their home county; if a
/// caller feeds conflicting counties anyway, the lexicographically
/// smallest wins so that merge stays commutative.
#[derive(Debug, Clone)]
pub struct CountAccumulator {
    config_tag: String,
    interner: TokenInterner,
    users: HashMap<String, UserCounts>,
    user_county: HashMap<String, String>,
}

impl CountAccumulator {
    /// `config_tag` identifies the tokenizer/filter configuration the
    /// counts were built under; merge refuses mismatched tags.
    pub fn new(config_tag: &str) -> Self {
        CountAccumulator {
            config_tag: config_tag.to_string(),
            interner: TokenInterner::default(),
            users: HashMap::new(),
            user_county: HashMap::new(),
        }
    }

    pub fn config_tag(&self) -> &str {
        &self.config_tag
    }

    /// Folds one mapped, language-filtered record into the counts.
    pub fn accumulate(&mut self, rec: &TweetRecord, fips: &str, tokens: &TokenSequence) {
        self.add_user_tweet(&rec.user_id, fips, tokens.tokens());
    }

    /// Record-free entry point used by the synthesizer and tests.
    pub fn add_user_tweet(&mut self, user_id: &str, fips: &str, tokens: &[String]) {
        self.note_county(user_id, fips);
        if !self.users.contains_key(user_id) {
            self.users.insert(user_id.to_string(), UserCounts::default());
        }
        let counts = self.users.get_mut(user_id).unwrap();
        let serial = counts.tweet_count + 1;
        counts.tweet_count = serial;
        counts.token_count += tokens.len() as u64;
        for token in tokens {
            let id = self.interner.intern(token);
            let tally = counts.tallies.entry(id).or_default();
            tally.occurrences += 1;
            if tally.last_serial != serial {
                tally.tweets += 1;
                tally.last_serial = serial;
            }
        }
    }

    /// Bulk-inserts a user's counts (`(token, occurrences, tweets)`)
    /// without a tweet stream. Adds pointwise when the user exists.
    pub fn add_user_block(
        &mut self,
        user_id: &str,
        fips: &str,
        tweet_count: u64,
        counts: &[(&str, u64, u64)],
    ) {
        self.note_county(user_id, fips);
        if !self.users.contains_key(user_id) {
            self.users.insert(user_id.to_string(), UserCounts::default());
        }
        let user = self.users.get_mut(user_id).unwrap();
        user.tweet_count += tweet_count;
        for &(token, occurrences, tweets) in counts {
            user.token_count += occurrences;
            let id = self.interner.intern(token);
            let tally = user.tallies.entry(id).or_default();
            tally.occurrences += occurrences;
            tally.tweets += tweets;
            tally.last_serial = 0;
        }
    }

    fn note_county(&mut self, user_id: &str, fips: &str) {
        match self.user_county.get_mut(user_id) {
            Some(cur) => {
                if fips < cur.as_str() {
                    *cur = fips.to_string();
                }
            }
            None => {
                self.user_county.insert(user_id.to_string(), fips.to_string());
            }
        }
    }

    /// Pointwise sum of counts; commutative and associative.
    pub fn merge(&mut self, other: CountAccumulator) -> Result<(), AggregateError> {
        let CountAccumulator {
            config_tag: other_tag,
            interner: other_interner,
            users: other_users,
            user_county: other_county,
        } = other;
        if self.config_tag != other_tag {
            return Err(AggregateError::ConfigMismatch {
                left: self.config_tag.clone(),
                right: other_tag,
            });
        }
        for (user_id, fips) in other_county {
            match self.user_county.get_mut(&user_id) {
                Some(cur) => {
                    if fips < *cur {
                        *cur = fips;
                    }
                }
                None => {
                    self.user_county.insert(user_id, fips);
                }
            }
        }
        for (user_id, incoming) in other_users {
            let cur = self.users.entry(user_id).or_default();
            cur.tweet_count += incoming.tweet_count;
            cur.token_count += incoming.token_count;
            for (id, tally) in incoming.tallies {
                let new_id = self.interner.intern(other_interner.resolve(id));
                let t = cur.tallies.entry(new_id).or_default();
                t.occurrences += tally.occurrences;
                t.tweets += tally.tweets;
                t.last_serial = 0;
            }
        }
        Ok(())
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_tweets(&self) -> u64 {
        self.users.values().map(|u| u.tweet_count).sum()
    }

    pub fn n_tokens(&self) -> u64 {
        self.users.values().map(|u| u.token_count).sum()
    }

    pub fn user(&self, user_id: &str) -> Option<&UserCounts> {
        self.users.get(user_id)
    }

    pub fn user_county(&self, user_id: &str) -> Option<&str> {
        self.user_county.get(user_id).map(String::as_str)
    }

    /// One user's tallies with token strings resolved. Unordered.
    pub fn user_tallies(&self, user_id: &str) -> impl Iterator<Item = (&str, &TokenTally)> {
        self.users.get(user_id).into_iter().flat_map(move |u| {
            u.tallies
                .iter()
                .map(move |(&id, tally)| (self.interner.resolve(id), tally))
        })
    }

    pub(super) fn interner(&self) -> &TokenInterner {
        &self.interner
    }

    pub(super) fn users_map(&self) -> &HashMap<String, UserCounts> {
        &self.users
    }

    /// A user's occurrence count for one token, zero when unseen.
    pub fn user_token_count(&self, user_id: &str, token: &str) -> u64 {
        let Some(&id) = self.interner.ids.get(token) else {
            return 0;
        };
        self.users
            .get(user_id)
            .and_then(|u| u.tallies.get(&id))
            .map_or(0, |t| t.occurrences)
    }

    /// Total corpus occurrences per token, sorted by token.
    pub fn corpus_counts(&self) -> BTreeMap<&str, u64> {
        let mut out: BTreeMap<&str, u64> = BTreeMap::new();
        for user in self.users.values() {
            for (&id, tally) in &user.tallies {
                *out.entry(self.interner.resolve(id)).or_default() += tally.occurrences;
            }
        }
        out
    }

    /// Per-county view, counties and member users sorted. County
    /// totals are recomputed from member users, which keeps the
    /// totals-equal-sum invariant true by construction.
    pub fn counties(&self) -> Vec<CountyBreakdown<'_>> {
        let mut grouped: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (user, fips) in &self.user_county {
            if self.users.contains_key(user) {
                grouped.entry(fips).or_default().push(user);
            }
        }
        grouped
            .into_iter()
            .map(|(fips, mut users)| {
                users.sort_unstable();
                let (tweets, tokens) = users
                    .iter()
                    .map(|u| {
                        let c = &self.users[*u];
                        (c.tweet_count, c.token_count)
                    })
                    .fold((0, 0), |(a, b), (c, d)| (a + c, b + d));
                CountyBreakdown {
                    fips,
                    users,
                    tweets,
                    tokens,
                }
            })
            .collect()
    }

    /// Drops users outside [min_tweets, max_tweets]. Returns the
    /// filtered copy and the removed-user count.
    pub fn filter_users(&self, min_tweets: u64, max_tweets: Option<u64>) -> (CountAccumulator, u64) {
        let mut out = self.clone();
        let before = out.users.len();
        out.users.retain(|_, u| {
            u.tweet_count >= min_tweets && max_tweets.map_or(true, |m| u.tweet_count <= m)
        });
        let users = &out.users;
        out.user_county.retain(|user, _| users.contains_key(user));
        let removed = (before - out.users.len()) as u64;
        (out, removed)
    }

    /// FIPS of counties with at least `min_users` qualifying users.
    pub fn eligible_counties(&self, min_users: usize) -> Vec<String> {
        self.counties()
            .iter()
            .filter(|c| c.users.len() >= min_users)
            .map(|c| c.fips.to_string())
            .collect()
    }
}
