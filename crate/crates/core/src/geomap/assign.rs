//! Home-county assignment: each user keeps the county of their
//! earliest county-mapped tweet, ties broken by smaller tweet_id.

use std::collections::HashMap;

use super::locate::AssignmentSource;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserCountyAssignment {
    pub user_id: String,
    pub fips: String,
    pub assigned_from: AssignmentSource,
    /// UTC seconds of the earliest county-mapped tweet.
    pub evidence_timestamp: i64,
}

/// Per-shard minima. Merging shards commutes because min over
/// (created_at, tweet_id) is associative and commutative.
#[derive(Debug, Default, Clone)]
pub struct UserAssignments {
    by_user: HashMap<String, Candidate>,
}

#[derive(Debug, Clone)]
struct Candidate {
    created_at: i64,
    tweet_id: String,
    fips: String,
    source: AssignmentSource,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        (self.created_at, self.tweet_id.as_str()) < (other.created_at, other.tweet_id.as_str())
    }
}

impl UserAssignments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(
        &mut self,
        user_id: &str,
        tweet_id: &str,
        created_at: i64,
        fips: &str,
        source: AssignmentSource,
    ) {
        let incoming = Candidate {
            created_at,
            tweet_id: tweet_id.to_string(),
            fips: fips.to_string(),
            source,
        };
        match self.by_user.get_mut(user_id) {
            Some(cur) => {
                if incoming.beats(cur) {
                    *cur = incoming;
                }
            }
            None => {
                self.by_user.insert(user_id.to_string(), incoming);
            }
        }
    }

    pub fn merge(&mut self, other: UserAssignments) {
        for (user, cand) in other.by_user {
            match self.by_user.get_mut(&user) {
                Some(cur) => {
                    if cand.beats(cur) {
                        *cur = cand;
                    }
                }
                None => {
                    self.by_user.insert(user, cand);
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.by_user.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_user.is_empty()
    }

    pub fn get(&self, user_id: &str) -> Option<UserCountyAssignment> {
        self.by_user.get(user_id).map(|c| UserCountyAssignment {
            user_id: user_id.to_string(),
            fips: c.fips.clone(),
            assigned_from: c.source,
            evidence_timestamp: c.created_at,
        })
    }

    /// Final assignments sorted by user_id.
    pub fn into_assignments(self) -> Vec<UserCountyAssignment> {
        let mut out: Vec<UserCountyAssignment> = self
            .by_user
            .into_iter()
            .map(|(user_id, c)| UserCountyAssignment {
                user_id,
                fips: c.fips,
                assigned_from: c.source,
                evidence_timestamp: c.created_at,
            })
            .collect();
        out.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        out
    }
}

/// One-shot assignment over an already-mapped record stream. Each item
/// is (user_id, tweet_id, created_at, fips, source).
pub fn assign_user_county<'a, I>(records: I) -> Vec<UserCountyAssignment>
where
    I: IntoIterator<Item = (&'a str, &'a str, i64, &'a str, AssignmentSource)>,
{
    let mut acc = UserAssignments::new();
    for (user, tweet, at, fips, source) in records {
        acc.observe(user, tweet, at, fips, source);
    }
    acc.into_assignments()
}

#[cfg(test)]
mod tests {
    use super::*;
    use AssignmentSource::Coordinates as Coord;

    #[test]
    fn earliest_tweet_wins() {
        let out = assign_user_county([
            ("u1", "t5", 5, "AAAAA", Coord),
            ("u1", "t3", 3, "BBBBB", Coord),
        ]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].fips, "BBBBB");
        assert_eq!(out[0].evidence_timestamp, 3);
    }

    #[test]
    fn single_tweet_assigns_its_fips() {
        let out = assign_user_county([("u1", "t1", 9, "99001", Coord)]);
        assert_eq!(out[0].fips, "99001");
    }

    #[test]
    fn timestamp_tie_broken_by_smaller_tweet_id() {
        let out = assign_user_county([
            ("u1", "002", 7, "BBBBB", Coord),
            ("u1", "001", 7, "AAAAA", Coord),
        ]);
        assert_eq!(out[0].fips, "AAAAA");
    }

    #[test]
    fn later_tweets_elsewhere_do_not_move_the_user() {
        let out = assign_user_county([
            ("u1", "t1", 1, "99001", Coord),
            ("u1", "t2", 2, "99002", Coord),
            ("u1", "t3", 3, "99003", Coord),
        ]);
        assert_eq!(out[0].fips, "99001");
    }

    #[test]
    fn order_insensitive() {
        let records = [
            ("u1", "t2", 2, "99002", Coord),
            ("u1", "t1", 1, "99001", Coord),
            ("u2", "t9", 9, "99003", Coord),
            ("u2", "t8", 9, "99004", Coord),
        ];
        let forward = assign_user_county(records);
        let mut rev = records;
        rev.reverse();
        let backward = assign_user_county(rev);
        assert_eq!(forward, backward);
        assert_eq!(forward[0].fips, "99001");
        assert_eq!(forward[1].fips, "99004");
    }

    #[test]
    fn shard_merge_matches_single_pass() {
        let records = [
            ("u1", "t2", 2, "99002", Coord),
            ("u1", "t1", 1, "99001", Coord),
            ("u2", "t9", 9, "99003", Coord),
        ];
        let single = assign_user_county(records);

        let mut a = UserAssignments::new();
        let mut b = UserAssignments::new();
        a.observe("u1", "t2", 2, "99002", Coord);
        b.observe("u1", "t1", 1, "99001", Coord);
        b.observe("u2", "t9", 9, "99003", Coord);
        let mut merged_ab = a.clone();
        merged_ab.merge(b.clone());
        let mut merged_ba = b;
        merged_ba.merge(a);

        assert_eq!(merged_ab.into_assignments(), single);
        assert_eq!(merged_ba.into_assignments(), single);
    }
}
