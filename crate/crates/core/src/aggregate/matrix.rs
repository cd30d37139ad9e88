//! County feature matrices under the three aggregation schemes.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use log::warn;
use ndarray::Array2;

use crate::features::Vocabulary;

use super::checkpoint::{decode_field, encode_field};
use super::{AggregateError, CountAccumulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    TweetToCounty,
    CountyBow,
    UserToCounty,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::TweetToCounty => "tweet_to_county",
            Scheme::CountyBow => "county_bow",
            Scheme::UserToCounty => "user_to_county",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "tweet_to_county" | "tweet" => Some(Scheme::TweetToCounty),
            "county_bow" | "bow" => Some(Scheme::CountyBow),
            "user_to_county" | "user" => Some(Scheme::UserToCounty),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterSettings {
    pub min_tweets: u64,
    pub max_tweets: Option<u64>,
    pub min_users: usize,
}

impl Default for FilterSettings {
    fn default() -> Self {
        FilterSettings {
            min_tweets: 30,
            max_tweets: None,
            min_users: 100,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MatrixProvenance {
    pub county_users: Vec<u64>,
    pub county_tweets: Vec<u64>,
    pub county_tokens: Vec<u64>,
    pub filters: Option<FilterSettings>,
    /// Tweet-scheme numerator counted per-tweet presence instead of
    /// per occurrence.
    pub binary_per_tweet: bool,
}

/// Dense counties × features matrix. Rows align with `counties`
/// (sorted FIPS), columns with `features`.
#[derive(Debug, Clone)]
pub struct CountyFeatureMatrix {
    pub counties: Vec<String>,
    pub features: Vec<String>,
    pub values: Array2<f64>,
    pub scheme: Scheme,
    pub provenance: MatrixProvenance,
}

impl CountyFeatureMatrix {
    pub fn n_counties(&self) -> usize {
        self.counties.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn county_index(&self, fips: &str) -> Option<usize> {
        self.counties.iter().position(|c| c == fips)
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f == name)
    }

    pub fn value(&self, fips: &str, feature: &str) -> Option<f64> {
        let r = self.county_index(fips)?;
        let c = self.feature_index(feature)?;
        Some(self.values[[r, c]])
    }

    /// Keeps only the listed counties, preserving row order.
    pub fn retain_counties(&self, keep: &[String]) -> CountyFeatureMatrix {
        let keep: std::collections::HashSet<&str> = keep.iter().map(String::as_str).collect();
        let rows: Vec<usize> = (0..self.counties.len())
            .filter(|&i| keep.contains(self.counties[i].as_str()))
            .collect();
        let mut values = Array2::zeros((rows.len(), self.features.len()));
        for (new_r, &old_r) in rows.iter().enumerate() {
            values.row_mut(new_r).assign(&self.values.row(old_r));
        }
        CountyFeatureMatrix {
            counties: rows.iter().map(|&i| self.counties[i].clone()).collect(),
            features: self.features.clone(),
            values,
            scheme: self.scheme,
            provenance: MatrixProvenance {
                county_users: rows.iter().map(|&i| self.provenance.county_users[i]).collect(),
                county_tweets: rows.iter().map(|&i| self.provenance.county_tweets[i]).collect(),
                county_tokens: rows.iter().map(|&i| self.provenance.county_tokens[i]).collect(),
                filters: self.provenance.filters.clone(),
                binary_per_tweet: self.provenance.binary_per_tweet,
            },
        }
    }
}

/// Interner id → vocabulary column, built once per matrix.
fn column_lookup(acc: &CountAccumulator, vocab: &Vocabulary) -> Vec<Option<usize>> {
    (0..acc.interner().len() as u32)
        .map(|id| vocab.index_of(acc.interner().resolve(id)))
        .collect()
}

/// feat = token mentions / county tweet count. Values may exceed 1
/// because one tweet can mention a token several times. With
/// `binary_per_tweet` the numerator counts tweets containing the
/// token instead.
pub fn tweet_to_county(
    acc: &CountAccumulator,
    vocab: &Vocabulary,
    binary_per_tweet: bool,
) -> CountyFeatureMatrix {
    let id_to_col = column_lookup(acc, vocab);
    let n_feat = vocab.len();
    let mut counties = Vec::new();
    let mut prov = MatrixProvenance {
        binary_per_tweet,
        ..MatrixProvenance::default()
    };
    let mut flat: Vec<f64> = Vec::new();
    for county in acc.counties() {
        if county.tweets == 0 {
            warn!("county {} has zero tweets, dropped", county.fips);
            continue;
        }
        let mut row = vec![0u64; n_feat];
        for user in &county.users {
            for (&id, tally) in &acc.users_map()[*user].tallies {
                if let Some(col) = id_to_col[id as usize] {
                    row[col] += if binary_per_tweet {
                        tally.tweets
                    } else {
                        tally.occurrences
                    };
                }
            }
        }
        let denom = county.tweets as f64;
        flat.extend(row.iter().map(|&n| n as f64 / denom));
        counties.push(county.fips.to_string());
        prov.county_users.push(county.users.len() as u64);
        prov.county_tweets.push(county.tweets);
        prov.county_tokens.push(county.tokens);
    }
    let values = Array2::from_shape_vec((counties.len(), n_feat), flat)
        .expect("row-major build matches shape");
    CountyFeatureMatrix {
        counties,
        features: vocab.tokens().to_vec(),
        values,
        scheme: Scheme::TweetToCounty,
        provenance: prov,
    }
}

/// feat = token mentions / county token count; rows over the full
/// token space are probability vectors.
pub fn county_bow(acc: &CountAccumulator, vocab: &Vocabulary) -> CountyFeatureMatrix {
    let id_to_col = column_lookup(acc, vocab);
    let n_feat = vocab.len();
    let mut counties = Vec::new();
    let mut prov = MatrixProvenance::default();
    let mut flat: Vec<f64> = Vec::new();
    for county in acc.counties() {
        if county.tokens == 0 {
            warn!("county {} has zero tokens, dropped", county.fips);
            continue;
        }
        let mut row = vec![0u64; n_feat];
        for user in &county.users {
            for (&id, tally) in &acc.users_map()[*user].tallies {
                if let Some(col) = id_to_col[id as usize] {
                    row[col] += tally.occurrences;
                }
            }
        }
        let denom = county.tokens as f64;
        flat.extend(row.iter().map(|&n| n as f64 / denom));
        counties.push(county.fips.to_string());
        prov.county_users.push(county.users.len() as u64);
        prov.county_tweets.push(county.tweets);
        prov.county_tokens.push(county.tokens);
    }
    let values = Array2::from_shape_vec((counties.len(), n_feat), flat)
        .expect("row-major build matches shape");
    CountyFeatureMatrix {
        counties,
        features: vocab.tokens().to_vec(),
        values,
        scheme: Scheme::CountyBow,
        provenance: prov,
    }
}

/// feat = mean over member users of the user's relative frequency
/// r_k, where r_k normalizes over the user's FULL token stream, not
/// just in-vocabulary tokens. Every user contributes weight 1/N_j.
pub fn user_to_county(acc: &CountAccumulator, vocab: &Vocabulary) -> CountyFeatureMatrix {
    let id_to_col = column_lookup(acc, vocab);
    let n_feat = vocab.len();
    let mut counties = Vec::new();
    let mut prov = MatrixProvenance::default();
    let mut flat: Vec<f64> = Vec::new();
    for county in acc.counties() {
        if county.users.is_empty() {
            warn!("county {} has zero users, dropped", county.fips);
            continue;
        }
        let mut row = vec![0f64; n_feat];
        // Users iterate in sorted order and each contributes exactly
        // one addend per column, so sums are bitwise reproducible.
        for user in &county.users {
            let counts = &acc.users_map()[*user];
            if counts.token_count == 0 {
                continue; // zero vector contribution, still in N_j
            }
            let total = counts.token_count as f64;
            for (&id, tally) in &counts.tallies {
                if let Some(col) = id_to_col[id as usize] {
                    row[col] += tally.occurrences as f64 / total;
                }
            }
        }
        let n_users = county.users.len() as f64;
        flat.extend(row.iter().map(|&v| v / n_users));
        counties.push(county.fips.to_string());
        prov.county_users.push(county.users.len() as u64);
        prov.county_tweets.push(county.tweets);
        prov.county_tokens.push(county.tokens);
    }
    let values = Array2::from_shape_vec((counties.len(), n_feat), flat)
        .expect("row-major build matches shape");
    CountyFeatureMatrix {
        counties,
        features: vocab.tokens().to_vec(),
        values,
        scheme: Scheme::UserToCounty,
        provenance: prov,
    }
}

/// Writes the matrix as a self-describing TSV. Floats print in
/// shortest round-trip form, so read_matrix_tsv reproduces them
/// bit-for-bit.
pub fn write_matrix_tsv<W: Write>(m: &CountyFeatureMatrix, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# countylex-matrix v1")?;
    writeln!(w, "# scheme={}", m.scheme.as_str())?;
    writeln!(w, "# binary_per_tweet={}", m.provenance.binary_per_tweet)?;
    if let Some(f) = &m.provenance.filters {
        writeln!(
            w,
            "# filters=min_tweets:{},max_tweets:{},min_users:{}",
            f.min_tweets,
            f.max_tweets.map_or("none".to_string(), |v| v.to_string()),
            f.min_users
        )?;
    }
    for (i, fips) in m.counties.iter().enumerate() {
        writeln!(
            w,
            "#meta\t{}\t{}\t{}\t{}",
            encode_field(fips),
            m.provenance.county_users[i],
            m.provenance.county_tweets[i],
            m.provenance.county_tokens[i]
        )?;
    }
    let header: Vec<String> = m.features.iter().map(|f| encode_field(f)).collect();
    writeln!(w, "fips\t{}", header.join("\t"))?;
    for (i, fips) in m.counties.iter().enumerate() {
        write!(w, "{}", encode_field(fips))?;
        for v in m.values.row(i) {
            write!(w, "\t{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_matrix_tsv<R: BufRead>(reader: R) -> Result<CountyFeatureMatrix, AggregateError> {
    let mut scheme = None;
    let mut binary = false;
    let mut filters = None;
    let mut meta: HashMap<String, (u64, u64, u64)> = HashMap::new();
    let mut features: Option<Vec<String>> = None;
    let mut counties = Vec::new();
    let mut flat: Vec<f64> = Vec::new();
    let mut saw_header = false;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if lineno == 1 {
            if line != "# countylex-matrix v1" {
                return Err(AggregateError::SchemaError {
                    line: 1,
                    reason: "expected `# countylex-matrix v1`".to_string(),
                });
            }
            saw_header = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix("#meta\t") {
            let cells: Vec<&str> = rest.split('\t').collect();
            if cells.len() != 4 {
                return Err(AggregateError::SchemaError {
                    line: lineno,
                    reason: "expected 4 #meta fields".to_string(),
                });
            }
            let parse_u64 = |s: &str| -> Result<u64, AggregateError> {
                s.parse().map_err(|_| AggregateError::SchemaError {
                    line: lineno,
                    reason: format!("bad count `{s}`"),
                })
            };
            meta.insert(
                decode_field(cells[0], lineno)?,
                (parse_u64(cells[1])?, parse_u64(cells[2])?, parse_u64(cells[3])?),
            );
            continue;
        }
        if let Some(rest) = line.strip_prefix("# scheme=") {
            scheme = Scheme::parse(rest);
            continue;
        }
        if let Some(rest) = line.strip_prefix("# binary_per_tweet=") {
            binary = rest == "true";
            continue;
        }
        if let Some(rest) = line.strip_prefix("# filters=") {
            let mut f = FilterSettings::default();
            for part in rest.split(',') {
                match part.split_once(':') {
                    Some(("min_tweets", v)) => {
                        f.min_tweets = v.parse().unwrap_or(f.min_tweets)
                    }
                    Some(("max_tweets", v)) => f.max_tweets = v.parse().ok(),
                    Some(("min_users", v)) => f.min_users = v.parse().unwrap_or(f.min_users),
                    _ => {}
                }
            }
            filters = Some(f);
            continue;
        }
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if features.is_none() {
            let mut cells = line.split('\t');
            if cells.next() != Some("fips") {
                return Err(AggregateError::SchemaError {
                    line: lineno,
                    reason: "expected column header starting with `fips`".to_string(),
                });
            }
            let mut feats = Vec::new();
            for cell in cells {
                feats.push(decode_field(cell, lineno)?);
            }
            features = Some(feats);
            continue;
        }
        let n_feat = features.as_ref().unwrap().len();
        let mut cells = line.split('\t');
        let fips = decode_field(
            cells.next().ok_or(AggregateError::SchemaError {
                line: lineno,
                reason: "empty row".to_string(),
            })?,
            lineno,
        )?;
        let mut count = 0;
        for cell in cells {
            let v: f64 = cell.parse().map_err(|_| AggregateError::SchemaError {
                line: lineno,
                reason: format!("bad value `{cell}`"),
            })?;
            flat.push(v);
            count += 1;
        }
        if count != n_feat {
            return Err(AggregateError::SchemaError {
                line: lineno,
                reason: format!("expected {n_feat} values, found {count}"),
            });
        }
        counties.push(fips);
    }

    if !saw_header {
        return Err(AggregateError::SchemaError {
            line: 1,
            reason: "empty matrix file".to_string(),
        });
    }
    let features = features.unwrap_or_default();
    let scheme = scheme.ok_or(AggregateError::SchemaError {
        line: 0,
        reason: "missing `# scheme=` line".to_string(),
    })?;
    let mut prov = MatrixProvenance {
        filters,
        binary_per_tweet: binary,
        ..MatrixProvenance::default()
    };
    for fips in &counties {
        let (u, tw, tok) = meta.get(fips).copied().unwrap_or((0, 0, 0));
        prov.county_users.push(u);
        prov.county_tweets.push(tw);
        prov.county_tokens.push(tok);
    }
    let values = Array2::from_shape_vec((counties.len(), features.len()), flat).map_err(|_| {
        AggregateError::SchemaError {
            line: 0,
            reason: "row/column shape mismatch".to_string(),
        }
    })?;
    Ok(CountyFeatureMatrix {
        counties,
        features,
        values,
        scheme,
        provenance: prov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::build_vocabulary;

    fn vocab_for(acc: &CountAccumulator) -> Vocabulary {
        build_vocabulary(acc, 25000)
    }

    #[test]
    fn tweet_scheme_counts_occurrences_over_tweets() {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("u1", "99001", &["a".into(), "a".into(), "b".into()]);
        acc.add_user_tweet("u1", "99001", &["a".into()]);
        let m = tweet_to_county(&acc, &vocab_for(&acc), false);
        assert_eq!(m.value("99001", "a"), Some(1.5));
        assert_eq!(m.value("99001", "b"), Some(0.5));
    }

    #[test]
    fn absent_token_is_zero() {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("u1", "99001", &["a".into()]);
        acc.add_user_tweet("u2", "99002", &["z".into()]);
        let m = tweet_to_county(&acc, &vocab_for(&acc), false);
        assert_eq!(m.value("99001", "z"), Some(0.0));
    }

    #[test]
    fn single_tweet_single_token_is_one() {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("u1", "99001", &["a".into()]);
        let m = tweet_to_county(&acc, &vocab_for(&acc), false);
        assert_eq!(m.value("99001", "a"), Some(1.0));
    }

    #[test]
    fn binary_numerator_counts_tweet_presence() {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("u1", "99001", &["a".into(), "a".into(), "b".into()]);
        acc.add_user_tweet("u1", "99001", &["a".into()]);
        let m = tweet_to_county(&acc, &vocab_for(&acc), true);
        // "a" appears in both tweets, "b" in one.
        assert_eq!(m.value("99001", "a"), Some(1.0));
        assert_eq!(m.value("99001", "b"), Some(0.5));
    }

    #[test]
    fn bow_divides_by_token_count() {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("u1", "99001", &["a".into(), "a".into(), "b".into()]);
        let m = county_bow(&acc, &vocab_for(&acc));
        assert_eq!(m.value("99001", "a"), Some(2.0 / 3.0));
        assert_eq!(m.value("99001", "b"), Some(1.0 / 3.0));
    }

    #[test]
    fn bow_ignores_tweet_boundaries() {
        let mut one = CountAccumulator::new("test");
        one.add_user_tweet("u1", "99001", &["a".into(), "a".into(), "b".into()]);
        let mut many = CountAccumulator::new("test");
        many.add_user_tweet("u1", "99001", &["a".into()]);
        many.add_user_tweet("u1", "99001", &["a".into()]);
        many.add_user_tweet("u1", "99001", &["b".into()]);
        let v1 = vocab_for(&one);
        let m1 = county_bow(&one, &v1);
        let m2 = county_bow(&many, &v1);
        assert_eq!(m1.values, m2.values);
    }

    #[test]
    fn bow_single_token_is_one() {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("u1", "99001", &["a".into()]);
        let m = county_bow(&acc, &vocab_for(&acc));
        assert_eq!(m.value("99001", "a"), Some(1.0));
    }

    #[test]
    fn user_scheme_averages_user_frequencies() {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("u1", "99001", &["a".into(), "a".into()]);
        acc.add_user_tweet("u2", "99001", &["a".into(), "b".into(), "b".into(), "b".into()]);
        let m = user_to_county(&acc, &vocab_for(&acc));
        assert_eq!(m.value("99001", "a"), Some(0.625));
    }

    #[test]
    fn identical_users_make_user_scheme_equal_bow() {
        let mut acc = CountAccumulator::new("test");
        for user in ["u1", "u2", "u3"] {
            acc.add_user_tweet(user, "99001", &["a".into(), "b".into()]);
        }
        let v = vocab_for(&acc);
        let bow = county_bow(&acc, &v);
        let user = user_to_county(&acc, &v);
        for f in ["a", "b"] {
            let d = (bow.value("99001", f).unwrap() - user.value("99001", f).unwrap()).abs();
            assert!(d < 1e-15, "feature {f} differs by {d}");
        }
    }

    #[test]
    fn dominant_user_contributes_one_share() {
        let mut acc = CountAccumulator::new("test");
        // u1 floods with 99 "x"; u2 says one "y".
        let flood: Vec<String> = std::iter::repeat("x".to_string()).take(99).collect();
        acc.add_user_tweet("u1", "99001", &flood);
        acc.add_user_tweet("u2", "99001", &["y".into()]);
        let v = vocab_for(&acc);
        let bow = county_bow(&acc, &v);
        let user = user_to_county(&acc, &v);
        assert_eq!(bow.value("99001", "x"), Some(0.99));
        // u1's r(x)=1 averaged over 2 users.
        assert_eq!(user.value("99001", "x"), Some(0.5));
        assert_eq!(user.value("99001", "y"), Some(0.5));
    }

    #[test]
    fn full_vocab_rows_are_distributions() {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("u1", "99001", &["a".into(), "b".into(), "c".into()]);
        acc.add_user_tweet("u2", "99001", &["a".into(), "a".into()]);
        let v = vocab_for(&acc);
        let bow = county_bow(&acc, &v);
        let user = user_to_county(&acc, &v);
        let bow_sum: f64 = bow.values.row(0).sum();
        let user_sum: f64 = user.values.row(0).sum();
        assert!((bow_sum - 1.0).abs() < 1e-12);
        assert!((user_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn county_rows_sorted_by_fips() {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("u2", "99002", &["a".into()]);
        acc.add_user_tweet("u1", "99001", &["a".into()]);
        let m = county_bow(&acc, &vocab_for(&acc));
        assert_eq!(m.counties, vec!["99001", "99002"]);
    }

    #[test]
    fn retain_counties_drops_rows() {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("u1", "99001", &["a".into()]);
        acc.add_user_tweet("u2", "99002", &["a".into()]);
        let m = county_bow(&acc, &vocab_for(&acc));
        let kept = m.retain_counties(&["99002".to_string()]);
        assert_eq!(kept.counties, vec!["99002"]);
        assert_eq!(kept.values.nrows(), 1);
        assert_eq!(kept.provenance.county_users, vec![1]);
    }

    #[test]
    fn tsv_roundtrip_is_exact() {
        let mut acc = CountAccumulator::new("test");
        acc.add_user_tweet("u1", "99001", &["a".into(), "b".into(), "b".into()]);
        acc.add_user_tweet("u2", "99002", &["a".into(), "c".into()]);
        let mut m = county_bow(&acc, &vocab_for(&acc));
        m.provenance.filters = Some(FilterSettings {
            min_tweets: 30,
            max_tweets: Some(500),
            min_users: 100,
        });
        let mut buf = Vec::new();
        write_matrix_tsv(&m, &mut buf).unwrap();
        let back = read_matrix_tsv(buf.as_slice()).unwrap();
        assert_eq!(back.counties, m.counties);
        assert_eq!(back.features, m.features);
        assert_eq!(back.values, m.values);
        assert_eq!(back.scheme, m.scheme);
        assert_eq!(back.provenance.filters, m.provenance.filters);
        assert_eq!(back.provenance.county_tweets, m.provenance.county_tweets);
    }
}
