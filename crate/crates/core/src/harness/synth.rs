//! Deterministic synthetic worlds. Counties carry a latent trait in
//! [-1, 1] that sets both the outcome value and the county's lean
//! between two word groups; users sample language from that mixture.
//! Super users post at a large multiple of the median volume with
//! language unrelated to the trait, which is exactly the failure mode
//! count-based aggregation is sensitive to.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};

use crate::aggregate::CountAccumulator;
use crate::corpus::{serialize_record, TweetRecord};
use crate::geomap::{load_gazetteer, load_polygons, Gazetteer};
use crate::model::{OutcomeTable, OutcomeTransform};

use super::timeslice::year_bounds;
use super::HarnessError;

/// Common English words; the first half is dialect group A, the
/// second half group B. Everyday vocabulary keeps synthetic texts
/// comfortably inside the English classifier's acceptance region.
pub(crate) const WORDLIST: [&str; 120] = [
    // group A
    "the", "and", "you", "that", "this", "with", "have", "from", "they", "what",
    "know", "just", "time", "like", "people", "year", "good", "some", "them", "other",
    "than", "then", "look", "only", "come", "over", "think", "also", "back", "after",
    "work", "first", "well", "even", "want", "because", "these", "give", "most", "about",
    "into", "could", "state", "never", "become", "between", "really", "something", "another", "family",
    "morning", "coffee", "sunny", "happy", "weekend", "friend", "dinner", "music", "game", "home",
    // group B
    "night", "today", "great", "world", "still", "every", "house", "little", "school", "keep",
    "point", "start", "place", "where", "again", "found", "those", "along", "under", "might",
    "while", "last", "right", "down", "call", "water", "long", "find", "here", "thing",
    "many", "made", "part", "city", "street", "river", "winter", "summer", "train", "store",
    "light", "heavy", "early", "late", "quick", "slow", "quiet", "loud", "clean", "fresh",
    "rain", "snow", "wind", "cloud", "storm", "field", "road", "bridge", "market", "garden",
];

const GROUP_SIZE: usize = WORDLIST.len() / 2;

/// Parameters for the direct-accumulator world: user token counts are
/// drawn straight from each user's term distribution, with no record
/// stream in between. Cheap enough for hundred-thousand-user worlds.
#[derive(Debug, Clone)]
pub struct SynthParams {
    pub counties: usize,
    pub users_per_county: usize,
    /// Probability that a user is a super user.
    pub super_user_rate: f64,
    /// Super-user tweet volume as a multiple of the median volume.
    pub super_volume: f64,
    /// 0 = language carries nothing; 1 = the mixture swings fully
    /// with the county trait.
    pub signal: f64,
    pub tweets_min: u64,
    pub tweets_max: u64,
    pub tokens_per_tweet: u64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            counties: 500,
            users_per_county: 200,
            super_user_rate: 0.02,
            super_volume: 100.0,
            signal: 0.9,
            tweets_min: 30,
            tweets_max: 60,
            tokens_per_tweet: 7,
            seed: 0,
        }
    }
}

/// A generated world: the filled accumulator, the outcome table
/// (value = county trait), and the traits themselves.
#[derive(Debug)]
pub struct TraitWorld {
    pub accumulator: CountAccumulator,
    pub outcomes: OutcomeTable,
    pub traits: Vec<(String, f64)>,
}

fn synth_fips(j: usize) -> String {
    format!("{:05}", 10_000 + j)
}

/// Mixture weight on group A for a regular user in a county with
/// trait `tau`.
fn member_mix(tau: f64, signal: f64, rng: &mut ChaCha8Rng) -> f64 {
    let jitter = Normal::new(0.0, 0.05).expect("valid sigma").sample(rng);
    (0.5 + 0.5 * signal * tau + jitter).clamp(0.02, 0.98)
}

/// Draws a multinomial sample over the wordlist by conditional
/// binomials, in fixed word order for determinism.
fn draw_token_counts(n_tokens: u64, mix_a: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, u64)> {
    let mut counts = Vec::new();
    let mut remaining = n_tokens;
    let mut rest_p = 1.0f64;
    for (i, _) in WORDLIST.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p_word = if i < GROUP_SIZE {
            mix_a / GROUP_SIZE as f64
        } else {
            (1.0 - mix_a) / GROUP_SIZE as f64
        };
        let cond = if i + 1 == WORDLIST.len() {
            1.0
        } else {
            (p_word / rest_p).clamp(0.0, 1.0)
        };
        let c = Binomial::new(remaining, cond)
            .expect("conditional probability in range")
            .sample(rng);
        if c > 0 {
            counts.push((i, c));
        }
        remaining -= c;
        rest_p -= p_word;
    }
    counts
}

struct UserPlan {
    tweet_count: u64,
    mix_a: f64,
}

fn plan_user(tau: f64, params: &SynthParams, rng: &mut ChaCha8Rng) -> UserPlan {
    let is_super = params.super_user_rate > 0.0 && rng.gen_bool(params.super_user_rate.min(1.0));
    if is_super {
        let median = (params.tweets_min + params.tweets_max) / 2;
        UserPlan {
            tweet_count: ((median as f64) * params.super_volume).round() as u64,
            // Organizational accounts: high volume, trait-free language.
            mix_a: rng.gen_range(0.25..0.75),
        }
    } else {
        UserPlan {
            tweet_count: rng.gen_range(params.tweets_min..=params.tweets_max),
            mix_a: member_mix(tau, params.signal, rng),
        }
    }
}

/// Builds the accumulator directly from sampled token counts.
pub fn synth_accumulator(params: &SynthParams) -> TraitWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut acc = CountAccumulator::new(&format!("synth-seed{}", params.seed));
    let mut outcomes = BTreeMap::new();
    let mut traits = Vec::with_capacity(params.counties);
    let mut user_serial = 0u64;

    for j in 0..params.counties {
        let fips = synth_fips(j);
        let tau = rng.gen_range(-1.0..1.0);
        outcomes.insert(fips.clone(), tau);
        traits.push((fips.clone(), tau));

        for _ in 0..params.users_per_county {
            let plan = plan_user(tau, params, &mut rng);
            let user_id = format!("u{user_serial:07}");
            user_serial += 1;
            let n_tokens = plan.tweet_count * params.tokens_per_tweet;
            let cells: Vec<(&str, u64, u64)> = draw_token_counts(n_tokens, plan.mix_a, &mut rng)
                .into_iter()
                .map(|(i, c)| (WORDLIST[i], c, c.min(plan.tweet_count)))
                .collect();
            acc.add_user_block(&user_id, &fips, plan.tweet_count, &cells);
        }
    }

    TraitWorld {
        accumulator: acc,
        outcomes: OutcomeTable::from_values("synthetic_trait", OutcomeTransform::None, outcomes),
        traits,
    }
}

/// Parameters for the record-stream world: full JSONL-shaped tweets
/// with coordinates or profile locations over a synthetic county grid.
#[derive(Debug, Clone)]
pub struct RecordParams {
    pub counties: usize,
    pub users_per_county: usize,
    pub super_user_rate: f64,
    pub super_volume: f64,
    pub signal: f64,
    pub tweets_min: u64,
    pub tweets_max: u64,
    pub words_per_tweet: usize,
    /// Inclusive calendar-year span for timestamps.
    pub year_start: i32,
    pub year_end: i32,
    /// Fraction of records carrying coordinates; the rest carry a
    /// `"City, TX"` profile string.
    pub coord_fraction: f64,
    pub seed: u64,
}

impl Default for RecordParams {
    fn default() -> Self {
        RecordParams {
            counties: 20,
            users_per_county: 30,
            super_user_rate: 0.02,
            super_volume: 100.0,
            signal: 0.9,
            tweets_min: 5,
            tweets_max: 15,
            words_per_tweet: 9,
            year_start: 2012,
            year_end: 2013,
            coord_fraction: 0.7,
            seed: 0,
        }
    }
}

/// Synthetic geography: one 1°×1° cell per county on a grid, one city
/// per county, everything placed in a single state.
#[derive(Debug, Clone)]
pub struct SynthGeo {
    pub gazetteer_tsv: String,
    pub polygons_tsv: String,
    pub fips: Vec<String>,
    /// `(city name, state abbrev)` per county, index-aligned with `fips`.
    pub cities: Vec<(String, String)>,
}

const GRID_COLS: usize = 20;
const GRID_LAT0: f64 = 30.0;
const GRID_LON0: f64 = -110.0;

fn cell_origin(j: usize) -> (f64, f64) {
    let row = j / GRID_COLS;
    let col = j % GRID_COLS;
    (GRID_LAT0 + row as f64, GRID_LON0 + col as f64)
}

pub fn synth_geo(counties: usize) -> SynthGeo {
    let mut gazetteer = String::new();
    let mut polygons = String::new();
    let mut fips_list = Vec::with_capacity(counties);
    let mut cities = Vec::with_capacity(counties);
    for j in 0..counties {
        let fips = synth_fips(j);
        let city = format!("gridtown{j:03}");
        let (lat, lon) = cell_origin(j);
        writeln!(gazetteer, "{city}\ttx\t{fips}").unwrap();
        writeln!(gazetteer, "grid{j:03} county\ttx\t{fips}").unwrap();
        writeln!(
            polygons,
            "{fips}\t0\t{lat},{lon};{lat},{lon_e};{lat_n},{lon_e};{lat_n},{lon};{lat},{lon}",
            lat = lat,
            lon = lon,
            lat_n = lat + 1.0,
            lon_e = lon + 1.0,
        )
        .unwrap();
        fips_list.push(fips);
        cities.push((city, "tx".to_string()));
    }
    SynthGeo {
        gazetteer_tsv: gazetteer,
        polygons_tsv: polygons,
        fips: fips_list,
        cities,
    }
}

/// Parses the synthetic geography into a ready-to-use gazetteer with
/// polygons attached.
pub fn synth_gazetteer(geo: &SynthGeo) -> Gazetteer {
    let mut gaz = load_gazetteer(std::io::Cursor::new(geo.gazetteer_tsv.as_bytes()))
        .expect("synthetic gazetteer is well formed");
    load_polygons(&mut gaz, std::io::Cursor::new(geo.polygons_tsv.as_bytes()))
        .expect("synthetic polygons are well formed");
    gaz
}

/// Generates the record stream plus its outcome table and geography.
/// Records come out grouped by user with globally unique serial ids.
pub fn synth_records(params: &RecordParams) -> (Vec<TweetRecord>, OutcomeTable, SynthGeo) {
    let geo = synth_geo(params.counties);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (span_start, _) = year_bounds(params.year_start);
    let (_, span_end) = year_bounds(params.year_end);

    let base = SynthParams {
        counties: params.counties,
        users_per_county: params.users_per_county,
        super_user_rate: params.super_user_rate,
        super_volume: params.super_volume,
        signal: params.signal,
        tweets_min: params.tweets_min,
        tweets_max: params.tweets_max,
        tokens_per_tweet: params.words_per_tweet as u64,
        seed: params.seed,
    };

    let mut records = Vec::new();
    let mut outcomes = BTreeMap::new();
    let mut user_serial = 0u64;
    let mut tweet_serial = 0u64;

    for j in 0..params.counties {
        let fips = geo.fips[j].clone();
        let tau = rng.gen_range(-1.0..1.0);
        outcomes.insert(fips.clone(), tau);
        let (lat0, lon0) = cell_origin(j);
        let (city, state) = &geo.cities[j];
        let profile = format!("{city}, {state}");

        for _ in 0..params.users_per_county {
            let plan = plan_user(tau, &base, &mut rng);
            let user_id = format!("u{user_serial:07}");
            user_serial += 1;
            for _ in 0..plan.tweet_count {
                let mut words = Vec::with_capacity(params.words_per_tweet);
                for _ in 0..params.words_per_tweet {
                    let group_a = rng.gen_bool(plan.mix_a);
                    let idx = if group_a {
                        rng.gen_range(0..GROUP_SIZE)
                    } else {
                        GROUP_SIZE + rng.gen_range(0..GROUP_SIZE)
                    };
                    words.push(WORDLIST[idx]);
                }
                let with_coords = rng.gen_bool(params.coord_fraction);
                let coordinates = if with_coords {
                    Some((
                        lat0 + rng.gen_range(0.1..0.9),
                        lon0 + rng.gen_range(0.1..0.9),
                    ))
                } else {
                    None
                };
                records.push(TweetRecord {
                    tweet_id: format!("t{tweet_serial:09}"),
                    user_id: user_id.clone(),
                    created_at: rng.gen_range(span_start..span_end),
                    text: words.join(" "),
                    coordinates,
                    profile_location: if with_coords { None } else { Some(profile.clone()) },
                });
                tweet_serial += 1;
            }
        }
    }

    let table = OutcomeTable::from_values("synthetic_trait", OutcomeTransform::None, outcomes);
    (records, table, geo)
}

/// On-disk layout produced by [`write_synthetic_world`].
#[derive(Debug, Clone)]
pub struct WorldPaths {
    pub gazetteer: PathBuf,
    pub polygons: PathBuf,
    pub outcomes: PathBuf,
    pub topics: PathBuf,
    pub shards: Vec<PathBuf>,
}

/// Writes a complete runnable world: record shards (round-robin),
/// geography, outcomes, and a small topic model over the wordlist.
pub fn write_synthetic_world(
    dir: &Path,
    params: &RecordParams,
    shards: usize,
) -> Result<WorldPaths, HarnessError> {
    let shards = shards.max(1);
    let (records, outcomes, geo) = synth_records(params);
    fs::create_dir_all(dir)?;

    let gazetteer = dir.join("gazetteer.tsv");
    fs::write(&gazetteer, &geo.gazetteer_tsv)?;
    let polygons = dir.join("polygons.tsv");
    fs::write(&polygons, &geo.polygons_tsv)?;

    let outcomes_path = dir.join("outcomes.csv");
    {
        let mut f = fs::File::create(&outcomes_path)?;
        writeln!(f, "fips,value")?;
        for fips in outcomes.fips_codes().map(str::to_string).collect::<Vec<_>>() {
            let v = outcomes.get(&fips).expect("listed fips");
            writeln!(f, "{fips},{v}")?;
        }
    }

    let topics_path = dir.join("topics.tsv");
    {
        let mut f = fs::File::create(&topics_path)?;
        writeln!(f, "# synthetic topic model over the generator wordlist")?;
        for (i, word) in WORDLIST.iter().enumerate() {
            writeln!(f, "{}\t{}\t1.0", i % 10, word)?;
        }
    }

    let mut shard_files: Vec<fs::File> = Vec::with_capacity(shards);
    let mut shard_paths = Vec::with_capacity(shards);
    for s in 0..shards {
        let p = dir.join(format!("tweets_{s:03}.jsonl"));
        shard_files.push(fs::File::create(&p)?);
        shard_paths.push(p);
    }
    for (i, rec) in records.iter().enumerate() {
        writeln!(shard_files[i % shards], "{}", serialize_record(rec))?;
    }

    Ok(WorldPaths {
        gazetteer,
        polygons,
        outcomes: outcomes_path,
        topics: topics_path,
        shards: shard_paths,
    })
}
