//! countylex: county-level lexical aggregation and outcome prediction.
//! Subcommands chain through files: ingest writes an accumulator
//! checkpoint, aggregate/features/predict/export-lexbank read it, and
//! experiment runs the whole grid from a TOML spec.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use countylex_core::aggregate::{
    county_bow, dump_checkpoint, load_checkpoint, tweet_to_county, user_to_county,
    write_matrix_tsv, CountAccumulator, CountyFeatureMatrix, FilterSettings, Scheme,
};
use countylex_core::features::{
    build_vocabulary, load_topic_model, project_matrix, write_vocabulary, TopicModel,
    TopicNormalization, Vocabulary,
};
use countylex_core::geomap::{load_gazetteer, load_polygons, Gazetteer};
use countylex_core::harness::{
    align_rows, assemble_features, export_lexical_bank, ingest_lines, load_experiment_spec,
    parse_pca_spec, run_experiment, write_bench_report, write_report_json, write_report_tsv,
    write_synthetic_world, EvalReport, FeatureSet, IngestOptions, RecordParams,
};
use countylex_core::harness::measure_ingest_throughput;
use countylex_core::model::{load_outcomes, mse, pearson_r, OutcomeTransform, PipelineConfig};
use countylex_core::stablehash::Fnv1a;

#[derive(Parser)]
#[command(
    name = "countylex",
    version,
    about = "County-level lexical aggregation and outcome prediction"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse JSONL tweet records, map users to counties, accumulate counts
    Ingest(IngestArgs),
    /// Build a county-by-token feature matrix from a checkpoint
    Aggregate(AggregateArgs),
    /// Select the vocabulary and inspect topic coverage
    Features(FeaturesArgs),
    /// Cross-validated ridge prediction of a county outcome
    Predict(PredictArgs),
    /// Run the full evaluation grid from a TOML spec
    Experiment(ExperimentArgs),
    /// Export privacy-floored per-county term counts
    ExportLexbank(ExportLexbankArgs),
    /// Generate a synthetic corpus with known ground truth
    Synth(SynthArgs),
}

#[derive(Args)]
struct GeoArgs {
    /// City/state to county FIPS table (TSV: city, state, fips)
    #[arg(long, value_name = "PATH")]
    gazetteer: PathBuf,
    /// County boundary rings (TSV: fips, ring_index, lat,lon;...)
    #[arg(long, value_name = "PATH")]
    polygons: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FilterArgs {
    /// Drop users with fewer tweets than this
    #[arg(long, default_value_t = 30)]
    min_tweets: u64,
    /// Drop users with more tweets than this
    #[arg(long, value_name = "N")]
    max_tweets: Option<u64>,
    /// Drop counties with fewer qualifying users than this
    #[arg(long, default_value_t = 100)]
    min_users: usize,
}

#[derive(Args)]
struct IngestArgs {
    /// JSONL record files, read in order
    #[arg(long, value_name = "PATH", num_args = 1.., required = true)]
    records: Vec<PathBuf>,
    #[command(flatten)]
    geo: GeoArgs,
    /// Keep only tweets from this calendar year (UTC)
    #[arg(long)]
    year: Option<i32>,
    /// Keep this fraction of tweets, chosen by tweet id hash
    #[arg(long, value_name = "FRACTION")]
    subsample: Option<f64>,
    /// Hash seed for --subsample
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep tweets the English filter would drop
    #[arg(long)]
    include_non_english: bool,
    /// Configuration tag stored in the checkpoint header
    #[arg(long, default_value = "cli-v1")]
    config_tag: String,
    /// Accumulator checkpoint output path
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Write ingest statistics JSON here as well
    #[arg(long, value_name = "PATH")]
    stats_out: Option<PathBuf>,
    /// Measure throughput instead of writing a checkpoint: time this
    /// many full passes over the records and report records/sec
    #[arg(long, value_name = "PASSES")]
    bench: Option<usize>,
}

#[derive(Args)]
struct AggregateArgs {
    /// Accumulator checkpoint from `ingest`
    #[arg(long, value_name = "PATH")]
    checkpoint: PathBuf,
    /// tweet | bow | user (or the full scheme names)
    #[arg(long)]
    scheme: String,
    /// Count each token at most once per tweet in the numerator
    #[arg(long)]
    binary_per_tweet: bool,
    #[command(flatten)]
    filters: FilterArgs,
    /// Vocabulary size (most frequent tokens)
    #[arg(long, default_value_t = 25_000)]
    vocab_size: usize,
    /// Feature matrix TSV output
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Also write the vocabulary dump here
    #[arg(long, value_name = "PATH")]
    vocab_out: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Accumulator checkpoint from `ingest`
    #[arg(long, value_name = "PATH")]
    checkpoint: PathBuf,
    #[command(flatten)]
    filters: FilterArgs,
    /// Vocabulary size (most frequent tokens)
    #[arg(long, default_value_t = 25_000)]
    vocab_size: usize,
    /// Vocabulary dump output (rank, token, count)
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Also build a smaller modeling vocabulary of this size
    #[arg(long, value_name = "N", requires = "model_out")]
    model_vocab_size: Option<usize>,
    /// Output path for the modeling vocabulary
    #[arg(long, value_name = "PATH")]
    model_out: Option<PathBuf>,
    /// Topic-loading TSV; reports coverage against the vocabulary
    #[arg(long, value_name = "PATH")]
    topics: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long, default_value_t = 1000.0)]
    ridge_alpha: f64,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Fold-assignment shuffle seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Columns with variance at or below this are dropped
    #[arg(long, default_value_t = 0.0)]
    variance_floor: f64,
    /// Keep columns whose outcome correlation has p below this
    #[arg(long, default_value_t = 0.05)]
    correlation_alpha: f64,
    /// none | explained:F | components:K
    #[arg(long, default_value = "explained:0.95")]
    pca: String,
    /// Fit selection and projection on all rows before splitting
    /// (demonstrates leakage; not an honest evaluation)
    #[arg(long)]
    leaky_preprocess: bool,
}

#[derive(Args)]
struct PredictArgs {
    /// Accumulator checkpoint from `ingest`
    #[arg(long, value_name = "PATH")]
    checkpoint: PathBuf,
    /// tweet | bow | user (or the full scheme names)
    #[arg(long)]
    scheme: String,
    /// Count each token at most once per tweet in the numerator
    #[arg(long)]
    binary_per_tweet: bool,
    #[command(flatten)]
    filters: FilterArgs,
    /// Vocabulary size (most frequent tokens)
    #[arg(long, default_value_t = 25_000)]
    vocab_size: usize,
    /// unigrams | topics | both
    #[arg(long = "features", default_value = "unigrams")]
    feature_set: String,
    /// Topic-loading TSV (required for topics/both)
    #[arg(long, value_name = "PATH")]
    topics: Option<PathBuf>,
    /// raw | sum_to_one
    #[arg(long, default_value = "sum_to_one")]
    topic_normalization: String,
    /// Outcomes CSV (fips,value with a header line)
    #[arg(long, value_name = "PATH")]
    outcome: PathBuf,
    /// Outcome name in reports; defaults to the file stem
    #[arg(long)]
    outcome_name: Option<String>,
    /// none | log10
    #[arg(long, default_value = "none")]
    transform: String,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Report TSV path; stdout when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also write the report as JSON
    #[arg(long, value_name = "PATH")]
    json_out: Option<PathBuf>,
    /// Also write out-of-fold predictions (fips, actual, predicted)
    #[arg(long, value_name = "PATH")]
    predictions_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment spec (TOML); relative paths resolve from its directory
    #[arg(long, value_name = "PATH")]
    spec: PathBuf,
    /// Report TSV path; stdout when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also write the report as JSON
    #[arg(long, value_name = "PATH")]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportLexbankArgs {
    /// Accumulator checkpoint from `ingest`
    #[arg(long, value_name = "PATH")]
    checkpoint: PathBuf,
    /// Drop users with fewer tweets than this
    #[arg(long, default_value_t = 30)]
    min_tweets: u64,
    /// Drop users with more tweets than this
    #[arg(long, value_name = "N")]
    max_tweets: Option<u64>,
    /// Vocabulary size (most frequent tokens)
    #[arg(long, default_value_t = 25_000)]
    vocab_size: usize,
    /// Topic-loading TSV; adds a per-county topic value file
    #[arg(long, value_name = "PATH")]
    topics: Option<PathBuf>,
    /// raw | sum_to_one
    #[arg(long, default_value = "sum_to_one")]
    topic_normalization: String,
    /// Tokens with corpus count below this are withheld
    #[arg(long, default_value_t = 10)]
    privacy_floor: u64,
    /// Time-span label recorded in the bank header
    #[arg(long, default_value = "all")]
    span: String,
    /// Output directory for the three TSV files
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for the generated world
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    counties: usize,
    #[arg(long, default_value_t = 30)]
    users_per_county: usize,
    /// Fraction of users posting at a large volume multiple
    #[arg(long, default_value_t = 0.02)]
    super_user_rate: f64,
    /// Volume multiple for those users
    #[arg(long, default_value_t = 100.0)]
    super_volume: f64,
    /// Strength of the county trait's pull on word choice, 0 to 1
    #[arg(long, default_value_t = 0.9)]
    signal: f64,
    #[arg(long, default_value_t = 5)]
    tweets_min: u64,
    #[arg(long, default_value_t = 15)]
    tweets_max: u64,
    #[arg(long, default_value_t = 9)]
    words_per_tweet: usize,
    #[arg(long, default_value_t = 2012)]
    year_start: i32,
    /// Last year of the span, inclusive
    #[arg(long, default_value_t = 2013)]
    year_end: i32,
    /// Fraction of tweets carrying coordinates instead of profile text
    #[arg(long, default_value_t = 0.7)]
    coord_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of JSONL shard files to spread records over
    #[arg(long, default_value_t = 1)]
    shards: usize,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    init_workers();
    if let Err(e) = run() {
        log::error!("{e:#}");
        std::process::exit(1);
    }
}

/// COUNTYLEX_WORKERS pins the rayon pool size for reproducible
/// benchmarking; unset means one worker per core.
fn init_workers() {
    if let Ok(v) = std::env::var("COUNTYLEX_WORKERS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size worker pool: {e}");
                }
            }
            _ => log::warn!("ignoring COUNTYLEX_WORKERS={v}: not a positive integer"),
        }
    }
}

fn run() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Ingest(a) => cmd_ingest(a),
        Cmd::Aggregate(a) => cmd_aggregate(a),
        Cmd::Features(a) => cmd_features(a),
        Cmd::Predict(a) => cmd_predict(a),
        Cmd::Experiment(a) => cmd_experiment(a),
        Cmd::ExportLexbank(a) => cmd_export_lexbank(a),
        Cmd::Synth(a) => cmd_synth(a),
    }
}

fn open_reader(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("opening {}", path.display()))
}

fn create_writer(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
}

fn load_geo(args: &GeoArgs) -> Result<Gazetteer> {
    let mut gaz = load_gazetteer(open_reader(&args.gazetteer)?)
        .with_context(|| format!("loading gazetteer {}", args.gazetteer.display()))?;
    if let Some(p) = &args.polygons {
        load_polygons(&mut gaz, open_reader(p)?)
            .with_context(|| format!("loading polygons {}", p.display()))?;
    }
    Ok(gaz)
}

fn read_lines(paths: &[PathBuf]) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for path in paths {
        let body = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        lines.extend(body.lines().map(str::to_string));
    }
    Ok(lines)
}

fn parse_scheme(s: &str) -> Result<Scheme> {
    Scheme::parse(s).ok_or_else(|| anyhow!("unknown scheme `{s}` (use tweet, bow, or user)"))
}

fn parse_feature_set(s: &str) -> Result<FeatureSet> {
    FeatureSet::parse(s)
        .ok_or_else(|| anyhow!("unknown feature set `{s}` (use unigrams, topics, or both)"))
}

fn parse_normalization(s: &str) -> Result<TopicNormalization> {
    match s {
        "raw" => Ok(TopicNormalization::Raw),
        "sum_to_one" => Ok(TopicNormalization::SumToOne),
        other => bail!("unknown topic normalization `{other}` (use raw or sum_to_one)"),
    }
}

fn parse_transform(s: &str) -> Result<OutcomeTransform> {
    OutcomeTransform::parse(s)
        .ok_or_else(|| anyhow!("unknown outcome transform `{s}` (use none or log10)"))
}

fn build_matrix(
    acc: &CountAccumulator,
    vocab: &Vocabulary,
    scheme: Scheme,
    binary_per_tweet: bool,
    filters: &FilterArgs,
) -> Result<CountyFeatureMatrix> {
    let (filtered, removed) = acc.filter_users(filters.min_tweets, filters.max_tweets);
    log::info!("filters removed {removed} users");
    let eligible = filtered.eligible_counties(filters.min_users);
    if eligible.is_empty() {
        bail!(
            "no county has at least {} users after filtering",
            filters.min_users
        );
    }
    let mut m = match scheme {
        Scheme::TweetToCounty => tweet_to_county(&filtered, vocab, binary_per_tweet),
        Scheme::CountyBow => county_bow(&filtered, vocab),
        Scheme::UserToCounty => user_to_county(&filtered, vocab),
    }
    .retain_counties(&eligible);
    m.provenance.filters = Some(FilterSettings {
        min_tweets: filters.min_tweets,
        max_tweets: filters.max_tweets,
        min_users: filters.min_users,
    });
    Ok(m)
}

/// Vocabulary from the same filtered accumulator the matrix uses.
fn filtered_vocab(acc: &CountAccumulator, filters: &FilterArgs, size: usize) -> Vocabulary {
    let (filtered, _) = acc.filter_users(filters.min_tweets, filters.max_tweets);
    build_vocabulary(&filtered, size)
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    if let Some(f) = args.subsample {
        if !(f > 0.0 && f <= 1.0) {
            bail!("--subsample must be in (0, 1], got {f}");
        }
    }
    let gaz = load_geo(&args.geo)?;
    let lines = read_lines(&args.records)?;
    let opts = IngestOptions {
        config_tag: args.config_tag.clone(),
        subsample: args.subsample.map(|f| (f, args.seed)),
        year: args.year,
        english_only: !args.include_non_english,
    };

    if let Some(passes) = args.bench {
        let (report, stats) = measure_ingest_throughput(&lines, &gaz, &opts, passes.max(1));
        let mut out = Vec::new();
        write_bench_report(&report, &mut out)?;
        print!("{}", String::from_utf8_lossy(&out));
        log::info!(
            "ingested {} records per pass, {} accumulated",
            stats.records_in,
            stats.accumulated
        );
        return Ok(());
    }

    let (acc, assignments, stats) = ingest_lines(&lines, &gaz, &opts);
    let mut w = create_writer(&args.out)?;
    dump_checkpoint(&acc, &mut w)?;
    w.flush()?;
    log::info!(
        "assigned {} users to counties; accumulated {} of {} records into {}",
        assignments.len(),
        stats.accumulated,
        stats.records_in,
        args.out.display()
    );
    let stats_json = serde_json::to_string_pretty(&stats)?;
    if let Some(p) = &args.stats_out {
        let mut w = create_writer(p)?;
        writeln!(w, "{stats_json}")?;
        w.flush()?;
    }
    println!("{stats_json}");
    Ok(())
}

fn cmd_aggregate(args: AggregateArgs) -> Result<()> {
    let scheme = parse_scheme(&args.scheme)?;
    let acc = load_checkpoint(open_reader(&args.checkpoint)?)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    let vocab = filtered_vocab(&acc, &args.filters, args.vocab_size);
    let matrix = build_matrix(&acc, &vocab, scheme, args.binary_per_tweet, &args.filters)?;
    let mut w = create_writer(&args.out)?;
    write_matrix_tsv(&matrix, &mut w)?;
    writeln!(w, "# vocab={}", vocab.content_hash())?;
    w.flush()?;
    if let Some(p) = &args.vocab_out {
        let mut w = create_writer(p)?;
        write_vocabulary(&vocab, &mut w)?;
        w.flush()?;
    }
    log::info!(
        "{} counties x {} features ({}) written to {}",
        matrix.counties.len(),
        matrix.features.len(),
        scheme.as_str(),
        args.out.display()
    );
    Ok(())
}

fn cmd_features(args: FeaturesArgs) -> Result<()> {
    let acc = load_checkpoint(open_reader(&args.checkpoint)?)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    let vocab = filtered_vocab(&acc, &args.filters, args.vocab_size);
    let mut w = create_writer(&args.out)?;
    write_vocabulary(&vocab, &mut w)?;
    w.flush()?;
    log::info!(
        "vocabulary of {} tokens (hash {}) written to {}",
        vocab.len(),
        vocab.content_hash(),
        args.out.display()
    );
    if let Some(size) = args.model_vocab_size {
        let model_out = args.model_out.as_ref().expect("clap requires model_out");
        let model_vocab = filtered_vocab(&acc, &args.filters, size);
        let mut w = create_writer(model_out)?;
        write_vocabulary(&model_vocab, &mut w)?;
        w.flush()?;
        log::info!(
            "modeling vocabulary of {} tokens written to {}",
            model_vocab.len(),
            model_out.display()
        );
    }
    if let Some(p) = &args.topics {
        let tm = load_topic_model(open_reader(p)?, TopicNormalization::SumToOne)
            .with_context(|| format!("loading topic model {}", p.display()))?;
        let mut terms = std::collections::BTreeSet::new();
        for id in tm.topic_ids() {
            for (term, _) in tm.topic_weights(*id).unwrap_or(&[]) {
                terms.insert(term.clone());
            }
        }
        let covered = terms.iter().filter(|t| vocab.contains(t)).count();
        log::info!(
            "topic model: {} topics, {} distinct terms, {covered} inside the vocabulary",
            tm.n_topics(),
            terms.len()
        );
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let scheme = parse_scheme(&args.scheme)?;
    let fset = parse_feature_set(&args.feature_set)?;
    let transform = parse_transform(&args.transform)?;
    let norm = parse_normalization(&args.topic_normalization)?;
    let pca = parse_pca_spec(&args.pipeline.pca)
        .map_err(|e| anyhow!("--pca: {e}"))?;
    if matches!(fset, FeatureSet::Topics | FeatureSet::Both) && args.topics.is_none() {
        bail!("--features {} needs --topics", fset.as_str());
    }

    let acc = load_checkpoint(open_reader(&args.checkpoint)?)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    let vocab = filtered_vocab(&acc, &args.filters, args.vocab_size);
    let matrix = build_matrix(&acc, &vocab, scheme, args.binary_per_tweet, &args.filters)?;
    let topic_matrix: Option<CountyFeatureMatrix> = match &args.topics {
        Some(p) => {
            let tm: TopicModel = load_topic_model(open_reader(p)?, norm)
                .with_context(|| format!("loading topic model {}", p.display()))?;
            Some(project_matrix(&matrix, &tm))
        }
        None => None,
    };

    let outcome_name = args.outcome_name.clone().unwrap_or_else(|| {
        args.outcome
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "outcome".to_string())
    });
    let table = load_outcomes(open_reader(&args.outcome)?, &outcome_name, transform)
        .with_context(|| format!("loading outcomes {}", args.outcome.display()))?;

    let (rows, y) = align_rows(&matrix, &table);
    if rows.len() < args.pipeline.folds {
        bail!(
            "{} counties have outcome values but {} folds were requested",
            rows.len(),
            args.pipeline.folds
        );
    }
    let x = assemble_features(&matrix, topic_matrix.as_ref(), fset, &rows);
    let config = PipelineConfig {
        variance_floor: args.pipeline.variance_floor,
        correlation_alpha: args.pipeline.correlation_alpha,
        pca,
        ridge_alpha: args.pipeline.ridge_alpha,
        folds: args.pipeline.folds,
        seed: args.pipeline.seed,
        leaky_preprocess: args.pipeline.leaky_preprocess,
    };
    config.validate()?;
    let preds = countylex_core::model::cross_validate(x.view(), &y, &config)?;
    let r = pearson_r(&y, &preds)?;
    let m = mse(&y, &preds)?;

    let report = EvalReport {
        outcome: outcome_name,
        scheme: scheme.as_str().to_string(),
        feature_set: fset.as_str().to_string(),
        year: None,
        max_tweets: args.filters.max_tweets,
        pearson_r: r,
        mse: m,
        n_counties: rows.len(),
        n_users: rows.iter().map(|&i| matrix.provenance.county_users[i]).sum(),
        n_tweets: rows.iter().map(|&i| matrix.provenance.county_tweets[i]).sum(),
        n_tokens: rows.iter().map(|&i| matrix.provenance.county_tokens[i]).sum(),
        removed_users: 0,
        vocab_hash: vocab.content_hash().to_string(),
        folds: config.folds,
        seed: config.seed,
        ridge_alpha: config.ridge_alpha,
        leaky_preprocess: config.leaky_preprocess,
    };
    let config_hash = predict_config_hash(&args, &vocab);
    let rows_slice = std::slice::from_ref(&report);

    match &args.out {
        Some(p) => {
            let mut w = create_writer(p)?;
            write_report_tsv(rows_slice, &config_hash, config.seed, &mut w)?;
            w.flush()?;
        }
        None => {
            let mut buf = Vec::new();
            write_report_tsv(rows_slice, &config_hash, config.seed, &mut buf)?;
            print!("{}", String::from_utf8_lossy(&buf));
        }
    }
    if let Some(p) = &args.json_out {
        let mut w = create_writer(p)?;
        write_report_json(rows_slice, &config_hash, config.seed, &mut w)?;
        w.flush()?;
    }
    if let Some(p) = &args.predictions_out {
        let mut w = create_writer(p)?;
        writeln!(w, "# countylex-predictions v1")?;
        writeln!(w, "# config={config_hash}")?;
        writeln!(w, "fips\tactual\tpredicted")?;
        for (k, &i) in rows.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}", matrix.counties[i], y[k], preds[k])?;
        }
        w.flush()?;
    }
    log::info!("pearson_r={r:.6} mse={m:.6} over {} counties", rows.len());
    Ok(())
}

/// Digest of everything that shapes a predict run, for the report
/// provenance header.
fn predict_config_hash(args: &PredictArgs, vocab: &Vocabulary) -> String {
    let mut d = Fnv1a::new();
    let desc = format!(
        "predict scheme={} binary={} filters={:?} vocab_size={} features={} \
         normalization={} transform={} pipeline={:?} vocab={}",
        args.scheme,
        args.binary_per_tweet,
        args.filters,
        args.vocab_size,
        args.feature_set,
        args.topic_normalization,
        args.transform,
        args.pipeline,
        vocab.content_hash(),
    );
    d.update(desc.as_bytes());
    d.hex()
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let spec = load_experiment_spec(&args.spec)
        .with_context(|| format!("loading spec {}", args.spec.display()))?;
    let base = args
        .spec
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    let reports = run_experiment(&spec, &base)?;
    let hash = spec.content_hash();
    let seed = spec.pipeline.seed;
    match &args.out {
        Some(p) => {
            let mut w = create_writer(p)?;
            write_report_tsv(&reports, &hash, seed, &mut w)?;
            w.flush()?;
        }
        None => {
            let mut buf = Vec::new();
            write_report_tsv(&reports, &hash, seed, &mut buf)?;
            print!("{}", String::from_utf8_lossy(&buf));
        }
    }
    if let Some(p) = &args.json_out {
        let mut w = create_writer(p)?;
        write_report_json(&reports, &hash, seed, &mut w)?;
        w.flush()?;
    }
    log::info!("{} report rows", reports.len());
    Ok(())
}

fn cmd_export_lexbank(args: ExportLexbankArgs) -> Result<()> {
    let norm = parse_normalization(&args.topic_normalization)?;
    let acc = load_checkpoint(open_reader(&args.checkpoint)?)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    let (filtered, removed) = acc.filter_users(args.min_tweets, args.max_tweets);
    log::info!("filters removed {removed} users");
    let vocab = build_vocabulary(&filtered, args.vocab_size);
    let topics: Option<TopicModel> = match &args.topics {
        Some(p) => Some(
            load_topic_model(open_reader(p)?, norm)
                .with_context(|| format!("loading topic model {}", p.display()))?,
        ),
        None => None,
    };
    let summary = export_lexical_bank(
        &filtered,
        &vocab,
        topics.as_ref(),
        args.privacy_floor,
        &args.span,
        &args.out_dir,
    )?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    if args.shards < 1 {
        bail!("--shards must be at least 1");
    }
    if args.year_end < args.year_start {
        bail!("--year-end must not precede --year-start");
    }
    let params = RecordParams {
        counties: args.counties,
        users_per_county: args.users_per_county,
        super_user_rate: args.super_user_rate,
        super_volume: args.super_volume,
        signal: args.signal,
        tweets_min: args.tweets_min,
        tweets_max: args.tweets_max,
        words_per_tweet: args.words_per_tweet,
        year_start: args.year_start,
        year_end: args.year_end,
        coord_fraction: args.coord_fraction,
        seed: args.seed,
    };
    let paths = write_synthetic_world(&args.out_dir, &params, args.shards)?;
    let listing = serde_json::json!({
        "gazetteer": paths.gazetteer,
        "polygons": paths.polygons,
        "outcomes": paths.outcomes,
        "topics": paths.topics,
        "shards": paths.shards,
    });
    println!("{}", serde_json::to_string_pretty(&listing)?);
    Ok(())
}
