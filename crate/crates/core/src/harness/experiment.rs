//! Experiment grid: a versioned TOML spec describing inputs, filters,
//! schemes, feature sets, outcomes, and the pipeline; one report row
//! per grid cell. Cell order is the nested loop order
//! year → cap → scheme → feature set → outcome, so reruns produce
//! rows in the same order.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::aggregate::{
    county_bow, tweet_to_county, user_to_county, CountAccumulator, CountyFeatureMatrix, Scheme,
};
use crate::features::{build_vocabulary, load_topic_model, project_matrix, TopicModel, TopicNormalization};
use crate::geomap::{load_gazetteer, load_polygons, Gazetteer};
use crate::model::{
    cross_validate, load_outcomes, mse, pearson_r, OutcomeTable, OutcomeTransform, PcaSpec,
    PipelineConfig,
};
use crate::stablehash::Fnv1a;

use super::ingest::{ingest_records, IngestOptions};
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Unigrams,
    Topics,
    Both,
}

impl FeatureSet {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureSet::Unigrams => "unigrams",
            FeatureSet::Topics => "topics",
            FeatureSet::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureSet> {
        match s {
            "unigrams" => Some(FeatureSet::Unigrams),
            "topics" => Some(FeatureSet::Topics),
            "both" => Some(FeatureSet::Both),
            _ => None,
        }
    }

    fn needs_topics(&self) -> bool {
        matches!(self, FeatureSet::Topics | FeatureSet::Both)
    }
}

fn default_true() -> bool {
    true
}
fn default_fraction() -> f64 {
    1.0
}
fn default_min_tweets() -> u64 {
    30
}
fn default_min_users() -> usize {
    100
}
fn default_vocab_size() -> usize {
    25_000
}
fn default_pca() -> String {
    "explained:0.95".to_string()
}
fn default_alpha() -> f64 {
    0.05
}
fn default_ridge_alpha() -> f64 {
    1000.0
}
fn default_folds() -> usize {
    10
}
fn default_normalization() -> String {
    "sum_to_one".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub records: Vec<PathBuf>,
    pub gazetteer: PathBuf,
    #[serde(default)]
    pub polygons: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiltersSection {
    pub min_tweets: u64,
    /// max_tweets caps to sweep over, one report row batch per cap.
    pub max_tweets_sweep: Vec<u64>,
    /// Also run without any cap (appended after the sweep).
    pub include_uncapped: bool,
    pub min_users: usize,
}

impl Default for FiltersSection {
    fn default() -> Self {
        FiltersSection {
            min_tweets: default_min_tweets(),
            max_tweets_sweep: Vec::new(),
            include_uncapped: true,
            min_users: default_min_users(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregationSection {
    pub schemes: Vec<String>,
    #[serde(default)]
    pub binary_per_tweet: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturesSection {
    pub sets: Vec<FeatureSet>,
    #[serde(default = "default_vocab_size")]
    pub vocab_size: usize,
    #[serde(default)]
    pub topic_model: Option<PathBuf>,
    #[serde(default = "default_normalization")]
    pub topic_normalization: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubsampleSection {
    pub fraction: f64,
    pub seed: u64,
}

impl Default for SubsampleSection {
    fn default() -> Self {
        SubsampleSection {
            fraction: default_fraction(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimesliceSection {
    /// Calendar years to run separately; empty means one run over the
    /// whole stream.
    pub years: Vec<i32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomesSection {
    pub files: Vec<PathBuf>,
    /// Parallel to `files`; defaults to file stems.
    #[serde(default)]
    pub names: Vec<String>,
    /// Parallel to `files`; each "none" or "log10", default "none".
    #[serde(default)]
    pub transforms: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSection {
    pub variance_floor: f64,
    pub correlation_alpha: f64,
    /// "explained:0.95", "components:K", or "none".
    pub pca: String,
    pub ridge_alpha: f64,
    pub folds: usize,
    pub seed: u64,
    pub leaky_preprocess: bool,
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection {
            variance_floor: 0.0,
            correlation_alpha: default_alpha(),
            pca: default_pca(),
            ridge_alpha: default_ridge_alpha(),
            folds: default_folds(),
            seed: 0,
            leaky_preprocess: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub version: u32,
    pub input: InputSection,
    #[serde(default)]
    pub filters: FiltersSection,
    pub aggregation: AggregationSection,
    pub features: FeaturesSection,
    #[serde(default)]
    pub subsample: SubsampleSection,
    #[serde(default)]
    pub timeslice: TimesliceSection,
    pub outcomes: OutcomesSection,
    #[serde(default)]
    pub pipeline: PipelineSection,
    /// Language filter; on unless a spec turns it off.
    #[serde(default = "default_true")]
    pub english_only: bool,
}

fn bad(reason: impl Into<String>) -> HarnessError {
    HarnessError::BadSpec {
        reason: reason.into(),
    }
}

pub fn parse_pca_spec(s: &str) -> Result<Option<PcaSpec>, HarnessError> {
    if s == "none" {
        return Ok(None);
    }
    if let Some(f) = s.strip_prefix("explained:") {
        let f: f64 = f.parse().map_err(|_| bad(format!("bad pca spec `{s}`")))?;
        return Ok(Some(PcaSpec::ExplainedVariance(f)));
    }
    if let Some(k) = s.strip_prefix("components:") {
        let k: usize = k.parse().map_err(|_| bad(format!("bad pca spec `{s}`")))?;
        return Ok(Some(PcaSpec::Components(k)));
    }
    Err(bad(format!(
        "pca must be `none`, `explained:F`, or `components:K`, got `{s}`"
    )))
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.version != 1 {
            return Err(bad(format!("unsupported spec version {}", self.version)));
        }
        if self.input.records.is_empty() {
            return Err(bad("input.records is empty"));
        }
        if !(self.subsample.fraction > 0.0 && self.subsample.fraction <= 1.0) {
            return Err(bad(format!(
                "subsample.fraction {} outside (0, 1]",
                self.subsample.fraction
            )));
        }
        let years = &self.timeslice.years;
        if years.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("timeslice.years must be strictly increasing"));
        }
        if self.aggregation.schemes.is_empty() {
            return Err(bad("aggregation.schemes is empty"));
        }
        for s in &self.aggregation.schemes {
            if Scheme::parse(s).is_none() {
                return Err(bad(format!("unknown scheme `{s}`")));
            }
        }
        if self.features.sets.is_empty() {
            return Err(bad("features.sets is empty"));
        }
        if self.features.sets.iter().any(FeatureSet::needs_topics)
            && self.features.topic_model.is_none()
        {
            return Err(bad("feature sets use topics but no topic_model is given"));
        }
        match self.features.topic_normalization.as_str() {
            "raw" | "sum_to_one" => {}
            other => return Err(bad(format!("unknown topic_normalization `{other}`"))),
        }
        if self.outcomes.files.is_empty() {
            return Err(bad("outcomes.files is empty"));
        }
        if !self.outcomes.names.is_empty() && self.outcomes.names.len() != self.outcomes.files.len()
        {
            return Err(bad("outcomes.names length must match outcomes.files"));
        }
        if !self.outcomes.transforms.is_empty()
            && self.outcomes.transforms.len() != self.outcomes.files.len()
        {
            return Err(bad("outcomes.transforms length must match outcomes.files"));
        }
        for t in &self.outcomes.transforms {
            if OutcomeTransform::parse(t).is_none() {
                return Err(bad(format!("unknown outcome transform `{t}`")));
            }
        }
        parse_pca_spec(&self.pipeline.pca)?;
        self.pipeline_config().validate().map_err(HarnessError::from)?;
        Ok(())
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            variance_floor: self.pipeline.variance_floor,
            correlation_alpha: self.pipeline.correlation_alpha,
            pca: parse_pca_spec(&self.pipeline.pca).unwrap_or(Some(PcaSpec::ExplainedVariance(0.95))),
            ridge_alpha: self.pipeline.ridge_alpha,
            folds: self.pipeline.folds,
            seed: self.pipeline.seed,
            leaky_preprocess: self.pipeline.leaky_preprocess,
        }
    }

    /// FNV digest of the canonical TOML form; goes into report headers.
    pub fn content_hash(&self) -> String {
        let canonical = toml::to_string(self).expect("spec serializes");
        let mut d = Fnv1a::new();
        d.update(canonical.as_bytes());
        d.hex()
    }
}

pub fn load_experiment_spec(path: &Path) -> Result<ExperimentSpec, HarnessError> {
    let body = fs::read_to_string(path).map_err(|source| HarnessError::FileIo {
        path: path.display().to_string(),
        source,
    })?;
    let spec: ExperimentSpec = toml::from_str(&body).map_err(|e| bad(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

/// One grid cell's evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub outcome: String,
    pub scheme: String,
    pub feature_set: String,
    pub year: Option<i32>,
    pub max_tweets: Option<u64>,
    pub pearson_r: f64,
    pub mse: f64,
    pub n_counties: usize,
    pub n_users: u64,
    pub n_tweets: u64,
    pub n_tokens: u64,
    pub removed_users: u64,
    pub vocab_hash: String,
    pub folds: usize,
    pub seed: u64,
    pub ridge_alpha: f64,
    pub leaky_preprocess: bool,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn open_buffered(path: &Path) -> Result<BufReader<fs::File>, HarnessError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|source| HarnessError::FileIo {
            path: path.display().to_string(),
            source,
        })
}

fn load_geo(spec: &ExperimentSpec, base: &Path) -> Result<Gazetteer, HarnessError> {
    let mut g = load_gazetteer(open_buffered(&resolve(base, &spec.input.gazetteer))?)?;
    if let Some(polys) = &spec.input.polygons {
        load_polygons(&mut g, open_buffered(&resolve(base, polys))?)?;
    }
    Ok(g)
}

fn read_record_lines(spec: &ExperimentSpec, base: &Path) -> Result<Vec<String>, HarnessError> {
    let mut lines = Vec::new();
    for rel in &spec.input.records {
        let path = resolve(base, rel);
        let body = fs::read_to_string(&path).map_err(|source| HarnessError::FileIo {
            path: path.display().to_string(),
            source,
        })?;
        lines.extend(body.lines().map(str::to_string));
    }
    Ok(lines)
}

/// Column-standardizes (mean 0, sample std 1; constant columns pass
/// through centered) for the two-block feature concatenation.
fn standardized(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    if n < 2 {
        return x.clone();
    }
    let mut out = x.clone();
    for mut col in out.columns_mut() {
        let mean = col.sum() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let std = (ss / (n as f64 - 1.0)).sqrt();
        let denom = if std > 0.0 { std } else { 1.0 };
        col.mapv_inplace(|v| (v - mean) / denom);
    }
    out
}

fn hstack(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    ndarray::concatenate(Axis(1), &[a.view(), b.view()]).expect("equal row counts")
}

struct LoadedOutcome {
    name: String,
    table: OutcomeTable,
}

fn load_outcome_tables(
    spec: &ExperimentSpec,
    base: &Path,
) -> Result<Vec<LoadedOutcome>, HarnessError> {
    let mut out = Vec::new();
    for (i, file) in spec.outcomes.files.iter().enumerate() {
        let name = spec
            .outcomes
            .names
            .get(i)
            .cloned()
            .unwrap_or_else(|| {
                file.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("outcome{i}"))
            });
        let transform = spec
            .outcomes
            .transforms
            .get(i)
            .map(|t| OutcomeTransform::parse(t).expect("validated"))
            .unwrap_or(OutcomeTransform::None);
        let table = load_outcomes(open_buffered(&resolve(base, file))?, &name, transform)?;
        out.push(LoadedOutcome { name, table });
    }
    Ok(out)
}

/// Rows of `m` that have an outcome value, in matrix row order.
pub fn align_rows(m: &CountyFeatureMatrix, table: &OutcomeTable) -> (Vec<usize>, Vec<f64>) {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (i, fips) in m.counties.iter().enumerate() {
        if let Some(v) = table.get(fips) {
            rows.push(i);
            y.push(v);
        }
    }
    (rows, y)
}

fn build_scheme_matrix(
    scheme: Scheme,
    acc: &CountAccumulator,
    vocab: &crate::features::Vocabulary,
    binary_per_tweet: bool,
) -> CountyFeatureMatrix {
    match scheme {
        Scheme::TweetToCounty => tweet_to_county(acc, vocab, binary_per_tweet),
        Scheme::CountyBow => county_bow(acc, vocab),
        Scheme::UserToCounty => user_to_county(acc, vocab),
    }
}

/// Design matrix for one feature set, restricted to `rows`. `topics`
/// must be the topic projection of `matrix` when the set needs it.
/// For `Both`, each block is column-standardized before concatenation
/// so topic loadings and unigram frequencies live on one scale.
pub fn assemble_features(
    matrix: &CountyFeatureMatrix,
    topics: Option<&CountyFeatureMatrix>,
    fset: FeatureSet,
    rows: &[usize],
) -> Array2<f64> {
    match fset {
        FeatureSet::Unigrams => matrix.values.select(Axis(0), rows),
        FeatureSet::Topics => topics
            .expect("topic matrix required for the topics feature set")
            .values
            .select(Axis(0), rows),
        FeatureSet::Both => {
            let u = standardized(&matrix.values.select(Axis(0), rows));
            let t = standardized(
                &topics
                    .expect("topic matrix required for the both feature set")
                    .values
                    .select(Axis(0), rows),
            );
            hstack(&u, &t)
        }
    }
}

/// Runs the whole grid. `base` anchors relative paths in the spec
/// (usually the spec file's directory).
pub fn run_experiment(
    spec: &ExperimentSpec,
    base: &Path,
) -> Result<Vec<EvalReport>, HarnessError> {
    spec.validate()?;
    let gaz = load_geo(spec, base)?;
    let lines = read_record_lines(spec, base)?;
    let records = {
        let mut parsed = Vec::with_capacity(lines.len());
        for line in &lines {
            if line.trim().is_empty() {
                continue;
            }
            match crate::corpus::parse_record(line) {
                Ok(r) => parsed.push(r),
                Err(e) => log::debug!("skipping malformed record: {e}"),
            }
        }
        parsed
    };
    let outcomes = load_outcome_tables(spec, base)?;
    let topic_model: Option<TopicModel> = match &spec.features.topic_model {
        Some(p) if spec.features.sets.iter().any(FeatureSet::needs_topics) => {
            let norm = if spec.features.topic_normalization == "raw" {
                TopicNormalization::Raw
            } else {
                TopicNormalization::SumToOne
            };
            Some(load_topic_model(open_buffered(&resolve(base, p))?, norm)?)
        }
        _ => None,
    };
    let pipeline = spec.pipeline_config();

    let years: Vec<Option<i32>> = if spec.timeslice.years.is_empty() {
        vec![None]
    } else {
        spec.timeslice.years.iter().copied().map(Some).collect()
    };
    let mut caps: Vec<Option<u64>> = spec
        .filters
        .max_tweets_sweep
        .iter()
        .copied()
        .map(Some)
        .collect();
    if spec.filters.include_uncapped || caps.is_empty() {
        caps.push(None);
    }

    let mut reports = Vec::new();
    for year in &years {
        let subsample = if spec.subsample.fraction < 1.0 {
            Some((spec.subsample.fraction, spec.subsample.seed))
        } else {
            None
        };
        let opts = IngestOptions {
            config_tag: format!(
                "v1 sub={} seed={} year={}",
                spec.subsample.fraction,
                spec.subsample.seed,
                year.map_or("all".to_string(), |y| y.to_string()),
            ),
            subsample,
            year: *year,
            english_only: spec.english_only,
        };
        let (acc, _assignments, _stats) = ingest_records(&records, &gaz, &opts);

        for cap in &caps {
            let cell = |detail: &str| {
                format!(
                    "year={} cap={} {detail}",
                    year.map_or("all".to_string(), |y| y.to_string()),
                    cap.map_or("none".to_string(), |c| c.to_string()),
                )
            };
            let (filtered, removed_users) = acc.filter_users(spec.filters.min_tweets, *cap);
            let eligible = filtered.eligible_counties(spec.filters.min_users);
            if eligible.is_empty() {
                return Err(bad("no county passes the min_users filter").in_cell(&cell("")));
            }
            let vocab = build_vocabulary(&filtered, spec.features.vocab_size);

            for scheme_name in &spec.aggregation.schemes {
                let scheme = Scheme::parse(scheme_name).expect("validated");
                let matrix = build_scheme_matrix(
                    scheme,
                    &filtered,
                    &vocab,
                    spec.aggregation.binary_per_tweet,
                )
                .retain_counties(&eligible);

                let topic_matrix = topic_model
                    .as_ref()
                    .map(|tm| project_matrix(&matrix, tm));

                for fset in &spec.features.sets {
                    for outcome in &outcomes {
                        let (rows, y) = align_rows(&matrix, &outcome.table);
                        if rows.len() < pipeline.folds {
                            return Err(bad(format!(
                                "{} counties with outcome data but {} folds requested",
                                rows.len(),
                                pipeline.folds
                            ))
                            .in_cell(&cell(&format!(
                                "scheme={} features={} outcome={}",
                                scheme.as_str(),
                                fset.as_str(),
                                outcome.name
                            ))));
                        }
                        let x: Array2<f64> =
                            assemble_features(&matrix, topic_matrix.as_ref(), *fset, &rows);
                        let preds = cross_validate(x.view(), &y, &pipeline).map_err(|e| {
                            HarnessError::from(e).in_cell(&cell(&format!(
                                "scheme={} features={} outcome={}",
                                scheme.as_str(),
                                fset.as_str(),
                                outcome.name
                            )))
                        })?;
                        let r = pearson_r(&y, &preds).map_err(|e| {
                            HarnessError::from(e).in_cell(&cell(&format!(
                                "scheme={} features={} outcome={}",
                                scheme.as_str(),
                                fset.as_str(),
                                outcome.name
                            )))
                        })?;
                        let m = mse(&y, &preds).expect("lengths match");
                        let n_users: u64 = rows
                            .iter()
                            .map(|&i| matrix.provenance.county_users[i])
                            .sum();
                        let n_tweets: u64 = rows
                            .iter()
                            .map(|&i| matrix.provenance.county_tweets[i])
                            .sum();
                        let n_tokens: u64 = rows
                            .iter()
                            .map(|&i| matrix.provenance.county_tokens[i])
                            .sum();
                        reports.push(EvalReport {
                            outcome: outcome.name.clone(),
                            scheme: scheme.as_str().to_string(),
                            feature_set: fset.as_str().to_string(),
                            year: *year,
                            max_tweets: *cap,
                            pearson_r: r,
                            mse: m,
                            n_counties: rows.len(),
                            n_users,
                            n_tweets,
                            n_tokens,
                            removed_users,
                            vocab_hash: vocab.content_hash().to_string(),
                            folds: pipeline.folds,
                            seed: pipeline.seed,
                            ridge_alpha: pipeline.ridge_alpha,
                            leaky_preprocess: pipeline.leaky_preprocess,
                        });
                    }
                }
            }
        }
    }
    Ok(reports)
}

/// TSV with provenance header lines, one row per report.
pub fn write_report_tsv<W: Write>(
    reports: &[EvalReport],
    config_hash: &str,
    seed: u64,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "# countylex-report v1")?;
    writeln!(w, "# config={config_hash}")?;
    writeln!(w, "# seed={seed}")?;
    writeln!(
        w,
        "outcome\tscheme\tfeature_set\tyear\tmax_tweets\tpearson_r\tmse\tn_counties\tn_users\tn_tweets\tn_tokens\tremoved_users\tvocab_hash\tfolds\tridge_alpha\tleaky_preprocess"
    )?;
    for r in reports {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.outcome,
            r.scheme,
            r.feature_set,
            r.year.map_or("all".to_string(), |y| y.to_string()),
            r.max_tweets.map_or("none".to_string(), |c| c.to_string()),
            r.pearson_r,
            r.mse,
            r.n_counties,
            r.n_users,
            r.n_tweets,
            r.n_tokens,
            r.removed_users,
            r.vocab_hash,
            r.folds,
            r.ridge_alpha,
            r.leaky_preprocess,
        )?;
    }
    Ok(())
}

/// JSON object with the same provenance fields and all rows.
pub fn write_report_json<W: Write>(
    reports: &[EvalReport],
    config_hash: &str,
    seed: u64,
    w: W,
) -> std::io::Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        version: u32,
        config: &'a str,
        seed: u64,
        rows: &'a [EvalReport],
    }
    serde_json::to_writer_pretty(
        w,
        &Doc {
            version: 1,
            config: config_hash,
            seed,
            rows: reports,
        },
    )
    .map_err(std::io::Error::other)
}
