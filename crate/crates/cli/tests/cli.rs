//! End-to-end runs of the countylex binary over a small synthetic
//! world: synth -> ingest -> aggregate/features -> predict ->
//! export-lexbank -> experiment.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_countylex"))
}

fn check(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn synth_world(root: &Path) {
    let out = bin()
        .arg("synth")
        .arg("--out-dir")
        .arg(root)
        .args([
            "--counties",
            "12",
            "--users-per-county",
            "6",
            "--tweets-min",
            "4",
            "--tweets-max",
            "8",
            "--seed",
            "21",
            "--shards",
            "2",
        ])
        .output()
        .unwrap();
    check(&out, "synth");
}

#[test]
fn help_lists_every_subcommand() {
    let out = bin().arg("--help").output().unwrap();
    check(&out, "--help");
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "ingest",
        "aggregate",
        "features",
        "predict",
        "experiment",
        "export-lexbank",
        "synth",
    ] {
        assert!(text.contains(name), "--help must list `{name}`:\n{text}");
    }
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth_world(root);
    for name in [
        "gazetteer.tsv",
        "polygons.tsv",
        "outcomes.csv",
        "topics.tsv",
        "tweets_000.jsonl",
        "tweets_001.jsonl",
    ] {
        assert!(root.join(name).exists(), "synth must write {name}");
    }

    // ingest both shards into one checkpoint
    let checkpoint = root.join("checkpoint.tsv");
    let out = bin()
        .env("COUNTYLEX_WORKERS", "2")
        .arg("ingest")
        .arg("--records")
        .arg(root.join("tweets_000.jsonl"))
        .arg(root.join("tweets_001.jsonl"))
        .arg("--gazetteer")
        .arg(root.join("gazetteer.tsv"))
        .arg("--polygons")
        .arg(root.join("polygons.tsv"))
        .arg("--out")
        .arg(&checkpoint)
        .arg("--stats-out")
        .arg(root.join("stats.json"))
        .output()
        .unwrap();
    check(&out, "ingest");
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(stats["records_in"].as_u64().unwrap() > 0);
    assert!(stats["accumulated"].as_u64().unwrap() > 0);
    assert_eq!(stats["parse_failures"].as_u64().unwrap(), 0);
    assert!(checkpoint.exists());
    assert!(root.join("stats.json").exists());

    // aggregate to a matrix
    let matrix = root.join("matrix.tsv");
    let out = bin()
        .arg("aggregate")
        .arg("--checkpoint")
        .arg(&checkpoint)
        .args(["--scheme", "bow", "--min-tweets", "1", "--min-users", "1"])
        .args(["--vocab-size", "60"])
        .arg("--out")
        .arg(&matrix)
        .arg("--vocab-out")
        .arg(root.join("vocab_from_aggregate.tsv"))
        .output()
        .unwrap();
    check(&out, "aggregate");
    let body = fs::read_to_string(&matrix).unwrap();
    assert!(body.starts_with("# countylex-matrix v1\n"));
    assert!(body.contains("# scheme=county_bow"));
    assert!(body.contains("# vocab="));
    assert!(body.contains("# filters=min_tweets:1,max_tweets:none,min_users:1"));

    // vocabulary dumps
    let out = bin()
        .arg("features")
        .arg("--checkpoint")
        .arg(&checkpoint)
        .args(["--min-tweets", "1", "--min-users", "1", "--vocab-size", "60"])
        .arg("--out")
        .arg(root.join("vocab.tsv"))
        .args(["--model-vocab-size", "20"])
        .arg("--model-out")
        .arg(root.join("vocab_model.tsv"))
        .arg("--topics")
        .arg(root.join("topics.tsv"))
        .output()
        .unwrap();
    check(&out, "features");
    let vocab = fs::read_to_string(root.join("vocab.tsv")).unwrap();
    assert!(vocab.starts_with("# countylex-vocab v1\n"));
    let model_lines = fs::read_to_string(root.join("vocab_model.tsv")).unwrap();
    assert_eq!(model_lines.lines().count(), 21, "header plus 20 rows");

    // cross-validated prediction
    let report = root.join("report.tsv");
    let out = bin()
        .arg("predict")
        .arg("--checkpoint")
        .arg(&checkpoint)
        .args(["--scheme", "bow", "--min-tweets", "1", "--min-users", "1"])
        .args(["--vocab-size", "60", "--features", "unigrams"])
        .arg("--outcome")
        .arg(root.join("outcomes.csv"))
        .args(["--folds", "5", "--seed", "3"])
        .arg("--out")
        .arg(&report)
        .arg("--json-out")
        .arg(root.join("report.json"))
        .arg("--predictions-out")
        .arg(root.join("preds.tsv"))
        .output()
        .unwrap();
    check(&out, "predict");
    let body = fs::read_to_string(&report).unwrap();
    assert!(body.starts_with("# countylex-report v1\n# config="));
    let data_row = body
        .lines()
        .find(|l| l.starts_with("outcomes\t"))
        .expect("one data row named after the outcome file stem");
    let cells: Vec<&str> = data_row.split('\t').collect();
    assert_eq!(cells[1], "county_bow");
    assert_eq!(cells[2], "unigrams");
    let r: f64 = cells[5].parse().unwrap();
    assert!(r.is_finite(), "pearson_r must be finite, got {r}");
    let preds = fs::read_to_string(root.join("preds.tsv")).unwrap();
    assert!(preds.contains("fips\tactual\tpredicted"));
    assert_eq!(
        preds.lines().filter(|l| !l.starts_with('#') && !l.starts_with("fips")).count(),
        12,
        "one prediction per county"
    );
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("report.json")).unwrap()).unwrap();
    assert_eq!(doc["rows"][0]["scheme"], "county_bow");

    // privacy-floored export
    let bank = root.join("bank");
    let out = bin()
        .arg("export-lexbank")
        .arg("--checkpoint")
        .arg(&checkpoint)
        .args(["--min-tweets", "1", "--vocab-size", "60", "--privacy-floor", "2"])
        .args(["--span", "all"])
        .arg("--out-dir")
        .arg(&bank)
        .output()
        .unwrap();
    check(&out, "export-lexbank");
    assert!(bank.join("lexbank_words.tsv").exists());
    assert!(bank.join("lexbank_counties.tsv").exists());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["exported_tokens"].as_u64().unwrap() > 0);
    assert_eq!(summary["n_counties"].as_u64().unwrap(), 12);

    // the grid, from a spec file next to the world
    let spec = root.join("grid.toml");
    fs::write(
        &spec,
        r#"
version = 1

[input]
records = ["tweets_000.jsonl", "tweets_001.jsonl"]
gazetteer = "gazetteer.tsv"
polygons = "polygons.tsv"

[filters]
min_tweets = 1
min_users = 1

[aggregation]
schemes = ["county_bow", "user_to_county"]

[features]
sets = ["unigrams"]
vocab_size = 60

[outcomes]
files = ["outcomes.csv"]
names = ["trait"]

[pipeline]
folds = 5
seed = 3
"#,
    )
    .unwrap();
    let grid_report = root.join("grid_report.tsv");
    let out = bin()
        .arg("experiment")
        .arg("--spec")
        .arg(&spec)
        .arg("--out")
        .arg(&grid_report)
        .output()
        .unwrap();
    check(&out, "experiment");
    let body = fs::read_to_string(&grid_report).unwrap();
    assert!(body.starts_with("# countylex-report v1\n"));
    let rows: Vec<&str> = body
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("outcome\t"))
        .collect();
    assert_eq!(rows.len(), 2, "two schemes, one feature set, one outcome");
    assert!(rows[0].starts_with("trait\tcounty_bow\t"));
    assert!(rows[1].starts_with("trait\tuser_to_county\t"));
}

#[test]
fn ingest_bench_reports_throughput() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth_world(root);
    let out = bin()
        .arg("ingest")
        .arg("--records")
        .arg(root.join("tweets_000.jsonl"))
        .arg("--gazetteer")
        .arg(root.join("gazetteer.tsv"))
        .arg("--out")
        .arg(root.join("unused.tsv"))
        .args(["--bench", "2"])
        .output()
        .unwrap();
    check(&out, "ingest --bench");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("# countylex-bench v1\n"));
    assert!(text.contains("records_per_sec_per_worker\t"));
    assert!(!root.join("unused.tsv").exists(), "bench mode writes no checkpoint");
}
