//! Ingestion throughput measurement over serialized record lines.
//! Wall-clock over whole passes; per-worker rate divides by the rayon
//! pool size so the figure is comparable across machines.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::geomap::Gazetteer;

use super::ingest::{ingest_lines, IngestOptions, IngestStats};

#[derive(Debug, Clone, Serialize)]
pub struct ThroughputReport {
    pub records: u64,
    pub passes: usize,
    pub elapsed_secs: f64,
    pub workers: usize,
    pub records_per_sec: f64,
    pub records_per_sec_per_worker: f64,
}

/// Times `passes` full ingest runs over `lines`. One untimed warmup
/// pass absorbs allocator and page-cache effects.
pub fn measure_ingest_throughput(
    lines: &[String],
    gaz: &Gazetteer,
    opts: &IngestOptions,
    passes: usize,
) -> (ThroughputReport, IngestStats) {
    assert!(passes >= 1, "need at least one timed pass");
    let (_, _, warm_stats) = ingest_lines(lines, gaz, opts);
    let start = Instant::now();
    for _ in 0..passes {
        let (_, _, stats) = ingest_lines(lines, gaz, opts);
        debug_assert_eq!(stats.records_in, warm_stats.records_in);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let workers = rayon::current_num_threads().max(1);
    let records = lines.len() as u64 * passes as u64;
    let per_sec = records as f64 / elapsed;
    (
        ThroughputReport {
            records,
            passes,
            elapsed_secs: elapsed,
            workers,
            records_per_sec: per_sec,
            records_per_sec_per_worker: per_sec / workers as f64,
        },
        warm_stats,
    )
}

pub fn write_bench_report<W: Write>(report: &ThroughputReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# countylex-bench v1")?;
    writeln!(w, "records\t{}", report.records)?;
    writeln!(w, "passes\t{}", report.passes)?;
    writeln!(w, "elapsed_secs\t{:.6}", report.elapsed_secs)?;
    writeln!(w, "workers\t{}", report.workers)?;
    writeln!(w, "records_per_sec\t{:.1}", report.records_per_sec)?;
    writeln!(
        w,
        "records_per_sec_per_worker\t{:.1}",
        report.records_per_sec_per_worker
    )?;
    Ok(())
}
