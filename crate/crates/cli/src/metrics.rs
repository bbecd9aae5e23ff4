//! Benchmark result rows and their CSV / JSON encodings.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One measured configuration point. Times are seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// e.g. `fused`, `two-step`, `hybrid+fused`.
    pub scenario: String,
    pub rank: u32,
    pub batch_size: u64,
    /// Top-down, comma-separated.
    pub fanouts: String,
    pub reps: u32,
    pub sample_time_s: f64,
    pub total_time_s: f64,
    pub comm_rounds: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub edges: u64,
    pub coo_buffers: u64,
    /// Baseline time over this scenario's time at the same point.
    pub speedup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// Guesses from a file extension, defaulting to CSV.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

pub fn write_records<W: Write>(
    w: W,
    records: &[MetricsRecord],
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut wr = csv::Writer::from_writer(w);
            for r in records {
                wr.serialize(r)?;
            }
            wr.flush()?;
        }
        OutputFormat::Json => {
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, records)?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn read_records<R: Read>(r: R, format: OutputFormat) -> Result<Vec<MetricsRecord>> {
    Ok(match format {
        OutputFormat::Csv => csv::Reader::from_reader(r)
            .deserialize()
            .collect::<Result<_, csv::Error>>()?,
        OutputFormat::Json => serde_json::from_reader(r)?,
    })
}

pub fn save_records(path: &Path, records: &[MetricsRecord], format: OutputFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_records(&mut w, records, format)?;
    w.flush()?;
    Ok(())
}

pub fn load_records(path: &Path, format: OutputFormat) -> Result<Vec<MetricsRecord>> {
    read_records(BufReader::new(File::open(path)?), format)
}

/// Fixed-width table for the terminal.
pub fn print_table(records: &[MetricsRecord]) {
    println!(
        "{:<16} {:>4} {:>6} {:>10} {:>12} {:>12} {:>6} {:>12} {:>12} {:>4} {:>8}",
        "scenario",
        "rank",
        "batch",
        "fanouts",
        "sample_s",
        "total_s",
        "rounds",
        "bytes_sent",
        "edges",
        "coo",
        "speedup"
    );
    for r in records {
        println!(
            "{:<16} {:>4} {:>6} {:>10} {:>12.6} {:>12.6} {:>6} {:>12} {:>12} {:>4} {:>8.3}",
            r.scenario,
            r.rank,
            r.batch_size,
            r.fanouts,
            r.sample_time_s,
            r.total_time_s,
            r.comm_rounds,
            r.bytes_sent,
            r.edges,
            r.coo_buffers,
            r.speedup
        );
    }
}

/// Median of a nonempty sample; the mean of the two middle values for an
/// even count.
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of nothing");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_records() -> Vec<MetricsRecord> {
        vec![
            MetricsRecord {
                scenario: "fused".into(),
                rank: 0,
                batch_size: 1024,
                fanouts: "15,10,5".into(),
                reps: 5,
                sample_time_s: 0.1 + 0.2,
                total_time_s: 1.0 / 3.0,
                comm_rounds: 0,
                bytes_sent: 0,
                bytes_received: 0,
                edges: 123_456,
                coo_buffers: 0,
                speedup: std::f64::consts::PI,
            },
            MetricsRecord {
                scenario: "hybrid+two-step".into(),
                rank: 3,
                batch_size: 1000,
                fanouts: "5".into(),
                reps: 1,
                sample_time_s: 1e-9,
                total_time_s: 12345.678901234567,
                comm_rounds: 2,
                bytes_sent: u64::MAX,
                bytes_received: 7,
                edges: 0,
                coo_buffers: 6,
                speedup: 1.0,
            },
        ]
    }

    #[test]
    fn round_trips_exactly() {
        let records = sample_records();
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            let mut buf = Vec::new();
            write_records(&mut buf, &records, format).unwrap();
            let back = read_records(&buf[..], format).unwrap();
            assert_eq!(back, records, "{format:?}");
            for (a, b) in back.iter().zip(&records) {
                assert_eq!(a.sample_time_s.to_bits(), b.sample_time_s.to_bits());
                assert_eq!(a.total_time_s.to_bits(), b.total_time_s.to_bits());
            }
        }
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            OutputFormat::for_path(Path::new("a.json")),
            OutputFormat::Json
        );
        assert_eq!(
            OutputFormat::for_path(Path::new("a.csv")),
            OutputFormat::Csv
        );
    }
}
