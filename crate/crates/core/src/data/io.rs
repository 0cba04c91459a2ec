use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{Dataset, GpsSample, LAT_RANGE, LON_RANGE};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "user_id,timestamp,latitude,longitude";

const TIMESTAMP_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y/%m/%d %H:%M:%S%.f",
    "%Y/%m/%d %H:%M",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl TraceFormat {
    /// Guesses the format from a file extension; anything but `.jsonl`/`.ndjson` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => TraceFormat::Jsonl,
            _ => TraceFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Abort on the first bad row.
    Strict,
    /// Skip bad rows and report them.
    #[default]
    Lenient,
}

#[derive(Debug)]
pub struct Rejection {
    pub line: u64,
    pub error: Error,
}

#[derive(Debug)]
pub struct ParseOutcome {
    pub dataset: Dataset,
    pub rejects: Vec<Rejection>,
}

impl ParseOutcome {
    pub fn reject_count(&self) -> usize {
        self.rejects.len()
    }
}

/// Parses either timestamp spelling: ISO `YYYY-MM-DDTHH:MM[:SS]` or
/// `YYYY/MM/DD HH:MM[:SS]`.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn parse_coord(line: u64, field: &'static str, raw: &str, range: (f64, f64)) -> Result<f64> {
    let value: f64 = raw.trim().parse().map_err(|_| Error::Parse {
        line,
        field,
        message: format!("`{raw}` is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            line,
            field,
            message: format!("`{raw}` is not finite"),
        });
    }
    if value < range.0 || value > range.1 {
        return Err(Error::Range {
            line,
            field,
            value,
            min: range.0,
            max: range.1,
        });
    }
    Ok(value)
}

fn build_sample(
    line: u64,
    user_id: &str,
    timestamp: &str,
    latitude: &str,
    longitude: &str,
) -> Result<GpsSample> {
    if user_id.is_empty() {
        return Err(Error::Parse {
            line,
            field: "user_id",
            message: "empty label".into(),
        });
    }
    let ts = parse_timestamp(timestamp).ok_or_else(|| Error::Timestamp {
        line,
        value: timestamp.to_owned(),
    })?;
    let lat = parse_coord(line, "latitude", latitude, LAT_RANGE)?;
    let lon = parse_coord(line, "longitude", longitude, LON_RANGE)?;
    Ok(GpsSample::new(user_id, ts, lat, lon))
}

struct Collector {
    mode: ParseMode,
    samples: Vec<GpsSample>,
    rejects: Vec<Rejection>,
}

impl Collector {
    fn push(&mut self, line: u64, row: Result<GpsSample>) -> Result<()> {
        match row {
            Ok(s) => self.samples.push(s),
            Err(e) if self.mode == ParseMode::Strict => return Err(e),
            Err(error) => {
                log::debug!("skipping line {line}: {error}");
                self.rejects.push(Rejection { line, error });
            }
        }
        Ok(())
    }

    fn finish(self) -> ParseOutcome {
        ParseOutcome {
            dataset: Dataset::new(self.samples),
            rejects: self.rejects,
        }
    }
}

fn parse_csv<R: Read>(source: R, collector: &mut Collector) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header = reader.headers()?.clone();
    if header.is_empty() {
        return Ok(());
    }
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found.join(",") != CSV_HEADER {
        return Err(Error::Header {
            expected: CSV_HEADER.into(),
            found: found.join(","),
        });
    }
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                collector.push(
                    line,
                    Err(Error::Parse {
                        line,
                        field: "row",
                        message: e.to_string(),
                    }),
                )?;
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = if record.len() != 4 {
            Err(Error::Parse {
                line,
                field: "row",
                message: format!("expected 4 fields, found {}", record.len()),
            })
        } else {
            build_sample(line, record[0].trim(), &record[1], &record[2], &record[3])
        };
        collector.push(line, row)?;
    }
    Ok(())
}

#[derive(Deserialize, Serialize)]
struct JsonRecord {
    user_id: String,
    timestamp: String,
    latitude: f64,
    longitude: f64,
}

fn parse_jsonl<R: Read>(source: R, collector: &mut Collector) -> Result<()> {
    for (idx, line) in BufReader::new(source).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str::<JsonRecord>(&text)
            .map_err(|e| Error::Parse {
                line: line_no,
                field: "record",
                message: e.to_string(),
            })
            .and_then(|r| {
                build_sample(
                    line_no,
                    &r.user_id,
                    &r.timestamp,
                    &r.latitude.to_string(),
                    &r.longitude.to_string(),
                )
            });
        collector.push(line_no, row)?;
    }
    Ok(())
}

/// Reads a trace in `format`, preserving row order.
///
/// In strict mode the first bad row aborts with an error naming its line;
/// in lenient mode bad rows are skipped and returned in
/// [`ParseOutcome::rejects`]. A malformed CSV header is always fatal.
pub fn parse_trace<R: Read>(source: R, format: TraceFormat, mode: ParseMode) -> Result<ParseOutcome> {
    let mut collector = Collector {
        mode,
        samples: Vec::new(),
        rejects: Vec::new(),
    };
    match format {
        TraceFormat::Csv => parse_csv(source, &mut collector)?,
        TraceFormat::Jsonl => parse_jsonl(source, &mut collector)?,
    }
    Ok(collector.finish())
}

pub fn parse_trace_file(path: &Path, mode: ParseMode) -> Result<ParseOutcome> {
    let file = File::open(path)?;
    parse_trace(BufReader::new(file), TraceFormat::from_path(path), mode)
}

fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:%M:%S").to_string()
}

/// Writes the CSV trace format: fixed header, ISO timestamps, 6-decimal coordinates.
pub fn write_csv<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in dataset.samples() {
        writeln!(
            out,
            "{},{},{:.6},{:.6}",
            csv_field(&s.user_id),
            format_timestamp(&s.timestamp),
            s.latitude,
            s.longitude
        )?;
    }
    Ok(())
}

fn csv_field(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\"")).into()
    } else {
        s.into()
    }
}

pub fn write_jsonl<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    for s in dataset.samples() {
        // Coordinates are emitted as raw 6-decimal literals.
        writeln!(
            out,
            "{{\"user_id\":{},\"timestamp\":\"{}\",\"latitude\":{:.6},\"longitude\":{:.6}}}",
            serde_json::to_string(&s.user_id)?,
            format_timestamp(&s.timestamp),
            s.latitude,
            s.longitude
        )?;
    }
    Ok(())
}
