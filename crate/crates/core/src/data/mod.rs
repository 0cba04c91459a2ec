//! GPS trace datasets: the sample type, per-user indexing, ingestion and
//! serialization, summaries, and the synthetic habit-trace generator.

mod io;
mod synth;

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::Serialize;

pub use io::{
    parse_trace, parse_trace_file, parse_timestamp, write_csv, write_jsonl, ParseMode,
    ParseOutcome, Rejection, TraceFormat, CSV_HEADER,
};
pub use synth::{generate_dataset, SynthConfig};

pub const LAT_RANGE: (f64, f64) = (-90.0, 90.0);
pub const LON_RANGE: (f64, f64) = (-180.0, 180.0);

/// One timestamped position report from a user's device.
///
/// Timestamps are naive wall-clock times; no timezone is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct GpsSample {
    pub user_id: String,
    pub timestamp: NaiveDateTime,
    pub latitude: f64,
    pub longitude: f64,
}

impl GpsSample {
    pub fn new(
        user_id: impl Into<String>,
        timestamp: NaiveDateTime,
        latitude: f64,
        longitude: f64,
    ) -> Self {
        Self {
            user_id: user_id.into(),
            timestamp,
            latitude,
            longitude,
        }
    }

    pub fn hour(&self) -> u32 {
        self.timestamp.hour()
    }

    /// ISO weekday, 1 = Monday .. 7 = Sunday.
    pub fn weekday(&self) -> u32 {
        self.timestamp.weekday().number_from_monday()
    }
}

/// An ordered collection of samples with a per-user position index.
///
/// Immutable once built; cheap to share read-only across threads.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    samples: Vec<GpsSample>,
    users: BTreeMap<String, Vec<usize>>,
}

impl Dataset {
    pub fn new(samples: Vec<GpsSample>) -> Self {
        let mut users: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, s) in samples.iter().enumerate() {
            users.entry(s.user_id.clone()).or_default().push(i);
        }
        Self { samples, users }
    }

    pub fn samples(&self) -> &[GpsSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// Positions of every sample of `user_id`, ascending.
    pub fn user_positions(&self, user_id: &str) -> &[usize] {
        self.users.get(user_id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Iterates users in lexicographic label order.
    pub fn users(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.users.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn labels(&self) -> Vec<&str> {
        self.samples.iter().map(|s| s.user_id.as_str()).collect()
    }

    pub fn summary(&self) -> DatasetSummary {
        dataset_summary(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.min_lat..=self.max_lat).contains(&lat) && (self.min_lon..=self.max_lon).contains(&lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub n_samples: usize,
    pub n_users: usize,
    pub per_user: BTreeMap<String, usize>,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub bounding_box: Option<BoundingBox>,
}

impl DatasetSummary {
    pub fn headline(&self) -> String {
        format!("{} users, {} samples", self.n_users, self.n_samples)
    }
}

pub fn dataset_summary(d: &Dataset) -> DatasetSummary {
    let per_user = d
        .users()
        .map(|(u, pos)| (u.to_owned(), pos.len()))
        .collect();
    let first_date = d.samples.iter().map(|s| s.timestamp.date()).min();
    let last_date = d.samples.iter().map(|s| s.timestamp.date()).max();
    let bounding_box = d.samples.iter().fold(None, |acc: Option<BoundingBox>, s| {
        Some(match acc {
            None => BoundingBox {
                min_lat: s.latitude,
                max_lat: s.latitude,
                min_lon: s.longitude,
                max_lon: s.longitude,
            },
            Some(b) => BoundingBox {
                min_lat: b.min_lat.min(s.latitude),
                max_lat: b.max_lat.max(s.latitude),
                min_lon: b.min_lon.min(s.longitude),
                max_lon: b.max_lon.max(s.longitude),
            },
        })
    });
    DatasetSummary {
        n_samples: d.len(),
        n_users: d.n_users(),
        per_user,
        first_date,
        last_date,
        bounding_box,
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The seven-sample, two-user worked example with concrete coordinates.
    pub const WORKED_EXAMPLE_CSV: &str = "\
user_id,timestamp,latitude,longitude
user1,2020/01/16 10:55,35.650000,139.700000
user1,2020/01/17 11:55,35.660000,139.710000
user1,2020/01/17 12:50,35.640000,139.720000
user2,2020/01/16 21:30,34.700000,135.500000
user2,2020/01/17 22:10,34.710000,135.490000
user2,2020/01/18 21:45,34.690000,135.520000
user2,2020/01/19 20:10,34.720000,135.510000
";

    pub fn worked_example() -> Dataset {
        parse_trace(WORKED_EXAMPLE_CSV.as_bytes(), TraceFormat::Csv, ParseMode::Strict)
            .unwrap()
            .dataset
    }
}
