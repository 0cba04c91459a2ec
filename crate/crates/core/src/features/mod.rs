//! Per-sample feature rows: seven base features taken from the position and
//! timestamp, followed by `alpha` distance-coherence columns.

mod coherence;
mod stats;

use std::io::Write;

use chrono::{Datelike, Timelike};
use serde::{Deserialize, Serialize};

pub use coherence::{
    coherence_set, distance_coherence, hour_distance, CoherenceIndex, CoherenceMode, CoherenceSet,
};
pub use stats::{feature_distribution, ColumnStats, DistributionStats};

use crate::data::{Dataset, GpsSample};
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const BASE_COLUMNS: [&str; 7] = ["lat", "lon", "month", "day", "hour", "minute", "weekday"];
pub const DEFAULT_SCALE: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub alpha: u32,
    pub mode: CoherenceMode,
    /// Multiplier applied to coherence columns after filling.
    pub scale: f64,
    /// Value used for a coherence column whose set is empty.
    pub fill_value: f64,
    pub wrap_hours: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            alpha: 0,
            mode: CoherenceMode::Daily,
            scale: DEFAULT_SCALE,
            fill_value: 0.0,
            wrap_hours: false,
        }
    }
}

impl ExtractionConfig {
    pub fn with_alpha(alpha: u32) -> Self {
        Self { alpha, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!("scale must be > 0, got {}", self.scale)));
        }
        if !self.fill_value.is_finite() {
            return Err(Error::Config("fill value must be finite".into()));
        }
        if self.alpha > 23 && !self.wrap_hours || self.alpha > 12 && self.wrap_hours {
            log::warn!("alpha {} exceeds the widest possible hour window", self.alpha);
        }
        Ok(())
    }
}

/// `(lat, lon, month, day, hour, minute, weekday)`; the year is left out.
pub fn extract_base_features(s: &GpsSample) -> [f64; 7] {
    let t = &s.timestamp;
    [
        s.latitude,
        s.longitude,
        t.month() as f64,
        t.day() as f64,
        t.hour() as f64,
        t.minute() as f64,
        s.weekday() as f64,
    ]
}

/// Row-major feature table aligned with the dataset it was extracted from.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    columns: Vec<String>,
    data: Vec<f64>,
    labels: Vec<String>,
    filled_cells: usize,
}

impl FeatureMatrix {
    /// Builds a matrix from raw row-major values; `data.len()` must equal
    /// `labels.len() * columns.len()`.
    pub fn from_parts(columns: Vec<String>, data: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if data.len() != labels.len() * columns.len() {
            return Err(Error::Width {
                expected: labels.len() * columns.len(),
                found: data.len(),
            });
        }
        Ok(Self { columns, data, labels, filled_cells: 0 })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn alpha(&self) -> usize {
        self.n_cols().saturating_sub(BASE_COLUMNS.len())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(j).step_by(self.n_cols().max(1)).copied()
    }

    /// Number of coherence cells that came from an empty set.
    pub fn filled_cells(&self) -> usize {
        self.filled_cells
    }

    /// Keeps the base columns and the first `alpha` coherence columns.
    ///
    /// Coherence column `z` does not depend on how many columns were extracted,
    /// so this equals a fresh extraction with the smaller `alpha`, except that
    /// the fill count is not recomputed.
    pub fn truncate_alpha(&self, alpha: usize) -> FeatureMatrix {
        let keep = (BASE_COLUMNS.len() + alpha).min(self.n_cols());
        let data = self
            .data
            .chunks(self.n_cols())
            .flat_map(|r| r[..keep].iter().copied())
            .collect();
        FeatureMatrix {
            columns: self.columns[..keep].to_vec(),
            data,
            labels: self.labels.clone(),
            filled_cells: 0,
        }
    }

    /// CSV with a `user_id` column first; numbers carry at most 9 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "user_id,{}", self.columns.join(","))?;
        for (i, label) in self.labels.iter().enumerate() {
            write!(out, "{label}")?;
            for v in self.row(i) {
                write!(out, ",{}", format_sig9(*v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Shortest decimal form of `v` rounded to 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{}", if v == 0.0 { 0.0 } else { v });
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("float formatting round-trips");
    format!("{rounded}")
}

pub fn column_names(alpha: u32) -> Vec<String> {
    BASE_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((1..=alpha).map(|z| format!("dc_{z}")))
        .collect()
}

pub fn extract_feature_matrix(d: &Dataset, cfg: &ExtractionConfig) -> Result<FeatureMatrix> {
    extract_feature_matrix_with(d, cfg, Execution::default())
}

/// Extracts the feature table. Rows are computed independently and are
/// identical under any [`Execution`].
pub fn extract_feature_matrix_with(
    d: &Dataset,
    cfg: &ExtractionConfig,
    exec: Execution,
) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let index = CoherenceIndex::new(d, cfg.mode, cfg.wrap_hours);
    let rows = exec.map_range(d.len(), |i| {
        let base = extract_base_features(&d.samples()[i]);
        let dcs = if cfg.alpha == 0 {
            Vec::new()
        } else {
            index.coherence_values(i, cfg.alpha)
        };
        (base, dcs)
    });
    let width = BASE_COLUMNS.len() + cfg.alpha as usize;
    let mut data = Vec::with_capacity(d.len() * width);
    let mut filled_cells = 0;
    for (base, dcs) in rows {
        data.extend_from_slice(&base);
        for dc in dcs {
            let v = dc.unwrap_or_else(|| {
                filled_cells += 1;
                cfg.fill_value
            });
            data.push(cfg.scale * v);
        }
    }
    Ok(FeatureMatrix {
        columns: column_names(cfg.alpha),
        data,
        labels: d.samples().iter().map(|s| s.user_id.clone()).collect(),
        filled_cells,
    })
}
