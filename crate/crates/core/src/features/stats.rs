//! Column distribution statistics: mean, standard error, median, standard
//! deviation, excess kurtosis, skewness, min, max.
//!
//! Variance uses the n-1 denominator. Skewness and kurtosis are the
//! bias-corrected sample estimators (G1, G2) used by common spreadsheet tools.
//! Statistics that need more rows than available are `None`.

use std::io::Write;

use serde::Serialize;

use super::{format_sig9, FeatureMatrix};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnStats {
    pub feature: String,
    pub n: usize,
    pub mean: Option<f64>,
    pub se: Option<f64>,
    pub median: Option<f64>,
    pub sd: Option<f64>,
    pub kurtosis: Option<f64>,
    pub skewness: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionStats {
    pub columns: Vec<ColumnStats>,
}

impl ColumnStats {
    pub fn from_values(feature: impl Into<String>, values: &[f64]) -> Self {
        let n = values.len();
        let nf = n as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = (n > 0).then(|| values.iter().sum::<f64>() / nf);
        let median = (n > 0).then(|| {
            if n % 2 == 1 {
                sorted[n / 2]
            } else {
                (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
            }
        });
        let central = |k: i32| -> f64 {
            let m = mean.unwrap_or(0.0);
            values.iter().map(|x| (x - m).powi(k)).sum()
        };
        let sd = (n >= 2).then(|| (central(2) / (nf - 1.0)).sqrt());
        let se = sd.map(|s| s / nf.sqrt());
        let spread = sd.filter(|&s| s > 0.0);
        let skewness = spread.filter(|_| n >= 3).map(|s| {
            nf / ((nf - 1.0) * (nf - 2.0)) * central(3) / s.powi(3)
        });
        let kurtosis = spread.filter(|_| n >= 4).map(|s| {
            nf * (nf + 1.0) / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0)) * central(4) / s.powi(4)
                - 3.0 * (nf - 1.0).powi(2) / ((nf - 2.0) * (nf - 3.0))
        });
        Self {
            feature: feature.into(),
            n,
            mean,
            se,
            median,
            sd,
            kurtosis,
            skewness,
            min: sorted.first().copied(),
            max: sorted.last().copied(),
        }
    }
}

pub fn feature_distribution(m: &FeatureMatrix) -> DistributionStats {
    let columns = m
        .columns()
        .iter()
        .enumerate()
        .map(|(j, name)| ColumnStats::from_values(name.as_str(), &m.column(j).collect::<Vec<_>>()))
        .collect();
    DistributionStats { columns }
}

impl DistributionStats {
    pub const CSV_HEADER: &'static str = "feature,n,mean,se,median,sd,kurtosis,skewness,min,max";

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        let cell = |v: Option<f64>| v.map(format_sig9).unwrap_or_default();
        for c in &self.columns {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                c.feature,
                c.n,
                cell(c.mean),
                cell(c.se),
                cell(c.median),
                cell(c.sd),
                cell(c.kurtosis),
                cell(c.skewness),
                cell(c.min),
                cell(c.max)
            )?;
        }
        Ok(())
    }

    /// Aligned text table with three decimals, one row per feature.
    pub fn to_table(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
        let mut s = format!(
            "{:<10}{:>14}{:>12}{:>14}{:>14}{:>12}{:>12}{:>14}{:>14}\n",
            "Feature", "Mean", "SE", "Median", "SD", "Kurtosis", "Skewness", "Min", "Max"
        );
        for c in &self.columns {
            s.push_str(&format!(
                "{:<10}{:>14}{:>12}{:>14}{:>14}{:>12}{:>12}{:>14}{:>14}\n",
                c.feature,
                cell(c.mean),
                cell(c.se),
                cell(c.median),
                cell(c.sd),
                cell(c.kurtosis),
                cell(c.skewness),
                cell(c.min),
                cell(c.max)
            ));
        }
        s
    }
}
