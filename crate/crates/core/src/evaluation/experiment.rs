use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::{
    encode_labels, stratified_folds, weighted_metrics, ConfusionMatrix, MetricsReport,
    METRIC_NAMES,
};
use crate::data::Dataset;
use crate::ensemble::{train_ensemble_with, Algorithm, EnsembleConfig, TrainingData};
use crate::error::{Error, Result};
use crate::exec::{mix_seed, Execution};
use crate::features::{extract_feature_matrix_with, ExtractionConfig, FeatureMatrix};

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct CvOutcome {
    pub metrics: MetricsReport,
    pub confusion: ConfusionMatrix,
    pub warnings: Vec<String>,
}

/// Extracts features once, then runs stratified k-fold cross-validation.
pub fn cross_validate(
    d: &Dataset,
    extraction: &ExtractionConfig,
    model: &EnsembleConfig,
    k: usize,
    seed: u64,
) -> Result<CvOutcome> {
    let exec = Execution::default();
    let m = extract_feature_matrix_with(d, extraction, exec)?;
    cross_validate_matrix(&m, model, k, seed, exec)
}

fn gather(m: &FeatureMatrix, rows: &[usize]) -> Vec<f64> {
    let mut x = Vec::with_capacity(rows.len() * m.n_cols());
    for &r in rows {
        x.extend_from_slice(m.row(r));
    }
    x
}

/// Cross-validates on a prepared matrix. Held-out predictions of all folds
/// are pooled into one confusion matrix before scoring. Fold `f` trains
/// with seed `mix(model.seed, f)`.
pub fn cross_validate_matrix(
    m: &FeatureMatrix,
    model: &EnsembleConfig,
    k: usize,
    seed: u64,
    exec: Execution,
) -> Result<CvOutcome> {
    if m.n_rows() == 0 {
        return Err(Error::Training("empty feature matrix".into()));
    }
    let (enc, codes) = encode_labels(m.labels());
    let q = enc.n_classes();
    let assignment = stratified_folds(&codes, k, seed)?;
    let mut confusion = ConfusionMatrix::new(q);
    for fold in 0..k {
        let test = assignment.test_rows(fold);
        if test.is_empty() {
            continue;
        }
        let train = assignment.train_rows(fold);
        if train.is_empty() {
            return Err(Error::Training(format!("fold {fold} leaves no training rows")));
        }
        let x_train = gather(m, &train);
        let y_train: Vec<u32> = train.iter().map(|&r| codes[r]).collect();
        let data = TrainingData::new(&x_train, m.n_cols(), &y_train, q);
        let cfg = EnsembleConfig { seed: mix_seed(model.seed, fold as u64), ..*model };
        let forest = train_ensemble_with(&data, &cfg, exec)?;
        let predicted = forest.predict_rows(&gather(m, &test), exec)?;
        for (&r, &p) in test.iter().zip(&predicted) {
            confusion.record(codes[r], p);
        }
    }
    Ok(CvOutcome {
        metrics: weighted_metrics(&confusion)?,
        confusion,
        warnings: assignment.warnings,
    })
}

/// A grid of (algorithm, alpha) cross-validation runs sharing folds and seeds.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub algorithms: Vec<Algorithm>,
    /// Coherence column counts; 0 is the NoDC baseline and is always run.
    pub alphas: Vec<u32>,
    /// Everything but `alpha` is used.
    pub extraction: ExtractionConfig,
    /// Template; `algorithm` is replaced per run.
    pub ensemble: EnsembleConfig,
    pub folds: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(algorithms: Vec<Algorithm>, alphas: Vec<u32>) -> Self {
        Self {
            algorithms,
            alphas,
            extraction: ExtractionConfig::default(),
            ensemble: EnsembleConfig::new(Algorithm::RandomForest),
            folds: DEFAULT_FOLDS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExperimentSettings {
    pub folds: usize,
    pub n_estimators: usize,
    pub scale: f64,
    pub fill_value: f64,
    pub mode: crate::features::CoherenceMode,
    pub wrap_hours: bool,
    pub seed: u64,
    pub model_seed: u64,
    pub n_samples: usize,
    pub n_users: usize,
}

impl ExperimentSettings {
    pub fn header(&self) -> String {
        format!(
            "k={}, trees={}, scale={}, mode={}, seed={}, samples={}, users={}",
            self.folds,
            self.n_estimators,
            self.scale,
            match self.mode {
                crate::features::CoherenceMode::Daily => "daily",
                crate::features::CoherenceMode::Weekly => "weekly",
            },
            self.seed,
            self.n_samples,
            self.n_users
        )
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExperimentCell {
    pub algorithm: Algorithm,
    pub alpha: u32,
    /// Full-precision fractions.
    pub metrics: MetricsReport,
    /// Percentages, two decimals.
    pub percent: [f64; 6],
    /// Percentage-point change against the same algorithm's NoDC cell,
    /// taken between the two-decimal percentages.
    pub delta: [f64; 6],
}

impl ExperimentCell {
    pub fn label(&self) -> String {
        column_label(self.alpha)
    }
}

fn column_label(alpha: u32) -> String {
    if alpha == 0 {
        "NoDC".into()
    } else {
        format!("{alpha}-DC")
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExperimentTable {
    pub settings: ExperimentSettings,
    pub metric_names: [&'static str; 6],
    pub cells: Vec<ExperimentCell>,
    pub warnings: Vec<String>,
}

/// Runs every (algorithm, alpha) pair plus each algorithm's NoDC baseline.
///
/// Features are extracted once at the largest alpha; smaller alphas use a
/// column prefix, which equals a fresh extraction.
pub fn run_experiment(d: &Dataset, spec: &ExperimentSpec) -> Result<ExperimentTable> {
    if spec.alphas.is_empty() || spec.algorithms.is_empty() {
        return Err(Error::Config("need at least one algorithm and one alpha".into()));
    }
    let mut alphas = spec.alphas.clone();
    alphas.push(0);
    alphas.sort_unstable();
    alphas.dedup();
    let max_alpha = *alphas.last().unwrap();
    let exec = Execution::default();
    let full = extract_feature_matrix_with(
        d,
        &ExtractionConfig { alpha: max_alpha, ..spec.extraction },
        exec,
    )?;
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for &algorithm in &spec.algorithms {
        let cfg = EnsembleConfig { algorithm, ..spec.ensemble };
        let mut baseline: Option<[f64; 6]> = None;
        for &alpha in &alphas {
            let m = full.truncate_alpha(alpha as usize);
            let outcome = cross_validate_matrix(&m, &cfg, spec.folds, spec.seed, exec)?;
            if warnings.is_empty() {
                warnings = outcome.warnings.clone();
            }
            let percent = outcome.metrics.percent();
            let base = *baseline.get_or_insert(percent);
            let delta = std::array::from_fn(|i| ((percent[i] - base[i]) * 100.0).round() / 100.0);
            log::info!("{algorithm} {}: F1 {:.2}%", column_label(alpha), percent[0]);
            cells.push(ExperimentCell { algorithm, alpha, metrics: outcome.metrics, percent, delta });
        }
    }
    Ok(ExperimentTable {
        settings: ExperimentSettings {
            folds: spec.folds,
            n_estimators: spec.ensemble.n_estimators,
            scale: spec.extraction.scale,
            fill_value: spec.extraction.fill_value,
            mode: spec.extraction.mode,
            wrap_hours: spec.extraction.wrap_hours,
            seed: spec.seed,
            model_seed: spec.ensemble.seed,
            n_samples: d.len(),
            n_users: d.n_users(),
        },
        metric_names: METRIC_NAMES,
        cells,
        warnings,
    })
}

impl ExperimentTable {
    pub fn cell(&self, algorithm: Algorithm, alpha: u32) -> Option<&ExperimentCell> {
        self.cells.iter().find(|c| c.algorithm == algorithm && c.alpha == alpha)
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        let mut v: Vec<Algorithm> = Vec::new();
        for c in &self.cells {
            if !v.contains(&c.algorithm) {
                v.push(c.algorithm);
            }
        }
        v
    }

    /// Alphas run, ascending, without the NoDC baseline.
    pub fn dc_alphas(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.cells.iter().map(|c| c.alpha).filter(|&a| a > 0).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Side-by-side comparison: per algorithm, NoDC then each alpha-DC with its Δ.
    pub fn comparison_table(&self) -> String {
        let mut header = vec![String::from("Measure")];
        let mut columns: Vec<(Algorithm, u32, bool)> = Vec::new();
        for alg in self.algorithms() {
            header.push(format!("{} NoDC", alg.code()));
            columns.push((alg, 0, false));
            for a in self.dc_alphas() {
                if self.cell(alg, a).is_some() {
                    header.push(format!("{} {a}-DC", alg.code()));
                    header.push("Δ".into());
                    columns.push((alg, a, false));
                    columns.push((alg, a, true));
                }
            }
        }
        let rows: Vec<Vec<String>> = METRIC_NAMES
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let mut row = vec![name.to_string()];
                for &(alg, a, delta) in &columns {
                    let c = self.cell(alg, a).expect("column built from cells");
                    row.push(if delta { format!("{:+.2}", c.delta[i]) } else { format!("{:.2}", c.percent[i]) });
                }
                row
            })
            .collect();
        render(&self.settings.header(), &header, &rows)
    }

    /// Alpha sweep: six metric rows per algorithm, one column per alpha
    /// (NoDC first), followed by the same layout holding Δ against NoDC.
    pub fn sweep_table(&self) -> String {
        let alphas = self.dc_alphas();
        let mut header = vec!["Algorithm".to_string(), "Measure".to_string(), "NoDC".to_string()];
        header.extend(alphas.iter().map(|&a| column_label(a)));
        let block = |delta: bool| -> Vec<Vec<String>> {
            let mut rows = Vec::new();
            for alg in self.algorithms() {
                for (i, name) in METRIC_NAMES.iter().enumerate() {
                    let mut row = vec![alg.name().to_string(), name.to_string()];
                    for a in std::iter::once(0).chain(alphas.iter().copied()) {
                        row.push(match self.cell(alg, a) {
                            Some(c) if delta => format!("{:+.2}", c.delta[i]),
                            Some(c) => format!("{:.2}", c.percent[i]),
                            None => "-".into(),
                        });
                    }
                    rows.push(row);
                }
            }
            rows
        };
        let mut out = render(&self.settings.header(), &header, &block(false));
        out.push('\n');
        out.push_str(&render("Δ vs NoDC (percentage points)", &header, &block(true)));
        out
    }

    /// Header of [`write_sweep_csv`](Self::write_sweep_csv) for the alphas in this table.
    pub fn sweep_csv_header(&self) -> String {
        let alphas = self.dc_alphas();
        let mut cols = vec!["algorithm".to_string(), "metric".to_string(), "NoDC".to_string()];
        cols.extend(alphas.iter().map(|&a| column_label(a)));
        cols.extend(alphas.iter().map(|&a| format!("delta_{a}")));
        cols.join(",")
    }

    /// Plot-ready CSV: one row per (algorithm, metric) holding percentages for
    /// NoDC and each alpha, then the Δ for each alpha.
    pub fn write_sweep_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let alphas = self.dc_alphas();
        writeln!(out, "{}", self.sweep_csv_header())?;
        for alg in self.algorithms() {
            for (i, name) in METRIC_NAMES.iter().enumerate() {
                let mut line = format!("{},{}", alg.code(), name);
                let nodc = self.cell(alg, 0).map(|c| c.percent[i]);
                let _ = write!(line, ",{}", fmt_opt(nodc));
                for &a in &alphas {
                    let _ = write!(line, ",{}", fmt_opt(self.cell(alg, a).map(|c| c.percent[i])));
                }
                for &a in &alphas {
                    let _ = write!(line, ",{}", fmt_opt(self.cell(alg, a).map(|c| c.delta[i])));
                }
                writeln!(out, "{line}")?;
            }
        }
        Ok(())
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

fn render(title: &str, header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            let pad = w - c.chars().count();
            if i < 2 && !c.starts_with(['+', '-']) && c.parse::<f64>().is_err() {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            }
            s.push_str("  ");
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = format!("{title}\n");
    out.push_str(&line(header));
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
    }
    out
}
