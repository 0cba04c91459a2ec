//! Seeded habit-trace generator.
//!
//! Each user owns a handful of anchor places (home, work, ...) and a fixed
//! daily schedule that maps every hour of the day to one anchor. Samples are
//! spread evenly over the date range and scattered around the scheduled
//! anchor with isotropic Gaussian noise.

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Dataset, GpsSample, LAT_RANGE, LON_RANGE};
use crate::error::{Error, Result};
use crate::exec::mix_seed;

/// Centre and half-width (degrees) of the region user home areas are drawn from.
const REGION_CENTER: (f64, f64) = (35.68, 139.77);
const REGION_HALF_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub samples_per_user: usize,
    pub anchors_per_user: usize,
    /// Anchors of one user lie within this many degrees of the user's centre.
    pub anchor_spread_deg: f64,
    pub noise_sigma_deg: f64,
    pub start_date: NaiveDate,
    /// Inclusive.
    pub end_date: NaiveDate,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 30,
            samples_per_user: 500,
            anchors_per_user: 3,
            anchor_spread_deg: 0.05,
            noise_sigma_deg: 0.005,
            start_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            end_date: NaiveDate::from_ymd_opt(2020, 4, 30).unwrap(),
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_owned()));
        if self.n_users == 0 || self.samples_per_user == 0 || self.anchors_per_user == 0 {
            return fail("n_users, samples_per_user and anchors_per_user must be >= 1");
        }
        if self.anchors_per_user > 24 {
            return fail("anchors_per_user must be <= 24 (one schedule band per hour at most)");
        }
        if !(self.noise_sigma_deg > 0.0 && self.noise_sigma_deg.is_finite()) {
            return fail("noise_sigma_deg must be > 0");
        }
        if !(self.anchor_spread_deg >= 0.0 && self.anchor_spread_deg.is_finite()) {
            return fail("anchor_spread_deg must be >= 0");
        }
        if self.start_date > self.end_date {
            return fail("start_date must not be after end_date");
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of `self`. Blank lines and `#` comments are ignored.
    pub fn apply_kv(mut self, text: &str) -> Result<Self> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(self)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
        }
        fn date(key: &str, v: &str) -> Result<NaiveDate> {
            NaiveDate::parse_from_str(v, "%Y-%m-%d")
                .map_err(|_| Error::Config(format!("{key}: expected YYYY-MM-DD, got `{v}`")))
        }
        match key {
            "n_users" => self.n_users = num(key, value)?,
            "samples_per_user" => self.samples_per_user = num(key, value)?,
            "anchors_per_user" => self.anchors_per_user = num(key, value)?,
            "anchor_spread_deg" => self.anchor_spread_deg = num(key, value)?,
            "noise_sigma_deg" => self.noise_sigma_deg = num(key, value)?,
            "start_date" => self.start_date = date(key, value)?,
            "end_date" => self.end_date = date(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Hour-of-day → anchor index. Band boundaries are distinct random hours;
/// band `b` (starting at the `b`-th boundary, wrapping past midnight) maps to anchor `b`.
fn draw_schedule(rng: &mut impl Rng, anchors: usize) -> [usize; 24] {
    let mut cuts = sample(rng, 24, anchors).into_vec();
    cuts.sort_unstable();
    let mut schedule = [0usize; 24];
    for (h, slot) in schedule.iter_mut().enumerate() {
        // Last cut at or before h; hours before the first cut belong to the final band.
        *slot = match cuts.iter().rposition(|&c| c <= h) {
            Some(b) => b,
            None => anchors - 1,
        };
    }
    schedule
}

fn generate_user(cfg: &SynthConfig, user: usize, label: &str) -> Vec<GpsSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, user as u64));
    let center = (
        REGION_CENTER.0 + rng.random_range(-REGION_HALF_WIDTH..=REGION_HALF_WIDTH),
        REGION_CENTER.1 + rng.random_range(-REGION_HALF_WIDTH..=REGION_HALF_WIDTH),
    );
    let spread = cfg.anchor_spread_deg;
    let anchors: Vec<(f64, f64)> = (0..cfg.anchors_per_user)
        .map(|_| {
            let (dlat, dlon) = if spread > 0.0 {
                (rng.random_range(-spread..=spread), rng.random_range(-spread..=spread))
            } else {
                (0.0, 0.0)
            };
            (round6(center.0 + dlat), round6(center.1 + dlon))
        })
        .collect();
    let schedule = draw_schedule(&mut rng, cfg.anchors_per_user);

    let start: NaiveDateTime = cfg.start_date.and_hms_opt(0, 0, 0).unwrap();
    let span_minutes = ((cfg.end_date - cfg.start_date).num_days() + 1) * 24 * 60;
    let stride = span_minutes as f64 / cfg.samples_per_user as f64;
    let phase = rng.random_range(0.0..stride);
    let noise = Normal::new(0.0, cfg.noise_sigma_deg).expect("sigma validated");

    (0..cfg.samples_per_user)
        .map(|k| {
            let minute = (phase + k as f64 * stride).floor() as i64;
            let ts = start + Duration::minutes(minute);
            let (alat, alon) = anchors[schedule[ts.hour() as usize]];
            let lat = (alat + noise.sample(&mut rng)).clamp(LAT_RANGE.0, LAT_RANGE.1);
            let lon = (alon + noise.sample(&mut rng)).clamp(LON_RANGE.0, LON_RANGE.1);
            GpsSample::new(label, ts, round6(lat), round6(lon))
        })
        .collect()
}

/// Generates a deterministic dataset from `cfg`; output depends on nothing but the config.
pub fn generate_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let width = cfg.n_users.to_string().len().max(3);
    let samples = (0..cfg.n_users)
        .flat_map(|u| generate_user(cfg, u, &format!("user{:0width$}", u + 1)))
        .collect();
    Ok(Dataset::new(samples))
}
