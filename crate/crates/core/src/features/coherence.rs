//! Distance-coherence sets and values.
//!
//! For a sample `s` and window radius `z`, the coherence set holds every other
//! sample of the same user whose hour-of-day is within `z` hours of `s`
//! (same hour included, dates and minutes ignored). In weekly mode members must
//! also fall on the same weekday. The feature value is the Euclidean distance,
//! in raw degrees, between `s` and the centroid of that set.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceMode {
    #[default]
    Daily,
    Weekly,
}

impl std::str::FromStr for CoherenceMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "daily" => Ok(Self::Daily),
            "weekly" => Ok(Self::Weekly),
            other => Err(format!("unknown mode `{other}` (daily|weekly)")),
        }
    }
}

/// Distance between two hours of the day. Plain difference unless `wrap`,
/// in which case 23 and 0 are one hour apart.
pub fn hour_distance(a: u32, b: u32, wrap: bool) -> u32 {
    let d = a.abs_diff(b);
    if wrap {
        d.min(24 - d)
    } else {
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceSet {
    /// Dataset positions, ascending.
    pub members: Vec<usize>,
    /// `(lat, lon)` mean of the members; `None` when the set is empty.
    pub centroid: Option<(f64, f64)>,
}

impl CoherenceSet {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Plain Euclidean distance in degree space; `fill` when the set is empty.
pub fn distance_coherence(lat: f64, lon: f64, set: &CoherenceSet, fill: f64) -> f64 {
    match set.centroid {
        Some((clat, clon)) => distance(lat, lon, clat, clon),
        None => fill,
    }
}

#[inline]
pub(crate) fn distance(lat: f64, lon: f64, clat: f64, clon: f64) -> f64 {
    let dlat = lat - clat;
    let dlon = lon - clon;
    (dlat * dlat + dlon * dlon).sqrt()
}

/// Per-user hour buckets (per weekday as well in weekly mode).
///
/// Built once, then read-only.
pub struct CoherenceIndex<'a> {
    dataset: &'a Dataset,
    mode: CoherenceMode,
    wrap_hours: bool,
    /// Sample position → slot in `buckets`.
    user_slot: Vec<usize>,
    /// `buckets[user][bucket]` holds ascending positions.
    buckets: Vec<Vec<Vec<usize>>>,
}

impl<'a> CoherenceIndex<'a> {
    pub fn new(dataset: &'a Dataset, mode: CoherenceMode, wrap_hours: bool) -> Self {
        let n_buckets = match mode {
            CoherenceMode::Daily => 24,
            CoherenceMode::Weekly => 7 * 24,
        };
        let mut user_slot = vec![0; dataset.len()];
        let mut buckets = Vec::with_capacity(dataset.n_users());
        for (slot, (_, positions)) in dataset.users().enumerate() {
            let mut user_buckets = vec![Vec::new(); n_buckets];
            for &p in positions {
                user_slot[p] = slot;
                let s = &dataset.samples()[p];
                user_buckets[Self::bucket_of(mode, s.weekday(), s.hour())].push(p);
            }
            buckets.push(user_buckets);
        }
        Self {
            dataset,
            mode,
            wrap_hours,
            user_slot,
            buckets,
        }
    }

    fn bucket_of(mode: CoherenceMode, weekday: u32, hour: u32) -> usize {
        match mode {
            CoherenceMode::Daily => hour as usize,
            CoherenceMode::Weekly => (weekday as usize - 1) * 24 + hour as usize,
        }
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    /// Members within `max_z` hours of sample `i`, ascending by position,
    /// each paired with its hour distance.
    pub fn candidates(&self, i: usize, max_z: u32) -> Vec<(usize, u32)> {
        let s = &self.dataset.samples()[i];
        let user = &self.buckets[self.user_slot[i]];
        let mut out = Vec::new();
        for h in 0..24u32 {
            let dist = hour_distance(s.hour(), h, self.wrap_hours);
            if dist > max_z {
                continue;
            }
            let bucket = &user[Self::bucket_of(self.mode, s.weekday(), h)];
            out.extend(bucket.iter().filter(|&&p| p != i).map(|&p| (p, dist)));
        }
        out.sort_unstable_by_key(|&(p, _)| p);
        out
    }

    pub fn coherence_set(&self, i: usize, z: u32) -> CoherenceSet {
        let members: Vec<usize> = self.candidates(i, z).into_iter().map(|(p, _)| p).collect();
        let centroid = centroid_of(self.dataset, members.iter().copied());
        CoherenceSet { members, centroid }
    }

    /// Unscaled coherence values for `z = 1..=alpha`; `None` marks an empty set.
    pub fn coherence_values(&self, i: usize, alpha: u32) -> Vec<Option<f64>> {
        let samples = self.dataset.samples();
        let s = &samples[i];
        let candidates = self.candidates(i, alpha);
        (1..=alpha)
            .map(|z| {
                let members = candidates.iter().filter(|&&(_, d)| d <= z).map(|&(p, _)| p);
                centroid_of(self.dataset, members)
                    .map(|(clat, clon)| distance(s.latitude, s.longitude, clat, clon))
            })
            .collect()
    }
}

/// Arithmetic mean of the members' coordinates, summed in iteration order.
fn centroid_of(dataset: &Dataset, members: impl Iterator<Item = usize>) -> Option<(f64, f64)> {
    let samples = dataset.samples();
    let (mut lat, mut lon, mut count) = (0.0, 0.0, 0usize);
    for p in members {
        lat += samples[p].latitude;
        lon += samples[p].longitude;
        count += 1;
    }
    (count > 0).then(|| (lat / count as f64, lon / count as f64))
}

/// One-off coherence set lookup. Builds a fresh index; use
/// [`CoherenceIndex`] when querying many samples.
pub fn coherence_set(
    dataset: &Dataset,
    i: usize,
    z: u32,
    mode: CoherenceMode,
    wrap_hours: bool,
) -> CoherenceSet {
    CoherenceIndex::new(dataset, mode, wrap_hours).coherence_set(i, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::worked_example;
    use crate::data::GpsSample;
    use chrono::NaiveDate;

    fn members(d: &Dataset, i: usize, z: u32) -> Vec<usize> {
        coherence_set(d, i, z, CoherenceMode::Daily, false).members
    }

    #[test]
    fn worked_example_memberships() {
        let d = worked_example();
        let expected: [&[usize]; 7] = [&[1], &[0, 2], &[1], &[4, 5, 6], &[3, 5], &[3, 4, 6], &[3, 5]];
        for (i, want) in expected.iter().enumerate() {
            assert_eq!(members(&d, i, 1), *want, "sample s{}", i + 1);
        }
    }

    #[test]
    fn worked_example_values() {
        let d = worked_example();
        let s = &d.samples()[0];
        let set = coherence_set(&d, 0, 1, CoherenceMode::Daily, false);
        let dc = distance_coherence(s.latitude, s.longitude, &set, 0.0);
        assert!((dc - 0.01414214).abs() < 1e-8, "{dc}");

        let s = &d.samples()[1];
        let set = coherence_set(&d, 1, 1, CoherenceMode::Daily, false);
        let (clat, clon) = set.centroid.unwrap();
        assert!((clat - 35.645).abs() < 1e-12 && (clon - 139.71).abs() < 1e-12);
        let dc = distance_coherence(s.latitude, s.longitude, &set, 0.0);
        assert!((dc - 0.015).abs() < 1e-12, "{dc}");
    }

    #[test]
    fn lone_sample_has_empty_set() {
        let t = NaiveDate::from_ymd_opt(2020, 3, 3).unwrap().and_hms_opt(8, 0, 0).unwrap();
        let d = Dataset::new(vec![
            GpsSample::new("a", t, 1.0, 2.0),
            GpsSample::new("b", t, 1.0, 2.0),
        ]);
        for z in [1, 5, 23] {
            let set = coherence_set(&d, 0, z, CoherenceMode::Daily, false);
            assert!(set.is_empty() && set.centroid.is_none());
            assert_eq!(distance_coherence(1.0, 2.0, &set, 0.0), 0.0);
            assert_eq!(distance_coherence(1.0, 2.0, &set, -1.0), -1.0);
        }
    }

    #[test]
    fn identical_point_gives_zero() {
        let set = CoherenceSet { members: vec![3], centroid: Some((10.5, 20.25)) };
        assert_eq!(distance_coherence(10.5, 20.25, &set, 7.0), 0.0);
    }

    #[test]
    fn midnight_wrap_only_when_enabled() {
        assert_eq!(hour_distance(23, 0, false), 23);
        assert_eq!(hour_distance(23, 0, true), 1);
        assert_eq!(hour_distance(2, 22, true), 4);
        assert_eq!(hour_distance(12, 0, true), 12);

        let day = NaiveDate::from_ymd_opt(2020, 3, 3).unwrap();
        let d = Dataset::new(vec![
            GpsSample::new("a", day.and_hms_opt(23, 30, 0).unwrap(), 1.0, 1.0),
            GpsSample::new("a", day.and_hms_opt(0, 10, 0).unwrap(), 2.0, 2.0),
        ]);
        assert!(coherence_set(&d, 0, 1, CoherenceMode::Daily, false).is_empty());
        assert_eq!(coherence_set(&d, 0, 1, CoherenceMode::Daily, true).members, vec![1]);
    }

    #[test]
    fn weekly_mode_requires_same_weekday() {
        // 2020-01-16 Thu, 2020-01-23 Thu, 2020-01-17 Fri.
        let at = |d: u32, h: u32| NaiveDate::from_ymd_opt(2020, 1, d).unwrap().and_hms_opt(h, 0, 0).unwrap();
        let d = Dataset::new(vec![
            GpsSample::new("a", at(16, 9), 0.0, 0.0),
            GpsSample::new("a", at(23, 10), 1.0, 1.0),
            GpsSample::new("a", at(17, 9), 2.0, 2.0),
        ]);
        assert_eq!(coherence_set(&d, 0, 1, CoherenceMode::Weekly, false).members, vec![1]);
        assert_eq!(coherence_set(&d, 0, 1, CoherenceMode::Daily, false).members, vec![1, 2]);
    }

    #[test]
    fn minutes_and_dates_do_not_matter() {
        let d = worked_example();
        // s2 (11:55) and s3 (12:50) are 55 minutes apart yet one hour apart by clock hour.
        assert!(members(&d, 2, 1).contains(&1));
        assert_eq!(members(&d, 0, 0), Vec::<usize>::new());
    }
}
