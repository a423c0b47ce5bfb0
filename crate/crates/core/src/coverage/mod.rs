//! Relative-distance coverage of position sets.
//!
//! Two routes compute the same set: [`pairwise_distances`] enumerates every
//! pair of positions, [`interval_union`] assembles it from four closed
//! intervals determined by the plan alone. The theorem verifier in
//! [`theorems`] builds on the interval form.

mod distance_set;
pub mod theorems;

use std::io::Write;

use serde::Serialize;

pub use distance_set::DistanceSet;

use crate::error::{Error, Result};
use crate::indexing::{PositionSet, SegmentPlan};

/// Every `j − i` with `i ≤ j` in the set (distance 0 included). `O(N²)`.
pub fn pairwise_distances(positions: &PositionSet, l: usize) -> DistanceSet {
    let idx = positions.indices();
    let mut set = DistanceSet::new(l);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a..] {
            set.insert(j - i);
        }
    }
    set
}

/// The four intervals covered by a head of `head` positions, a tail of `tail`
/// positions and a middle run `[middle_start, middle_end]` in a window of `l`.
pub fn distance_intervals(
    l: usize,
    head: usize,
    tail: usize,
    middle_start: usize,
    middle_end: usize,
) -> [(i64, i64); 4] {
    let (l, h, t) = (l as i64, head as i64, tail as i64);
    let (ps, pe) = (middle_start as i64, middle_end as i64);
    let widest = (h - 1).max(pe - ps).max(t - 1);
    [
        (0, widest),
        (ps - h + 1, pe),
        (l - t - pe, l - 1 - ps),
        (l - t - h + 1, l - 1),
    ]
}

pub fn relative_distance_union(
    l: usize,
    head: usize,
    tail: usize,
    middle_start: usize,
    middle_end: usize,
) -> DistanceSet {
    let mut set = DistanceSet::new(l);
    for (lo, hi) in distance_intervals(l, head, tail, middle_start, middle_end) {
        set.insert_interval(lo, hi);
    }
    set
}

/// Distance set of a plan from its interval form.
pub fn interval_union(plan: &SegmentPlan, l: usize) -> DistanceSet {
    relative_distance_union(l, plan.head_len, plan.tail_len, plan.middle_start, plan.middle_end)
}

/// Running coverage of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub window: usize,
    /// `|D_r|` of each sample.
    pub per_sample_sizes: Vec<usize>,
    /// Covered fraction of `[0, L)` after each sample.
    pub cumulative_fractions: Vec<f64>,
    /// Number of samples covering each distance.
    pub distance_histogram: Vec<u64>,
    /// Samples needed to first cover every distance, if that happens.
    pub samples_to_full: Option<usize>,
}

impl CoverageReport {
    pub fn final_fraction(&self) -> f64 {
        self.cumulative_fractions.last().copied().unwrap_or(0.0)
    }

    pub fn is_full(&self) -> bool {
        self.samples_to_full.is_some()
    }

    /// Line-delimited JSON: one record per sample, then a summary record.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, (size, frac)) in self
            .per_sample_sizes
            .iter()
            .zip(&self.cumulative_fractions)
            .enumerate()
        {
            let rec = serde_json::json!({
                "sample_id": i,
                "size": size,
                "cumulative_fraction": frac,
            });
            writeln!(out, "{rec}")?;
        }
        let summary = serde_json::json!({
            "summary": true,
            "L": self.window,
            "samples": self.per_sample_sizes.len(),
            "final_fraction": self.final_fraction(),
            "samples_to_full": self.samples_to_full,
        });
        writeln!(out, "{summary}")
    }

    /// `distance,count` rows for plotting.
    pub fn write_histogram_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "distance,count")?;
        for (d, c) in self.distance_histogram.iter().enumerate() {
            writeln!(out, "{d},{c}")?;
        }
        Ok(())
    }
}

/// Folds per-sample distance sets with OR, recording progress after each sample.
pub fn cumulative_coverage<'a, I>(plans: I, l: usize) -> Result<CoverageReport>
where
    I: IntoIterator<Item = &'a SegmentPlan>,
{
    if l == 0 {
        return Err(Error::invalid("window length must be positive"));
    }
    let mut covered = DistanceSet::new(l);
    let mut diff = vec![0i64; l + 1];
    let mut report = CoverageReport {
        window: l,
        per_sample_sizes: Vec::new(),
        cumulative_fractions: Vec::new(),
        distance_histogram: Vec::new(),
        samples_to_full: None,
    };
    for plan in plans {
        let set = interval_union(plan, l);
        for r in set.ranges() {
            diff[*r.start()] += 1;
            diff[*r.end() + 1] -= 1;
        }
        report.per_sample_sizes.push(set.count());
        covered.union_with(&set);
        let count = covered.count();
        report.cumulative_fractions.push(count as f64 / l as f64);
        if report.samples_to_full.is_none() && count == l {
            report.samples_to_full = Some(report.per_sample_sizes.len());
        }
    }
    if report.per_sample_sizes.is_empty() {
        return Err(Error::invalid("schedule is empty"));
    }
    let mut running = 0i64;
    report.distance_histogram = diff[..l]
        .iter()
        .map(|&d| {
            running += d;
            running as u64
        })
        .collect();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexing::{materialize_window, Strategy};

    fn plan(h: usize, ps: usize, pe: usize, alpha: i64, n: usize) -> SegmentPlan {
        SegmentPlan {
            strategy: Strategy::Relativity,
            head_len: h,
            tail_len: h,
            middle_len: n - 2 * h,
            alpha,
            middle_start: ps,
            middle_end: pe,
        }
    }

    #[test]
    fn worked_example_both_routes() {
        let p = plan(3, 12, 14, 2, 9);
        let positions = materialize_window(&p, 9, 27).unwrap();
        let brute = pairwise_distances(&positions, 27);
        let formula = interval_union(&p, 27);
        assert_eq!(brute, formula);
        assert_eq!(brute.count(), 13);
        assert_eq!(brute.ranges(), vec![0..=2, 10..=14, 22..=26]);
        assert_eq!(
            distance_intervals(27, 3, 3, 12, 14),
            [(0, 2), (10, 14), (10, 14), (22, 26)]
        );
    }

    #[test]
    fn contiguous_window_covers_everything_below_n() {
        let positions = PositionSet::new((0..40).collect()).unwrap();
        let set = pairwise_distances(&positions, 40);
        assert_eq!(set.ranges(), vec![0..=39]);
        let p = plan(5, 5, 34, 1, 40);
        assert_eq!(interval_union(&p, 40).ranges(), vec![0..=39]);
    }

    #[test]
    fn two_point_set() {
        let positions = PositionSet::new(vec![0, 99]).unwrap();
        assert_eq!(pairwise_distances(&positions, 100).iter().collect::<Vec<_>>(), vec![0, 99]);
    }

    #[test]
    fn single_contiguous_plan_is_immediately_full() {
        let p = plan(5, 5, 34, 1, 40);
        let report = cumulative_coverage([&p], 40).unwrap();
        assert_eq!(report.final_fraction(), 1.0);
        assert_eq!(report.samples_to_full, Some(1));
    }

    #[test]
    fn single_sample_fraction_is_its_size() {
        let p = plan(3, 12, 14, 2, 9);
        let report = cumulative_coverage([&p], 27).unwrap();
        assert_eq!(report.cumulative_fractions, vec![13.0 / 27.0]);
        assert_eq!(report.samples_to_full, None);
        assert_eq!(report.distance_histogram.iter().sum::<u64>(), 13);
    }

    #[test]
    fn duplicate_sample_does_not_change_final_fraction() {
        let a = plan(3, 12, 14, 2, 9);
        let b = plan(3, 6, 8, 1, 9);
        let once = cumulative_coverage([&a, &b], 27).unwrap();
        let twice = cumulative_coverage([&a, &b, &b], 27).unwrap();
        assert_eq!(once.final_fraction(), twice.final_fraction());
        assert!(twice.cumulative_fractions.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn empty_schedule_rejected() {
        assert!(cumulative_coverage(std::iter::empty(), 27).is_err());
    }

    #[test]
    fn report_serialisation_shapes() {
        let p = plan(3, 12, 14, 2, 9);
        let report = cumulative_coverage([&p, &p], 27).unwrap();
        let mut jsonl = Vec::new();
        report.write_jsonl(&mut jsonl).unwrap();
        let text = String::from_utf8(jsonl).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().last().unwrap().contains("\"summary\":true"));
        let mut csv = Vec::new();
        report.write_histogram_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(csv.lines().count(), 28);
        assert!(csv.contains("\n12,2\n"));
    }
}
