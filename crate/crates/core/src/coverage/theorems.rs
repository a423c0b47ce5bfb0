//! Exhaustive checks of the maximal-coverage results for small windows.
//!
//! For a fixed head, tail and middle span, every admissible middle placement
//! `(P_s, P_e)` is scored by `|D_r|`, the size of its relative-distance union.
//! The checks then compare the true optimum with the closed-form prediction
//! `MAX + 2N`, the two inequality groups that characterise the optimum, the
//! middle-position region `[N, L/2) ∪ (L/2, L−N]`, and the bound
//! `L ≥ S_m + L_h + L_t > L − N/2` on the area swept by optimal middles.
//! The verifier reports what it finds; it never assumes a claim holds.

use std::fmt;

use serde::Serialize;

use super::distance_intervals;
use crate::error::{Error, Result};

/// Default cap on enumerated `(P_s, P_e)` candidates.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Default `L / N` ratio below which the large-window assumption is flagged.
pub const DEFAULT_REGIME_RATIO: f64 = 8.0;

/// How the middle length relates to its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// `P_e − P_s = N − L_h − L_t`; the middle holds one extra position.
    /// The `MAX + 2N` formula balances under this convention.
    Span,
    /// `P_e − P_s + 1 = N − L_h − L_t`, as produced by the schedule generator.
    /// The disjoint optimum is `MAX + 2N − 2`.
    Count,
}

impl Convention {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "span" => Some(Convention::Span),
            "count" => Some(Convention::Count),
            _ => None,
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Span => "span",
            Convention::Count => "count",
        })
    }
}

/// A verification instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Instance {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "L_h")]
    pub head: usize,
    #[serde(rename = "L_t")]
    pub tail: usize,
    pub convention: Convention,
}

impl Instance {
    pub fn new(n: usize, l: usize, head: usize, tail: usize, convention: Convention) -> Result<Self> {
        let inst = Self {
            n,
            l,
            head,
            tail,
            convention,
        };
        if head == 0 || tail == 0 {
            return Err(Error::invalid("head and tail must be non-empty"));
        }
        if head + tail >= n {
            return Err(Error::invalid(format!(
                "L_h + L_t = {} leaves no middle for N = {n}",
                head + tail
            )));
        }
        if l < n {
            return Err(Error::invalid(format!("need L >= N, got N={n} L={l}")));
        }
        Ok(inst)
    }

    /// `P_e − P_s` under the chosen convention.
    pub fn span(&self) -> usize {
        let middle = self.n - self.head - self.tail;
        match self.convention {
            Convention::Span => middle,
            Convention::Count => middle - 1,
        }
    }

    /// `max(L_h − 1, P_e − P_s, L_t − 1)`, constant for a fixed span.
    pub fn widest_segment(&self) -> usize {
        (self.head - 1).max(self.span()).max(self.tail - 1)
    }

    /// Size of the union when the four intervals are pairwise disjoint.
    pub fn predicted_max(&self) -> usize {
        let disjoint = self.widest_segment() + 2 * self.n;
        match self.convention {
            Convention::Span => disjoint,
            Convention::Count => disjoint - 2,
        }
    }

    /// Admissible middle starts: the middle stays clear of head and tail.
    pub fn starts(&self) -> std::ops::Range<usize> {
        let end = (self.l + 1).saturating_sub(self.tail + self.span() + 1);
        self.head..end.max(self.head)
    }

    pub fn candidate_count(&self) -> u64 {
        self.starts().len() as u64
    }

    fn check_budget(&self, budget: u64) -> Result<()> {
        let candidates = self.candidate_count();
        if candidates > budget {
            return Err(Error::InstanceTooLarge { candidates, budget });
        }
        Ok(())
    }

    /// First inequality group: `MAX + L_h − 1 < P_s < P_e < (L − L_t)/2`.
    pub fn in_lower_group(&self, ps: usize, pe: usize) -> bool {
        let max = self.widest_segment();
        max + self.head - 1 < ps && ps < pe && 2 * pe < self.l - self.tail
    }

    /// Second inequality group: `(L + L_h)/2 − 1 < P_s < P_e < L − L_t − MAX`.
    pub fn in_upper_group(&self, ps: usize, pe: usize) -> bool {
        let max = self.widest_segment();
        self.l + self.head < 2 * (ps + 1) && ps < pe && pe + self.tail + max < self.l
    }

    /// `(P_s, P_e) ∈ [N, L/2) ∪ (L/2, L − N]`, both endpoints on one side.
    pub fn in_lemma_region(&self, ps: usize, pe: usize) -> bool {
        let lower = self.n <= ps && 2 * pe < self.l;
        let upper = 2 * ps > self.l && pe + self.n <= self.l;
        lower || upper
    }
}

/// `|D_r|` for one placement, by merging the four intervals.
pub fn union_size(l: usize, head: usize, tail: usize, ps: usize, pe: usize) -> usize {
    let mut ivs: Vec<(i64, i64)> = distance_intervals(l, head, tail, ps, pe)
        .into_iter()
        .map(|(lo, hi)| (lo.max(0), hi.min(l as i64 - 1)))
        .filter(|(lo, hi)| lo <= hi)
        .collect();
    ivs.sort_unstable();
    let mut total = 0i64;
    let mut reach = -1i64;
    for (lo, hi) in ivs {
        let start = lo.max(reach + 1);
        if hi >= start {
            total += hi - start + 1;
        }
        reach = reach.max(hi);
    }
    total as usize
}

/// Whether the four intervals of a placement are pairwise disjoint.
pub fn distance_intervals_disjoint(instance: &Instance, ps: usize, pe: usize) -> bool {
    let mut ivs = distance_intervals(instance.l, instance.head, instance.tail, ps, pe);
    ivs.sort_unstable();
    ivs.windows(2).all(|w| w[0].1 < w[1].0)
}

/// Scan of all placements with their scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub instance: Instance,
    pub max_size: usize,
    pub maximizers: Vec<(usize, usize)>,
    /// Placements satisfying an inequality group.
    pub group_members: Vec<(usize, usize)>,
}

pub fn scan(instance: &Instance, budget: u64) -> Result<Scan> {
    instance.check_budget(budget)?;
    let span = instance.span();
    let mut max_size = 0;
    let mut maximizers = Vec::new();
    let mut group_members = Vec::new();
    for ps in instance.starts() {
        let pe = ps + span;
        let size = union_size(instance.l, instance.head, instance.tail, ps, pe);
        if size > max_size {
            max_size = size;
            maximizers.clear();
        }
        if size == max_size {
            maximizers.push((ps, pe));
        }
        if instance.in_lower_group(ps, pe) || instance.in_upper_group(ps, pe) {
            group_members.push((ps, pe));
        }
    }
    if max_size == 0 {
        maximizers.clear();
    }
    Ok(Scan {
        instance: *instance,
        max_size,
        maximizers,
        group_members,
    })
}

/// Outcome of the closed-form maximum check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub max_size: usize,
    pub predicted_max: usize,
    pub maximizers: Vec<(usize, usize)>,
    /// The disjoint optimum is reached by some placement.
    pub attained: bool,
    /// Maximizers satisfying neither inequality group (only meaningful when attained).
    pub outside_groups: Vec<(usize, usize)>,
    /// Group members that are not maximizers.
    pub non_maximal_group_members: Vec<(usize, usize)>,
}

impl Theorem1Report {
    /// Optimum equals the prediction and coincides with the group members.
    pub fn holds(&self) -> bool {
        self.attained && self.outside_groups.is_empty() && self.non_maximal_group_members.is_empty()
    }
}

pub fn brute_force_theorem1(instance: &Instance, budget: u64) -> Result<Theorem1Report> {
    Ok(theorem1_from_scan(&scan(instance, budget)?))
}

fn theorem1_from_scan(scan: &Scan) -> Theorem1Report {
    let inst = &scan.instance;
    let predicted_max = inst.predicted_max();
    let attained = scan.max_size == predicted_max;
    let outside_groups = if attained {
        scan.maximizers
            .iter()
            .copied()
            .filter(|&(ps, pe)| !(inst.in_lower_group(ps, pe) || inst.in_upper_group(ps, pe)))
            .collect()
    } else {
        Vec::new()
    };
    let non_maximal_group_members = scan
        .group_members
        .iter()
        .copied()
        .filter(|m| !scan.maximizers.contains(m))
        .collect();
    Theorem1Report {
        max_size: scan.max_size,
        predicted_max,
        maximizers: scan.maximizers.clone(),
        attained,
        outside_groups,
        non_maximal_group_members,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    /// The instance violates the large-window assumption; reported, not judged.
    OutOfRegime,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "FAILS",
            Verdict::OutOfRegime => "out of regime (warning)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub verdict: Verdict,
    pub regime_ok: bool,
    /// Maximizers not inside `[N, L/2) ∪ (L/2, L−N]`.
    pub outside_region: Vec<(usize, usize)>,
    /// Placements inside the region that are not maximizers.
    pub region_non_maximizers: Vec<(usize, usize)>,
}

fn regime_ok(inst: &Instance, ratio: f64) -> bool {
    inst.l as f64 >= ratio * inst.n as f64
}

pub fn lemma_region_check(instance: &Instance, budget: u64, ratio: f64) -> Result<LemmaReport> {
    Ok(lemma_from_scan(&scan(instance, budget)?, ratio))
}

fn lemma_from_scan(scan: &Scan, ratio: f64) -> LemmaReport {
    let inst = &scan.instance;
    let outside_region: Vec<_> = scan
        .maximizers
        .iter()
        .copied()
        .filter(|&(ps, pe)| !inst.in_lemma_region(ps, pe))
        .collect();
    let region_non_maximizers = inst
        .starts()
        .map(|ps| (ps, ps + inst.span()))
        .filter(|&(ps, pe)| inst.in_lemma_region(ps, pe) && !scan.maximizers.contains(&(ps, pe)))
        .collect();
    let regime_ok = regime_ok(inst, ratio);
    let verdict = if !regime_ok {
        Verdict::OutOfRegime
    } else if outside_region.is_empty() {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    LemmaReport {
        verdict,
        regime_ok,
        outside_region,
        region_non_maximizers,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Report {
    pub verdict: Verdict,
    /// Positions covered by the middle of at least one maximizer.
    pub middle_area: usize,
    /// `S_m + L_h + L_t`.
    pub covered: usize,
    /// `L − N/2`.
    pub lower_bound: f64,
    /// `(S_m + L_h + L_t) / L`.
    pub covered_ratio: f64,
    pub bound_ok: bool,
}

pub fn theorem2_middle_coverage(instance: &Instance, budget: u64, ratio: f64) -> Result<Theorem2Report> {
    Ok(theorem2_from_scan(&scan(instance, budget)?, ratio))
}

fn theorem2_from_scan(scan: &Scan, ratio: f64) -> Theorem2Report {
    let inst = &scan.instance;
    let mut marked = vec![false; inst.l];
    for &(ps, pe) in &scan.maximizers {
        for m in &mut marked[ps..=pe] {
            *m = true;
        }
    }
    let middle_area = marked.iter().filter(|&&m| m).count();
    let covered = middle_area + inst.head + inst.tail;
    let bound_ok = covered <= inst.l && 2 * covered > 2 * inst.l - inst.n;
    let verdict = if scan.maximizers.is_empty() || !regime_ok(inst, ratio) {
        Verdict::OutOfRegime
    } else if bound_ok {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Theorem2Report {
        verdict,
        middle_area,
        covered,
        lower_bound: inst.l as f64 - inst.n as f64 / 2.0,
        covered_ratio: covered as f64 / inst.l as f64,
        bound_ok,
    }
}

/// All three checks from a single scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub instance: Instance,
    pub theorem1: Theorem1Report,
    pub lemma: LemmaReport,
    pub theorem2: Theorem2Report,
}

/// Machine-readable verdict record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictRecord {
    pub instance: Instance,
    pub max_size: usize,
    pub predicted_max: usize,
    pub convention: Convention,
    pub maximizer_count: usize,
    pub theorem1_ok: bool,
    pub lemma_ok: bool,
    pub lemma_status: Verdict,
    pub theorem2_ok: bool,
    pub theorem2_status: Verdict,
    pub middle_area: usize,
}

impl Verification {
    pub fn run(instance: Instance, budget: u64, ratio: f64) -> Result<Self> {
        let scan = scan(&instance, budget)?;
        Ok(Self {
            instance,
            theorem1: theorem1_from_scan(&scan),
            lemma: lemma_from_scan(&scan, ratio),
            theorem2: theorem2_from_scan(&scan, ratio),
        })
    }

    pub fn record(&self) -> VerdictRecord {
        VerdictRecord {
            instance: self.instance,
            max_size: self.theorem1.max_size,
            predicted_max: self.theorem1.predicted_max,
            convention: self.instance.convention,
            maximizer_count: self.theorem1.maximizers.len(),
            theorem1_ok: self.theorem1.holds(),
            lemma_ok: self.lemma.verdict == Verdict::Holds,
            lemma_status: self.lemma.verdict,
            theorem2_ok: self.theorem2.verdict == Verdict::Holds,
            theorem2_status: self.theorem2.verdict,
            middle_area: self.theorem2.middle_area,
        }
    }

    /// A failed claim inside the regime. Out-of-regime results never count.
    pub fn any_failure(&self) -> bool {
        (self.theorem1.attained && !self.theorem1.holds())
            || self.lemma.verdict == Verdict::Fails
            || self.theorem2.verdict == Verdict::Fails
    }
}

fn preview(pairs: &[(usize, usize)]) -> String {
    let shown: Vec<String> = pairs.iter().take(4).map(|(a, b)| format!("({a},{b})")).collect();
    let more = if pairs.len() > 4 {
        format!(" … {} total", pairs.len())
    } else {
        String::new()
    };
    format!("{}{more}", shown.join(" "))
}

impl fmt::Display for Verification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = &self.instance;
        let t1 = &self.theorem1;
        writeln!(
            f,
            "instance   N={} L={} L_h={} L_t={} convention={} span={}",
            i.n,
            i.l,
            i.head,
            i.tail,
            i.convention,
            i.span()
        )?;
        writeln!(
            f,
            "maximum    |D_r| = {} (predicted {}), {} maximizer(s): {}",
            t1.max_size,
            t1.predicted_max,
            t1.maximizers.len(),
            preview(&t1.maximizers)
        )?;
        if t1.attained {
            writeln!(
                f,
                "theorem 1  {} ({} maximizer(s) outside both groups, {} group member(s) not maximal)",
                if t1.holds() { "holds" } else { "FAILS" },
                t1.outside_groups.len(),
                t1.non_maximal_group_members.len()
            )?;
        } else {
            writeln!(f, "theorem 1  disjoint optimum not attainable (max < predicted); warning")?;
        }
        let lm = &self.lemma;
        writeln!(
            f,
            "lemma      {} ({} maximizer(s) outside [N, L/2) ∪ (L/2, L−N]{}{})",
            lm.verdict,
            lm.outside_region.len(),
            if lm.outside_region.is_empty() { "" } else { ": " },
            preview(&lm.outside_region)
        )?;
        let t2 = &self.theorem2;
        write!(
            f,
            "theorem 2  {} (S_m={}, S_m+L_h+L_t={}, L={}, L−N/2={}, ratio {:.4})",
            t2.verdict, t2.middle_area, t2.covered, i.l, t2.lower_bound, t2.covered_ratio
        )
    }
}
