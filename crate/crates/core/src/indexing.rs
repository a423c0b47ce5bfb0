//! Segment plans and position-index sets.
//!
//! A training sample keeps the pre-trained window of `N` tokens but assigns
//! them positions drawn from the target window `[0, L)`: a fixed head
//! `0..L_h`, a fixed tail `L-L_t..L`, and a contiguous middle run
//! `P_s..=P_e` whose placement is driven by a truncated-Gaussian scale
//! factor `alpha`.

use std::fmt;

use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{round_half_away, TruncatedGaussianTable, DEFAULT_GRID};
use crate::rng;

/// Label of the per-sample substream used by [`ScheduleGenerator`].
pub const SAMPLE_STREAM: &str = "sample";

fn default_k() -> usize {
    32
}
fn default_sigma() -> f64 {
    3.0
}
fn default_mix() -> f64 {
    0.5
}
fn default_grid() -> usize {
    DEFAULT_GRID
}

/// Parameters of a schedule. Field names match the flat config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextConfig {
    /// Pre-trained window.
    #[serde(rename = "N")]
    pub n: usize,
    /// Target window.
    #[serde(rename = "L")]
    pub l: usize,
    /// Head/tail length of the continuity strategy.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Mean of the scale-factor Gaussian; `None` means `(1 + L/N) / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Probability of drawing the continuity strategy.
    #[serde(default = "default_mix")]
    pub strategy_mix: f64,
    #[serde(default = "default_grid")]
    pub n_grid: usize,
}

impl ContextConfig {
    pub fn new(n: usize, l: usize) -> Self {
        Self {
            n,
            l,
            k: default_k(),
            mu: None,
            sigma: default_sigma(),
            seed: 0,
            strategy_mix: default_mix(),
            n_grid: default_grid(),
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_strategy_mix(mut self, mix: f64) -> Self {
        self.strategy_mix = mix;
        self
    }

    pub fn with_grid(mut self, n_grid: usize) -> Self {
        self.n_grid = n_grid;
        self
    }

    /// Upper truncation bound `L / N` of the scale factor.
    pub fn expansion(&self) -> f64 {
        self.l as f64 / self.n as f64
    }

    /// Mean actually used: the override, or the midpoint of `[1, L/N]`.
    pub fn effective_mu(&self) -> f64 {
        self.mu.unwrap_or_else(|| (1.0 + self.expansion()) / 2.0)
    }

    /// Largest admissible scale factor, `round(L / N)`.
    pub fn max_alpha(&self) -> usize {
        round_half_away(self.expansion()) as usize
    }

    pub fn relativity_head(&self) -> usize {
        self.n / 3
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Config(format!("N must be >= 3, got {}", self.n)));
        }
        if self.l < self.n {
            return Err(Error::Config(format!(
                "L must be >= N, got N={} L={}",
                self.n, self.l
            )));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be > 0".into()));
        }
        if 2 * self.k >= self.n {
            return Err(Error::Config(format!(
                "k={} leaves no middle segment for N={}",
                self.k, self.n
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if let Some(mu) = self.mu {
            if !mu.is_finite() {
                return Err(Error::Config("mu must be finite".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.strategy_mix) {
            return Err(Error::Config(format!(
                "strategy_mix must lie in [0, 1], got {}",
                self.strategy_mix
            )));
        }
        if self.n_grid < 2 {
            return Err(Error::Config("n_grid must be >= 2".into()));
        }
        Ok(())
    }

    /// Truncated Gaussian on `[1, L/N]`, or a point mass at 1 when `L == N`.
    pub fn scale_distribution(&self) -> Result<ScaleDistribution> {
        self.validate()?;
        if self.l == self.n {
            return Ok(ScaleDistribution::Fixed(1));
        }
        TruncatedGaussianTable::new(
            self.effective_mu(),
            self.sigma,
            1.0,
            self.expansion(),
            self.n_grid,
        )
        .map(ScaleDistribution::Gaussian)
    }

    /// Uniform scale factor on `[1, L/N]`, the baseline the Gaussian is compared against.
    pub fn uniform_distribution(&self) -> Result<ScaleDistribution> {
        self.validate()?;
        Ok(ScaleDistribution::Uniform {
            lo: 1.0,
            hi: self.expansion(),
        })
    }
}

/// Source of the integer scale factor `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleDistribution {
    Fixed(i64),
    Gaussian(TruncatedGaussianTable),
    /// Continuous uniform on `[lo, hi]`, rounded.
    Uniform { lo: f64, hi: f64 },
}

impl ScaleDistribution {
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<i64> {
        match self {
            ScaleDistribution::Fixed(a) => Ok(*a),
            ScaleDistribution::Gaussian(table) => table.inverse_sample(rng::unit_f64(rng)),
            ScaleDistribution::Uniform { lo, hi } => {
                Ok(round_half_away(lo + rng::unit_f64(rng) * (hi - lo)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Short head and tail of length `k`; the middle is nearly the whole window.
    Continuity,
    /// Head, middle and tail of roughly `N / 3` each.
    Relativity,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Continuity => f.write_str("continuity"),
            Strategy::Relativity => f.write_str("relativity"),
        }
    }
}

/// Draws the segmentation strategy and its head length.
pub fn sample_strategy<R: RngCore + ?Sized>(config: &ContextConfig, rng: &mut R) -> (Strategy, usize) {
    if rng::unit_f64(rng) < config.strategy_mix {
        (Strategy::Continuity, config.k)
    } else {
        (Strategy::Relativity, config.relativity_head())
    }
}

/// One sample's segmentation. Serialised with the short symbolic field names
/// used by downstream training pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub strategy: Strategy,
    #[serde(rename = "L_h")]
    pub head_len: usize,
    #[serde(rename = "L_t")]
    pub tail_len: usize,
    #[serde(rename = "L_m")]
    pub middle_len: usize,
    pub alpha: i64,
    #[serde(rename = "P_s")]
    pub middle_start: usize,
    #[serde(rename = "P_e")]
    pub middle_end: usize,
}

impl SegmentPlan {
    /// Midpoint of the middle run.
    pub fn middle_centre(&self) -> f64 {
        (self.middle_start + self.middle_end) as f64 / 2.0
    }

    /// Checks every structural invariant against the window sizes.
    pub fn check(&self, n: usize, l: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::Consistency(msg));
        if self.tail_len != self.head_len {
            return fail(format!("L_t={} differs from L_h={}", self.tail_len, self.head_len));
        }
        if self.head_len + self.middle_len + self.tail_len != n {
            return fail(format!(
                "L_h+L_m+L_t = {} != N = {n}",
                self.head_len + self.middle_len + self.tail_len
            ));
        }
        if self.middle_len == 0 || self.middle_end + 1 != self.middle_start + self.middle_len {
            return fail(format!(
                "middle [{}, {}] does not hold L_m={} positions",
                self.middle_start, self.middle_end, self.middle_len
            ));
        }
        if self.middle_start < self.head_len {
            return fail(format!("P_s={} overlaps the head", self.middle_start));
        }
        if self.middle_end + self.tail_len + 1 > l {
            return fail(format!("P_e={} overlaps the tail", self.middle_end));
        }
        let max_alpha = round_half_away(l as f64 / n as f64);
        if self.alpha < 1 || self.alpha > max_alpha {
            return fail(format!("alpha={} outside [1, {max_alpha}]", self.alpha));
        }
        Ok(())
    }
}

/// Places the middle run for a given head length and scale factor.
///
/// `P_e` is uniform over `[L_h + α·L_m, α·N − 1 − L_t]`, with the upper end
/// capped at `L − 1 − L_t`. An empty range (always the case for `α = 1`)
/// resolves to its upper end, which for `α = 1` is the contiguous window
/// `[0, N)`.
pub fn place_middle<R: RngCore + ?Sized>(
    n: usize,
    l: usize,
    strategy: Strategy,
    head_len: usize,
    alpha: i64,
    rng: &mut R,
) -> Result<SegmentPlan> {
    let tail_len = head_len;
    if 2 * head_len >= n {
        return Err(Error::Config(format!(
            "head length {head_len} leaves no middle segment for N={n}"
        )));
    }
    let middle_len = n - 2 * head_len;
    if alpha < 1 {
        return Err(Error::invalid(format!("alpha must be >= 1, got {alpha}")));
    }
    let a = alpha as usize;
    let lower = head_len + a * middle_len;
    let upper = (a * n - 1 - tail_len).min(l - 1 - tail_len);
    let middle_end = if lower <= upper {
        rng::inclusive_range(rng, lower as u64, upper as u64) as usize
    } else {
        upper
    };
    Ok(SegmentPlan {
        strategy,
        head_len,
        tail_len,
        middle_len,
        alpha,
        middle_start: middle_end + 1 - middle_len,
        middle_end,
    })
}

/// Draws one complete plan: strategy, scale factor, then middle placement.
pub fn sample_plan<R: RngCore + ?Sized>(
    config: &ContextConfig,
    scale: &ScaleDistribution,
    rng: &mut R,
) -> Result<SegmentPlan> {
    config.validate()?;
    let (strategy, head_len) = sample_strategy(config, rng);
    let alpha = scale.sample(rng)?;
    place_middle(config.n, config.l, strategy, head_len, alpha, rng)
}

/// The `N` position indices of one training sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PositionSet(Vec<usize>);

impl PositionSet {
    /// Wraps indices after checking they are strictly increasing.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Consistency("positions must be strictly increasing".into()));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

/// Expands a plan into `{0..L_h} ∪ {P_s..=P_e} ∪ {L−L_t..L}`.
pub fn materialize(plan: &SegmentPlan, config: &ContextConfig) -> Result<PositionSet> {
    materialize_window(plan, config.n, config.l)
}

pub fn materialize_window(plan: &SegmentPlan, n: usize, l: usize) -> Result<PositionSet> {
    plan.check(n, l)?;
    let mut indices = Vec::with_capacity(n);
    indices.extend(0..plan.head_len);
    indices.extend(plan.middle_start..=plan.middle_end);
    indices.extend(l - plan.tail_len..l);
    Ok(PositionSet(indices))
}

/// One generated sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub sample_id: u64,
    #[serde(flatten)]
    pub plan: SegmentPlan,
}

/// Samples plans on demand. Sample `i` always comes from substream `i`, so
/// any subset of ids can be generated independently and in any order.
#[derive(Debug, Clone)]
pub struct ScheduleGenerator {
    config: ContextConfig,
    scale: ScaleDistribution,
}

impl ScheduleGenerator {
    pub fn new(config: ContextConfig) -> Result<Self> {
        let scale = config.scale_distribution()?;
        Ok(Self { config, scale })
    }

    /// Generator with an explicit scale distribution (e.g. the uniform baseline).
    pub fn with_scale(config: ContextConfig, scale: ScaleDistribution) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, scale })
    }

    pub fn config(&self) -> &ContextConfig {
        &self.config
    }

    pub fn scale(&self) -> &ScaleDistribution {
        &self.scale
    }

    pub fn sample(&self, sample_id: u64) -> Result<ScheduleEntry> {
        let mut stream = rng::substream(self.config.seed, SAMPLE_STREAM, sample_id);
        let plan = sample_plan(&self.config, &self.scale, &mut stream)?;
        Ok(ScheduleEntry { sample_id, plan })
    }

    pub fn generate(&self, count: usize) -> Result<Schedule> {
        if count == 0 {
            return Err(Error::invalid("sample count must be >= 1"));
        }
        let entries = (0..count as u64)
            .map(|id| self.sample(id))
            .collect::<Result<Vec<_>>>()?;
        Ok(Schedule {
            config: self.config.clone(),
            entries,
        })
    }
}

/// An ordered batch of plans. Position sets are materialised on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub config: ContextConfig,
    pub entries: Vec<ScheduleEntry>,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(plan, positions)` pairs in sample-id order.
    pub fn iter_positions(&self) -> impl Iterator<Item = Result<(SegmentPlan, PositionSet)>> + '_ {
        self.entries
            .iter()
            .map(move |e| materialize(&e.plan, &self.config).map(|p| (e.plan, p)))
    }
}

/// Generates `count` samples from `config`, deterministically in `config.seed`.
pub fn batch_generate(config: &ContextConfig, count: usize) -> Result<Schedule> {
    ScheduleGenerator::new(config.clone())?.generate(count)
}
