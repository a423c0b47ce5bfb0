//! Truncated Gaussian over scale factors, tabulated on an equally spaced
//! grid and sampled by inverse transform.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Default number of grid points for the tabulated CDF.
pub const DEFAULT_GRID: usize = 1000;

/// Half-width of the band around `.5` that [`round_half_away`] treats as a tie.
pub const TIE_BAND: f64 = 1e-9;

/// Error function.
///
/// Uses the all-positive series `erf z = 2/√π · e^{-z²} · Σ 2ⁿ z^{2n+1} / (2n+1)!!`
/// for `|z| < 2` and the Laplace continued fraction for `erfc` beyond.
/// Absolute error is below `1e-14` everywhere.
pub fn error_function(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    let a = z.abs();
    let v = if a < 2.0 {
        erf_series(a)
    } else {
        1.0 - erfc_continued_fraction(a)
    };
    v.copysign(z)
}

/// Complementary error function `1 - erf(z)`, accurate in the upper tail.
pub fn complementary_error_function(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z >= 2.0 {
        erfc_continued_fraction(z)
    } else if z >= 0.0 {
        1.0 - erf_series(z)
    } else {
        1.0 + error_function(-z)
    }
}

fn erf_series(a: f64) -> f64 {
    let two_a2 = 2.0 * a * a;
    let mut term = a;
    let mut sum = a;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= two_a2 / f64::from(2 * n + 1);
        sum += term;
        if term < sum * 1e-17 || n > 200 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-a * a).exp() * sum
}

// Modified Lentz evaluation of erfc(z) = e^{-z²}/√π · 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))).
fn erfc_continued_fraction(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for n in 1..500 {
        let a = f64::from(n) * 0.5;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = z + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-z * z).exp() / (PI.sqrt() * f)
}

/// Normal CDF `F(x) = ½(1 + E((x − μ)/(σ√2)))`, evaluated through `erfc` so the
/// lower tail keeps its relative precision.
pub fn normal_cdf(x: f64, mu: f64, sigma: f64) -> f64 {
    0.5 * complementary_error_function(-(x - mu) / sigma * FRAC_1_SQRT_2)
}

/// Rounds to the nearest integer, ties away from zero.
///
/// Values within [`TIE_BAND`] of a half-integer count as ties, so that a
/// midpoint reached through interpolation rounds the same way on every
/// platform.
pub fn round_half_away(x: f64) -> i64 {
    let floor = x.floor();
    let frac = x - floor;
    if (frac - 0.5).abs() <= TIE_BAND {
        if x >= 0.0 {
            floor as i64 + 1
        } else {
            floor as i64
        }
    } else {
        x.round() as i64
    }
}

/// Discretised CDF of a normal distribution truncated to `[lo, hi]`.
///
/// Immutable once built; share it freely between threads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedGaussianTable {
    lo: f64,
    hi: f64,
    mu: f64,
    sigma: f64,
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

/// Tabulates the normal CDF on `n_grid` equally spaced points spanning `[lo, hi]`.
pub fn build_table(
    mu: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    n_grid: usize,
) -> Result<TruncatedGaussianTable> {
    TruncatedGaussianTable::new(mu, sigma, lo, hi, n_grid)
}

impl TruncatedGaussianTable {
    pub fn new(mu: f64, sigma: f64, lo: f64, hi: f64, n_grid: usize) -> Result<Self> {
        if ![mu, sigma, lo, hi].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("mu, sigma, lo and hi must be finite"));
        }
        if sigma <= 0.0 {
            return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
        }
        if lo >= hi {
            return Err(Error::invalid(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        if n_grid < 2 {
            return Err(Error::invalid(format!("n_grid must be >= 2, got {n_grid}")));
        }
        let step = (hi - lo) / (n_grid - 1) as f64;
        let mut grid: Vec<f64> = (0..n_grid).map(|i| lo + step * i as f64).collect();
        grid[n_grid - 1] = hi;
        let cdf: Vec<f64> = grid.iter().map(|&x| normal_cdf(x, mu, sigma)).collect();
        if cdf[n_grid - 1].partial_cmp(&cdf[0]) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::invalid(format!(
                "truncation interval [{lo}, {hi}] carries no representable mass for mu={mu}, sigma={sigma}"
            )));
        }
        Ok(Self {
            lo,
            hi,
            mu,
            sigma,
            grid,
            cdf,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Smallest and largest value [`inverse_sample`](Self::inverse_sample) can return.
    pub fn alpha_range(&self) -> (i64, i64) {
        (round_half_away(self.lo), round_half_away(self.hi))
    }

    /// Continuous inverse-transform value for `u ∈ [0, 1)`, before rounding.
    ///
    /// `u` is first mapped onto `[cdf[0], cdf[last]]`, then the bracketing
    /// grid cell is interpolated linearly.
    pub fn inverse_value(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::invalid(format!("u must lie in [0, 1), got {u}")));
        }
        let first = self.cdf[0];
        let last = self.cdf[self.cdf.len() - 1];
        let target = first + u * (last - first);
        // first i >= 1 with cdf[i] >= target
        let i = self.cdf[1..].partition_point(|&c| c < target) + 1;
        let i = i.min(self.cdf.len() - 1);
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let (f0, f1) = (self.cdf[i - 1], self.cdf[i]);
        let x = if f1 > f0 {
            x0 + (x1 - x0) * (target - f0) / (f1 - f0)
        } else {
            x0
        };
        Ok(x.clamp(self.lo, self.hi))
    }

    /// Integer scale factor for `u ∈ [0, 1)`.
    pub fn inverse_sample(&self, u: f64) -> Result<i64> {
        self.inverse_value(u).map(round_half_away)
    }

    /// Exact probability of each integer outcome, from the normal CDF over the
    /// rounding cell `[a − ½, a + ½)` intersected with `[lo, hi]`.
    pub fn integer_bin_masses(&self) -> Vec<(i64, f64)> {
        let (first, last) = self.alpha_range();
        let total = normal_cdf(self.hi, self.mu, self.sigma) - normal_cdf(self.lo, self.mu, self.sigma);
        (first..=last)
            .map(|a| {
                let left = (a as f64 - 0.5).max(self.lo);
                let right = (a as f64 + 0.5).min(self.hi);
                let mass = if right > left {
                    normal_cdf(right, self.mu, self.sigma) - normal_cdf(left, self.mu, self.sigma)
                } else {
                    0.0
                };
                (a, mass / total)
            })
            .collect()
    }
}

/// Chi-square goodness-of-fit outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed counts against expected probabilities.
///
/// Adjacent cells are pooled left to right until each expected count is at
/// least 5; the last pool absorbs any remainder.
pub fn chi_square_fit(observed: &[u64], probabilities: &[f64]) -> Result<FitResult> {
    if observed.len() != probabilities.len() {
        return Err(Error::DimensionMismatch {
            expected: probabilities.len(),
            actual: observed.len(),
        });
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::invalid("no observations"));
    }
    let n = n as f64;
    let mut pools: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        acc.0 += o as f64;
        acc.1 += p * n;
        if acc.1 >= 5.0 {
            pools.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 > 0.0 || acc.1 > 0.0 {
        match pools.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pools.push(acc),
        }
    }
    let statistic: f64 = pools
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = pools.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).map_err(|e| Error::invalid(e.to_string()))?;
        dist.sf(statistic)
    };
    Ok(FitResult {
        statistic,
        dof,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Alternating Maclaurin series, summed until terms vanish.
    fn erf_taylor(z: f64) -> f64 {
        let mut sum = 0.0;
        let mut power = z;
        let mut fact = 1.0;
        for n in 0..200 {
            let term = power / (fact * (2 * n + 1) as f64);
            sum += if n % 2 == 0 { term } else { -term };
            if term.abs() < 1e-18 {
                break;
            }
            power *= z * z;
            fact *= (n + 1) as f64;
        }
        2.0 / PI.sqrt() * sum
    }

    // Composite Simpson rule for (2/√π)∫₀ᶻ e^{-t²} dt.
    fn erf_simpson(z: f64) -> f64 {
        let n = 20_000;
        let h = z / n as f64;
        let f = |t: f64| (-t * t).exp();
        let mut s = f(0.0) + f(z);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        2.0 / PI.sqrt() * s * h / 3.0
    }

    #[test]
    fn erf_known_values() {
        assert_eq!(error_function(0.0), 0.0);
        assert!((error_function(1.0) - 0.842_700_792_9).abs() < 1e-10);
        assert!((erf_taylor(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
    }

    #[test]
    fn erf_matches_taylor_oracle_on_moderate_range() {
        let mut z = -3.0;
        while z <= 3.0 {
            let err = (error_function(z) - erf_taylor(z)).abs();
            assert!(err < 1e-12, "z={z} err={err}");
            z += 0.01;
        }
    }

    #[test]
    fn erf_matches_quadrature_oracle_to_six() {
        let mut z = 0.05;
        while z <= 6.0 {
            let err = (error_function(z) - erf_simpson(z)).abs();
            assert!(err < 1e-10, "z={z} err={err}");
            z += 0.05;
        }
    }

    #[test]
    fn erf_is_odd_monotone_bounded() {
        let mut prev = -1.0;
        let mut z = -6.0;
        while z <= 6.0 {
            let v = error_function(z);
            assert_eq!(v, -error_function(-z));
            assert!(v >= prev);
            assert!(v.abs() <= 1.0);
            prev = v;
            z += 0.001;
        }
        assert!(error_function(40.0) == 1.0);
    }

    #[test]
    fn erfc_tail_is_positive() {
        assert!(complementary_error_function(10.0) > 0.0);
        let rel = (complementary_error_function(5.0) - 1.537_459_794_428_034_8e-12).abs()
            / 1.537_459_794_428_034_8e-12;
        assert!(rel < 1e-12, "{rel}");
    }

    #[test]
    fn rounding_ties_go_away_from_zero() {
        assert_eq!(round_half_away(4.5), 5);
        assert_eq!(round_half_away(4.499_999_999_99), 5);
        assert_eq!(round_half_away(4.49), 4);
        assert_eq!(round_half_away(-2.5), -3);
        assert_eq!(round_half_away(1.0), 1);
    }

    #[test]
    fn table_grid_endpoints() {
        let t = build_table(4.5, 3.0, 1.0, 8.0, DEFAULT_GRID).unwrap();
        assert_eq!(t.grid().len(), 1000);
        assert_eq!(t.grid()[0], 1.0);
        assert_eq!(t.grid()[999], 8.0);
        assert!(t.grid().windows(2).all(|w| w[1] > w[0]));
        assert!(t.cdf().windows(2).all(|w| w[1] >= w[0]));
        assert!(t.cdf()[0] > 0.0 && t.cdf()[999] < 1.0);
        for (i, &x) in t.grid().iter().enumerate() {
            let expected = 1.0 + 7.0 * i as f64 / 999.0;
            assert!((x - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn minimal_two_point_table() {
        let t = build_table(1.0, 1.0, 1.0, 1.000_001, 2).unwrap();
        assert_eq!(t.grid().len(), 2);
        assert!(t.cdf()[1] > t.cdf()[0]);
    }

    #[test]
    fn centred_midpoint_cdf_matches_trapezoid_oracle() {
        let (lo, hi, sigma) = (1.0, 8.0, 3.0);
        let mu = (lo + hi) / 2.0;
        let t = build_table(mu, sigma, lo, hi, DEFAULT_GRID).unwrap();
        let x = t.grid()[500];
        // F(x) = ½ + ∫_μ^x pdf
        let pdf = |v: f64| (-(v - mu) * (v - mu) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt());
        let n = 100_000;
        let h = (x - mu) / n as f64;
        let integral: f64 = (0..n)
            .map(|i| 0.5 * h * (pdf(mu + i as f64 * h) + pdf(mu + (i + 1) as f64 * h)))
            .sum();
        assert!((t.cdf()[500] - (0.5 + integral)).abs() < 1e-10);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(build_table(1.0, 0.0, 1.0, 8.0, 10).is_err());
        assert!(build_table(1.0, -1.0, 1.0, 8.0, 10).is_err());
        assert!(build_table(1.0, 1.0, 8.0, 8.0, 10).is_err());
        assert!(build_table(1.0, 1.0, 1.0, 8.0, 1).is_err());
        assert!(build_table(f64::NAN, 1.0, 1.0, 8.0, 10).is_err());
        let t = build_table(4.5, 3.0, 1.0, 8.0, 100).unwrap();
        assert!(t.inverse_sample(1.0).is_err());
        assert!(t.inverse_sample(-0.1).is_err());
    }

    #[test]
    fn inverse_endpoints_and_centre() {
        let t = build_table(4.5, 3.0, 1.0, 8.0, DEFAULT_GRID).unwrap();
        assert_eq!(t.inverse_sample(0.0).unwrap(), 1);
        assert_eq!(t.inverse_sample(0.5).unwrap(), 5);
        assert!((t.inverse_value(0.5).unwrap() - 4.5).abs() < 1e-9);
        assert_eq!(t.inverse_sample(0.999_999_999).unwrap(), 8);
        assert_eq!(t.alpha_range(), (1, 8));
    }

    #[test]
    fn narrow_interval_puts_all_mass_on_one_integer() {
        let t = build_table(3.0, 1.0, 3.0, 3.001, 50).unwrap();
        for k in 0..100 {
            assert_eq!(t.inverse_sample(k as f64 / 100.0).unwrap(), 3);
        }
        let masses = t.integer_bin_masses();
        assert_eq!(masses, vec![(3, 1.0)]);
    }

    #[test]
    fn bin_masses_sum_to_one() {
        let t = build_table(4.5, 3.0, 1.0, 8.0, DEFAULT_GRID).unwrap();
        let total: f64 = t.integer_bin_masses().iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_perfect_fit() {
        let fit = chi_square_fit(&[250, 250, 500], &[0.25, 0.25, 0.5]).unwrap();
        assert_eq!(fit.statistic, 0.0);
        assert_eq!(fit.dof, 2);
        assert!((fit.p_value - 1.0).abs() < 1e-12);
        assert!(chi_square_fit(&[1, 2], &[1.0]).is_err());
    }
}
