//! Rotary position encoding with position/frequency interpolation.
//!
//! Coordinates are rotated in interleaved pairs `(x[2i], x[2i+1])` by the
//! angle `m·θ_i`, `θ_i = base^(−2i/d)`. The attention score of a rotated query
//! and key then depends on the positions only through `m − n`, which is the
//! property the schedules rely on. [`property_sweep`] checks it numerically.
//!
//! Interpolation modes:
//!
//! * `Linear { scale }` divides positions by `scale`.
//! * `Ntk { scale }` keeps positions and raises the base to
//!   `base · scale^(d/(d−2))` (a no-op for `d = 2`, where the only frequency is 1).
//! * `Yarn { .. }` keeps positions and blends each frequency between its
//!   interpolated value `θ/s` and the original `θ` with a linear ramp in
//!   `r = original_window / wavelength`: fully interpolated for `r < beta_slow`,
//!   untouched for `r > beta_fast`. Scores are multiplied by the square of the
//!   attention factor `0.1·ln(s) + 1`. Defaults: `beta_fast = 32`,
//!   `beta_slow = 1`.

use std::f64::consts::TAU;

use rand_chacha::rand_core::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_BASE: f64 = 10_000.0;
pub const YARN_BETA_FAST: f64 = 32.0;
pub const YARN_BETA_SLOW: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InterpolationMode {
    None,
    Linear {
        scale: f64,
    },
    Ntk {
        scale: f64,
    },
    Yarn {
        scale: f64,
        original_window: f64,
        beta_fast: f64,
        beta_slow: f64,
    },
}

impl InterpolationMode {
    pub fn yarn(scale: f64, original_window: f64) -> Self {
        InterpolationMode::Yarn {
            scale,
            original_window,
            beta_fast: YARN_BETA_FAST,
            beta_slow: YARN_BETA_SLOW,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InterpolationMode::None => "none",
            InterpolationMode::Linear { .. } => "linear",
            InterpolationMode::Ntk { .. } => "ntk",
            InterpolationMode::Yarn { .. } => "yarn",
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            InterpolationMode::None => 1.0,
            InterpolationMode::Linear { scale }
            | InterpolationMode::Ntk { scale }
            | InterpolationMode::Yarn { scale, .. } => scale,
        }
    }

    fn validate(&self) -> Result<()> {
        let s = self.scale();
        if !(s.is_finite() && s >= 1.0) {
            return Err(Error::invalid(format!("interpolation scale must be >= 1, got {s}")));
        }
        if let InterpolationMode::Yarn {
            original_window,
            beta_fast,
            beta_slow,
            ..
        } = *self
        {
            if !(original_window > 0.0 && beta_fast > beta_slow) {
                return Err(Error::invalid("yarn needs original_window > 0 and beta_fast > beta_slow"));
            }
        }
        Ok(())
    }
}

/// Base rotation frequencies `θ_i = base^(−2i/d)`, `i = 0..d/2`.
pub fn rotation_angles(d: usize, base: f64) -> Result<Vec<f64>> {
    if d < 2 || !d.is_multiple_of(2) {
        return Err(Error::invalid(format!("dimension must be even and >= 2, got {d}")));
    }
    if !(base.is_finite() && base > 1.0) {
        return Err(Error::invalid(format!("base must be > 1, got {base}")));
    }
    Ok((0..d / 2)
        .map(|i| base.powf(-2.0 * i as f64 / d as f64))
        .collect())
}

/// Position after interpolation: `m / s` for linear, `m` otherwise.
pub fn effective_position(m: f64, mode: &InterpolationMode) -> Result<f64> {
    mode.validate()?;
    Ok(match *mode {
        InterpolationMode::Linear { scale } => m / scale,
        _ => m,
    })
}

/// Rotation parameters with the interpolation mode folded into the frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotaryParams {
    dim: usize,
    base: f64,
    mode: InterpolationMode,
    thetas: Vec<f64>,
    attention_factor: f64,
}

impl RotaryParams {
    pub fn new(dim: usize, base: f64, mode: InterpolationMode) -> Result<Self> {
        mode.validate()?;
        let mut thetas = rotation_angles(dim, base)?;
        let mut attention_factor = 1.0;
        match mode {
            InterpolationMode::None | InterpolationMode::Linear { .. } => {}
            InterpolationMode::Ntk { scale } => {
                if dim > 2 {
                    let d = dim as f64;
                    thetas = rotation_angles(dim, base * scale.powf(d / (d - 2.0)))?;
                }
            }
            InterpolationMode::Yarn {
                scale,
                original_window,
                beta_fast,
                beta_slow,
            } => {
                for theta in &mut thetas {
                    let ratio = original_window * *theta / TAU;
                    let keep = ((ratio - beta_slow) / (beta_fast - beta_slow)).clamp(0.0, 1.0);
                    *theta = (1.0 - keep) * *theta / scale + keep * *theta;
                }
                attention_factor = 0.1 * scale.ln() + 1.0;
            }
        }
        Ok(Self {
            dim,
            base,
            mode,
            thetas,
            attention_factor,
        })
    }

    /// Plain encoding with base 10000 and no interpolation.
    pub fn standard(dim: usize) -> Result<Self> {
        Self::new(dim, DEFAULT_BASE, InterpolationMode::None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn mode(&self) -> &InterpolationMode {
        &self.mode
    }

    /// Frequencies in use, after any NTK/YaRN adjustment.
    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn attention_factor(&self) -> f64 {
        self.attention_factor
    }

    /// Rotation angle of every pair at position `m`.
    pub fn angles_at(&self, m: f64) -> Vec<f64> {
        let pos = match self.mode {
            InterpolationMode::Linear { scale } => m / scale,
            _ => m,
        };
        self.thetas.iter().map(|t| pos * t).collect()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: len,
            });
        }
        Ok(())
    }
}

/// Rotates `x` to position `m`.
pub fn apply_rotary(x: &[f64], m: f64, params: &RotaryParams) -> Result<Vec<f64>> {
    params.check_dim(x.len())?;
    let mut out = vec![0.0; x.len()];
    for ((pair, dst), angle) in x
        .chunks_exact(2)
        .zip(out.chunks_exact_mut(2))
        .zip(params.angles_at(m))
    {
        let (sin, cos) = angle.sin_cos();
        dst[0] = cos * pair[0] - sin * pair[1];
        dst[1] = sin * pair[0] + cos * pair[1];
    }
    Ok(out)
}

/// `⟨R(m)q, R(n)k⟩`, times the squared attention factor.
pub fn attn_score(q: &[f64], k: &[f64], m: f64, n: f64, params: &RotaryParams) -> Result<f64> {
    let rq = apply_rotary(q, m, params)?;
    let rk = apply_rotary(k, n, params)?;
    let a = params.attention_factor;
    Ok(a * a * dot(&rq, &rk))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Settings for [`property_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub trials: usize,
    /// Positions and shifts are drawn from `[0, window)`.
    pub window: u64,
    /// Interpolation scales are drawn from `[1, max_scale]`.
    pub max_scale: f64,
    pub seed: u64,
    pub shift_tolerance: f64,
    pub norm_tolerance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 64, 128],
            trials: 1000,
            window: 32_768,
            max_scale: 16.0,
            seed: 0,
            shift_tolerance: 1e-9,
            norm_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub property: &'static str,
    pub mode: &'static str,
    pub dim: usize,
    pub trials: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

const MODES: [&str; 4] = ["none", "linear", "ntk", "yarn"];

fn mode_for(name: &str, scale: f64, window: u64) -> InterpolationMode {
    match name {
        "linear" => InterpolationMode::Linear { scale },
        "ntk" => InterpolationMode::Ntk { scale },
        "yarn" => InterpolationMode::yarn(scale, window as f64 / scale),
        _ => InterpolationMode::None,
    }
}

/// Random sweep of shift invariance (every mode) and norm preservation.
///
/// Shift error is `|score(m, n) − score(m+c, n+c)| / (‖q‖·‖k‖·a²)`: the
/// score's magnitude is bounded by that denominator, and scores near zero
/// would make a pointwise relative error meaningless. Norm error is
/// `|‖R x‖ − ‖x‖| / ‖x‖`.
pub fn property_sweep(config: &SweepConfig) -> Result<Vec<PropertyCheck>> {
    let mut checks = Vec::new();
    for &dim in &config.dims {
        for (mi, name) in MODES.iter().enumerate() {
            let mut rng = rng::substream(config.seed, "rope", (dim as u64) << 8 | mi as u64);
            let mut shift_err: f64 = 0.0;
            let mut norm_err: f64 = 0.0;
            for _ in 0..config.trials {
                let scale = 1.0 + rng::unit_f64(&mut rng) * (config.max_scale - 1.0);
                let params = RotaryParams::new(dim, DEFAULT_BASE, mode_for(name, scale, config.window))?;
                let q = gaussian_vec(&mut rng, dim);
                let k = gaussian_vec(&mut rng, dim);
                let m = rng::inclusive_range(&mut rng, 0, config.window - 1) as f64;
                let n = rng::inclusive_range(&mut rng, 0, config.window - 1) as f64;
                let c = rng::inclusive_range(&mut rng, 0, config.window - 1) as f64;
                let a = attn_score(&q, &k, m, n, &params)?;
                let b = attn_score(&q, &k, m + c, n + c, &params)?;
                let af = params.attention_factor();
                let scale_ref = norm(&q) * norm(&k) * af * af;
                shift_err = shift_err.max((a - b).abs() / scale_ref);
                let rotated = apply_rotary(&q, m, &params)?;
                norm_err = norm_err.max((norm(&rotated) - norm(&q)).abs() / norm(&q));
            }
            checks.push(PropertyCheck {
                property: "shift_invariance",
                mode: name,
                dim,
                trials: config.trials,
                max_error: shift_err,
                tolerance: config.shift_tolerance,
                passed: shift_err <= config.shift_tolerance,
            });
            checks.push(PropertyCheck {
                property: "norm_preservation",
                mode: name,
                dim,
                trials: config.trials,
                max_error: norm_err,
                tolerance: config.norm_tolerance,
                passed: norm_err <= config.norm_tolerance,
            });
        }
    }
    Ok(checks)
}

fn gaussian_vec<R: RngCore + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng::standard_normal(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_tables() {
        assert_eq!(rotation_angles(2, 10_000.0).unwrap(), vec![1.0]);
        let four = rotation_angles(4, 10_000.0).unwrap();
        assert_eq!(four[0], 1.0);
        assert!((four[1] - 0.01).abs() < 1e-15);
        let wide = rotation_angles(128, 10_000.0).unwrap();
        assert_eq!(wide.len(), 64);
        assert!(wide.windows(2).all(|w| w[1] < w[0]));
        assert!((wide[63] - 10_000f64.powf(-126.0 / 128.0)).abs() < 1e-18);
        for (i, t) in wide.iter().enumerate() {
            assert!((t - (-(2.0 * i as f64 / 128.0) * 10_000f64.ln()).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_angle_parameters() {
        assert!(rotation_angles(3, 10_000.0).is_err());
        assert!(rotation_angles(0, 10_000.0).is_err());
        assert!(rotation_angles(4, 1.0).is_err());
        assert!(RotaryParams::new(4, DEFAULT_BASE, InterpolationMode::Linear { scale: 0.5 }).is_err());
        assert!(effective_position(3.0, &InterpolationMode::Ntk { scale: f64::NAN }).is_err());
    }

    #[test]
    fn zero_position_is_identity() {
        let p = RotaryParams::standard(8).unwrap();
        let x = [1.0, -2.0, 3.0, 0.5, 0.0, 7.0, -1.0, 2.0];
        assert_eq!(apply_rotary(&x, 0.0, &p).unwrap(), x.to_vec());
    }

    #[test]
    fn two_dimensional_rotation() {
        let p = RotaryParams::standard(2).unwrap();
        let (x0, x1) = (0.3, -1.7);
        let r = apply_rotary(&[x0, x1], 1.0, &p).unwrap();
        let (s, c) = 1f64.sin_cos();
        assert!((r[0] - (c * x0 - s * x1)).abs() < 1e-15);
        assert!((r[1] - (s * x0 + c * x1)).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let p = RotaryParams::standard(4).unwrap();
        assert!(matches!(
            apply_rotary(&[1.0, 2.0], 1.0, &p),
            Err(Error::DimensionMismatch { expected: 4, actual: 2 })
        ));
        assert!(attn_score(&[1.0; 4], &[1.0; 6], 0.0, 0.0, &p).is_err());
    }

    #[test]
    fn equal_positions_give_plain_dot_product() {
        let p = RotaryParams::standard(6).unwrap();
        let q = [0.1, 0.2, -0.3, 0.4, 0.5, -0.6];
        let k = [1.0, -1.0, 2.0, 0.5, -0.25, 3.0];
        let s = attn_score(&q, &k, 1234.0, 1234.0, &p).unwrap();
        assert!((s - dot(&q, &k)).abs() < 1e-12);
    }

    #[test]
    fn fixed_offset_sweep_is_constant() {
        let p = RotaryParams::standard(16).unwrap();
        let q: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let reference = attn_score(&q, &q, 5.0, 0.0, &p).unwrap();
        for m in (5..20_000).step_by(97) {
            let s = attn_score(&q, &q, m as f64, m as f64 - 5.0, &p).unwrap();
            assert!((s - reference).abs() < 1e-10 * dot(&q, &q));
        }
    }

    #[test]
    fn linear_interpolation_positions() {
        let lin = InterpolationMode::Linear { scale: 8.0 };
        assert_eq!(effective_position(32_760.0, &lin).unwrap(), 4095.0);
        assert_eq!(effective_position(123.0, &InterpolationMode::Linear { scale: 1.0 }).unwrap(), 123.0);
        assert_eq!(effective_position(123.0, &InterpolationMode::Ntk { scale: 4.0 }).unwrap(), 123.0);
    }

    #[test]
    fn linear_interpolation_compresses_rotation() {
        let l = 32_768.0;
        let s = 8.0;
        let scaled = RotaryParams::new(64, DEFAULT_BASE, InterpolationMode::Linear { scale: s }).unwrap();
        let plain = RotaryParams::standard(64).unwrap();
        let a = scaled.angles_at(l - 1.0);
        let b = plain.angles_at((l - 1.0) / s);
        assert_eq!(a, b);
    }

    #[test]
    fn ntk_raises_base() {
        let p = RotaryParams::new(4, DEFAULT_BASE, InterpolationMode::Ntk { scale: 4.0 }).unwrap();
        let base = DEFAULT_BASE * 4f64.powf(2.0);
        assert!((p.thetas()[1] - base.powf(-0.5)).abs() < 1e-15);
        let two = RotaryParams::new(2, DEFAULT_BASE, InterpolationMode::Ntk { scale: 4.0 }).unwrap();
        assert_eq!(two.thetas(), &[1.0]);
    }

    #[test]
    fn yarn_ramp_endpoints() {
        let p = RotaryParams::new(128, DEFAULT_BASE, InterpolationMode::yarn(8.0, 4096.0)).unwrap();
        let base = rotation_angles(128, DEFAULT_BASE).unwrap();
        // highest frequency: many rotations per window, kept
        assert_eq!(p.thetas()[0], base[0]);
        // lowest frequency: less than one rotation per window, fully interpolated
        assert!((p.thetas()[63] - base[63] / 8.0).abs() < 1e-18);
        assert!(p.thetas().iter().zip(&base).all(|(t, b)| *t <= *b && *t >= b / 8.0 - 1e-18));
        assert!((p.attention_factor() - (0.1 * 8f64.ln() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn small_sweep_passes() {
        let config = SweepConfig {
            trials: 50,
            ..SweepConfig::default()
        };
        let checks = property_sweep(&config).unwrap();
        assert_eq!(checks.len(), 3 * 4 * 2);
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }
}
