//! Band-limited resampling with a Kaiser-windowed sinc kernel, and the
//! resampling-based time scaling built on it.
//!
//! The interpolation kernel is `sinc(u) * kaiser(u / 32)` with beta 8, giving
//! 64 zero crossings across its support. It is tabulated once and linearly
//! interpolated. When decimating, the kernel is stretched by `1 / ratio` so
//! the cutoff follows the output Nyquist frequency.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;

use super::AudioClip;
use crate::error::{Error, Result};

const HALF_TAPS: usize = 32;
const KAISER_BETA: f64 = 8.0;
const TABLE_RES: usize = 1024;
/// Passband edge as a fraction of the lower of the two Nyquist frequencies.
const CUTOFF: f64 = 0.95;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kernel_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = HALF_TAPS * TABLE_RES;
        let norm = bessel_i0(KAISER_BETA);
        (0..=n + 1)
            .map(|i| {
                let u = i as f64 / TABLE_RES as f64;
                if u >= HALF_TAPS as f64 {
                    return 0.0;
                }
                let sinc = if i == 0 { 1.0 } else { (PI * u).sin() / (PI * u) };
                let r = u / HALF_TAPS as f64;
                sinc * bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm
            })
            .collect()
    })
}

#[inline]
fn kernel(table: &[f64], u: f64) -> f64 {
    let pos = u.abs() * TABLE_RES as f64;
    let i = pos as usize;
    if i >= HALF_TAPS * TABLE_RES {
        return 0.0;
    }
    let frac = pos - i as f64;
    table[i] + (table[i + 1] - table[i]) * frac
}

/// Most ratios met in practice (integer time-scale factors, common rate
/// pairs) are `p / q` with a small `p`; output phases then repeat with period
/// `p` and the taps can be computed once per phase.
const MAX_PHASES: usize = 4096;
const MAX_PHASE_COEFS: usize = 1 << 22;

fn rational(ratio: f64) -> Option<(usize, usize)> {
    (1..=MAX_PHASES).find_map(|p| {
        let q = p as f64 / ratio;
        let qr = q.round();
        ((q - qr).abs() <= 1e-9 * q.max(1.0) && qr >= 1.0).then_some((p, qr as usize))
    })
}

/// Resamples by `ratio = out_rate / in_rate`; output length is
/// `round(len * ratio)`. Output sample `n` sits at input position `n / ratio`.
pub(crate) fn resample_ratio(x: &[f32], ratio: f64) -> Vec<f32> {
    let out_len = (x.len() as f64 * ratio).round() as usize;
    let table = kernel_table();
    let fc = CUTOFF * ratio.min(1.0);
    let half_width = HALF_TAPS as f64 / fc;

    if let Some((p, q)) = rational(ratio) {
        let taps = 2 * half_width.ceil() as usize + 1;
        if p * taps <= MAX_PHASE_COEFS {
            return polyphase(x, out_len, p, q, fc, half_width, table);
        }
    }
    direct(x, out_len, ratio, fc, half_width, table)
}

fn direct(x: &[f32], out_len: usize, ratio: f64, fc: f64, half_width: f64, table: &[f64]) -> Vec<f32> {
    let last = x.len() as isize - 1;
    (0..out_len)
        .map(|n| {
            let t = n as f64 / ratio;
            let lo = ((t - half_width).ceil() as isize).max(0);
            let hi = ((t + half_width).floor() as isize).min(last);
            let mut acc = 0.0f64;
            for j in lo..=hi {
                acc += x[j as usize] as f64 * kernel(table, (t - j as f64) * fc);
            }
            (acc * fc) as f32
        })
        .collect()
}

fn polyphase(x: &[f32], out_len: usize, p: usize, q: usize, fc: f64, half_width: f64, table: &[f64]) -> Vec<f32> {
    // Phase `k` places the output at `base + k / p`; its taps cover input
    // offsets `first[k] ..` relative to `base`.
    let mut first = Vec::with_capacity(p);
    let mut coefs: Vec<Vec<f64>> = Vec::with_capacity(p);
    for k in 0..p {
        let frac = k as f64 / p as f64;
        let d0 = (frac - half_width).ceil() as isize;
        let d1 = (frac + half_width).floor() as isize;
        first.push(d0);
        coefs.push((d0..=d1).map(|d| kernel(table, (frac - d as f64) * fc) * fc).collect());
    }
    let len = x.len() as isize;
    (0..out_len)
        .map(|n| {
            let pos = n * q;
            let (base, k) = ((pos / p) as isize, pos % p);
            let c = &coefs[k];
            let start = base + first[k];
            let lo = (-start).max(0) as usize;
            let hi = ((len - start).max(0) as usize).min(c.len());
            if lo >= hi {
                return 0.0;
            }
            let xs = &x[(start + lo as isize) as usize..(start + hi as isize) as usize];
            xs.iter()
                .zip(&c[lo..hi])
                .map(|(&v, &w)| v as f64 * w)
                .sum::<f64>() as f32
        })
        .collect()
}

/// Converts `clip` to `target_rate` with band-limited interpolation.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate == 0 {
        return Err(Error::InvalidRate(0.0));
    }
    if target_rate == clip.sample_rate() {
        return Ok(clip.clone());
    }
    let ratio = target_rate as f64 / clip.sample_rate() as f64;
    AudioClip::new(resample_ratio(clip.samples(), ratio), target_rate)
}

/// Time-scale factor. Positive values slow the clip down (longer, lower
/// pitch); negative values speed it up by `|value|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeScaleFactor(f64);

impl TimeScaleFactor {
    pub const MAX: f64 = 8.0;
    pub const IDENTITY: Self = Self(1.0);

    pub fn new(value: f64) -> Result<Self> {
        let m = value.abs();
        if !value.is_finite() || !(1.0..=Self::MAX).contains(&m) {
            return Err(Error::InvalidFactor(value));
        }
        Ok(Self(value))
    }

    pub fn slower(k: f64) -> Result<Self> {
        Self::new(k.abs())
    }

    pub fn faster(k: f64) -> Result<Self> {
        Self::new(-k.abs())
    }

    /// Maps a draw `u` from `[-max, max]` onto a factor: `|u| < 1` is the
    /// identity, otherwise `u` is used as is.
    pub fn from_draw(u: f64) -> Result<Self> {
        if u.abs() < 1.0 {
            Ok(Self::IDENTITY)
        } else {
            Self::new(u)
        }
    }

    /// Random augmentation factor drawn uniformly from `[-max_abs, max_abs]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_abs: f64) -> Result<Self> {
        if !(1.0..=Self::MAX).contains(&max_abs) {
            return Err(Error::InvalidFactor(max_abs));
        }
        Self::from_draw(rng.random_range(-max_abs..=max_abs))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn inverse(self) -> Self {
        Self(-self.0)
    }

    /// Output-to-input length ratio.
    pub fn length_ratio(self) -> f64 {
        if self.0 > 0.0 {
            self.0
        } else {
            1.0 / -self.0
        }
    }
}

/// Plays the clip `k` times slower (positive factor) or faster (negative),
/// shifting pitch accordingly; the sample rate is unchanged.
pub fn time_scale(clip: &AudioClip, factor: TimeScaleFactor) -> Result<AudioClip> {
    if factor.value() == 1.0 || factor.value() == -1.0 {
        return Ok(clip.clone());
    }
    AudioClip::new(
        resample_ratio(clip.samples(), factor.length_ratio()),
        clip.sample_rate(),
    )
}
