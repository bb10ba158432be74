//! Spectral gating denoiser.
//!
//! Time-frequency cells whose magnitude does not clear a per-bin noise
//! threshold are attenuated. The binary decision is smoothed with a
//! triangular kernel over time and frequency, and `prop_decrease` controls
//! how much of the attenuation is applied. Phase is passed through untouched.
//!
//! Two noise estimates are supported:
//!
//! * stationary: mean and standard deviation of each bin's magnitude, taken
//!   from a noise-only clip when one is given, otherwise from the input;
//! * non-stationary: a forward-backward exponential moving average of each
//!   bin's magnitude acts as a time-varying floor.

mod stft;

pub use stft::{istft, stft, Spectrogram, StftConfig};

use ndarray::{Array2, Axis};

use crate::audio::AudioClip;
use crate::error::{Error, Result};

/// Gate parameters. Defaults follow the reference tool's published ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateConfig {
    pub stationary: bool,
    /// Threshold in standard deviations above the mean noise magnitude.
    pub n_std_thresh: f64,
    /// Fraction of the gate applied: 0 leaves the signal untouched.
    pub prop_decrease: f64,
    pub time_smooth_ms: f64,
    pub freq_smooth_hz: f64,
    pub nonstat_time_constant_s: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            stationary: false,
            n_std_thresh: 1.5,
            prop_decrease: 1.0,
            time_smooth_ms: 50.0,
            freq_smooth_hz: 500.0,
            nonstat_time_constant_s: 2.0,
        }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if !(0.0..=1.0).contains(&self.prop_decrease) {
            return bad("prop_decrease must lie in [0, 1]");
        }
        if !(self.n_std_thresh >= 0.0) {
            return bad("n_std_thresh must be >= 0");
        }
        if !(self.time_smooth_ms >= 0.0 && self.freq_smooth_hz >= 0.0) {
            return bad("smoothing extents must be >= 0");
        }
        if !(self.nonstat_time_constant_s > 0.0) {
            return bad("nonstat_time_constant_s must be > 0");
        }
        Ok(())
    }
}

/// Per-bin magnitude statistics of the noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    pub mean_mag: Vec<f32>,
    pub std_mag: Vec<f32>,
}

impl NoiseProfile {
    pub fn scaled(&self, c: f32) -> Self {
        Self {
            mean_mag: self.mean_mag.iter().map(|v| v * c).collect(),
            std_mag: self.std_mag.iter().map(|v| v * c).collect(),
        }
    }
}

/// Noise estimate consumed by [`compute_gate_mask`].
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseEstimate {
    Stationary(NoiseProfile),
    /// Frame-indexed magnitude floor, frames by bins.
    NonStationary(Array2<f32>),
}

/// Stationary statistics over every frame of `spec`.
pub fn stationary_profile(spec: &Spectrogram) -> Result<NoiseProfile> {
    let (frames, bins) = spec.dim();
    if frames == 0 || bins == 0 {
        return Err(Error::EmptySpectrogram);
    }
    let mut mean_mag = Vec::with_capacity(bins);
    let mut std_mag = Vec::with_capacity(bins);
    for col in spec.axis_iter(Axis(1)) {
        let mags: Vec<f64> = col.iter().map(|c| c.norm() as f64).collect();
        let mean = mags.iter().sum::<f64>() / frames as f64;
        let var = mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / frames as f64;
        mean_mag.push(mean as f32);
        std_mag.push(var.sqrt() as f32);
    }
    Ok(NoiseProfile { mean_mag, std_mag })
}

/// Estimates the noise from `spec`, or from `noise_spec` in stationary mode
/// when given. `frame_rate` is frames per second, used by the non-stationary
/// time constant.
pub fn estimate_noise_profile(
    spec: &Spectrogram,
    noise_spec: Option<&Spectrogram>,
    cfg: &GateConfig,
    frame_rate: f64,
) -> Result<NoiseEstimate> {
    if spec.is_empty() {
        return Err(Error::EmptySpectrogram);
    }
    if cfg.stationary {
        return stationary_profile(noise_spec.unwrap_or(spec)).map(NoiseEstimate::Stationary);
    }

    let alpha = 1.0 - (-1.0 / (cfg.nonstat_time_constant_s * frame_rate)).exp();
    let (frames, bins) = spec.dim();
    let mut floor = Array2::<f32>::zeros((frames, bins));
    for k in 0..bins {
        let mut fwd = vec![0.0f64; frames];
        let mut state = spec[[0, k]].norm() as f64;
        for t in 0..frames {
            state += alpha * (spec[[t, k]].norm() as f64 - state);
            fwd[t] = state;
        }
        let mut state = fwd[frames - 1];
        for t in (0..frames).rev() {
            state += alpha * (fwd[t] - state);
            floor[[t, k]] = state as f32;
        }
    }
    Ok(NoiseEstimate::NonStationary(floor))
}

/// Triangular kernel with `n` ramp steps on each side and unit peak, e.g.
/// `n = 3` gives `[.25, .5, .75, 1, .75, .5, .25]`.
pub fn triangular_kernel(n: usize) -> Vec<f64> {
    let step = 1.0 / (n + 1) as f64;
    (0..=2 * n)
        .map(|i| 1.0 - (i as f64 - n as f64).abs() * step)
        .collect()
}

/// Convolves along `axis` with `kernel`, dividing by the in-bounds kernel
/// weight so that constant regions (edges included) are preserved.
fn smooth_axis(mask: &mut Array2<f64>, kernel: &[f64], axis: Axis) {
    let half = kernel.len() / 2;
    if half == 0 {
        return;
    }
    for mut lane in mask.lanes_mut(axis) {
        let src: Vec<f64> = lane.to_vec();
        let n = src.len();
        for i in 0..n {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (j, &v) in src.iter().enumerate().take(hi + 1).skip(lo) {
                let w = kernel[j + half - i];
                acc += w * v;
                wsum += w;
            }
            lane[i] = acc / wsum;
        }
    }
}

/// Mask in `[0, 1]`, frames by bins, to multiply onto `spec`.
pub fn compute_gate_mask(
    spec: &Spectrogram,
    estimate: &NoiseEstimate,
    cfg: &GateConfig,
    stft_cfg: &StftConfig,
    sample_rate: u32,
) -> Result<Array2<f32>> {
    cfg.validate()?;
    let (frames, bins) = spec.dim();
    let thresh = cfg.n_std_thresh as f32;
    let mut mask = Array2::<f64>::zeros((frames, bins));
    match estimate {
        NoiseEstimate::Stationary(p) => {
            if p.mean_mag.len() != bins || p.std_mag.len() != bins {
                return Err(Error::ShapeMismatch(format!(
                    "profile has {} bins, spectrogram {bins}",
                    p.mean_mag.len()
                )));
            }
            for ((t, k), m) in mask.indexed_iter_mut() {
                let level = p.mean_mag[k] + thresh * p.std_mag[k];
                *m = (spec[[t, k]].norm() > level) as u8 as f64;
            }
        }
        NoiseEstimate::NonStationary(floor) => {
            if floor.dim() != (frames, bins) {
                return Err(Error::ShapeMismatch(format!(
                    "floor is {:?}, spectrogram {:?}",
                    floor.dim(),
                    (frames, bins)
                )));
            }
            for ((t, k), m) in mask.indexed_iter_mut() {
                *m = (spec[[t, k]].norm() > floor[[t, k]] * (1.0 + thresh)) as u8 as f64;
            }
        }
    }

    let frame_ms = stft_cfg.hop as f64 / sample_rate as f64 * 1000.0;
    let bin_hz = sample_rate as f64 / stft_cfg.n_fft as f64;
    let n_time = (cfg.time_smooth_ms / frame_ms).round() as usize;
    let n_freq = (cfg.freq_smooth_hz / bin_hz).round() as usize;
    smooth_axis(&mut mask, &triangular_kernel(n_time), Axis(0));
    smooth_axis(&mut mask, &triangular_kernel(n_freq), Axis(1));

    let p = cfg.prop_decrease;
    Ok(mask.mapv(|m| (1.0 - p * (1.0 - m)).clamp(0.0, 1.0) as f32))
}

/// Spectral-gate denoising of `clip`; output has the input's length and rate.
pub fn denoise(
    clip: &AudioClip,
    noise_clip: Option<&AudioClip>,
    stft_cfg: &StftConfig,
    gate_cfg: &GateConfig,
) -> Result<AudioClip> {
    gate_cfg.validate()?;
    let sr = clip.sample_rate();
    let mut spec = stft(clip, stft_cfg)?;
    let noise_spec = match (gate_cfg.stationary, noise_clip) {
        (true, Some(n)) => {
            if n.sample_rate() != sr {
                return Err(Error::RateMismatch(sr, n.sample_rate()));
            }
            Some(stft(n, stft_cfg)?)
        }
        _ => None,
    };
    let frame_rate = sr as f64 / stft_cfg.hop as f64;
    let estimate = estimate_noise_profile(&spec, noise_spec.as_ref(), gate_cfg, frame_rate)?;
    let mask = compute_gate_mask(&spec, &estimate, gate_cfg, stft_cfg, sr)?;
    apply_mask(&mut spec, &mask);
    istft(&spec, stft_cfg, clip.len(), sr)
}

/// Stationary gating with a caller-supplied profile.
pub fn denoise_with_profile(
    clip: &AudioClip,
    profile: &NoiseProfile,
    stft_cfg: &StftConfig,
    gate_cfg: &GateConfig,
) -> Result<AudioClip> {
    let sr = clip.sample_rate();
    let mut spec = stft(clip, stft_cfg)?;
    let estimate = NoiseEstimate::Stationary(profile.clone());
    let mask = compute_gate_mask(&spec, &estimate, gate_cfg, stft_cfg, sr)?;
    apply_mask(&mut spec, &mask);
    istft(&spec, stft_cfg, clip.len(), sr)
}

fn apply_mask(spec: &mut Spectrogram, mask: &Array2<f32>) {
    spec.zip_mut_with(mask, |c, &m| *c *= m);
}
