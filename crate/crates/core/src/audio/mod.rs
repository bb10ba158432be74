//! Mono audio container and the basic signal operations every other module
//! builds on: file I/O, band-limited resampling, time scaling, RMS framing and
//! impulse-response convolution.

mod io;
mod resample;

pub use io::{list_wav_files, probe_audio, read_audio, write_audio, AudioInfo};
pub use resample::{resample, time_scale, TimeScaleFactor};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// A single-channel sequence of samples at a fixed rate.
///
/// Samples are nominally in `[-1, 1]` and are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidRate(0.0));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "non-finite sample {} at index {i}",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// A clip of `len` zeros.
    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Largest absolute sample value.
    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    /// Mean of squared samples, accumulated in double precision.
    pub fn mean_square(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples
            .iter()
            .map(|&s| (s as f64) * (s as f64))
            .sum::<f64>()
            / self.samples.len() as f64
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(
            self.samples
                .iter()
                .map(|&s| (s as f64 * gain) as f32)
                .collect(),
            self.sample_rate,
        )
    }

    /// Samples `[start, start + len)`; the range must lie inside the clip.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        Self {
            samples: self.samples[start..start + len].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    /// Same samples labelled with a different rate (no resampling).
    pub fn with_sample_rate(self, sample_rate: u32) -> Result<Self> {
        Self::new(self.samples, sample_rate)
    }

    pub(crate) fn ensure_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyClip)
        } else {
            Ok(())
        }
    }
}

/// Frame and hop lengths, in samples, for [`rms_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RmsParams {
    pub frame_len: usize,
    pub hop: usize,
}

impl RmsParams {
    /// 25 ms frames with a 10 ms hop.
    pub fn for_rate(sample_rate: u32) -> Self {
        let frame_len = ((sample_rate as f64 * 0.025).round() as usize).max(1);
        let hop = ((sample_rate as f64 * 0.010).round() as usize).clamp(1, frame_len);
        Self { frame_len, hop }
    }

    pub fn hop_s(&self, sample_rate: u32) -> f64 {
        self.hop as f64 / sample_rate as f64
    }
}

/// Frame-wise root mean square. The last partial frame is zero-padded.
pub fn rms_curve(clip: &AudioClip, frame_len: usize, hop: usize) -> Result<Vec<f64>> {
    clip.ensure_non_empty()?;
    if frame_len == 0 || hop == 0 || hop > frame_len {
        return Err(Error::InvalidConfig(format!(
            "rms frame_len={frame_len} hop={hop}: need 1 <= hop <= frame_len"
        )));
    }
    let x = clip.samples();
    let n_frames = if x.len() <= frame_len {
        1
    } else {
        1 + (x.len() - frame_len).div_ceil(hop)
    };
    Ok((0..n_frames)
        .map(|i| {
            let start = i * hop;
            let end = (start + frame_len).min(x.len());
            let energy: f64 = x[start..end].iter().map(|&s| (s as f64).powi(2)).sum();
            (energy / frame_len as f64).sqrt()
        })
        .collect())
}

/// Linear convolution with `kernel`, truncated to the input length and
/// rescaled so its peak matches the input's peak.
pub fn convolve(clip: &AudioClip, kernel: &AudioClip) -> Result<AudioClip> {
    if kernel.is_empty() {
        return Err(Error::EmptyKernel);
    }
    if clip.sample_rate() != kernel.sample_rate() {
        return Err(Error::RateMismatch(clip.sample_rate(), kernel.sample_rate()));
    }
    clip.ensure_non_empty()?;
    let mut wet = if kernel.len() <= 64 {
        direct_convolution(clip.samples(), kernel.samples())
    } else {
        fft_convolution(clip.samples(), kernel.samples())
    };
    wet.truncate(clip.len());

    let dry_peak = clip.peak() as f64;
    let wet_peak = wet.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if wet_peak > 0.0 && dry_peak > 0.0 {
        let g = dry_peak / wet_peak;
        wet.iter_mut().for_each(|s| *s *= g);
    }
    AudioClip::new(wet.into_iter().map(|s| s as f32).collect(), clip.sample_rate())
}

fn direct_convolution(x: &[f32], h: &[f32]) -> Vec<f64> {
    let mut out = vec![0.0f64; x.len() + h.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (j, &hj) in h.iter().enumerate() {
            out[i + j] += xi as f64 * hj as f64;
        }
    }
    out
}

fn fft_convolution(x: &[f32], h: &[f32]) -> Vec<f64> {
    let full = x.len() + h.len() - 1;
    let n = full.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let pad = |s: &[f32]| {
        let mut buf: Vec<Complex<f64>> = s.iter().map(|&v| Complex::new(v as f64, 0.0)).collect();
        buf.resize(n, Complex::new(0.0, 0.0));
        buf
    };
    let mut a = pad(x);
    let mut b = pad(h);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (ai, bi) in a.iter_mut().zip(&b) {
        *ai *= bi;
    }
    inv.process(&mut a);
    let norm = 1.0 / n as f64;
    a.iter().take(full).map(|c| c.re * norm).collect()
}
