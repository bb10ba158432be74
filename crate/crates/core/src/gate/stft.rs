use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::num_complex::Complex32;
use rustfft::FftPlanner;

use crate::audio::AudioClip;
use crate::error::{Error, Result};

/// Complex spectrogram, frames by bins.
pub type Spectrogram = Array2<Complex32>;

/// Hann-windowed STFT geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub n_fft: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            n_fft: 1024,
            hop: 256,
        }
    }
}

impl StftConfig {
    pub fn new(n_fft: usize, hop: usize) -> Result<Self> {
        let cfg = Self { n_fft, hop };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_fft.is_power_of_two() || self.n_fft < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_fft={} must be a power of two",
                self.n_fft
            )));
        }
        if self.hop == 0 || !self.n_fft.is_multiple_of(self.hop) || self.hop > self.n_fft / 2 {
            return Err(Error::InvalidConfig(format!(
                "hop={} must divide n_fft={} and be at most n_fft/2",
                self.hop, self.n_fft
            )));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Number of frames produced for a signal of `len` samples.
    pub fn n_frames(&self, len: usize) -> usize {
        len.div_ceil(self.hop) + 1
    }

    /// Periodic Hann window.
    pub fn window(&self) -> Vec<f32> {
        (0..self.n_fft)
            .map(|i| (0.5 - 0.5 * (2.0 * PI * i as f64 / self.n_fft as f64).cos()) as f32)
            .collect()
    }
}

/// Short-time Fourier transform.
///
/// The signal is padded with `n_fft / 2` zeros on the left (and enough on the
/// right) so frame `t` is centred on sample `t * hop` and every input sample
/// is covered by `n_fft / hop` frames.
pub fn stft(clip: &AudioClip, cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    clip.ensure_non_empty()?;
    let n = cfg.n_fft;
    let half = n / 2;
    let frames = cfg.n_frames(clip.len());
    let mut padded = vec![0.0f32; (frames - 1) * cfg.hop + n];
    padded[half..half + clip.len()].copy_from_slice(clip.samples());

    let window = cfg.window();
    let fft = FftPlanner::<f32>::new().plan_fft_forward(n);
    let mut spec = Spectrogram::zeros((frames, cfg.n_bins()));
    let mut buf = vec![Complex32::new(0.0, 0.0); n];
    for t in 0..frames {
        let seg = &padded[t * cfg.hop..t * cfg.hop + n];
        for ((b, &s), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex32::new(s * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, v) in buf[..cfg.n_bins()].iter().enumerate() {
            spec[[t, k]] = *v;
        }
    }
    Ok(spec)
}

/// Weighted overlap-add inverse of [`stft`], normalised by the summed squared
/// window, then cut or zero-padded to `out_len` samples.
pub fn istft(
    spec: &Spectrogram,
    cfg: &StftConfig,
    out_len: usize,
    sample_rate: u32,
) -> Result<AudioClip> {
    cfg.validate()?;
    let (frames, bins) = spec.dim();
    if bins != cfg.n_bins() {
        return Err(Error::ShapeMismatch(format!(
            "spectrogram has {bins} bins, config expects {}",
            cfg.n_bins()
        )));
    }
    let n = cfg.n_fft;
    let half = n / 2;
    let window = cfg.window();
    let ifft = FftPlanner::<f32>::new().plan_fft_inverse(n);
    let total = if frames == 0 { 0 } else { (frames - 1) * cfg.hop + n };
    let mut acc = vec![0.0f64; total];
    let mut norm = vec![0.0f64; total];
    let mut buf = vec![Complex32::new(0.0, 0.0); n];

    for t in 0..frames {
        // Rebuild the full Hermitian spectrum from the one-sided bins.
        for k in 0..bins {
            buf[k] = spec[[t, k]];
        }
        buf[0].im = 0.0;
        buf[half].im = 0.0;
        for k in 1..half {
            buf[n - k] = spec[[t, k]].conj();
        }
        ifft.process(&mut buf);
        let off = t * cfg.hop;
        for i in 0..n {
            let w = window[i] as f64;
            acc[off + i] += buf[i].re as f64 / n as f64 * w;
            norm[off + i] += w * w;
        }
    }

    let out: Vec<f32> = (0..out_len)
        .map(|i| {
            let j = i + half;
            if j < total && norm[j] > 1e-10 {
                (acc[j] / norm[j]) as f32
            } else {
                0.0
            }
        })
        .collect();
    AudioClip::new(out, sample_rate)
}
