//! Silence filtering and excerpt extraction on RMS envelopes.

use rand::Rng;

use crate::audio::{rms_curve, AudioClip, RmsParams};
use crate::error::{Error, Result};

/// Peak-picking thresholds. Heights and prominences are relative to the
/// curve's global maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakParams {
    pub min_height_rel: f64,
    /// Absolute floor in dBFS below which nothing counts as a peak.
    pub floor_dbfs: f64,
    /// Minimum separation between kept peaks, in seconds.
    pub min_distance_s: f64,
    pub prominence_rel: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        Self {
            min_height_rel: 0.1,
            floor_dbfs: -60.0,
            min_distance_s: 1.0,
            prominence_rel: 0.05,
        }
    }
}

impl PeakParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_height_rel) {
            return Err(Error::InvalidConfig("min_height_rel must lie in [0, 1]".into()));
        }
        if !(self.min_distance_s > 0.0) {
            return Err(Error::InvalidConfig("min_distance_s must be > 0".into()));
        }
        if !(self.prominence_rel >= 0.0) || !self.floor_dbfs.is_finite() {
            return Err(Error::InvalidConfig(
                "prominence_rel must be >= 0 and floor_dbfs finite".into(),
            ));
        }
        Ok(())
    }

    pub fn floor_linear(&self) -> f64 {
        10f64.powf(self.floor_dbfs / 20.0)
    }
}

/// Minimum peak spacing in curve samples.
pub fn distance_in_samples(min_distance_s: f64, hop_s: f64) -> usize {
    ((min_distance_s / hop_s) - 1e-9).ceil().max(1.0) as usize
}

/// Local maxima of `curve`, which is treated as zero outside its support.
/// Flat tops report their middle sample (rounded down).
fn local_maxima(curve: &[f64]) -> Vec<usize> {
    let at = |i: isize| -> f64 {
        if i < 0 || i as usize >= curve.len() {
            0.0
        } else {
            curve[i as usize]
        }
    };
    let n = curve.len() as isize;
    let mut peaks = Vec::new();
    let mut i = 0isize;
    while i < n {
        if at(i - 1) < at(i) {
            let mut ahead = i + 1;
            while ahead < n && at(ahead) == at(i) {
                ahead += 1;
            }
            if at(ahead) < at(i) {
                peaks.push(((i + ahead - 1) / 2) as usize);
            }
            i = ahead;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Prominence of the peak at `p`, with zero padding beyond both ends.
pub fn prominence(curve: &[f64], p: usize) -> f64 {
    let h = curve[p];
    let mut left_min = h;
    let mut i = p;
    let mut reached_edge = true;
    while i > 0 {
        i -= 1;
        if curve[i] > h {
            reached_edge = false;
            break;
        }
        left_min = left_min.min(curve[i]);
    }
    if reached_edge {
        left_min = left_min.min(0.0);
    }
    let mut right_min = h;
    let mut reached_edge = true;
    for &v in &curve[p + 1..] {
        if v > h {
            reached_edge = false;
            break;
        }
        right_min = right_min.min(v);
    }
    if reached_edge {
        right_min = right_min.min(0.0);
    }
    h - left_min.max(right_min)
}

/// Keeps the highest peaks first and drops anything closer than `distance`
/// to an already kept peak. Equal heights favour the earlier index.
fn select_by_distance(curve: &[f64], peaks: &[usize], distance: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&a, &b| {
        curve[peaks[b]]
            .total_cmp(&curve[peaks[a]])
            .then(peaks[a].cmp(&peaks[b]))
    });
    let mut keep = vec![true; peaks.len()];
    for &i in &order {
        if !keep[i] {
            continue;
        }
        let mut j = i;
        while j > 0 && peaks[i] - peaks[j - 1] < distance {
            j -= 1;
            keep[j] = false;
        }
        let mut j = i + 1;
        while j < peaks.len() && peaks[j] - peaks[i] < distance {
            keep[j] = false;
            j += 1;
        }
    }
    peaks
        .iter()
        .zip(keep)
        .filter_map(|(&p, k)| k.then_some(p))
        .collect()
}

/// Peak indices of an RMS `curve` sampled every `hop_s` seconds, strictly
/// increasing.
///
/// Filters, in order: local maxima, height (relative and absolute floor),
/// minimum distance, prominence.
pub fn find_peaks(curve: &[f64], params: &PeakParams, hop_s: f64) -> Result<Vec<usize>> {
    if curve.is_empty() {
        return Err(Error::EmptyCurve);
    }
    params.validate()?;
    if !(hop_s > 0.0) {
        return Err(Error::InvalidConfig("hop_s must be > 0".into()));
    }
    let max = curve.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_height = (params.min_height_rel * max).max(params.floor_linear());

    let candidates: Vec<usize> = local_maxima(curve)
        .into_iter()
        .filter(|&p| curve[p] >= min_height)
        .collect();
    let spaced = select_by_distance(
        curve,
        &candidates,
        distance_in_samples(params.min_distance_s, hop_s),
    );
    let min_prom = params.prominence_rel * max;
    Ok(spaced
        .into_iter()
        .filter(|&p| prominence(curve, p) >= min_prom)
        .collect())
}

/// Peaks of the clip's RMS envelope with the default 25 ms / 10 ms framing.
pub fn clip_peaks(clip: &AudioClip, params: &PeakParams) -> Result<(Vec<usize>, f64)> {
    let rms = RmsParams::for_rate(clip.sample_rate());
    let curve = rms_curve(clip, rms.frame_len, rms.hop)?;
    let hop_s = rms.hop_s(clip.sample_rate());
    Ok((find_peaks(&curve, params, hop_s)?, hop_s))
}

/// True when the clip's RMS envelope has no qualifying peak.
pub fn is_silent(clip: &AudioClip, params: &PeakParams) -> Result<bool> {
    Ok(clip_peaks(clip, params)?.0.is_empty())
}

/// Number of samples in `t_s` seconds at `sample_rate`.
pub fn window_len(t_s: f64, sample_rate: u32) -> usize {
    (t_s * sample_rate as f64).round() as usize
}

/// One `t_s`-second window centred on each peak, shifted inward at the clip
/// boundaries. A clip no longer than `t_s` comes back whole, once.
pub fn extract_windows(
    clip: &AudioClip,
    peaks: &[usize],
    t_s: f64,
    hop_s: f64,
) -> Result<Vec<AudioClip>> {
    if !(t_s > 0.0) {
        return Err(Error::InvalidConfig("window length must be > 0".into()));
    }
    let win = window_len(t_s, clip.sample_rate());
    if clip.len() <= win {
        return Ok(vec![clip.clone()]);
    }
    let sr = clip.sample_rate() as f64;
    Ok(peaks
        .iter()
        .map(|&p| {
            let centre = (p as f64 * hop_s * sr).round() as usize;
            let start = centre.saturating_sub(win / 2).min(clip.len() - win);
            clip.slice(start, win)
        })
        .collect())
}

/// How [`fit_to_length_with`] extends a short clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// Zero-pad with `left` zeros before the clip and the rest after it.
    Pad { left: usize },
    /// Tile the clip end to end and truncate.
    Repeat,
}

/// Extends `clip` to exactly `target` samples as described by `mode`.
pub fn fit_to_length_with(clip: &AudioClip, target: usize, mode: FitMode) -> Result<AudioClip> {
    if clip.len() > target {
        return Err(Error::TooLong {
            len: clip.len(),
            target,
        });
    }
    if clip.len() == target {
        return Ok(clip.clone());
    }
    clip.ensure_non_empty()?;
    let samples = match mode {
        FitMode::Pad { left } => {
            let left = left.min(target - clip.len());
            let mut out = vec![0.0f32; target];
            out[left..left + clip.len()].copy_from_slice(clip.samples());
            out
        }
        FitMode::Repeat => clip.samples().iter().cycle().take(target).copied().collect(),
    };
    AudioClip::new(samples, clip.sample_rate())
}

/// Draws pad-or-repeat with probability one half (and the pad split) from
/// `rng`.
pub fn choose_fit_mode<R: Rng + ?Sized>(rng: &mut R, len: usize, target: usize) -> FitMode {
    if rng.random_bool(0.5) {
        FitMode::Pad {
            left: rng.random_range(0..=target.saturating_sub(len)),
        }
    } else {
        FitMode::Repeat
    }
}

/// Brings a clip shorter than `t_s` seconds up to exactly that length.
pub fn fit_to_length<R: Rng + ?Sized>(clip: &AudioClip, t_s: f64, rng: &mut R) -> Result<AudioClip> {
    let target = window_len(t_s, clip.sample_rate());
    if clip.len() >= target {
        return fit_to_length_with(clip, target, FitMode::Repeat);
    }
    let mode = choose_fit_mode(rng, clip.len(), target);
    fit_to_length_with(clip, target, mode)
}
