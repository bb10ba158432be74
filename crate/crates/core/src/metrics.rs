//! SI-SDR scoring and the aggregation protocol used for reporting:
//! per-excerpt means over seeds, then the median over excerpts with a
//! percentile-bootstrap 95% confidence interval.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::seed;

/// Returned when the residual vanishes (perfect estimate up to scale).
pub const SISDR_CAP_DB: f64 = 100.0;
/// Returned when the estimate has no energy along the reference.
pub const SISDR_FLOOR_DB: f64 = -100.0;

/// Scale-invariant signal-to-distortion ratio in dB, on raw samples.
///
/// Both signals are mean-subtracted, the estimate is projected onto the
/// reference, and the ratio of projection energy to residual energy is
/// returned, clamped to `[-100, 100]` dB.
pub fn si_sdr_f64(est: &[f64], reference: &[f64]) -> Result<f64> {
    if est.len() != reference.len() {
        return Err(Error::LengthMismatch(est.len(), reference.len()));
    }
    if est.is_empty() {
        return Err(Error::ZeroReference);
    }
    let n = est.len() as f64;
    let me = est.iter().sum::<f64>() / n;
    let mr = reference.iter().sum::<f64>() / n;

    let mut dot = 0.0;
    let mut rr = 0.0;
    for (e, r) in est.iter().zip(reference) {
        let (e, r) = (e - me, r - mr);
        dot += e * r;
        rr += r * r;
    }
    if rr == 0.0 {
        return Err(Error::ZeroReference);
    }
    let alpha = dot / rr;

    let mut target = 0.0;
    let mut resid = 0.0;
    for (e, r) in est.iter().zip(reference) {
        let t = alpha * (r - mr);
        target += t * t;
        resid += (t - (e - me)).powi(2);
    }
    if target == 0.0 {
        return Ok(SISDR_FLOOR_DB);
    }
    if resid == 0.0 {
        return Ok(SISDR_CAP_DB);
    }
    Ok((10.0 * (target / resid).log10()).clamp(SISDR_FLOOR_DB, SISDR_CAP_DB))
}

fn widen(clip: &AudioClip) -> Vec<f64> {
    clip.samples().iter().map(|&s| s as f64).collect()
}

/// SI-SDR of `est` against `reference`, in dB.
pub fn si_sdr(est: &AudioClip, reference: &AudioClip) -> Result<f64> {
    if est.sample_rate() != reference.sample_rate() {
        return Err(Error::RateMismatch(est.sample_rate(), reference.sample_rate()));
    }
    si_sdr_f64(&widen(est), &widen(reference))
}

/// Improvement of `est` over the unprocessed `mix`, in dB.
pub fn si_sdri(est: &AudioClip, mix: &AudioClip, reference: &AudioClip) -> Result<f64> {
    Ok(si_sdr(est, reference)? - si_sdr(mix, reference)?)
}

/// One scored excerpt under one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcerptScore {
    pub mix_id: String,
    pub seed: u64,
    pub sisdr_db: f64,
    pub sisdri_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Sisdr,
    Sisdri,
}

impl Metric {
    pub fn of(self, s: &ExcerptScore) -> f64 {
        match self {
            Metric::Sisdr => s.sisdr_db,
            Metric::Sisdri => s.sisdri_db,
        }
    }
}

/// Median with a 95% confidence interval and the median absolute deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateStat {
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mad: f64,
    pub n: usize,
}

pub const DEFAULT_BOOTSTRAP: usize = 1000;

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn median(values: &[f64]) -> f64 {
    median_of_sorted(&sorted(values))
}

/// Linear-interpolation percentile (`q` in `[0, 1]`) of sorted data.
fn percentile_of_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Median, MAD and percentile-bootstrap 95% CI of the median over `values`.
///
/// Input order matters for the bootstrap draws; [`aggregate`] feeds values
/// sorted by excerpt id so its result is order independent.
pub fn aggregate_values(values: &[f64], bootstrap_n: usize, seed: u64) -> Result<AggregateStat> {
    if values.is_empty() {
        return Err(Error::EmptyScores);
    }
    let s = sorted(values);
    let med = median_of_sorted(&s);
    let mad = median(&s.iter().map(|v| (v - med).abs()).collect::<Vec<_>>());

    let (mut ci_low, mut ci_high) = (med, med);
    if bootstrap_n > 0 {
        let mut rng = seed::stream(seed, &[&seed::BOOTSTRAP]);
        let mut medians = Vec::with_capacity(bootstrap_n);
        let mut buf = vec![0.0; values.len()];
        for _ in 0..bootstrap_n {
            for b in buf.iter_mut() {
                *b = values[rng.random_range(0..values.len())];
            }
            buf.sort_by(f64::total_cmp);
            medians.push(median_of_sorted(&buf));
        }
        medians.sort_by(f64::total_cmp);
        ci_low = percentile_of_sorted(&medians, 0.025).min(med);
        ci_high = percentile_of_sorted(&medians, 0.975).max(med);
    }
    Ok(AggregateStat {
        median: med,
        ci_low,
        ci_high,
        mad,
        n: values.len(),
    })
}

/// Per-excerpt mean of `metric` over seeds, keyed and ordered by `mix_id`.
pub fn seed_means(scores: &[ExcerptScore], metric: Metric) -> BTreeMap<String, f64> {
    let mut groups: BTreeMap<&str, Vec<(u64, f64)>> = BTreeMap::new();
    for s in scores {
        groups
            .entry(s.mix_id.as_str())
            .or_default()
            .push((s.seed, metric.of(s)));
    }
    groups
        .into_iter()
        .map(|(id, mut v)| {
            // Fixed summation order keeps the mean independent of input order.
            v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let mean = v.iter().map(|x| x.1).sum::<f64>() / v.len() as f64;
            (id.to_string(), mean)
        })
        .collect()
}

/// Seed-mean per excerpt, then median and bootstrap CI over excerpts.
pub fn aggregate(
    scores: &[ExcerptScore],
    metric: Metric,
    bootstrap_n: usize,
    seed: u64,
) -> Result<AggregateStat> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let means: Vec<f64> = seed_means(scores, metric).into_values().collect();
    aggregate_values(&means, bootstrap_n, seed)
}

/// Per-excerpt differences `a - b` of seed-meaned `metric`, aggregated.
pub fn paired_differences(
    a: &[ExcerptScore],
    b: &[ExcerptScore],
    metric: Metric,
    bootstrap_n: usize,
    seed: u64,
) -> Result<AggregateStat> {
    let ma = seed_means(a, metric);
    let mb = seed_means(b, metric);
    let ka: BTreeSet<&String> = ma.keys().collect();
    let kb: BTreeSet<&String> = mb.keys().collect();
    if ka != kb {
        let only_a = ka.difference(&kb).count();
        let only_b = kb.difference(&ka).count();
        return Err(Error::IdSetMismatch(format!(
            "{only_a} ids only in the first set, {only_b} only in the second"
        )));
    }
    let diffs: Vec<f64> = ma.iter().map(|(k, va)| va - mb[k]).collect();
    aggregate_values(&diffs, bootstrap_n, seed)
}
