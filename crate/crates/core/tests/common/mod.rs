#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use biodeno::audio::write_audio;
use biodeno::AudioClip;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn white(len: usize, amp: f64, sr: u32, seed: u64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AudioClip::new((0..len).map(|_| rng.random_range(-amp..amp) as f32).collect(), sr).unwrap()
}

/// Gaussian-windowed tone bursts, a crude stand-in for calls.
pub fn calls(len: usize, sr: u32, centres_s: &[f64], freq: f64) -> AudioClip {
    let s = (0..len)
        .map(|i| {
            let t = i as f64 / sr as f64;
            let env: f64 = centres_s.iter().map(|c| (-((t - c) / 0.08).powi(2)).exp()).sum();
            (0.4 * env * (2.0 * PI * freq * t).sin()) as f32
        })
        .collect();
    AudioClip::new(s, sr).unwrap()
}

/// Linear chirp between `f0` and `f1` Hz under a smooth fade in/out.
pub fn chirp(len: usize, sr: u32, f0: f64, f1: f64) -> AudioClip {
    let dur = len as f64 / sr as f64;
    let s = (0..len)
        .map(|i| {
            let t = i as f64 / sr as f64;
            let phase = 2.0 * PI * (f0 * t + 0.5 * (f1 - f0) / dur * t * t);
            let fade = (PI * t / dur).sin();
            (0.5 * fade * phase.sin()) as f32
        })
        .collect();
    AudioClip::new(s, sr).unwrap()
}

/// Writes `<root>/<scenario>/<role>/NNN.wav` files. Vocalizations are call
/// bursts and noises are white noise; duration `i` grows with the index so
/// duration pairing is unambiguous.
pub fn write_asset_tree(root: &Path, counts: [(&str, usize, usize); 2], sr: u32, secs: f64) {
    for (scenario, vocs, noises) in counts {
        for (role, n) in [("voc", vocs), ("noise", noises)] {
            let dir = root.join(scenario).join(role);
            std::fs::create_dir_all(&dir).unwrap();
            for i in 0..n {
                let len = (secs * sr as f64) as usize + i;
                let clip = if role == "voc" {
                    calls(len, sr, &[secs * 0.3, secs * 0.7], 600.0 + 40.0 * i as f64)
                } else {
                    white(len, 0.3, sr, 1000 + i as u64)
                };
                write_audio(&clip, dir.join(format!("{i:03}.wav"))).unwrap();
            }
        }
    }
}

/// Asset counts of the published benchmark lists.
pub const REFERENCE_TREE: [(&str, usize, usize); 2] = [("underwater", 11, 26), ("terrestrial", 51, 20)];

pub fn rel_l2(a: &[f32], b: &[f32]) -> f64 {
    let n = a.len().min(b.len());
    let num: f64 = (0..n).map(|i| (a[i] as f64 - b[i] as f64).powi(2)).sum();
    let den: f64 = b[..n].iter().map(|&v| (v as f64).powi(2)).sum();
    (num / den).sqrt()
}

/// One-sample Kolmogorov-Smirnov statistic against U(lo, hi).
pub fn ks_uniform(values: &[f64], lo: f64, hi: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
