//! Flat TOML configuration. Every key is optional; command-line flags win
//! over the file and the file wins over built-in defaults.

use std::path::{Path, PathBuf};

use biodeno::gate::{GateConfig, StftConfig};
use biodeno::harness::RateConversion;
use biodeno::metrics::DEFAULT_BOOTSTRAP;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub sample_rate: Option<u32>,
    pub n_fft: Option<usize>,
    pub hop: Option<usize>,
    pub stationary: Option<bool>,
    pub n_std_thresh: Option<f64>,
    pub prop_decrease: Option<f64>,
    pub time_smooth_ms: Option<f64>,
    pub freq_smooth_hz: Option<f64>,
    pub time_constant_s: Option<f64>,
    pub command: Option<String>,
    pub timeout_s: Option<f64>,
    pub scales: Option<Vec<f64>>,
    pub excerpt_s: Option<f64>,
    pub rir_prob: Option<f64>,
    pub rir_dir: Option<PathBuf>,
    pub snr_lo: Option<f64>,
    pub snr_hi: Option<f64>,
    pub noise_conversion: Option<RateConversion>,
    pub bootstrap: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Fully resolved settings; serialized into run provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub seed: u64,
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub stationary: bool,
    pub n_std_thresh: f64,
    pub prop_decrease: f64,
    pub time_smooth_ms: f64,
    pub freq_smooth_hz: f64,
    pub time_constant_s: f64,
    pub command: Option<String>,
    pub timeout_s: f64,
    pub scales: Vec<f64>,
    pub excerpt_s: f64,
    pub rir_prob: Option<f64>,
    pub rir_dir: Option<PathBuf>,
    pub snr_lo: f64,
    pub snr_hi: f64,
    pub noise_conversion: RateConversion,
    pub bootstrap: usize,
}

impl Settings {
    pub fn resolve(file: FileConfig, seed: u64) -> Self {
        let gate = GateConfig::default();
        let stft = StftConfig::default();
        Self {
            seed,
            sample_rate: file.sample_rate.unwrap_or(16_000),
            n_fft: file.n_fft.unwrap_or(stft.n_fft),
            hop: file.hop.unwrap_or(stft.hop),
            stationary: file.stationary.unwrap_or(gate.stationary),
            n_std_thresh: file.n_std_thresh.unwrap_or(gate.n_std_thresh),
            prop_decrease: file.prop_decrease.unwrap_or(gate.prop_decrease),
            time_smooth_ms: file.time_smooth_ms.unwrap_or(gate.time_smooth_ms),
            freq_smooth_hz: file.freq_smooth_hz.unwrap_or(gate.freq_smooth_hz),
            time_constant_s: file.time_constant_s.unwrap_or(gate.nonstat_time_constant_s),
            command: file.command,
            timeout_s: file.timeout_s.unwrap_or(300.0),
            scales: file.scales.unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0]),
            excerpt_s: file.excerpt_s.unwrap_or(4.0),
            rir_prob: file.rir_prob,
            rir_dir: file.rir_dir,
            snr_lo: file.snr_lo.unwrap_or(-5.0),
            snr_hi: file.snr_hi.unwrap_or(10.0),
            noise_conversion: file.noise_conversion.unwrap_or(RateConversion::Reinterpret),
            bootstrap: file.bootstrap.unwrap_or(DEFAULT_BOOTSTRAP),
        }
    }

    pub fn stft(&self) -> StftConfig {
        StftConfig {
            n_fft: self.n_fft,
            hop: self.hop,
        }
    }

    pub fn gate(&self) -> GateConfig {
        GateConfig {
            stationary: self.stationary,
            n_std_thresh: self.n_std_thresh,
            prop_decrease: self.prop_decrease,
            time_smooth_ms: self.time_smooth_ms,
            freq_smooth_hz: self.freq_smooth_hz,
            nonstat_time_constant_s: self.time_constant_s,
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("settings serialize")
    }
}
