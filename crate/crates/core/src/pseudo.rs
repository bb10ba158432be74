//! Pseudo-clean target generation.
//!
//! An existing denoiser `f'` is run on slowed-down copies of a noisy clip;
//! every estimate is sped back up and the estimates are averaged. The
//! averaged target is then cut into fixed-length training excerpts, some of
//! which are reverberated.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{convolve, read_audio, resample, time_scale, write_audio, AudioClip, TimeScaleFactor};
use crate::error::{Error, Result};
use crate::gate::{self, GateConfig, StftConfig};
use crate::harness::write_atomic;
use crate::segment::{self, PeakParams};
use crate::seed;

/// A denoiser treated as a black box. Implementations must be callable from
/// several threads at once.
pub trait DenoiserBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Returns an estimate with the input's length and sample rate.
    fn denoise(&self, clip: &AudioClip) -> Result<AudioClip>;

    /// Seeded variant for stochastic backends; deterministic ones ignore the
    /// seed.
    fn denoise_with_seed(&self, clip: &AudioClip, _seed: u64) -> Result<AudioClip> {
        self.denoise(clip)
    }
}

/// Runs `backend` and enforces its output contract.
pub fn checked_denoise(backend: &dyn DenoiserBackend, clip: &AudioClip, seed: u64) -> Result<AudioClip> {
    let out = backend.denoise_with_seed(clip, seed)?;
    let fail = |reason: String| Error::BackendFailure {
        backend: backend.name().to_string(),
        reason,
    };
    if out.sample_rate() != clip.sample_rate() {
        return Err(fail(format!(
            "returned {} Hz for a {} Hz input",
            out.sample_rate(),
            clip.sample_rate()
        )));
    }
    if out.len() != clip.len() {
        return Err(fail(format!(
            "returned {} samples for a {}-sample input",
            out.len(),
            clip.len()
        )));
    }
    Ok(out)
}

/// Returns its input. Feeding these targets to the mixer gives the
/// noisy-target baseline.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityBackend;

impl DenoiserBackend for IdentityBackend {
    fn name(&self) -> &str {
        "identity"
    }

    fn denoise(&self, clip: &AudioClip) -> Result<AudioClip> {
        Ok(noisy_target(clip))
    }
}

pub fn noisy_target(clip: &AudioClip) -> AudioClip {
    clip.clone()
}

/// The built-in spectral gate, optionally with a fixed noise clip for the
/// stationary profile.
#[derive(Debug, Clone, Default)]
pub struct GateBackend {
    pub stft: StftConfig,
    pub gate: GateConfig,
    pub noise: Option<AudioClip>,
}

impl DenoiserBackend for GateBackend {
    fn name(&self) -> &str {
        "gate"
    }

    fn denoise(&self, clip: &AudioClip) -> Result<AudioClip> {
        gate::denoise(clip, self.noise.as_ref(), &self.stft, &self.gate)
    }
}

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

/// Environment variable naming the scratch directory for external backends.
pub const SCRATCH_ENV: &str = "BIODENO_SCRATCH";
/// Environment variable through which the seed reaches external programs.
pub const SEED_ENV: &str = "BIODENO_SEED";

/// Runs an external program once per clip through `sh -c`. The template's
/// `{in}` and `{out}` placeholders become the (shell-quoted) paths of a
/// float32 input WAV and of the WAV the program must write.
#[derive(Debug)]
pub struct ExternalBackend {
    template: String,
    name: String,
    pub timeout: Duration,
    pub scratch: Option<PathBuf>,
    warnings: Mutex<Vec<String>>,
}

impl ExternalBackend {
    pub fn new(template: impl Into<String>) -> Result<Self> {
        let template = template.into();
        if !template.contains("{in}") || !template.contains("{out}") {
            return Err(Error::InvalidConfig(
                "external command template needs both {in} and {out}".into(),
            ));
        }
        let name = template
            .split_whitespace()
            .next()
            .map(|p| format!("external:{p}"))
            .unwrap_or_else(|| "external".into());
        Ok(Self {
            template,
            name,
            timeout: DEFAULT_TIMEOUT,
            scratch: std::env::var_os(SCRATCH_ENV).map(PathBuf::from),
            warnings: Mutex::new(Vec::new()),
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_scratch(mut self, dir: impl Into<PathBuf>) -> Self {
        self.scratch = Some(dir.into());
        self
    }

    /// Contract fixes applied so far (wrong length or rate).
    pub fn warnings(&self) -> Vec<String> {
        self.warnings.lock().expect("warning lock").clone()
    }

    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::BackendFailure {
            backend: self.name.clone(),
            reason: reason.into(),
        }
    }

    fn run(&self, clip: &AudioClip, seed: Option<u64>) -> Result<AudioClip> {
        let dir = match &self.scratch {
            Some(s) => {
                std::fs::create_dir_all(s).map_err(|e| Error::io(s, e))?;
                tempfile::tempdir_in(s).map_err(|e| Error::io(s, e))?
            }
            None => tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?,
        };
        let input = dir.path().join("in.wav");
        let output = dir.path().join("out.wav");
        let log = dir.path().join("stderr.txt");
        write_audio(clip, &input)?;

        let cmd = self
            .template
            .replace("{in}", &shell_quote(&input))
            .replace("{out}", &shell_quote(&output));
        let stderr = std::fs::File::create(&log).map_err(|e| Error::io(&log, e))?;
        let mut command = Command::new("sh");
        command
            .arg("-c")
            .arg(&cmd)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(stderr);
        if let Some(seed) = seed {
            command.env(SEED_ENV, seed.to_string());
        }
        let mut child = command
            .spawn()
            .map_err(|e| self.fail(format!("could not start `sh`: {e}")))?;

        let started = Instant::now();
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if started.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(Error::Timeout {
                        backend: self.name.clone(),
                        seconds: self.timeout.as_secs_f64(),
                    });
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(5)),
                Err(e) => return Err(self.fail(format!("waiting for child: {e}"))),
            }
        };
        if !status.success() {
            let mut diag = String::new();
            if let Ok(mut f) = std::fs::File::open(&log) {
                let _ = f.read_to_string(&mut diag);
            }
            let diag = diag.trim();
            let tail: String = diag.chars().rev().take(500).collect::<Vec<_>>().into_iter().rev().collect();
            let code = status
                .code()
                .map_or_else(|| "a signal".to_string(), |c| format!("code {c}"));
            return Err(self.fail(format!("exited with {code}: {tail}")));
        }
        let out = read_audio(&output).map_err(|e| self.fail(format!("unreadable output: {e}")))?;
        self.conform(out, clip)
    }

    /// Brings the program's output to the input's rate and length.
    fn conform(&self, mut out: AudioClip, clip: &AudioClip) -> Result<AudioClip> {
        let mut notes = Vec::new();
        if out.sample_rate() != clip.sample_rate() {
            notes.push(format!(
                "output at {} Hz resampled to {} Hz",
                out.sample_rate(),
                clip.sample_rate()
            ));
            out = resample(&out, clip.sample_rate())?;
        }
        if out.len() != clip.len() {
            notes.push(format!("output length {} fitted to {}", out.len(), clip.len()));
            let mut s = out.into_samples();
            s.resize(clip.len(), 0.0);
            out = AudioClip::new(s, clip.sample_rate())?;
        }
        if !notes.is_empty() {
            self.warnings
                .lock()
                .expect("warning lock")
                .push(format!("{}: {}", self.name, notes.join("; ")));
        }
        Ok(out)
    }
}

impl DenoiserBackend for ExternalBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn denoise(&self, clip: &AudioClip) -> Result<AudioClip> {
        self.run(clip, None)
    }

    fn denoise_with_seed(&self, clip: &AudioClip, seed: u64) -> Result<AudioClip> {
        self.run(clip, Some(seed))
    }
}

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.to_string_lossy().replace('\'', r"'\''"))
}

/// Slow-down factors whose back-scaled estimates are averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub scale_factors: Vec<f64>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            scale_factors: vec![1.0, 2.0, 3.0, 4.0],
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale_factors.is_empty() {
            return Err(Error::EmptyList("scale factors"));
        }
        for (i, &k) in self.scale_factors.iter().enumerate() {
            TimeScaleFactor::slower(k).map_err(|_| Error::InvalidFactor(k))?;
            if !(k >= 1.0) {
                return Err(Error::InvalidFactor(k));
            }
            if self.scale_factors[..i].contains(&k) {
                return Err(Error::InvalidConfig(format!("scale factor {k} repeated")));
            }
        }
        Ok(())
    }
}

/// Denoises `clip` at every slow-down factor, scales each estimate back,
/// trims them to the shortest and averages.
pub fn generate_pseudo_clean(
    clip: &AudioClip,
    backend: &dyn DenoiserBackend,
    cfg: &EnsembleConfig,
) -> Result<AudioClip> {
    generate_pseudo_clean_seeded(clip, backend, cfg, 0)
}

/// [`generate_pseudo_clean`] passing `seed` to stochastic backends.
pub fn generate_pseudo_clean_seeded(
    clip: &AudioClip,
    backend: &dyn DenoiserBackend,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<AudioClip> {
    cfg.validate()?;
    clip.ensure_non_empty()?;
    let mut estimates = Vec::with_capacity(cfg.scale_factors.len());
    for &k in &cfg.scale_factors {
        let slow = TimeScaleFactor::slower(k)?;
        let stretched = time_scale(clip, slow)?;
        let est = checked_denoise(backend, &stretched, seed)?;
        estimates.push(time_scale(&est, slow.inverse())?);
    }
    let peaks = PeakParams::default();
    let mut all_silent = true;
    for e in &estimates {
        if !segment::is_silent(e, &peaks)? {
            all_silent = false;
            break;
        }
    }
    if all_silent {
        return Err(Error::AllSilent);
    }
    let len = estimates.iter().map(AudioClip::len).min().unwrap_or(0);
    let n = estimates.len() as f64;
    let mean: Vec<f32> = (0..len)
        .map(|i| (estimates.iter().map(|e| e.samples()[i] as f64).sum::<f64>() / n) as f32)
        .collect();
    AudioClip::new(mean, clip.sample_rate())
}

/// One room impulse response of the reverberation pool.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub id: String,
    pub clip: AudioClip,
}

/// Loads every WAV under `dir`, resampled to `sample_rate`.
pub fn load_rir_pool(dir: impl AsRef<Path>, sample_rate: u32) -> Result<Vec<ImpulseResponse>> {
    let dir = dir.as_ref();
    crate::audio::list_wav_files(dir)?
        .into_iter()
        .map(|rel| {
            let clip = resample(&read_audio(dir.join(&rel))?, sample_rate)?;
            Ok(ImpulseResponse {
                id: rel.to_string_lossy().replace('\\', "/"),
                clip,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcerptConfig {
    /// Excerpt length in seconds.
    pub t_s: f64,
    pub rir_prob: f64,
    pub rir_pool: Vec<ImpulseResponse>,
    pub peak_params: PeakParams,
}

impl Default for ExcerptConfig {
    fn default() -> Self {
        Self {
            t_s: 4.0,
            rir_prob: 0.5,
            rir_pool: Vec::new(),
            peak_params: PeakParams::default(),
        }
    }
}

impl ExcerptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_s > 0.0) {
            return Err(Error::InvalidConfig("excerpt length must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.rir_prob) {
            return Err(Error::InvalidConfig("rir_prob must lie in [0, 1]".into()));
        }
        if self.rir_prob > 0.0 && self.rir_pool.is_empty() {
            return Err(Error::EmptyRirPool);
        }
        self.peak_params.validate()
    }
}

/// A training excerpt and whether (and with which response) it was
/// reverberated.
#[derive(Debug, Clone, PartialEq)]
pub struct Excerpt {
    pub clip: AudioClip,
    pub rir_id: Option<String>,
}

impl Excerpt {
    pub fn reverberated(&self) -> bool {
        self.rir_id.is_some()
    }
}

/// Cuts an already generated target into excerpts of exactly `t_s` seconds.
/// Randomness for excerpt `i` comes from streams keyed by
/// `(seed, clip_id, i)`, so results do not depend on processing order.
pub fn excerpts_from_target(
    target: &AudioClip,
    cfg: &ExcerptConfig,
    seed: u64,
    clip_id: &str,
) -> Result<Vec<Excerpt>> {
    cfg.validate()?;
    let (peaks, hop_s) = segment::clip_peaks(target, &cfg.peak_params)?;
    if peaks.is_empty() {
        return Ok(Vec::new());
    }
    let target_len = segment::window_len(cfg.t_s, target.sample_rate());
    let windows = segment::extract_windows(target, &peaks, cfg.t_s, hop_s)?;
    windows
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            let mut seg_rng = seed::stream(seed, &[&seed::SEGMENTATION, &clip_id, &i]);
            let dry = if w.len() < target_len {
                segment::fit_to_length(&w, cfg.t_s, &mut seg_rng)?
            } else {
                w
            };
            let mut rir_rng = seed::stream(seed, &[&seed::RIR, &clip_id, &i]);
            if cfg.rir_prob > 0.0 && rir_rng.random_bool(cfg.rir_prob) {
                let rir = &cfg.rir_pool[rir_rng.random_range(0..cfg.rir_pool.len())];
                Ok(Excerpt {
                    clip: convolve(&dry, &rir.clip)?,
                    rir_id: Some(rir.id.clone()),
                })
            } else {
                Ok(Excerpt {
                    clip: dry,
                    rir_id: None,
                })
            }
        })
        .collect()
}

/// Full excerpt pipeline for one noisy clip: ensemble target, silence
/// filter, peak windows, length fitting and optional reverberation.
pub fn make_training_excerpts(
    clip: &AudioClip,
    backend: &dyn DenoiserBackend,
    ens_cfg: &EnsembleConfig,
    exc_cfg: &ExcerptConfig,
    seed: u64,
    clip_id: &str,
) -> Result<Vec<Excerpt>> {
    exc_cfg.validate()?;
    let target = match generate_pseudo_clean_seeded(clip, backend, ens_cfg, seed) {
        Err(Error::AllSilent) => return Ok(Vec::new()),
        other => other?,
    };
    excerpts_from_target(&target, exc_cfg, seed, clip_id)
}

/// One row of the excerpt manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcerptRecord {
    pub excerpt_id: String,
    pub source_id: String,
    pub index: usize,
    pub path: PathBuf,
    pub reverberated: bool,
    pub rir_id: String,
    pub duration_s: f64,
    pub sample_rate: u32,
}

pub const EXCERPT_MANIFEST: &str = "excerpts.csv";

/// Outcome of [`run_pseudo_batch`].
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoBatch {
    pub records: Vec<ExcerptRecord>,
    /// Sources that produced no excerpt because they were silent.
    pub silent_sources: Vec<String>,
    pub manifest_path: PathBuf,
}

/// Settings of a batch excerpt run.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoOptions {
    pub ensemble: EnsembleConfig,
    pub excerpts: ExcerptConfig,
    pub seed: u64,
    pub sample_rate: u32,
}

/// Generates excerpts for every WAV under `input` (a file or directory) in
/// parallel, writing `excerpts/*.wav` and `excerpts.csv` into `out_dir`.
pub fn run_pseudo_batch(
    input: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
    backend: &dyn DenoiserBackend,
    opts: &PseudoOptions,
) -> Result<PseudoBatch> {
    let input = input.as_ref();
    let out_dir = out_dir.as_ref();
    opts.ensemble.validate()?;
    opts.excerpts.validate()?;
    let files = crate::audio::list_wav_files(input)?;
    let base = if input.is_dir() { input } else { input.parent().unwrap_or(Path::new(".")) };
    let wav_dir = out_dir.join("excerpts");
    std::fs::create_dir_all(&wav_dir).map_err(|e| Error::io(&wav_dir, e))?;

    let per_source = files
        .par_iter()
        .map(|rel| {
            let source_id = rel.to_string_lossy().replace('\\', "/");
            let clip = resample(&read_audio(base.join(rel))?, opts.sample_rate)?;
            let excerpts =
                make_training_excerpts(&clip, backend, &opts.ensemble, &opts.excerpts, opts.seed, &source_id)?;
            let stem = source_id.trim_end_matches(".wav").trim_end_matches(".WAV").replace('/', "__");
            excerpts
                .into_iter()
                .enumerate()
                .map(|(i, e)| {
                    let excerpt_id = format!("{stem}__{i:03}");
                    let path = PathBuf::from("excerpts").join(format!("{excerpt_id}.wav"));
                    write_audio(&e.clip, out_dir.join(&path))?;
                    Ok(ExcerptRecord {
                        excerpt_id,
                        source_id: source_id.clone(),
                        index: i,
                        path,
                        reverberated: e.reverberated(),
                        rir_id: e.rir_id.unwrap_or_default(),
                        duration_s: e.clip.duration_s(),
                        sample_rate: e.clip.sample_rate(),
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(|r| (source_id, r))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    let mut silent_sources = Vec::new();
    for (source, recs) in per_source {
        if recs.is_empty() {
            silent_sources.push(source);
        }
        records.extend(recs);
    }

    let mut text = format!(
        "# biodeno excerpt manifest v1\n# seed={}\n# backend={}\n# scale_factors={}\n# t_s={}\n# rir_prob={}\n",
        opts.seed,
        backend.name(),
        opts.ensemble
            .scale_factors
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(","),
        opts.excerpts.t_s,
        opts.excerpts.rir_prob,
    );
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::io(out_dir, std::io::Error::other(e.to_string()));
    if records.is_empty() {
        w.write_record([
            "excerpt_id", "source_id", "index", "path", "reverberated", "rir_id", "duration_s",
            "sample_rate",
        ])
        .map_err(csv_err)?;
    }
    for r in &records {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io(out_dir, std::io::Error::other(e.to_string())))?;
    text.push_str(std::str::from_utf8(&bytes).expect("csv output is utf-8"));
    let manifest_path = out_dir.join(EXCERPT_MANIFEST);
    write_atomic(&manifest_path, text.as_bytes())?;
    Ok(PseudoBatch {
        records,
        silent_sources,
        manifest_path,
    })
}
