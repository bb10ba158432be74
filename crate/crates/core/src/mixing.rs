//! SNR-controlled mixture synthesis and benchmark assembly.
//!
//! Signal and noise power are mean squares over the whole overlapped region.
//! For a target SNR `snr_db` the noise gain is
//! `g = sqrt(P_s / P_n * 10^(-snr_db / 10))`.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{write_audio, AudioClip};
use crate::error::{Error, Result};
use crate::harness::manifest::{load_asset, manifest_err, ManifestEntry, RateConversion};
use crate::harness::{write_atomic, Manifest, Role, Scenario};
use crate::seed;

/// How mixture SNRs are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SnrPolicy {
    Uniform { lo_db: f64, hi_db: f64 },
    Fixed { snr_db: f64 },
}

impl Default for SnrPolicy {
    fn default() -> Self {
        SnrPolicy::Uniform {
            lo_db: -5.0,
            hi_db: 10.0,
        }
    }
}

impl SnrPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SnrPolicy::Uniform { lo_db, hi_db } if lo_db.is_finite() && hi_db.is_finite() && lo_db <= hi_db => Ok(()),
            SnrPolicy::Fixed { snr_db } if snr_db.is_finite() => Ok(()),
            other => Err(Error::InvalidConfig(format!("invalid SNR policy {other:?}"))),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SnrPolicy::Uniform { lo_db, hi_db } if lo_db < hi_db => rng.random_range(lo_db..hi_db),
            SnrPolicy::Uniform { lo_db, .. } => lo_db,
            SnrPolicy::Fixed { snr_db } => snr_db,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            SnrPolicy::Uniform { lo_db, hi_db } => (lo_db, hi_db),
            SnrPolicy::Fixed { snr_db } => (snr_db, snr_db),
        }
    }
}

/// A planned mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub mix_id: String,
    pub scenario: Scenario,
    pub voc_id: String,
    pub noise_id: String,
    pub snr_db: f64,
    pub seed: u64,
}

/// A rendered mixture: `mixture == clean + noise` sample by sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub mixture: AudioClip,
    pub clean: AudioClip,
    pub noise: AudioClip,
}

/// Noise gain that puts `noise` at `snr_db` below `signal`.
pub fn scale_noise_to_snr(signal: &AudioClip, noise: &AudioClip, snr_db: f64) -> Result<f64> {
    if signal.len() != noise.len() {
        return Err(Error::LengthMismatch(signal.len(), noise.len()));
    }
    if signal.sample_rate() != noise.sample_rate() {
        return Err(Error::RateMismatch(signal.sample_rate(), noise.sample_rate()));
    }
    let ps = signal.mean_square();
    let pn = noise.mean_square();
    if !(ps > 0.0) {
        return Err(Error::SilentSignal);
    }
    if !(pn > 0.0) {
        return Err(Error::SilentNoise);
    }
    Ok((ps / pn * 10f64.powf(-snr_db / 10.0)).sqrt())
}

/// Measured SNR of `signal` over `noise` in dB.
pub fn measure_snr_db(signal: &AudioClip, noise: &AudioClip) -> f64 {
    10.0 * (signal.mean_square() / noise.mean_square()).log10()
}

/// Crops (at a random offset) or tiles `noise` to exactly `target_len`.
pub fn fit_noise_duration<R: Rng + ?Sized>(
    noise: &AudioClip,
    target_len: usize,
    rng: &mut R,
) -> Result<AudioClip> {
    if noise.is_empty() {
        return Err(Error::EmptyNoise);
    }
    Ok(match noise.len().cmp(&target_len) {
        std::cmp::Ordering::Equal => noise.clone(),
        std::cmp::Ordering::Greater => {
            let offset = rng.random_range(0..=noise.len() - target_len);
            noise.slice(offset, target_len)
        }
        std::cmp::Ordering::Less => AudioClip::new(
            noise.samples().iter().cycle().take(target_len).copied().collect(),
            noise.sample_rate(),
        )?,
    })
}

/// Mixes already-loaded assets at the working rate.
pub fn render_mixture(spec: &MixtureSpec, voc: &AudioClip, noise: &AudioClip) -> Result<Mixture> {
    if voc.sample_rate() != noise.sample_rate() {
        return Err(Error::RateMismatch(voc.sample_rate(), noise.sample_rate()));
    }
    voc.ensure_non_empty()?;
    let mut rng = seed::stream(spec.seed, &[&"noise-crop"]);
    let fitted = fit_noise_duration(noise, voc.len(), &mut rng)?;
    let gain = scale_noise_to_snr(voc, &fitted, spec.snr_db)?;

    let mut clean: Vec<f64> = voc.samples().iter().map(|&s| s as f64).collect();
    let mut scaled: Vec<f64> = fitted.samples().iter().map(|&s| s as f64 * gain).collect();
    let peak = clean
        .iter()
        .zip(&scaled)
        .fold(0.0f64, |m, (c, n)| m.max((c + n).abs()));
    if peak > 1.0 {
        // Joint rescale keeps both the SNR and every SI-SDR unchanged.
        let c = 1.0 / peak;
        clean.iter_mut().for_each(|v| *v *= c);
        scaled.iter_mut().for_each(|v| *v *= c);
    }
    let clean: Vec<f32> = clean.into_iter().map(|v| v as f32).collect();
    let scaled: Vec<f32> = scaled.into_iter().map(|v| v as f32).collect();
    let mix: Vec<f32> = clean.iter().zip(&scaled).map(|(a, b)| a + b).collect();
    let sr = voc.sample_rate();
    Ok(Mixture {
        mixture: AudioClip::new(mix, sr)?,
        clean: AudioClip::new(clean, sr)?,
        noise: AudioClip::new(scaled, sr)?,
    })
}

/// Options shared by mixture rendering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixOptions {
    pub sample_rate: u32,
    pub voc_conversion: RateConversion,
    pub noise_conversion: RateConversion,
}

impl Default for MixOptions {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            voc_conversion: RateConversion::Resample,
            noise_conversion: RateConversion::Reinterpret,
        }
    }
}

/// Loads both assets of `spec` from the manifest and mixes them.
pub fn make_mixture(spec: &MixtureSpec, manifest: &Manifest, opts: &MixOptions) -> Result<Mixture> {
    let voc = load_asset(manifest.get(&spec.voc_id)?, opts.sample_rate, opts.voc_conversion)?;
    let noise = load_asset(
        manifest.get(&spec.noise_id)?,
        opts.sample_rate,
        opts.noise_conversion,
    )?;
    render_mixture(spec, &voc, &noise)
}

fn by_duration_desc<'a>(items: &[&'a ManifestEntry]) -> Vec<&'a ManifestEntry> {
    let mut v = items.to_vec();
    v.sort_by(|a, b| {
        b.duration_s
            .total_cmp(&a.duration_s)
            .then_with(|| a.asset_id.cmp(&b.asset_id))
    });
    v
}

/// Pairs vocalizations with noises rank by rank after sorting both by
/// duration (longest first, ties by id). Every vocalization gets one pair;
/// the noise list wraps around when it is shorter.
pub fn pair_by_duration(
    vocs: &[&ManifestEntry],
    noises: &[&ManifestEntry],
) -> Result<Vec<(String, String)>> {
    if vocs.is_empty() {
        return Err(Error::EmptyList("vocalizations"));
    }
    if noises.is_empty() {
        return Err(Error::EmptyList("noises"));
    }
    let vocs = by_duration_desc(vocs);
    let noises = by_duration_desc(noises);
    Ok(vocs
        .iter()
        .enumerate()
        .map(|(i, v)| (v.asset_id.clone(), noises[i % noises.len()].asset_id.clone()))
        .collect())
}

/// Which benchmark variant to build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BenchmarkMode {
    /// Duration-paired mixtures with SNRs drawn from the policy.
    Random(SnrPolicy),
    /// Duration-paired mixtures, all at one SNR.
    Fixed(f64),
    /// Every vocalization with every noise, per scenario.
    AllCombinations(SnrPolicy),
}

impl BenchmarkMode {
    pub fn policy(&self) -> SnrPolicy {
        match *self {
            BenchmarkMode::Random(p) | BenchmarkMode::AllCombinations(p) => p,
            BenchmarkMode::Fixed(snr_db) => SnrPolicy::Fixed { snr_db },
        }
    }

    /// Subset label used in reports.
    pub fn label(&self) -> String {
        match *self {
            BenchmarkMode::Random(_) => "small".into(),
            BenchmarkMode::AllCombinations(_) => "large".into(),
            BenchmarkMode::Fixed(db) => format!("{db}dB"),
        }
    }
}

impl fmt::Display for BenchmarkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchmarkMode::Random(_) => f.write_str("random"),
            BenchmarkMode::Fixed(db) => write!(f, "fixed:{db}"),
            BenchmarkMode::AllCombinations(_) => f.write_str("combinations"),
        }
    }
}

/// Header facts of a mixture manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkMeta {
    pub label: String,
    pub mode: String,
    pub seed: u64,
    pub snr_lo_db: f64,
    pub snr_hi_db: f64,
    pub sample_rate: u32,
}

/// One row of the mixture manifest. Paths are relative to the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRecord {
    pub mix_id: String,
    pub scenario: Scenario,
    pub voc_id: String,
    pub noise_id: String,
    pub snr_db: f64,
    pub seed: u64,
    pub mix_path: PathBuf,
    pub clean_path: PathBuf,
    pub noise_path: PathBuf,
    pub duration_s: f64,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureManifest {
    pub meta: BenchmarkMeta,
    pub records: Vec<MixtureRecord>,
    /// Directory the record paths are relative to.
    pub root: PathBuf,
}

pub const MIXTURE_MANIFEST: &str = "mixtures.csv";

impl MixtureManifest {
    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let m = &self.meta;
        let mut out = String::new();
        out.push_str("# biodeno mixture manifest v1\n");
        out.push_str(&format!("# subset={}\n", m.label));
        out.push_str(&format!("# mode={}\n", m.mode));
        out.push_str(&format!("# seed={}\n", m.seed));
        out.push_str(&format!("# snr_lo_db={}\n", m.snr_lo_db));
        out.push_str(&format!("# snr_hi_db={}\n", m.snr_hi_db));
        out.push_str(&format!("# sample_rate={}\n", m.sample_rate));
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)
                .map_err(|e| Error::io(&self.root, std::io::Error::other(e.to_string())))?;
        }
        if self.records.is_empty() {
            w.write_record([
                "mix_id", "scenario", "voc_id", "noise_id", "snr_db", "seed", "mix_path",
                "clean_path", "noise_path", "duration_s", "sample_rate",
            ])
            .map_err(|e| Error::io(&self.root, std::io::Error::other(e.to_string())))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io(&self.root, std::io::Error::other(e.to_string())))?;
        out.push_str(std::str::from_utf8(&bytes).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn write(&self) -> Result<PathBuf> {
        let path = self.root.join(MIXTURE_MANIFEST);
        write_atomic(&path, self.to_csv_string()?.as_bytes())?;
        Ok(path)
    }

    /// Reads `mixtures.csv` from a directory, or the given file.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut path = path.as_ref().to_path_buf();
        if path.is_dir() {
            path = path.join(MIXTURE_MANIFEST);
        }
        let file = std::fs::File::open(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.clone()),
            _ => Error::io(&path, e),
        })?;
        let mut meta: HashMap<String, String> = HashMap::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            let Some(rest) = line.strip_prefix('#') else {
                break;
            };
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let bad = |reason: String| Error::Manifest {
            path: path.clone(),
            reason,
        };
        let get = |k: &str| {
            meta.get(k)
                .cloned()
                .ok_or_else(|| bad(format!("missing header field `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| bad(format!("bad header field `{k}`")))
        };
        let meta = BenchmarkMeta {
            label: get("subset")?,
            mode: get("mode")?,
            seed: num("seed")? as u64,
            snr_lo_db: num("snr_lo_db")?,
            snr_hi_db: num("snr_hi_db")?,
            sample_rate: num("sample_rate")? as u32,
        };
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(&path)
            .map_err(|e| manifest_err(&path, e))?;
        let records = reader
            .deserialize()
            .collect::<std::result::Result<Vec<MixtureRecord>, _>>()
            .map_err(|e| manifest_err(&path, e))?;
        Ok(Self {
            meta,
            records,
            root: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }
}

/// Plans every mixture of a benchmark without touching audio. SNRs are drawn
/// in record order from the `(seed, "snr")` stream.
pub fn plan_benchmark(manifest: &Manifest, mode: BenchmarkMode, seed: u64) -> Result<Vec<MixtureSpec>> {
    let policy = mode.policy();
    policy.validate()?;
    let mut snr_rng = seed::stream(seed, &[&seed::SNR]);
    let mut specs = Vec::new();
    let mut populated = 0;
    for scenario in Scenario::ALL {
        let vocs = manifest.select(scenario, Role::Voc);
        let noises = manifest.select(scenario, Role::Noise);
        match (vocs.is_empty(), noises.is_empty()) {
            (true, true) => continue,
            (false, false) => populated += 1,
            _ => return Err(Error::EmptyScenario(scenario.to_string())),
        }
        let pairs = match mode {
            BenchmarkMode::AllCombinations(_) => {
                let vocs = by_duration_desc(&vocs);
                let noises = by_duration_desc(&noises);
                vocs.iter()
                    .flat_map(|v| noises.iter().map(|n| (v.asset_id.clone(), n.asset_id.clone())))
                    .collect()
            }
            _ => pair_by_duration(&vocs, &noises)?,
        };
        for (i, (voc_id, noise_id)) in pairs.into_iter().enumerate() {
            let mix_id = format!("{scenario}-{i:04}");
            let snr_db = policy.draw(&mut snr_rng);
            specs.push(MixtureSpec {
                seed: seed::derive_seed(seed, &[&seed::PAIRING, &mix_id.as_str()]),
                mix_id,
                scenario,
                voc_id,
                noise_id,
                snr_db,
            });
        }
    }
    if populated == 0 {
        return Err(Error::EmptyScenario("all".into()));
    }
    Ok(specs)
}

/// Renders a benchmark into `out_dir` (`mix/`, `clean/`, `noise/` and
/// `mixtures.csv`) and returns its manifest.
pub fn build_benchmark(
    manifest: &Manifest,
    mode: BenchmarkMode,
    seed: u64,
    out_dir: impl AsRef<Path>,
    opts: &MixOptions,
) -> Result<MixtureManifest> {
    let out_dir = out_dir.as_ref();
    let specs = plan_benchmark(manifest, mode, seed)?;
    for sub in ["mix", "clean", "noise"] {
        let d = out_dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }

    // Each asset is loaded once, before the parallel fan-out.
    let mut needed: Vec<(&str, RateConversion)> = Vec::new();
    for s in &specs {
        needed.push((&s.voc_id, opts.voc_conversion));
        needed.push((&s.noise_id, opts.noise_conversion));
    }
    needed.sort();
    needed.dedup();
    let loaded: HashMap<&str, AudioClip> = needed
        .par_iter()
        .map(|&(id, conv)| Ok((id, load_asset(manifest.get(id)?, opts.sample_rate, conv)?)))
        .collect::<Result<_>>()?;

    let records = specs
        .par_iter()
        .map(|spec| {
            let m = render_mixture(spec, &loaded[spec.voc_id.as_str()], &loaded[spec.noise_id.as_str()])?;
            let file = format!("{}.wav", spec.mix_id);
            let rel = |d: &str| PathBuf::from(d).join(&file);
            write_audio(&m.mixture, out_dir.join(rel("mix")))?;
            write_audio(&m.clean, out_dir.join(rel("clean")))?;
            write_audio(&m.noise, out_dir.join(rel("noise")))?;
            Ok(MixtureRecord {
                mix_id: spec.mix_id.clone(),
                scenario: spec.scenario,
                voc_id: spec.voc_id.clone(),
                noise_id: spec.noise_id.clone(),
                snr_db: spec.snr_db,
                seed: spec.seed,
                mix_path: rel("mix"),
                clean_path: rel("clean"),
                noise_path: rel("noise"),
                duration_s: m.mixture.duration_s(),
                sample_rate: m.mixture.sample_rate(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (snr_lo_db, snr_hi_db) = mode.policy().bounds();
    let mm = MixtureManifest {
        meta: BenchmarkMeta {
            label: mode.label(),
            mode: mode.to_string(),
            seed,
            snr_lo_db,
            snr_hi_db,
            sample_rate: opts.sample_rate,
        },
        records,
        root: out_dir.to_path_buf(),
    };
    mm.write()?;
    Ok(mm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> AudioClip {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioClip::new((0..len).map(|_| rng.random_range(-0.5..0.5)).collect(), 16_000).unwrap()
    }

    fn entry(id: &str, dur: f64, role: Role) -> ManifestEntry {
        ManifestEntry {
            asset_id: id.into(),
            path: PathBuf::from(format!("{id}.wav")),
            role,
            scenario: Scenario::Terrestrial,
            duration_s: dur,
            sample_rate: 16_000,
        }
    }

    #[test]
    fn gain_formula() {
        let s = AudioClip::new(vec![0.5, -0.5, 0.5, -0.5], 8000).unwrap();
        let n = AudioClip::new(vec![-0.5, 0.5, 0.5, -0.5], 8000).unwrap();
        assert!((scale_noise_to_snr(&s, &n, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((scale_noise_to_snr(&s, &n, 10.0).unwrap() - 0.316_227_766_016_837_94).abs() < 1e-12);
    }

    #[test]
    fn remeasured_snr() {
        let s = noise(5000, 1);
        let n = noise(5000, 2);
        let g = scale_noise_to_snr(&s, &n, -5.0).unwrap();
        let gn: Vec<f64> = n.samples().iter().map(|&v| v as f64 * g).collect();
        let pgn = gn.iter().map(|v| v * v).sum::<f64>() / gn.len() as f64;
        assert!((10.0 * (s.mean_square() / pgn).log10() + 5.0).abs() < 1e-6);
    }

    #[test]
    fn gain_errors() {
        let z = AudioClip::silence(4, 8000).unwrap();
        let s = AudioClip::new(vec![0.1; 4], 8000).unwrap();
        assert!(matches!(scale_noise_to_snr(&z, &s, 0.0), Err(Error::SilentSignal)));
        assert!(matches!(scale_noise_to_snr(&s, &z, 0.0), Err(Error::SilentNoise)));
        let short = AudioClip::new(vec![0.1; 3], 8000).unwrap();
        assert!(matches!(
            scale_noise_to_snr(&s, &short, 0.0),
            Err(Error::LengthMismatch(4, 3))
        ));
    }

    #[test]
    fn noise_fitting() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = noise(16_000, 3);
        assert_eq!(fit_noise_duration(&n, 16_000, &mut rng).unwrap(), n);

        let tiled = fit_noise_duration(&n, 40_000, &mut rng).unwrap();
        assert_eq!(tiled.len(), 40_000);
        assert_eq!(&tiled.samples()[..16_000], n.samples());
        assert_eq!(&tiled.samples()[32_000..], &n.samples()[..8000]);

        let long = noise(160_000, 4);
        let crop = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            fit_noise_duration(&long, 64_000, &mut rng).unwrap()
        };
        assert_eq!(crop(9), crop(9));
        assert!(matches!(
            fit_noise_duration(&AudioClip::silence(0, 8000).unwrap(), 5, &mut rng),
            Err(Error::EmptyNoise)
        ));
    }

    fn spec(snr: f64) -> MixtureSpec {
        MixtureSpec {
            mix_id: "m".into(),
            scenario: Scenario::Underwater,
            voc_id: "v".into(),
            noise_id: "n".into(),
            snr_db: snr,
            seed: 42,
        }
    }

    #[test]
    fn mixture_is_exact_sum() {
        for snr in [-5.0, 0.0, 5.0, 10.0] {
            let m = render_mixture(&spec(snr), &noise(8000, 5), &noise(20_000, 6)).unwrap();
            for ((x, s), n) in m.mixture.samples().iter().zip(m.clean.samples()).zip(m.noise.samples()) {
                assert_eq!(*x, s + n);
            }
            assert!((measure_snr_db(&m.clean, &m.noise) - snr).abs() < 1e-4);
        }
    }

    #[test]
    fn high_snr_mixture_is_almost_clean() {
        let v = noise(8000, 5);
        let m = render_mixture(&spec(100.0), &v, &noise(8000, 6)).unwrap();
        assert_eq!(m.clean, v);
        let noise_rms = m.noise.mean_square().sqrt();
        assert!(noise_rms / v.mean_square().sqrt() < 1.1e-5);
    }

    #[test]
    fn equal_power_zero_db_adds_unit_noise() {
        let v = AudioClip::new(vec![0.25, -0.25, 0.25, -0.25], 16_000).unwrap();
        let n = AudioClip::new(vec![0.25, 0.25, -0.25, -0.25], 16_000).unwrap();
        let m = render_mixture(&spec(0.0), &v, &n).unwrap();
        assert_eq!(m.noise, n);
        assert_eq!(m.mixture.samples(), &[0.5, 0.0, 0.0, -0.5]);
    }

    #[test]
    fn clipping_rescales_jointly() {
        let v = AudioClip::new(vec![0.9, -0.9, 0.9, -0.9, 0.9], 16_000).unwrap();
        let n = AudioClip::new(vec![0.9, -0.9, 0.9, -0.9, 0.9], 16_000).unwrap();
        let m = render_mixture(&spec(0.0), &v, &n).unwrap();
        assert!(m.mixture.peak() <= 1.0 + 1e-6);
        assert!((measure_snr_db(&m.clean, &m.noise)).abs() < 1e-4);
        let base = crate::metrics::si_sdr(&m.mixture, &m.clean).unwrap();
        assert!(base.is_finite());
    }

    #[test]
    fn duration_pairing() {
        let vocs = [entry("v60", 60.0, Role::Voc), entry("v10", 10.0, Role::Voc)];
        let noises = [entry("n9", 9.0, Role::Noise), entry("n50", 50.0, Role::Noise)];
        let pairs = pair_by_duration(&vocs.iter().collect::<Vec<_>>(), &noises.iter().collect::<Vec<_>>()).unwrap();
        assert_eq!(
            pairs,
            vec![("v60".into(), "n50".into()), ("v10".into(), "n9".into())]
        );
    }

    #[test]
    fn pairing_wraps_noise_list() {
        let vocs = [
            entry("a", 3.0, Role::Voc),
            entry("b", 2.0, Role::Voc),
            entry("c", 1.0, Role::Voc),
        ];
        let noises = [entry("x", 5.0, Role::Noise), entry("y", 4.0, Role::Noise)];
        let pairs = pair_by_duration(&vocs.iter().collect::<Vec<_>>(), &noises.iter().collect::<Vec<_>>()).unwrap();
        // Oracle: rank i pairs with noise rank i mod |noises|.
        let expected: Vec<(String, String)> = ["a", "b", "c"]
            .iter()
            .enumerate()
            .map(|(i, v)| (v.to_string(), ["x", "y"][i % 2].to_string()))
            .collect();
        assert_eq!(pairs, expected);
        assert_eq!(pairs[2].1, "x");
    }

    #[test]
    fn pairing_ties_by_id() {
        let vocs = [entry("b", 5.0, Role::Voc), entry("a", 5.0, Role::Voc)];
        let noises = [entry("y", 5.0, Role::Noise), entry("x", 5.0, Role::Noise)];
        let pairs = pair_by_duration(&vocs.iter().collect::<Vec<_>>(), &noises.iter().collect::<Vec<_>>()).unwrap();
        assert_eq!(pairs, vec![("a".into(), "x".into()), ("b".into(), "y".into())]);
        assert!(matches!(
            pair_by_duration(&[], &noises.iter().collect::<Vec<_>>()),
            Err(Error::EmptyList(_))
        ));
    }

    #[test]
    fn snr_draws_are_reproducible_and_in_range() {
        let p = SnrPolicy::default();
        let draw = |seed| {
            let mut rng = seed::stream(seed, &[&seed::SNR]);
            (0..100).map(|_| p.draw(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
        assert!(draw(5).iter().all(|v| (-5.0..10.0).contains(v)));
        assert!(SnrPolicy::Uniform { lo_db: 3.0, hi_db: 1.0 }.validate().is_err());
    }
}
