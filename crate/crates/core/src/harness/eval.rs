//! Scoring a denoiser on a rendered benchmark.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manifest::Scenario;
use super::write_atomic;
use crate::audio::{read_audio, AudioClip};
use crate::error::{Error, Result};
use crate::metrics::{self, AggregateStat, ExcerptScore, Metric, DEFAULT_BOOTSTRAP};
use crate::mixing::MixtureManifest;
use crate::pseudo::{checked_denoise, DenoiserBackend};

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";
pub const SCORES_FILE: &str = "scores.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub seeds: Vec<u64>,
    /// Seed of the bootstrap resampling.
    pub seed: u64,
    pub bootstrap_n: usize,
    /// Canonical text of the run configuration; only its digest is stored.
    pub config_text: String,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            seeds: vec![0],
            seed: 0,
            bootstrap_n: DEFAULT_BOOTSTRAP,
            config_text: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub backend: String,
    pub config_digest: String,
    pub manifest_digest: String,
    pub tool_version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreStatus {
    Ok,
    Failed,
}

/// One (mixture, seed) evaluation. Scores are absent for failed runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub mix_id: String,
    pub seed: u64,
    pub sisdr_db: Option<f64>,
    pub sisdri_db: Option<f64>,
    pub status: ScoreStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub mix_id: String,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetStats {
    pub sisdr: AggregateStat,
    pub sisdri: AggregateStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    /// Keyed by subset label, then `label/underwater` and `label/terrestrial`.
    pub subsets: BTreeMap<String, SubsetStats>,
    /// Mixtures (per seed) left out of the aggregates because the backend
    /// failed on them.
    pub excluded: usize,
    pub failures: Vec<Failure>,
    pub scenarios: BTreeMap<String, Scenario>,
    pub scores: Vec<ScoreRow>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl EvalReport {
    /// Scores of the successful runs in the given subset.
    pub fn excerpt_scores(&self, subset: &str) -> Vec<ExcerptScore> {
        let scenario = subset.split_once('/').map(|(_, s)| s);
        self.scores
            .iter()
            .filter(|r| r.status == ScoreStatus::Ok)
            .filter(|r| scenario.is_none_or(|s| self.scenarios.get(&r.mix_id).map(|x| x.as_str()) == Some(s)))
            .map(|r| ExcerptScore {
                mix_id: r.mix_id.clone(),
                seed: r.seed,
                sisdr_db: r.sisdr_db.unwrap_or(f64::NAN),
                sisdri_db: r.sisdri_db.unwrap_or(f64::NAN),
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Inconsistent(format!("report serialization: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn scores_csv(&self) -> Result<String> {
        scores_to_csv(&self.scores)
    }

    /// Writes `report.json` and `scores.csv` into `out_dir`.
    pub fn write(&self, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
        let out_dir = out_dir.as_ref();
        write_atomic(&out_dir.join(SCORES_FILE), self.scores_csv()?.as_bytes())?;
        let path = out_dir.join(REPORT_FILE);
        write_atomic(&path, self.to_json()?.as_bytes())?;
        Ok(path)
    }

    /// Reads a report from a JSON file or a directory holding `report.json`.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut path = path.as_ref().to_path_buf();
        if path.is_dir() {
            path = path.join(REPORT_FILE);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.clone()),
            _ => Error::io(&path, e),
        })?;
        let report: Self = serde_json::from_str(&text).map_err(|e| Error::Manifest {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Manifest {
                path,
                reason: format!("unsupported schema version {}", report.schema_version),
            });
        }
        Ok(report)
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    mix_id: String,
    seed: u64,
    sisdr_db: Option<f64>,
    sisdri_db: Option<f64>,
    status: ScoreStatus,
}

fn scores_to_csv(rows: &[ScoreRow]) -> Result<String> {
    let err = |e: csv::Error| Error::Inconsistent(format!("score table: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["mix_id", "seed", "sisdr_db", "sisdri_db", "status"])
            .map_err(err)?;
    }
    for r in rows {
        w.serialize(CsvRow {
            mix_id: r.mix_id.clone(),
            seed: r.seed,
            sisdr_db: r.sisdr_db,
            sisdri_db: r.sisdri_db,
            status: r.status,
        })
        .map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Inconsistent(format!("score table: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses a per-excerpt score table.
pub fn read_scores_csv(text: &str) -> Result<Vec<ScoreRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize::<CsvRow>()
        .map(|r| {
            let r = r.map_err(|e| Error::Inconsistent(format!("score table: {e}")))?;
            Ok(ScoreRow {
                mix_id: r.mix_id,
                seed: r.seed,
                sisdr_db: r.sisdr_db,
                sisdri_db: r.sisdri_db,
                status: r.status,
            })
        })
        .collect()
}

fn subset_keys(label: &str, scenarios: &BTreeMap<String, Scenario>) -> Vec<String> {
    let mut keys = vec![label.to_string()];
    for s in Scenario::ALL {
        if scenarios.values().any(|x| *x == s) {
            keys.push(format!("{label}/{s}"));
        }
    }
    keys
}

fn aggregate_subsets(report: &EvalReport, label: &str, bootstrap_n: usize, seed: u64) -> Result<BTreeMap<String, SubsetStats>> {
    let mut out = BTreeMap::new();
    for key in subset_keys(label, &report.scenarios) {
        let scores = report.excerpt_scores(&key);
        if scores.is_empty() {
            continue;
        }
        out.insert(
            key,
            SubsetStats {
                sisdr: metrics::aggregate(&scores, Metric::Sisdr, bootstrap_n, seed)?,
                sisdri: metrics::aggregate(&scores, Metric::Sisdri, bootstrap_n, seed)?,
            },
        );
    }
    Ok(out)
}

fn load_pair(mm: &MixtureManifest, rec: &crate::mixing::MixtureRecord) -> Result<(AudioClip, AudioClip)> {
    let mix = read_audio(mm.resolve(&rec.mix_path))?;
    let clean = match read_audio(mm.resolve(&rec.clean_path)) {
        Ok(c) => c,
        Err(Error::FileNotFound(_)) => return Err(Error::MissingReference(rec.mix_id.clone())),
        Err(e) => return Err(e),
    };
    if clean.len() != mix.len() {
        return Err(Error::LengthMismatch(mix.len(), clean.len()));
    }
    Ok((mix, clean))
}

/// Denoises every mixture once per seed, scores it against the stored clean
/// reference and aggregates per subset. Backend failures are recorded and
/// excluded; any other error aborts the run.
pub fn run_evaluation(
    mm: &MixtureManifest,
    backend: &dyn DenoiserBackend,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if opts.seeds.is_empty() {
        return Err(Error::EmptyList("seeds"));
    }
    if mm.records.is_empty() {
        return Err(Error::EmptyList("mixtures"));
    }
    let per_mix = mm
        .records
        .par_iter()
        .map(|rec| {
            let (mix, clean) = load_pair(mm, rec)?;
            let mut rows = Vec::with_capacity(opts.seeds.len());
            let mut fails = Vec::new();
            for &seed in &opts.seeds {
                match checked_denoise(backend, &mix, seed) {
                    Ok(est) => rows.push(ScoreRow {
                        mix_id: rec.mix_id.clone(),
                        seed,
                        sisdr_db: Some(metrics::si_sdr(&est, &clean)?),
                        sisdri_db: Some(metrics::si_sdri(&est, &mix, &clean)?),
                        status: ScoreStatus::Ok,
                    }),
                    Err(e) if e.is_backend() => {
                        rows.push(ScoreRow {
                            mix_id: rec.mix_id.clone(),
                            seed,
                            sisdr_db: None,
                            sisdri_db: None,
                            status: ScoreStatus::Failed,
                        });
                        fails.push(Failure {
                            mix_id: rec.mix_id.clone(),
                            seed,
                            reason: e.to_string(),
                        });
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok((rows, fails))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = EvalReport {
        schema_version: SCHEMA_VERSION,
        provenance: Provenance {
            seed: opts.seed,
            seeds: opts.seeds.clone(),
            backend: backend.name().to_string(),
            config_digest: sha256_hex(opts.config_text.as_bytes()),
            manifest_digest: sha256_hex(mm.to_csv_string()?.as_bytes()),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        subsets: BTreeMap::new(),
        excluded: 0,
        failures: Vec::new(),
        scenarios: mm.records.iter().map(|r| (r.mix_id.clone(), r.scenario)).collect(),
        scores: Vec::new(),
    };
    for (rows, fails) in per_mix {
        report.scores.extend(rows);
        report.failures.extend(fails);
    }
    report.excluded = report.failures.len();
    report.subsets = aggregate_subsets(&report, &mm.meta.label, opts.bootstrap_n, opts.seed)?;
    check_consistency(&report, &mm.meta.label, opts.bootstrap_n)?;
    Ok(report)
}

/// Recomputes every aggregate from the serialized score table and checks it
/// against the stored ones.
pub fn check_consistency(report: &EvalReport, label: &str, bootstrap_n: usize) -> Result<()> {
    let reparsed = EvalReport {
        scores: read_scores_csv(&report.scores_csv()?)?,
        ..report.clone()
    };
    if reparsed.scores != report.scores {
        return Err(Error::Inconsistent("score table does not round-trip".into()));
    }
    let mut ids: BTreeMap<(&str, u64), usize> = BTreeMap::new();
    for r in &report.scores {
        *ids.entry((r.mix_id.as_str(), r.seed)).or_default() += 1;
    }
    let expected = report.scenarios.len() * report.provenance.seeds.len();
    if ids.len() != expected || ids.values().any(|&c| c != 1) {
        return Err(Error::Inconsistent(
            "every mixture must appear exactly once per seed".into(),
        ));
    }
    let again = aggregate_subsets(&reparsed, label, bootstrap_n, report.provenance.seed)?;
    if again != report.subsets {
        return Err(Error::Inconsistent(
            "stored aggregates differ from the score table".into(),
        ));
    }
    Ok(())
}

/// Paired per-excerpt differences `a - b`, per subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub backend_a: String,
    pub backend_b: String,
    pub subsets: BTreeMap<String, SubsetStats>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Inconsistent(format!("comparison serialization: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}

/// Compares two reports made on the same mixtures with the same seeds.
pub fn compare_runs(a: &EvalReport, b: &EvalReport, bootstrap_n: usize) -> Result<ComparisonReport> {
    if a.provenance.manifest_digest != b.provenance.manifest_digest {
        return Err(Error::ManifestMismatch("reports were made on different mixture manifests".into()));
    }
    if a.provenance.seeds != b.provenance.seeds {
        return Err(Error::ManifestMismatch("reports use different seed sets".into()));
    }
    let mut subsets = BTreeMap::new();
    for key in a.subsets.keys() {
        let (sa, sb) = (a.excerpt_scores(key), b.excerpt_scores(key));
        subsets.insert(
            key.clone(),
            SubsetStats {
                sisdr: metrics::paired_differences(&sa, &sb, Metric::Sisdr, bootstrap_n, a.provenance.seed)?,
                sisdri: metrics::paired_differences(&sa, &sb, Metric::Sisdri, bootstrap_n, a.provenance.seed)?,
            },
        );
    }
    Ok(ComparisonReport {
        schema_version: SCHEMA_VERSION,
        backend_a: a.provenance.backend.clone(),
        backend_b: b.provenance.backend.clone(),
        subsets,
    })
}
