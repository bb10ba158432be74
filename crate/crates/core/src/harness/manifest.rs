use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::audio::{probe_audio, read_audio, resample, AudioClip};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Voc,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Underwater,
    Terrestrial,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::Underwater, Scenario::Terrestrial];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Underwater => "underwater",
            Scenario::Terrestrial => "terrestrial",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "underwater" => Ok(Scenario::Underwater),
            "terrestrial" => Ok(Scenario::Terrestrial),
            other => Err(Error::InvalidConfig(format!("unknown scenario `{other}`"))),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Voc => "voc",
            Role::Noise => "noise",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub asset_id: String,
    pub path: PathBuf,
    pub role: Role,
    pub scenario: Scenario,
    pub duration_s: f64,
    pub sample_rate: u32,
}

/// Catalog of vocalization and noise assets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Builds a manifest, sorting by id and rejecting duplicates or
    /// non-positive durations.
    pub fn new(mut entries: Vec<ManifestEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));
        for w in entries.windows(2) {
            if w[0].asset_id == w[1].asset_id {
                return Err(Error::InvalidConfig(format!(
                    "duplicate asset id `{}`",
                    w[0].asset_id
                )));
            }
        }
        if let Some(e) = entries.iter().find(|e| !(e.duration_s > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "asset `{}` has non-positive duration",
                e.asset_id
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, asset_id: &str) -> Result<&ManifestEntry> {
        self.entries
            .binary_search_by(|e| e.asset_id.as_str().cmp(asset_id))
            .map(|i| &self.entries[i])
            .map_err(|_| Error::AssetNotFound(asset_id.to_string()))
    }

    pub fn select(&self, scenario: Scenario, role: Role) -> Vec<&ManifestEntry> {
        self.entries
            .iter()
            .filter(|e| e.scenario == scenario && e.role == role)
            .collect()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &self.entries {
            w.serialize(e).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        super::write_atomic(path.as_ref(), self.to_csv_string()?.as_bytes())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|e| manifest_err(path, e))?;
        let entries = r
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestEntry>, _>>()
            .map_err(|e| manifest_err(path, e))?;
        Self::new(entries)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::io(PathBuf::new(), std::io::Error::other(e.to_string()))
}

pub(crate) fn manifest_err(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
            Error::FileNotFound(path.to_path_buf())
        }
        _ => Error::Manifest {
            path: path.to_path_buf(),
            reason: e.to_string(),
        },
    }
}

/// Maps directory names under the asset root to scenarios and roles. The
/// expected layout is `<root>/<scenario dir>/<role dir>/**/*.wav`.
#[derive(Debug, Clone)]
pub struct ScanRules {
    pub scenarios: BTreeMap<String, Scenario>,
    pub roles: BTreeMap<String, Role>,
}

impl Default for ScanRules {
    fn default() -> Self {
        let scenarios = [
            ("underwater", Scenario::Underwater),
            ("terrestrial", Scenario::Terrestrial),
        ];
        let roles = [
            ("voc", Role::Voc),
            ("vocs", Role::Voc),
            ("vocalizations", Role::Voc),
            ("clean", Role::Voc),
            ("noise", Role::Noise),
            ("noises", Role::Noise),
        ];
        Self {
            scenarios: scenarios.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            roles: roles.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

/// A file that could not be catalogued.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub manifest: Manifest,
    pub skipped: Vec<SkippedFile>,
}

/// Walks `root` in lexicographic order and catalogues every `.wav` file.
/// The asset id is `scenario/role/<path below the role directory>`.
pub fn scan_assets(root: impl AsRef<Path>, rules: &ScanRules) -> Result<ScanResult> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::EmptyRoot(root.to_path_buf()));
    }
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for item in WalkDir::new(root).sort_by_file_name() {
        let item = match item {
            Ok(i) => i,
            Err(e) => {
                skipped.push(SkippedFile {
                    path: e.path().map(Path::to_path_buf).unwrap_or_default(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let path = item.path();
        let is_wav = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if !item.file_type().is_file() || !is_wav {
            continue;
        }
        let rel = path.strip_prefix(root).expect("walkdir stays under root");
        let parts: Vec<String> = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        let mapped = match parts.as_slice() {
            [s, r, rest @ ..] if !rest.is_empty() => rules
                .scenarios
                .get(s)
                .zip(rules.roles.get(r))
                .map(|(s, r)| (*s, *r, rest.join("/"))),
            _ => None,
        };
        let Some((scenario, role, tail)) = mapped else {
            skipped.push(SkippedFile {
                path: path.to_path_buf(),
                reason: "not under a <scenario>/<role>/ directory".into(),
            });
            continue;
        };
        match probe_audio(path) {
            Ok(info) if info.frames > 0 => entries.push(ManifestEntry {
                asset_id: format!("{scenario}/{role}/{tail}"),
                path: path.to_path_buf(),
                role,
                scenario,
                duration_s: info.duration_s(),
                sample_rate: info.sample_rate,
            }),
            Ok(_) => skipped.push(SkippedFile {
                path: path.to_path_buf(),
                reason: "empty audio".into(),
            }),
            Err(e) => skipped.push(SkippedFile {
                path: path.to_path_buf(),
                reason: e.to_string(),
            }),
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyRoot(root.to_path_buf()));
    }
    Ok(ScanResult {
        manifest: Manifest::new(entries)?,
        skipped,
    })
}

/// How an asset recorded at another rate is brought to the working rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateConversion {
    /// Band-limited resampling; duration and pitch are preserved.
    #[default]
    Resample,
    /// Relabel the samples at the working rate, which time-scales the audio.
    Reinterpret,
}

/// Loads an asset and converts it to `working_rate`.
pub fn load_asset(
    entry: &ManifestEntry,
    working_rate: u32,
    conversion: RateConversion,
) -> Result<AudioClip> {
    let clip = read_audio(&entry.path)?;
    if clip.sample_rate() == working_rate {
        return Ok(clip);
    }
    match conversion {
        RateConversion::Resample => resample(&clip, working_rate),
        RateConversion::Reinterpret => clip.with_sample_rate(working_rate),
    }
}
