use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::AudioClip;
use crate::error::{Error, Result};

/// Header-level facts about a WAV file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AudioInfo {
    pub sample_rate: u32,
    pub channels: u16,
    pub frames: u64,
}

impl AudioInfo {
    pub fn duration_s(&self) -> f64 {
        self.frames as f64 / self.sample_rate as f64
    }
}

fn open(path: &Path) -> Result<WavReader<BufReader<File>>> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut magic = [0u8; 12];
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let n = f.read(&mut magic).map_err(|e| Error::io(path, e))?;
    if n < 12 || &magic[0..4] != b"RIFF" || &magic[8..12] != b"WAVE" {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: "not a RIFF/WAVE file".into(),
        });
    }
    // The file opened fine, so any read failure here is a malformed header.
    WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::CorruptHeader {
            path: path.to_path_buf(),
            reason: io.to_string(),
        },
        other => map_hound(path, other),
    })
}

fn map_hound(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::CorruptHeader {
                path: path.to_path_buf(),
                reason: "truncated file".into(),
            }
        }
        hound::Error::IoError(e) => Error::io(path, e),
        hound::Error::Unsupported => Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: "unsupported WAV encoding".into(),
        },
        other => Error::CorruptHeader {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

/// Reads only the header of a WAV file.
pub fn probe_audio(path: impl AsRef<Path>) -> Result<AudioInfo> {
    let path = path.as_ref();
    let reader = open(path)?;
    let spec = reader.spec();
    Ok(AudioInfo {
        sample_rate: spec.sample_rate,
        channels: spec.channels,
        frames: reader.duration() as u64,
    })
}

/// Loads a PCM (8/16/24/32-bit) or IEEE float32 WAV file as a mono clip.
///
/// Multichannel files are averaged to mono; integer PCM is scaled to `[-1, 1)`.
pub fn read_audio(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let reader = open(path)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| map_hound(path, e))?
        }
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                reason: format!("{fmt:?} with {bits} bits per sample"),
            })
        }
    };

    let mono: Vec<f32> = interleaved
        .chunks(channels)
        .map(|frame| (frame.iter().sum::<f64>() / channels as f64) as f32)
        .collect();
    AudioClip::new(mono, spec.sample_rate).map_err(|e| match e {
        Error::InvalidSignal(reason) => Error::CorruptHeader {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}

/// Writes a mono IEEE float32 WAV at the clip's sample rate.
pub fn write_audio(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    // Clips built through `AudioClip::new` are already finite; re-check
    // because the samples are about to leave the process.
    if clip.samples().iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidSignal("non-finite sample".into()));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let to_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(other.to_string())),
    };
    let mut writer = WavWriter::create(path, spec).map_err(to_err)?;
    for &s in clip.samples() {
        writer.write_sample(s).map_err(to_err)?;
    }
    writer.finalize().map_err(to_err)
}

/// Every `.wav` file below `root` in lexicographic path order, relative to
/// `root`. A plain file comes back as its own name.
pub fn list_wav_files(root: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
    let root = root.as_ref();
    if !root.exists() {
        return Err(Error::FileNotFound(root.to_path_buf()));
    }
    let mut out = Vec::new();
    for item in walkdir::WalkDir::new(root).sort_by_file_name() {
        let item = item.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(&path, e.into())
        })?;
        let is_wav = item
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if item.file_type().is_file() && is_wav {
            let rel = item.path().strip_prefix(root).unwrap_or(item.path());
            out.push(if rel.as_os_str().is_empty() {
                item.path().file_name().map(Into::into).unwrap_or_default()
            } else {
                rel.to_path_buf()
            });
        }
    }
    Ok(out)
}
