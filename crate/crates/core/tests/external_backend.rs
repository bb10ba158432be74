use std::time::Duration;

use biodeno::pseudo::{checked_denoise, DenoiserBackend, ExternalBackend};
use biodeno::{AudioClip, Error};

mod common;

fn clip() -> AudioClip {
    common::white(4000, 0.5, 16_000, 9)
}

#[test]
fn copy_command_is_identity() {
    let scratch = tempfile::tempdir().unwrap();
    let b = ExternalBackend::new("cp {in} {out}").unwrap().with_scratch(scratch.path());
    let x = clip();
    assert_eq!(b.denoise(&x).unwrap(), x);
    assert!(b.warnings().is_empty());
    // Per-call temporary directories are removed afterwards.
    assert_eq!(std::fs::read_dir(scratch.path()).unwrap().count(), 0);
}

#[test]
fn wrong_length_output_is_fitted() {
    // The program ignores its input and hands back a shorter file.
    let dir = tempfile::tempdir().unwrap();
    let short = common::white(1000, 0.5, 16_000, 3);
    let short_path = dir.path().join("short.wav");
    biodeno::audio::write_audio(&short, &short_path).unwrap();
    let template = format!("cp '{}' {{out}} && test -f {{in}}", short_path.display());
    let b = ExternalBackend::new(template).unwrap();
    let x = clip();
    let y = b.denoise(&x).unwrap();
    assert_eq!(y.len(), x.len());
    assert_eq!(&y.samples()[..1000], short.samples());
    assert!(y.samples()[1000..].iter().all(|&s| s == 0.0));
    assert_eq!(b.warnings().len(), 1);
}

#[test]
fn other_rate_output_is_resampled() {
    let dir = tempfile::tempdir().unwrap();
    let other = common::white(2000, 0.5, 8000, 3);
    let p = dir.path().join("o.wav");
    biodeno::audio::write_audio(&other, &p).unwrap();
    let b = ExternalBackend::new(format!("cp '{}' {{out}} # {{in}}", p.display())).unwrap();
    let y = checked_denoise(&b, &clip(), 0).unwrap();
    assert_eq!((y.len(), y.sample_rate()), (4000, 16_000));
}

#[test]
fn nonzero_exit_is_backend_failure() {
    let b = ExternalBackend::new("echo broken model >&2; exit 7 # {in} {out}").unwrap();
    match b.denoise(&clip()) {
        Err(Error::BackendFailure { reason, .. }) => {
            assert!(reason.contains("code 7"), "{reason}");
            assert!(reason.contains("broken model"), "{reason}");
        }
        other => panic!("expected backend failure, got {other:?}"),
    }
}

#[test]
fn missing_output_is_backend_failure() {
    let b = ExternalBackend::new("true {in} {out}").unwrap();
    assert!(matches!(b.denoise(&clip()), Err(Error::BackendFailure { .. })));
}

#[test]
fn slow_program_times_out() {
    let b = ExternalBackend::new("sleep 5; cp {in} {out}")
        .unwrap()
        .with_timeout(Duration::from_millis(200));
    let t = std::time::Instant::now();
    assert!(matches!(b.denoise(&clip()), Err(Error::Timeout { .. })));
    assert!(t.elapsed() < Duration::from_secs(4));
}

#[test]
fn seed_reaches_the_program() {
    let dir = tempfile::tempdir().unwrap();
    let seen = dir.path().join("seed.txt");
    let b = ExternalBackend::new(format!(
        "echo $BIODENO_SEED > '{}'; cp {{in}} {{out}}",
        seen.display()
    ))
    .unwrap();
    b.denoise_with_seed(&clip(), 42).unwrap();
    assert_eq!(std::fs::read_to_string(&seen).unwrap().trim(), "42");
}

#[test]
fn concurrent_calls_do_not_collide() {
    use rayon::prelude::*;
    let b = ExternalBackend::new("cp {in} {out}").unwrap();
    let clips: Vec<AudioClip> = (0..16).map(|i| common::white(500 + i, 0.5, 16_000, i as u64)).collect();
    let outs: Vec<AudioClip> = clips.par_iter().map(|c| b.denoise(c).unwrap()).collect();
    assert_eq!(outs, clips);
}
