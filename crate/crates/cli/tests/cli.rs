use std::path::Path;
use std::process::{Command, Output};

use biodeno::audio::{read_audio, write_audio};
use biodeno::AudioClip;

fn biodeno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biodeno"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tone_in_noise(len: usize, seed: u32) -> AudioClip {
    let mut state = seed.wrapping_mul(2_654_435_761).max(1);
    let samples = (0..len)
        .map(|i| {
            state ^= state << 13;
            state ^= state >> 17;
            state ^= state << 5;
            let noise = (state as f32 / u32::MAX as f32 - 0.5) * 0.1;
            let t = i as f32 / 16_000.0;
            let env = (-((t - 0.5) / 0.1).powi(2)).exp();
            0.4 * env * (2.0 * std::f32::consts::PI * 700.0 * t).sin() + noise
        })
        .collect();
    AudioClip::new(samples, 16_000).unwrap()
}

fn write_tree(root: &Path, scenario: &str, vocs: usize, noises: usize, secs: f64) {
    for (role, n) in [("voc", vocs), ("noise", noises)] {
        let dir = root.join(scenario).join(role);
        std::fs::create_dir_all(&dir).unwrap();
        for i in 0..n {
            let len = (secs * 16_000.0) as usize + i;
            write_audio(&tone_in_noise(len, i as u32 + 7), dir.join(format!("{i:02}.wav"))).unwrap();
        }
    }
}

#[test]
fn missing_input_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.wav");
    let o = biodeno(&["denoise", "--in", s(&missing), "--out", s(&dir.path().join("o.wav"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("nope.wav"), "{err}");
    let line: serde_json::Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(line["code"], 2);
}

#[test]
fn single_file_gate() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.wav");
    let clip = tone_in_noise(16_000, 1);
    write_audio(&clip, &input).unwrap();
    let out = dir.path().join("out.wav");
    let o = biodeno(&["denoise", "--in", s(&input), "--out", s(&out), "--backend", "gate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let y = read_audio(&out).unwrap();
    assert_eq!((y.len(), y.sample_rate()), (clip.len(), 16_000));
}

#[test]
fn directory_structure_is_mirrored() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    let names = ["a.wav", "b.wav", "sub/c.wav", "sub/d.wav", "sub/deeper/e.wav"];
    for (i, n) in names.iter().enumerate() {
        let p = input.join(n);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        write_audio(&tone_in_noise(8000, i as u32), &p).unwrap();
    }
    std::fs::write(input.join("notes.txt"), "not audio").unwrap();
    let out = dir.path().join("out");
    let o = biodeno(&["denoise", "--in", s(&input), "--out", s(&out), "--jobs", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let produced = biodeno::audio::list_wav_files(&out).unwrap();
    let expected: Vec<std::path::PathBuf> = names.iter().map(Into::into).collect();
    assert_eq!(produced, expected);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(biodeno(&["denoise", "--bogus"]).status.code(), Some(1));
    assert_eq!(biodeno(&["frobnicate"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let o = biodeno(&["bench-build", "--assets", s(dir.path()), "--mode", "loud", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "smaple_rate = 8000\n").unwrap();
    let o = biodeno(&["--config", s(&cfg), "compare", "--a", "x", "--b", "y"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(biodeno(&["--help"]).status.success());
}

#[test]
fn failing_external_backend_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.wav");
    write_audio(&tone_in_noise(4000, 2), &input).unwrap();
    let o = biodeno(&[
        "denoise",
        "--in",
        s(&input),
        "--out",
        s(&dir.path().join("o.wav")),
        "--backend",
        "external",
        "--command",
        "exit 4 # {in} {out}",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = biodeno(&["denoise", "--in", s(&input), "--out", s(&dir.path().join("o.wav")), "--backend", "external"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn external_copy_backend_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.wav");
    let clip = tone_in_noise(4000, 3);
    write_audio(&clip, &input).unwrap();
    let out = dir.path().join("o.wav");
    let o = biodeno(&[
        "denoise", "--in", s(&input), "--out", s(&out), "--backend", "external", "--command", "cp {in} {out}",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_audio(&out).unwrap(), clip);
}

#[test]
fn bench_eval_compare_round() {
    let dir = tempfile::tempdir().unwrap();
    let assets = dir.path().join("assets");
    write_tree(&assets, "underwater", 3, 2, 1.0);
    write_tree(&assets, "terrestrial", 2, 2, 1.0);
    let bench = dir.path().join("bench");
    let o = biodeno(&["bench-build", "--assets", s(&assets), "--mode", "fixed:0", "--out", s(&bench)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let header = std::fs::read_to_string(bench.join("mixtures.csv")).unwrap();
    assert!(header.contains("# subset=0dB") && header.contains("# seed=0"), "{header}");
    assert_eq!(header.lines().filter(|l| !l.starts_with('#')).count(), 1 + 5);

    let random = dir.path().join("random");
    let o = biodeno(&["bench-build", "--assets", s(&assets), "--out", s(&random), "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let header = std::fs::read_to_string(random.join("mixtures.csv")).unwrap();
    assert!(header.contains("# snr_lo_db=-5") && header.contains("# snr_hi_db=10") && header.contains("# seed=4"));

    let eval = |name: &str, backend: &str| {
        let out = dir.path().join(name);
        let o = biodeno(&[
            "eval", "--mixtures", s(&bench), "--backend", backend, "--seeds", "0..2", "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let id1 = eval("id1", "identity");
    let id2 = eval("id2", "identity");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(id1.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["subsets"]["0dB"]["sisdri"]["median"], 0.0);
    assert_eq!(report["provenance"]["seed"], 0);
    for f in ["report.json", "scores.csv"] {
        assert_eq!(std::fs::read(id1.join(f)).unwrap(), std::fs::read(id2.join(f)).unwrap());
    }

    let cmp = dir.path().join("cmp.json");
    let o = biodeno(&["compare", "--a", s(&id1), "--b", s(&id2), "--out", s(&cmp)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cmp).unwrap()).unwrap();
    for (_, st) in c["subsets"].as_object().unwrap() {
        assert_eq!(st["sisdr"]["median"], 0.0);
    }
}

#[test]
fn pseudo_batches() {
    let dir = tempfile::tempdir().unwrap();
    let silent = dir.path().join("silent");
    std::fs::create_dir_all(&silent).unwrap();
    write_audio(&AudioClip::silence(16_000, 16_000).unwrap(), silent.join("z.wav")).unwrap();
    let out = dir.path().join("p0");
    let o = biodeno(&["pseudo", "--in", s(&silent), "--out", s(&out), "--backend", "identity"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let text = std::fs::read_to_string(out.join("excerpts.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1);

    let calls = dir.path().join("calls");
    std::fs::create_dir_all(&calls).unwrap();
    for i in 0..3 {
        write_audio(&tone_in_noise(48_000, i), calls.join(format!("{i}.wav"))).unwrap();
    }
    let rirs = dir.path().join("rirs");
    std::fs::create_dir_all(&rirs).unwrap();
    write_audio(&AudioClip::new(vec![1.0, 0.0, 0.3, 0.1], 16_000).unwrap(), rirs.join("r.wav")).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = biodeno(&[
            "pseudo", "--in", s(&calls), "--out", s(&out), "--scales", "1,2", "--T", "2", "--rir-dir", s(&rirs),
            "--seed", "9",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read_to_string(out.join("excerpts.csv")).unwrap()
    };
    let a = run("pa");
    assert_eq!(a, run("pb"));
    assert!(a.contains("# seed=9"));
    assert!(a.lines().filter(|l| !l.starts_with('#')).count() > 1);
}
