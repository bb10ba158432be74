use std::collections::HashMap;

use biodeno::audio::read_audio;
use biodeno::harness::eval::{read_scores_csv, ScoreRow, ScoreStatus};
use biodeno::harness::{
    compare_runs, run_evaluation, scan_assets, EvalOptions, EvalReport, ScanRules, Scenario,
};
use biodeno::metrics::{self, Metric};
use biodeno::mixing::{build_benchmark, measure_snr_db, BenchmarkMode, MixOptions, MixtureManifest, SnrPolicy};
use biodeno::pseudo::{DenoiserBackend, GateBackend, IdentityBackend};
use biodeno::{AudioClip, Error, Result};

mod common;

const SR: u32 = 8000;

fn opts() -> MixOptions {
    MixOptions {
        sample_rate: SR,
        ..Default::default()
    }
}

#[test]
fn reference_tree_scans_to_108_entries() {
    let dir = tempfile::tempdir().unwrap();
    common::write_asset_tree(dir.path(), common::REFERENCE_TREE, SR, 0.1);
    let scan = scan_assets(dir.path(), &ScanRules::default()).unwrap();
    assert_eq!(scan.manifest.len(), 108);
    assert!(scan.skipped.is_empty());
    let again = scan_assets(dir.path(), &ScanRules::default()).unwrap();
    assert_eq!(
        scan.manifest.to_csv_string().unwrap(),
        again.manifest.to_csv_string().unwrap()
    );
}

#[test]
fn fixed_snr_benchmark_has_62_exact_mixtures() {
    let dir = tempfile::tempdir().unwrap();
    let assets = dir.path().join("assets");
    common::write_asset_tree(&assets, common::REFERENCE_TREE, SR, 0.5);
    let manifest = scan_assets(&assets, &ScanRules::default()).unwrap().manifest;
    let out = dir.path().join("fixed0");
    let mm = build_benchmark(&manifest, BenchmarkMode::Fixed(0.0), 0, &out, &opts()).unwrap();
    assert_eq!(mm.records.len(), 62);
    assert_eq!(mm.meta.label, "0dB");
    for r in &mm.records {
        let clean = read_audio(mm.resolve(&r.clean_path)).unwrap();
        let noise = read_audio(mm.resolve(&r.noise_path)).unwrap();
        let mix = read_audio(mm.resolve(&r.mix_path)).unwrap();
        assert!(measure_snr_db(&clean, &noise).abs() < 1e-4);
        for ((x, s), n) in mix.samples().iter().zip(clean.samples()).zip(noise.samples()) {
            assert_eq!(*x, s + n);
        }
    }
    let back = MixtureManifest::read(&out).unwrap();
    assert_eq!(back, mm);
}

#[test]
fn default_bounds_are_echoed_in_header() {
    let dir = tempfile::tempdir().unwrap();
    let assets = dir.path().join("assets");
    common::write_asset_tree(&assets, [("underwater", 2, 2), ("terrestrial", 0, 0)], SR, 0.2);
    let manifest = scan_assets(&assets, &ScanRules::default()).unwrap().manifest;
    let mm = build_benchmark(
        &manifest,
        BenchmarkMode::Random(SnrPolicy::default()),
        5,
        dir.path().join("b"),
        &opts(),
    )
    .unwrap();
    let text = std::fs::read_to_string(dir.path().join("b/mixtures.csv")).unwrap();
    assert!(text.contains("# snr_lo_db=-5\n") && text.contains("# snr_hi_db=10\n"), "{text}");
    assert!(text.contains("# seed=5\n"));
    assert!(mm.records.iter().all(|r| (-5.0..10.0).contains(&r.snr_db)));
}

#[test]
fn one_sided_scenario_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    common::write_asset_tree(dir.path(), [("underwater", 2, 0), ("terrestrial", 1, 1)], SR, 0.2);
    let manifest = scan_assets(dir.path(), &ScanRules::default()).unwrap().manifest;
    let e = build_benchmark(&manifest, BenchmarkMode::Fixed(0.0), 0, dir.path().join("o"), &opts());
    assert!(matches!(e, Err(Error::EmptyScenario(_))));
}

fn small_benchmark(dir: &std::path::Path) -> MixtureManifest {
    let assets = dir.join("assets");
    common::write_asset_tree(&assets, [("underwater", 3, 2), ("terrestrial", 4, 3)], SR, 3.0);
    let manifest = scan_assets(&assets, &ScanRules::default()).unwrap().manifest;
    build_benchmark(&manifest, BenchmarkMode::Fixed(0.0), 1, dir.join("bench"), &opts()).unwrap()
}

/// Returns the stored clean reference of whichever mixture it is given.
struct CleanOracle(HashMap<Vec<u32>, AudioClip>);

impl CleanOracle {
    fn new(mm: &MixtureManifest) -> Self {
        let key = |c: &AudioClip| c.samples().iter().map(|s| s.to_bits()).collect::<Vec<_>>();
        Self(
            mm.records
                .iter()
                .map(|r| {
                    let mix = read_audio(mm.resolve(&r.mix_path)).unwrap();
                    (key(&mix), read_audio(mm.resolve(&r.clean_path)).unwrap())
                })
                .collect(),
        )
    }
}

impl DenoiserBackend for CleanOracle {
    fn name(&self) -> &str {
        "oracle"
    }
    fn denoise(&self, clip: &AudioClip) -> Result<AudioClip> {
        let key: Vec<u32> = clip.samples().iter().map(|s| s.to_bits()).collect();
        Ok(self.0[&key].clone())
    }
}

/// Fails on one specific mixture length, succeeds elsewhere.
struct Flaky(usize);

impl DenoiserBackend for Flaky {
    fn name(&self) -> &str {
        "flaky"
    }
    fn denoise(&self, clip: &AudioClip) -> Result<AudioClip> {
        if clip.len() == self.0 {
            return Err(Error::BackendFailure {
                backend: "flaky".into(),
                reason: "model crashed".into(),
            });
        }
        Ok(clip.clone())
    }
}

fn eval_opts(seeds: Vec<u64>) -> EvalOptions {
    EvalOptions {
        seeds,
        bootstrap_n: 200,
        ..Default::default()
    }
}

#[test]
fn evaluation_oracles() {
    let dir = tempfile::tempdir().unwrap();
    let mm = small_benchmark(dir.path());
    assert_eq!(mm.records.len(), 7);

    let id = run_evaluation(&mm, &IdentityBackend, &eval_opts(vec![0, 1])).unwrap();
    for stats in id.subsets.values() {
        assert_eq!(stats.sisdri.median, 0.0);
        assert_eq!((stats.sisdri.ci_low, stats.sisdri.ci_high), (0.0, 0.0));
    }
    assert_eq!(id.scores.len(), 14);
    assert!(id.subsets.contains_key("0dB/underwater") && id.subsets.contains_key("0dB/terrestrial"));

    let oracle = run_evaluation(&mm, &CleanOracle::new(&mm), &eval_opts(vec![0])).unwrap();
    assert_eq!(oracle.subsets["0dB"].sisdr.median, 100.0);

    let gate = run_evaluation(&mm, &GateBackend::default(), &eval_opts(vec![0])).unwrap();
    assert!(gate.subsets["0dB"].sisdri.median > 0.0, "{:?}", gate.subsets["0dB"]);

    let cmp = compare_runs(&id, &id, 200).unwrap();
    assert!(cmp.subsets.values().all(|s| s.sisdr.median == 0.0 && s.sisdri.median == 0.0));
}

#[test]
fn failures_are_excluded_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let mm = small_benchmark(dir.path());
    let victim = read_audio(mm.resolve(&mm.records[0].mix_path)).unwrap().len();
    let n_victims = mm
        .records
        .iter()
        .filter(|r| read_audio(mm.resolve(&r.mix_path)).unwrap().len() == victim)
        .count();
    let report = run_evaluation(&mm, &Flaky(victim), &eval_opts(vec![0, 1, 2])).unwrap();
    assert_eq!(report.excluded, 3 * n_victims);
    assert_eq!(report.scores.len(), 21);
    let failed = report.scores.iter().filter(|r| r.status == ScoreStatus::Failed).count();
    assert_eq!(failed, report.excluded);
    assert_eq!(report.subsets["0dB"].sisdri.n, 7 - n_victims);
}

#[test]
fn missing_reference_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let mm = small_benchmark(dir.path());
    std::fs::remove_file(mm.resolve(&mm.records[2].clean_path)).unwrap();
    let e = run_evaluation(&mm, &IdentityBackend, &eval_opts(vec![0]));
    assert!(matches!(e, Err(Error::MissingReference(ref id)) if *id == mm.records[2].mix_id));
}

#[test]
fn written_reports_round_trip_and_recompute() {
    let dir = tempfile::tempdir().unwrap();
    let mm = small_benchmark(dir.path());
    let report = run_evaluation(&mm, &GateBackend::default(), &eval_opts(vec![0, 1])).unwrap();
    let out = dir.path().join("eval");
    report.write(&out).unwrap();
    let back = EvalReport::read(&out).unwrap();
    assert_eq!(back, report);

    // Independent recomputation from the CSV alone.
    let rows: Vec<ScoreRow> = read_scores_csv(&std::fs::read_to_string(out.join("scores.csv")).unwrap()).unwrap();
    let mut by_mix: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for r in &rows {
        by_mix.entry(r.mix_id.clone()).or_default().push(r.sisdri_db.unwrap());
    }
    let means: Vec<f64> = by_mix.values().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let med = metrics::median(&means);
    assert!((med - report.subsets["0dB"].sisdri.median).abs() < 1e-9);
}

#[test]
fn comparison_shifts_by_constant() {
    let dir = tempfile::tempdir().unwrap();
    let mm = small_benchmark(dir.path());
    let b = run_evaluation(&mm, &GateBackend::default(), &eval_opts(vec![0])).unwrap();
    let mut a = b.clone();
    for r in &mut a.scores {
        r.sisdr_db = r.sisdr_db.map(|v| v + 1.0);
        r.sisdri_db = r.sisdri_db.map(|v| v + 1.0);
    }
    let cmp = compare_runs(&b, &a, 100).unwrap();
    for s in cmp.subsets.values() {
        assert!((s.sisdr.median + 1.0).abs() < 1e-9);
    }
    let sa = a.excerpt_scores("0dB");
    let sb = b.excerpt_scores("0dB");
    let direct = metrics::paired_differences(&sa, &sb, Metric::Sisdri, 100, 0).unwrap();
    assert!((direct.median - 1.0).abs() < 1e-9);

    let mut other = b.clone();
    other.provenance.manifest_digest = "x".into();
    assert!(matches!(compare_runs(&b, &other, 10), Err(Error::ManifestMismatch(_))));
}

#[test]
fn scan_skips_stray_files() {
    let dir = tempfile::tempdir().unwrap();
    common::write_asset_tree(dir.path(), [("underwater", 1, 1), ("terrestrial", 0, 0)], SR, 0.2);
    std::fs::write(dir.path().join("underwater/voc/broken.wav"), b"RIFF....WAVEjunk").unwrap();
    std::fs::write(dir.path().join("readme.wav"), b"nope").unwrap();
    let scan = scan_assets(dir.path(), &ScanRules::default()).unwrap();
    assert_eq!(scan.manifest.len(), 2);
    assert_eq!(scan.skipped.len(), 2);
    assert!(scan
        .manifest
        .select(Scenario::Underwater, biodeno::harness::Role::Voc)
        .iter()
        .all(|e| e.asset_id == "underwater/voc/000.wav"));
}
