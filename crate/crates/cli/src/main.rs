//! `biodeno` command-line frontend.
//!
//! Exit codes: 0 success, 1 usage or invalid input, 2 I/O, 3 backend
//! failure. Errors and warnings go to stderr as one JSON object per line;
//! progress goes to stdout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use biodeno::audio::{list_wav_files, read_audio, write_audio};
use biodeno::harness::{compare_runs, run_evaluation, scan_assets, EvalOptions, EvalReport, ScanRules};
use biodeno::mixing::{build_benchmark, BenchmarkMode, MixOptions, MixtureManifest, SnrPolicy};
use biodeno::pseudo::{
    checked_denoise, load_rir_pool, run_pseudo_batch, DenoiserBackend, EnsembleConfig, ExcerptConfig,
    ExternalBackend, GateBackend, IdentityBackend, PseudoOptions,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

mod config;

use config::{FileConfig, Settings};

#[derive(Debug, Parser)]
#[command(name = "biodeno", version, about = "Denoising toolkit for animal vocalizations")]
struct Cli {
    /// Global seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Flat TOML file with default settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Gate,
    Identity,
    External,
}

#[derive(Debug, Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendKind::Gate)]
    backend: BackendKind,
    /// Command template for the external backend, with {in} and {out}.
    #[arg(long)]
    command: Option<String>,
    /// Noise-only WAV giving the gate a fixed (stationary) profile.
    #[arg(long)]
    noise: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Denoise a WAV file or every WAV under a directory.
    Denoise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Generate pseudo-clean training excerpts.
    Pseudo {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        /// Comma-separated slow-down factors.
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
        /// Excerpt length in seconds.
        #[arg(long = "T")]
        t_s: Option<f64>,
        #[arg(long)]
        rir_dir: Option<PathBuf>,
        #[arg(long)]
        rir_prob: Option<f64>,
    },
    /// Build a benchmark of SNR-controlled mixtures from an asset tree.
    BenchBuild {
        #[arg(long)]
        assets: PathBuf,
        /// random, combinations or fixed:<dB>
        #[arg(long, default_value = "random")]
        mode: String,
        #[arg(long, allow_hyphen_values = true)]
        snr_lo: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        snr_hi: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a backend on a built benchmark.
    Eval {
        #[arg(long)]
        mixtures: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        /// Seed range `a..b` (inclusive) or list `a,b,c`.
        #[arg(long, default_value = "0..9")]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Paired differences (a - b) between two evaluation reports.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Where to write the comparison JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<biodeno::Error> for Failure {
    fn from(e: biodeno::Error) -> Self {
        let (code, kind) = if e.is_io() {
            (2, "io")
        } else if e.is_backend() {
            (3, "backend")
        } else {
            (1, "invalid")
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        kind: "usage",
        message: message.into(),
    }
}

fn warn(message: impl AsRef<str>) {
    eprintln!("{}", json!({"level": "warning", "message": message.as_ref()}));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            eprintln!("{}", json!({"level": "error", "kind": "usage", "code": 1, "message": e.kind().to_string()}));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({"level": "error", "kind": f.kind, "code": f.code, "message": f.message}));
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(p) if !p.exists() => {
            return Err(Failure {
                code: 2,
                kind: "io",
                message: format!("config file not found: {}", p.display()),
            })
        }
        Some(p) => FileConfig::load(p).map_err(usage)?,
        None => FileConfig::default(),
    };
    let settings = Settings::resolve(file, cli.seed);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| usage(e.to_string()))?;
    pool.install(|| dispatch(cli.command, settings))
}

fn make_backend(args: &BackendArgs, s: &Settings) -> Result<Box<dyn DenoiserBackend>, Failure> {
    Ok(match args.backend {
        BackendKind::Identity => Box::new(IdentityBackend),
        BackendKind::Gate => {
            let noise = args.noise.as_ref().map(read_audio).transpose()?;
            let mut gate = s.gate();
            if noise.is_some() {
                gate.stationary = true;
            }
            let b = GateBackend {
                stft: s.stft(),
                gate,
                noise,
            };
            b.stft.validate()?;
            b.gate.validate()?;
            Box::new(b)
        }
        BackendKind::External => {
            let template = args
                .command
                .clone()
                .or_else(|| s.command.clone())
                .ok_or_else(|| usage("--backend external needs --command or `command` in the config"))?;
            let timeout = Duration::try_from_secs_f64(s.timeout_s)
                .ok()
                .filter(|d| !d.is_zero())
                .ok_or_else(|| usage("timeout_s must be a positive number of seconds"))?;
            Box::new(ExternalBackend::new(template)?.with_timeout(timeout))
        }
    })
}

fn dispatch(command: Command, s: Settings) -> Result<(), Failure> {
    match command {
        Command::Denoise { input, out, backend } => denoise(&input, &out, &backend, &s),
        Command::Pseudo {
            input,
            out,
            backend,
            scales,
            t_s,
            rir_dir,
            rir_prob,
        } => {
            let s = Settings {
                scales: scales.unwrap_or(s.scales.clone()),
                excerpt_s: t_s.unwrap_or(s.excerpt_s),
                rir_dir: rir_dir.or(s.rir_dir.clone()),
                rir_prob: rir_prob.or(s.rir_prob),
                ..s
            };
            pseudo(&input, &out, &backend, &s)
        }
        Command::BenchBuild {
            assets,
            mode,
            snr_lo,
            snr_hi,
            out,
        } => {
            let s = Settings {
                snr_lo: snr_lo.unwrap_or(s.snr_lo),
                snr_hi: snr_hi.unwrap_or(s.snr_hi),
                ..s
            };
            bench_build(&assets, &mode, &out, &s)
        }
        Command::Eval {
            mixtures,
            backend,
            seeds,
            out,
        } => eval(&mixtures, &backend, &seeds, &out, &s),
        Command::Compare { a, b, out } => compare(&a, &b, out.as_deref(), &s),
    }
}

fn denoise(input: &Path, out: &Path, args: &BackendArgs, s: &Settings) -> Result<(), Failure> {
    let backend = make_backend(args, s)?;
    if !input.exists() {
        return Err(biodeno::Error::FileNotFound(input.to_path_buf()).into());
    }
    let jobs: Vec<(PathBuf, PathBuf)> = if input.is_dir() {
        list_wav_files(input)?
            .into_iter()
            .map(|rel| (input.join(&rel), out.join(&rel)))
            .collect()
    } else if out.is_dir() {
        vec![(input.to_path_buf(), out.join(input.file_name().unwrap_or_default()))]
    } else {
        vec![(input.to_path_buf(), out.to_path_buf())]
    };
    if jobs.is_empty() {
        warn(format!("no WAV files under {}", input.display()));
    }
    jobs.par_iter().try_for_each(|(src, dst)| -> Result<(), Failure> {
        let clip = read_audio(src)?;
        let y = checked_denoise(backend.as_ref(), &clip, s.seed)?;
        if let Some(parent) = dst.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Failure {
                code: 2,
                kind: "io",
                message: format!("{}: {e}", parent.display()),
            })?;
        }
        write_audio(&y, dst)?;
        Ok(())
    })?;
    println!("denoised {} file(s) with {} (seed={})", jobs.len(), backend.name(), s.seed);
    Ok(())
}

fn pseudo(input: &Path, out: &Path, args: &BackendArgs, s: &Settings) -> Result<(), Failure> {
    let backend = make_backend(args, s)?;
    let rir_pool = match &s.rir_dir {
        Some(d) => load_rir_pool(d, s.sample_rate)?,
        None => Vec::new(),
    };
    let rir_prob = match (s.rir_prob, rir_pool.is_empty()) {
        (Some(p), _) => p,
        (None, false) => 0.5,
        (None, true) => {
            warn("no impulse responses given (--rir-dir); excerpts are left dry");
            0.0
        }
    };
    let opts = PseudoOptions {
        ensemble: EnsembleConfig {
            scale_factors: s.scales.clone(),
        },
        excerpts: ExcerptConfig {
            t_s: s.excerpt_s,
            rir_prob,
            rir_pool,
            ..Default::default()
        },
        seed: s.seed,
        sample_rate: s.sample_rate,
    };
    let batch = run_pseudo_batch(input, out, backend.as_ref(), &opts)?;
    for src in &batch.silent_sources {
        warn(format!("{src}: silent, no excerpts"));
    }
    if batch.records.is_empty() {
        warn("no excerpts were produced");
    }
    println!(
        "wrote {} excerpt(s) to {} (seed={})",
        batch.records.len(),
        batch.manifest_path.display(),
        s.seed
    );
    Ok(())
}

fn parse_mode(mode: &str, policy: SnrPolicy) -> Result<BenchmarkMode, Failure> {
    match mode {
        "random" => Ok(BenchmarkMode::Random(policy)),
        "combinations" => Ok(BenchmarkMode::AllCombinations(policy)),
        m => m
            .strip_prefix("fixed:")
            .and_then(|db| db.parse::<f64>().ok())
            .filter(|db| db.is_finite())
            .map(BenchmarkMode::Fixed)
            .ok_or_else(|| usage(format!("unknown mode `{m}` (random, combinations or fixed:<dB>)"))),
    }
}

fn bench_build(assets: &Path, mode: &str, out: &Path, s: &Settings) -> Result<(), Failure> {
    let policy = SnrPolicy::Uniform {
        lo_db: s.snr_lo,
        hi_db: s.snr_hi,
    };
    policy.validate()?;
    let mode = parse_mode(mode, policy)?;
    if !assets.exists() {
        return Err(biodeno::Error::FileNotFound(assets.to_path_buf()).into());
    }
    let scan = scan_assets(assets, &ScanRules::default())?;
    for skipped in &scan.skipped {
        warn(format!("skipped {}: {}", skipped.path.display(), skipped.reason));
    }
    scan.manifest.write_csv(out.join("assets.csv"))?;
    let opts = MixOptions {
        sample_rate: s.sample_rate,
        noise_conversion: s.noise_conversion,
        ..Default::default()
    };
    let mm = build_benchmark(&scan.manifest, mode, s.seed, out, &opts)?;
    println!(
        "built {} mixture(s), subset {} (seed={})",
        mm.records.len(),
        mm.meta.label,
        s.seed
    );
    Ok(())
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Failure> {
    let bad = || usage(format!("bad seed list `{text}` (use a..b or a,b,c)"));
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (a.trim().parse::<u64>().map_err(|_| bad())?, b.trim().parse::<u64>().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|v| v.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn eval(mixtures: &Path, args: &BackendArgs, seeds: &str, out: &Path, s: &Settings) -> Result<(), Failure> {
    let seeds = parse_seeds(seeds)?;
    let backend = make_backend(args, s)?;
    let mm = MixtureManifest::read(mixtures)?;
    let config_text = format!(
        "{}\nbackend={}\ncommand={}",
        s.to_text(),
        backend.name(),
        args.command.as_deref().unwrap_or("")
    );
    let report = run_evaluation(
        &mm,
        backend.as_ref(),
        &EvalOptions {
            seeds,
            seed: s.seed,
            bootstrap_n: s.bootstrap,
            config_text,
        },
    )?;
    if report.excluded > 0 {
        warn(format!("{} run(s) excluded after backend failures", report.excluded));
    }
    let path = report.write(out)?;
    for (subset, st) in &report.subsets {
        println!(
            "{subset}: SI-SDR {:.2} dB [{:.2}, {:.2}], SI-SDRi {:.2} dB [{:.2}, {:.2}]",
            st.sisdr.median, st.sisdr.ci_low, st.sisdr.ci_high, st.sisdri.median, st.sisdri.ci_low, st.sisdri.ci_high
        );
    }
    println!("report: {} (seed={})", path.display(), s.seed);
    Ok(())
}

fn compare(a: &Path, b: &Path, out: Option<&Path>, s: &Settings) -> Result<(), Failure> {
    let ra = EvalReport::read(a)?;
    let rb = EvalReport::read(b)?;
    let cmp = compare_runs(&ra, &rb, s.bootstrap)?;
    for (subset, st) in &cmp.subsets {
        println!(
            "{subset}: dSI-SDR {:.2} dB [{:.2}, {:.2}], dSI-SDRi {:.2} dB [{:.2}, {:.2}]",
            st.sisdr.median, st.sisdr.ci_low, st.sisdr.ci_high, st.sisdri.median, st.sisdri.ci_low, st.sisdri.ci_high
        );
    }
    if let Some(out) = out {
        std::fs::write(out, cmp.to_json()?).map_err(|e| Failure {
            code: 2,
            kind: "io",
            message: format!("{}: {e}", out.display()),
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..9").ok().unwrap(), (0..10).collect::<Vec<_>>());
        assert_eq!(parse_seeds("3,1").ok().unwrap(), vec![3, 1]);
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn modes() {
        let p = SnrPolicy::default();
        assert_eq!(parse_mode("fixed:-5", p).ok().unwrap(), BenchmarkMode::Fixed(-5.0));
        assert_eq!(parse_mode("random", p).ok().unwrap(), BenchmarkMode::Random(p));
        assert!(parse_mode("fixed:loud", p).is_err());
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
