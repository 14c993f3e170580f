//! Command-line front end for the denoiser.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, missing or
//! out-of-range options, unusable configuration), 2 for I/O and parse
//! errors (unreadable files, malformed PGM or config files).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rkhs_denoise::bench::{run_bench, write_csv, BenchOptions, NoiseGrid, Suite};
use rkhs_denoise::metrics::format_psnr;
use rkhs_denoise::pgm::{read_pgm_file, write_pgm_file};
use rkhs_denoise::{denoise_image_with, psnr, EngineConfig, Execution, NoiseKind, NoiseSpec, PgmFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rkhs-denoise", version, about = "Edge-preserving kernel denoising for PGM images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Denoise a PGM image.
    Denoise {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        out_format: FormatArgs,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Add seeded synthetic noise to a PGM image.
    Addnoise {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Gaussian standard deviation, in intensity units.
        #[arg(long)]
        s: Option<f64>,
        /// Impulse probability in [0, 1].
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out_format: FormatArgs,
    },
    /// Print the PSNR between two images, in dB.
    Psnr {
        #[arg(short = 'a')]
        a: PathBuf,
        #[arg(short = 'b')]
        b: PathBuf,
    },
    /// Sweep a noise grid over a clean image and write a CSV report.
    Bench {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Gaussian standard deviations to sweep.
        #[arg(long, value_delimiter = ',')]
        stds: Option<Vec<f64>>,
        /// Impulse probabilities to sweep.
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; may be repeated. Applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct FormatArgs {
    /// Write ASCII (P2) instead of binary (P5) output.
    #[arg(long)]
    ascii: bool,
}

impl FormatArgs {
    fn format(&self) -> PgmFormat {
        if self.ascii {
            PgmFormat::P2
        } else {
            PgmFormat::P5
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Gaussian,
    Impulse,
    Mixed,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn io_failure(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_IO, message: format!("{context}: {err}") }
}

fn load_config(args: &ConfigArgs) -> Result<EngineConfig, Failure> {
    let mut cfg = EngineConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| io_failure(path.display(), e))?;
        cfg.apply_text(&text).map_err(|e| io_failure(path.display(), e))?;
    }
    for assignment in &args.set {
        cfg.apply_override(assignment).map_err(|e| usage(format!("--set {assignment}: {e}")))?;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn execution(threads: Option<usize>) -> Result<Execution, Failure> {
    match threads {
        Some(0) => Err(usage("--threads must be at least 1")),
        Some(1) => Ok(Execution::Serial),
        threads => Ok(Execution::Parallel { threads }),
    }
}

fn check_std(s: f64) -> Result<f64, Failure> {
    if s.is_finite() && s >= 0.0 {
        Ok(s)
    } else {
        Err(usage(format!("noise std must be finite and >= 0, got {s}")))
    }
}

fn check_fraction(p: f64) -> Result<f64, Failure> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(usage(format!("impulse probability must be in [0, 1], got {p}")))
    }
}

fn noise_kind(kind: KindArg, s: Option<f64>, p: Option<f64>) -> Result<NoiseKind, Failure> {
    let need_s = || s.ok_or_else(|| usage("--s is required for this noise kind")).and_then(check_std);
    let need_p = || p.ok_or_else(|| usage("--p is required for this noise kind")).and_then(check_fraction);
    Ok(match kind {
        KindArg::Gaussian => NoiseKind::Gaussian { s: need_s()? },
        KindArg::Impulse => NoiseKind::Impulse { p: need_p()? },
        KindArg::Mixed => NoiseKind::Mixed { s: need_s()?, p: need_p()? },
    })
}

fn read_image(path: &Path) -> Result<rkhs_denoise::Image, Failure> {
    read_pgm_file(path).map_err(|e| io_failure(path.display(), e))
}

fn write_image(path: &Path, img: &rkhs_denoise::Image, format: PgmFormat) -> Result<(), Failure> {
    write_pgm_file(path, img, format).map_err(|e| io_failure(path.display(), e))
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Denoise { input, output, config, out_format, threads } => {
            let cfg = load_config(&config)?;
            let exec = execution(threads)?;
            let img = read_image(&input)?;
            let result = denoise_image_with(&img, &cfg, exec, None).map_err(|e| io_failure("denoise", e))?;
            write_image(&output, &result, out_format.format())
        }
        Command::Addnoise { input, output, kind, s, p, seed, out_format } => {
            let kind = noise_kind(kind, s, p)?;
            let img = read_image(&input)?;
            write_image(&output, &NoiseSpec { kind, seed }.apply(&img), out_format.format())
        }
        Command::Psnr { a, b } => {
            let x = read_image(&a)?;
            let y = read_image(&b)?;
            let db = psnr(&x, &y).map_err(|e| io_failure("psnr", e))?;
            writeln!(out, "{}", format_psnr(db)).map_err(|e| io_failure("stdout", e))
        }
        Command::Bench { input, suite, out: csv_path, config, seed, stds, fractions, threads } => {
            let cfg = load_config(&config)?;
            let exec = execution(threads)?;
            let mut grid = NoiseGrid::default();
            if let Some(stds) = stds {
                grid.stds = stds.into_iter().map(check_std).collect::<Result<_, _>>()?;
            }
            if let Some(fractions) = fractions {
                grid.fractions = fractions.into_iter().map(check_fraction).collect::<Result<_, _>>()?;
            }
            let clean = read_image(&input)?;
            let name = input.file_name().map_or_else(|| input.display().to_string(), |n| n.to_string_lossy().into_owned());
            let opts = BenchOptions {
                image_name: &name,
                suite,
                grid: &grid,
                config: &cfg,
                seed,
                execution: exec,
            };
            let rows = run_bench(&clean, &opts, |row| {
                let _ = writeln!(
                    out,
                    "{}: noisy {} dB, denoised {} dB, {:.2} s",
                    row.noise,
                    format_psnr(row.noisy_psnr),
                    format_psnr(row.denoised_psnr),
                    row.runtime_seconds
                );
            })
            .map_err(|e| io_failure("bench", e))?;
            let file = File::create(&csv_path).map_err(|e| io_failure(csv_path.display(), e))?;
            write_csv(&rows, BufWriter::new(file)).map_err(|e| io_failure(csv_path.display(), e))
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            // --help and --version
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
