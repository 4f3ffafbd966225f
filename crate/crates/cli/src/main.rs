//! `fftsim`: drive the 2D FFT processor simulator from the command line.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fftsim_core::fft2d::write_trace_csv;
use fftsim_core::frame_io::{self, FileFormat, InputSpec, Normalize, SpectrumLayout};
use fftsim_core::oracle::{compare, compare_frames, dft2d_oracle, dft_oracle, ErrorMetrics};
use fftsim_core::resources::{reduction_factor, report_json, sweep_csv, sweep_report};
use fftsim_core::stimulus::{random_frame, random_vector, rng};
use fftsim_core::{
    run_stream, Fft1dProcessor, Frame2d, FxFormat, NumericMode, SimConfig, StreamOutput,
};

#[derive(Parser)]
#[command(
    name = "fftsim",
    version,
    about = "Cycle-accurate radix-2 2D FFT processor simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transform an image through the two-block 2D pipeline.
    Fft2d(Fft2dArgs),
    /// Transform one vector through a single 1D block.
    Fft1d(Fft1dArgs),
    /// Butterfly, multiplier and adder counts for both designs.
    Resources(ResourceArgs),
    /// Check seeded random frames against the brute-force DFT.
    Verify(VerifyArgs),
    /// Dump the cycle-by-cycle control/RAM trace of a frame stream.
    Trace(TraceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Fixed,
    Float,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Pgm,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    Unit,
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum Layout {
    RealImag,
    Magnitude,
}

#[derive(Args)]
struct NumericArgs {
    #[arg(long, value_enum, default_value = "fixed")]
    mode: Mode,
    /// Fixed-point word width in bits.
    #[arg(long, default_value_t = 16)]
    width: u32,
    /// Fixed-point fractional bits.
    #[arg(long, default_value_t = 15)]
    frac: u32,
    /// Disable the per-stage halving (it is off in float mode regardless).
    #[arg(long)]
    no_scaling: bool,
}

impl NumericArgs {
    fn config(&self) -> Result<SimConfig> {
        let mode = match self.mode {
            Mode::Fixed => NumericMode::Fixed(FxFormat::new(self.width, self.frac)?),
            Mode::Float => NumericMode::ExactFloat,
        };
        let cfg = SimConfig::new(mode);
        Ok(if self.no_scaling {
            cfg.with_scaling(false)
        } else {
            cfg
        })
    }
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Input file format; inferred from a .pgm or .csv extension if omitted.
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    #[arg(long, value_enum, default_value = "unit")]
    normalize: NormalizeArg,
}

impl InputArgs {
    fn spec(&self) -> Result<Option<InputSpec>> {
        let Some(path) = &self.input else {
            return Ok(None);
        };
        let format = match self.format {
            Some(InputFormat::Pgm) => FileFormat::Pgm,
            Some(InputFormat::Csv) => FileFormat::CsvComplex,
            None => match path.extension().and_then(|e| e.to_str()) {
                Some("pgm") => FileFormat::Pgm,
                Some("csv") => FileFormat::CsvComplex,
                _ => bail!(
                    "cannot infer the format of {}; pass --format",
                    path.display()
                ),
            },
        };
        let normalize = match self.normalize {
            NormalizeArg::Unit => Normalize::UnitRange,
            NormalizeArg::Raw => Normalize::Raw,
        };
        Ok(Some(InputSpec {
            path: path.clone(),
            format,
            normalize,
        }))
    }
}

#[derive(Args)]
struct Fft2dArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    numeric: NumericArgs,
    /// Expected frame side; must match the input if given.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "real-imag")]
    layout: Layout,
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct Fft1dArgs {
    /// Complex CSV vector: a length line followed by `re,im` lines.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    numeric: NumericArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, env = "FFTSIM_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    output: PathBuf,
    /// Per-cycle control trace (`cycle,sb,isl,osl,done`).
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct ResourceArgs {
    #[arg(long)]
    n: Option<u64>,
    /// Sizes to tabulate: `8..64` (powers of two in range) or `8,16,32`.
    #[arg(long)]
    sweep: Option<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the sweep CSV here instead of stdout.
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    numeric: NumericArgs,
    #[arg(long, env = "FFTSIM_SEED")]
    seed: Option<u64>,
    #[arg(long, default_value_t = 10)]
    frames: usize,
    /// Minimum SNR in dB for fixed-point runs.
    #[arg(long, default_value_t = 60.0)]
    snr_threshold: f64,
    /// Maximum relative error for exact-float runs.
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
    /// Worker threads for independent frames.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    numeric: NumericArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    frames: usize,
    #[arg(long, env = "FFTSIM_SEED")]
    seed: Option<u64>,
    /// CSV destination; stdout if omitted (summary then goes to stderr).
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        bail!("configuration error: n = {n} is not a power of two >= 2");
    }
    Ok(())
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.context("configuration error: random input needs --seed or FFTSIM_SEED")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("I/O error writing {}", path.display()))
}

fn load_input(spec: &InputSpec, expected_n: Option<usize>) -> Result<Frame2d> {
    let frame = frame_io::load_frame(spec)?;
    if let Some(n) = expected_n {
        if n != frame.n() {
            bail!(
                "configuration error: --n {n} but {} is {}x{}",
                spec.path.display(),
                frame.n(),
                frame.n()
            );
        }
    }
    Ok(frame)
}

fn print_summary(out: &mut dyn Write, result: &StreamOutput, period: u64) -> io::Result<()> {
    let toggles: Vec<String> = result
        .trace
        .windows(2)
        .filter(|w| w[0].sel != w[1].sel)
        .map(|w| w[1].cycle.to_string())
        .collect();
    writeln!(out, "frames: {}", result.spectra.len())?;
    writeln!(out, "cycles: {}", result.cycles)?;
    writeln!(out, "frame period: {period}")?;
    writeln!(
        out,
        "sel toggles: {} (at cycles {})",
        result.sel_toggles,
        toggles.join(" ")
    )?;
    writeln!(out, "block 1 DONE pulses: {}", result.block1_done_pulses())?;
    writeln!(out, "block 2 DONE pulses: {}", result.block2_done_pulses())
}

fn cmd_fft2d(args: Fft2dArgs) -> Result<ExitCode> {
    let cfg = args.numeric.config()?;
    let spec = args
        .input
        .spec()?
        .context("configuration error: fft2d needs --input")?;
    let image = load_input(&spec, args.n)?;
    frame_io::check_range(&image, cfg.mode)?;
    let result = run_stream(std::slice::from_ref(&image), cfg)?;
    let layout = match args.layout {
        Layout::RealImag => SpectrumLayout::RealImagCsv,
        Layout::Magnitude => SpectrumLayout::MagnitudeCsv,
    };
    frame_io::store_spectrum(&result.spectra[0], &args.output, layout)?;
    if let Some(path) = &args.trace_out {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &result.trace)?;
        write_file(path, &buf)?;
    }
    let n = image.n();
    println!(
        "mode: {} (scale-by-half {})",
        cfg.mode,
        if cfg.scale_by_half { "on" } else { "off" }
    );
    println!("n: {n}");
    println!("cycles: {}", result.cycles);
    println!("frame latency: {} cycles", result.completion_cycles[0] + 1);
    if cfg.mode.is_fixed() {
        println!("overflow: {}", if result.overflow { "yes" } else { "no" });
    }
    println!("spectrum scale: {}", cfg.pass_scale(n) * cfg.pass_scale(n));
    Ok(ExitCode::SUCCESS)
}

fn cmd_fft1d(args: Fft1dArgs) -> Result<ExitCode> {
    let cfg = args.numeric.config()?;
    let input = match (&args.input, args.n) {
        (Some(path), n) => {
            let v = frame_io::load_vector(path)?;
            if let Some(n) = n {
                if n != v.len() {
                    bail!(
                        "configuration error: --n {n} but {} holds {} samples",
                        path.display(),
                        v.len()
                    );
                }
            }
            v
        }
        (None, Some(n)) => {
            check_n(n)?;
            random_vector(&mut rng(require_seed(args.seed)?), n)
        }
        (None, None) => bail!("configuration error: fft1d needs --input or --n with --seed"),
    };
    let mut proc = Fft1dProcessor::new(input.len(), cfg)?;
    let (out, trace) = proc.run_frame(&input)?;
    frame_io::store_vector(&out, &args.output)?;
    if let Some(path) = &args.trace_out {
        let mut s = String::from("cycle,sb,isl,osl,done\n");
        for (i, c) in trace.iter().enumerate() {
            s.push_str(&format!(
                "{i},{},{},{},{}\n",
                c.stage,
                u8::from(c.isl),
                u8::from(c.osl),
                u8::from(c.done)
            ));
        }
        write_file(path, s.as_bytes())?;
    }
    println!("mode: {}", cfg.mode);
    println!("n: {}", input.len());
    println!("butterfly units: {}", proc.lane_count());
    println!("cycles: {}", trace.len());
    if cfg.mode.is_fixed() {
        println!("overflow: {}", if proc.overflow() { "yes" } else { "no" });
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_sweep(s: &str) -> Result<Vec<u64>> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo
            .trim()
            .parse()
            .context("configuration error: bad sweep start")?;
        let hi: u64 = hi
            .trim()
            .parse()
            .context("configuration error: bad sweep end")?;
        let ns: Vec<u64> = (1..64)
            .map(|k| 1u64 << k)
            .filter(|n| (lo..=hi).contains(n))
            .collect();
        if ns.is_empty() {
            bail!("configuration error: no power of two in {lo}..{hi}");
        }
        return Ok(ns);
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .with_context(|| format!("configuration error: bad sweep entry `{t}`"))
        })
        .collect()
}

fn cmd_resources(args: ResourceArgs) -> Result<ExitCode> {
    if args.n.is_none() && args.sweep.is_none() {
        bail!("configuration error: resources needs --n and/or --sweep");
    }
    if let Some(n) = args.n {
        let json = serde_json::to_string_pretty(&report_json(n)?)?;
        match &args.output {
            Some(path) => write_file(path, format!("{json}\n").as_bytes())?,
            None => println!("{json}"),
        }
        if n >= 4 {
            let alpha = reduction_factor(n)?;
            println!(
                "alpha = {alpha} ({:.6})",
                *alpha.numer() as f64 / *alpha.denom() as f64
            );
        }
    }
    if let Some(sweep) = &args.sweep {
        let csv = sweep_csv(&sweep_report(&parse_sweep(sweep)?)?);
        match &args.csv_out {
            Some(path) => write_file(path, csv.as_bytes())?,
            None => print!("{csv}"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_frame(frame: &Frame2d, cfg: SimConfig) -> Result<ErrorMetrics> {
    let n = frame.n();
    let result = run_stream(std::slice::from_ref(frame), cfg)?;
    let scale = cfg.pass_scale(n) * cfg.pass_scale(n);
    Ok(compare_frames(
        &result.spectra[0],
        &dft2d_oracle(frame),
        scale,
    )?)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    check_n(args.n)?;
    let cfg = args.numeric.config()?;
    let seed = require_seed(args.seed)?;
    if args.frames == 0 {
        bail!("configuration error: --frames must be at least 1");
    }
    let mut r = rng(seed);
    let frames: Vec<Frame2d> = (0..args.frames)
        .map(|_| random_frame(&mut r, args.n))
        .collect::<Result<_, _>>()?;

    // 1D sanity: one seeded vector through a single block.
    let v = random_vector(&mut r, args.n);
    let (out1d, _) = Fft1dProcessor::new(args.n, cfg)?.run_frame(&v)?;
    let m1d = compare(&out1d, &dft_oracle(&v), cfg.pass_scale(args.n))?;

    let jobs = args.jobs.max(1).min(frames.len());
    let chunk = frames.len().div_ceil(jobs);
    let metrics: Vec<ErrorMetrics> = std::thread::scope(|s| {
        let handles: Vec<_> = frames
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|f| verify_frame(f, cfg))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("verify worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let worst_rel = metrics
        .iter()
        .map(|m| m.relative_max())
        .fold(m1d.relative_max(), f64::max);
    let worst_abs = metrics
        .iter()
        .map(|m| m.max_abs)
        .fold(m1d.max_abs, f64::max);
    let worst_rms = metrics.iter().map(|m| m.rms).fold(m1d.rms, f64::max);
    let min_snr = metrics.iter().map(|m| m.snr_db).fold(m1d.snr_db, f64::min);

    println!("mode: {}", cfg.mode);
    println!("n: {}, frames: {}, seed: {seed}", args.n, frames.len());
    println!("max_abs: {worst_abs:.6e}");
    println!("rms: {worst_rms:.6e}");
    println!("max relative: {worst_rel:.6e}");
    println!("min snr_db: {min_snr:.3}");
    let pass = if cfg.mode.is_fixed() {
        println!("threshold: snr_db >= {}", args.snr_threshold);
        min_snr >= args.snr_threshold
    } else {
        println!("threshold: relative <= {:e}", args.rel_tol);
        worst_rel <= args.rel_tol
    };
    println!("result: {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_trace(args: TraceArgs) -> Result<ExitCode> {
    let cfg = args.numeric.config()?;
    if args.frames == 0 {
        bail!("configuration error: --frames must be at least 1");
    }
    let frames: Vec<Frame2d> = match args.input.spec()? {
        Some(spec) => {
            let f = load_input(&spec, args.n)?;
            frame_io::check_range(&f, cfg.mode)?;
            vec![f; args.frames]
        }
        None => {
            let n = args
                .n
                .context("configuration error: trace needs --input or --n")?;
            check_n(n)?;
            let mut r = rng(require_seed(args.seed)?);
            (0..args.frames)
                .map(|_| random_frame(&mut r, n))
                .collect::<Result<_, _>>()?
        }
    };
    let n = frames[0].n();
    let result = run_stream(&frames, cfg)?;
    let period = n as u64 * u64::from(n.trailing_zeros());
    match &args.trace_out {
        Some(path) => {
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &result.trace)?;
            write_file(path, &buf)?;
            print_summary(&mut io::stdout(), &result, period)?;
        }
        None => {
            write_trace_csv(io::stdout().lock(), &result.trace)?;
            print_summary(&mut io::stderr(), &result, period)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fft2d(a) => cmd_fft2d(a),
        Command::Fft1d(a) => cmd_fft1d(a),
        Command::Resources(a) => cmd_resources(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Trace(a) => cmd_trace(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
