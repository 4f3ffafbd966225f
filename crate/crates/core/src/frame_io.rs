//! Loading frames from PGM images or complex CSV and writing spectra back.
//!
//! Complex CSV layout: a first line holding the side `n`, followed by
//! `n * n` lines of `re,im` in row-major order. Values are written with
//! Rust's shortest round-trip formatting, so store/load is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft2d::Frame2d;
use crate::numeric::NumericMode;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrameError {
    #[error("frame is not square: {rows} rows x {cols} columns")]
    NonSquare { rows: usize, cols: usize },
    #[error("frame side {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("malformed {what} at line {line}: {msg}")]
    Malformed {
        what: &'static str,
        line: usize,
        msg: String,
    },
    #[error("pixel at row {row}, column {col} is {value}, above maxval {maxval}")]
    PixelOverMax {
        row: usize,
        col: usize,
        value: u32,
        maxval: u32,
    },
    #[error("sample at row {row}, column {col} ({value}) is outside the {mode} range")]
    OutOfRange {
        row: usize,
        col: usize,
        value: Complex64,
        mode: NumericMode,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Pgm,
    CsvComplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalize {
    /// PGM pixel `p` with maxval `M` becomes `p / M - 0.5`.
    #[default]
    UnitRange,
    /// Pixel values are used as-is.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSpec {
    pub path: PathBuf,
    pub format: FileFormat,
    pub normalize: Normalize,
}

impl InputSpec {
    pub fn new(path: impl Into<PathBuf>, format: FileFormat) -> Self {
        InputSpec {
            path: path.into(),
            format,
            normalize: Normalize::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumLayout {
    RealImagCsv,
    MagnitudeCsv,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn load_frame(spec: &InputSpec) -> Result<Frame2d> {
    let bytes = read(&spec.path)?;
    let frame = match spec.format {
        FileFormat::Pgm => parse_pgm(&bytes, spec.normalize)?,
        FileFormat::CsvComplex => {
            let text = std::str::from_utf8(&bytes).map_err(|e| FrameError::Malformed {
                what: "CSV",
                line: 0,
                msg: e.to_string(),
            })?;
            parse_csv_frame(text)?
        }
    };
    Ok(frame)
}

fn square_side(rows: usize, cols: usize) -> Result<usize, FrameError> {
    if rows != cols {
        return Err(FrameError::NonSquare { rows, cols });
    }
    if rows == 0 || !rows.is_power_of_two() {
        return Err(FrameError::NotPowerOfTwo(rows));
    }
    Ok(rows)
}

/// Splits a PGM header into tokens, skipping `#` comments. Returns the
/// tokens and the byte offset just past the single whitespace byte that
/// terminates the last one.
fn pgm_header(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize), FrameError> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    let mut line = 1;
    while tokens.len() < count {
        match bytes.get(i) {
            None => {
                return Err(FrameError::Malformed {
                    what: "PGM header",
                    line,
                    msg: format!("expected {count} header fields, found {}", tokens.len()),
                })
            }
            Some(b'#') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => {
                if *b == b'\n' {
                    line += 1;
                }
                i += 1;
            }
            Some(_) => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
                    i += 1;
                }
                tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
            }
        }
    }
    // One whitespace byte separates the header from P5 raster data.
    Ok((tokens, (i + 1).min(bytes.len())))
}

fn header_number(tok: &str, field: &str) -> Result<u32, FrameError> {
    tok.parse().map_err(|_| FrameError::Malformed {
        what: "PGM header",
        line: 1,
        msg: format!("{field} `{tok}` is not a non-negative integer"),
    })
}

/// Parses a P2 (ASCII) or P5 (binary) greymap.
pub fn parse_pgm(bytes: &[u8], normalize: Normalize) -> Result<Frame2d> {
    let (head, offset) = pgm_header(bytes, 4)?;
    let binary = match head[0].as_str() {
        "P2" => false,
        "P5" => true,
        other => {
            return Err(FrameError::Malformed {
                what: "PGM header",
                line: 1,
                msg: format!("magic `{other}` is neither P2 nor P5"),
            }
            .into())
        }
    };
    let cols = header_number(&head[1], "width")? as usize;
    let rows = header_number(&head[2], "height")? as usize;
    let maxval = header_number(&head[3], "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(FrameError::Malformed {
            what: "PGM header",
            line: 1,
            msg: format!("maxval {maxval} outside 1..=65535"),
        }
        .into());
    }
    let n = square_side(rows, cols)?;

    let pixels: Vec<u32> = if binary {
        let width = if maxval < 256 { 1 } else { 2 };
        let body = &bytes[offset..];
        if body.len() < n * n * width {
            return Err(FrameError::Malformed {
                what: "PGM raster",
                line: 0,
                msg: format!("{} bytes of pixel data, need {}", body.len(), n * n * width),
            }
            .into());
        }
        body.chunks_exact(width)
            .take(n * n)
            .map(|c| {
                if width == 1 {
                    c[0] as u32
                } else {
                    u32::from(c[0]) << 8 | u32::from(c[1])
                }
            })
            .collect()
    } else {
        let text = String::from_utf8_lossy(&bytes[offset..]);
        let mut out = Vec::with_capacity(n * n);
        for (ln, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("");
            for tok in content.split_ascii_whitespace() {
                let v = tok.parse().map_err(|_| FrameError::Malformed {
                    what: "PGM raster",
                    line: ln + 1,
                    msg: format!("pixel `{tok}` is not a non-negative integer"),
                })?;
                out.push(v);
            }
        }
        if out.len() < n * n {
            return Err(FrameError::Malformed {
                what: "PGM raster",
                line: 0,
                msg: format!("{} pixels, need {}", out.len(), n * n),
            }
            .into());
        }
        out.truncate(n * n);
        out
    };

    let mut data = Vec::with_capacity(n * n);
    for (i, &p) in pixels.iter().enumerate() {
        if p > maxval {
            return Err(FrameError::PixelOverMax {
                row: i / n,
                col: i % n,
                value: p,
                maxval,
            }
            .into());
        }
        let re = match normalize {
            Normalize::UnitRange => p as f64 / maxval as f64 - 0.5,
            Normalize::Raw => p as f64,
        };
        data.push(Complex64::new(re, 0.0));
    }
    Frame2d::new(n, data)
}

fn csv_line_value(line: &str, lineno: usize) -> Result<Complex64, FrameError> {
    let mut parts = line.split(',');
    let (Some(re), Some(im), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(FrameError::Malformed {
            what: "CSV",
            line: lineno,
            msg: format!("expected `re,im`, got `{line}`"),
        });
    };
    let parse = |s: &str| -> Result<f64, FrameError> {
        let v: f64 = s.trim().parse().map_err(|_| FrameError::Malformed {
            what: "CSV",
            line: lineno,
            msg: format!("`{s}` is not a number"),
        })?;
        if !v.is_finite() {
            return Err(FrameError::Malformed {
                what: "CSV",
                line: lineno,
                msg: format!("`{s}` is not finite"),
            });
        }
        Ok(v)
    };
    Ok(Complex64::new(parse(re)?, parse(im)?))
}

/// Reads the `n` header and then `expected(n)` sample lines.
fn parse_csv_samples(
    text: &str,
    expected: impl Fn(usize) -> usize,
) -> Result<(usize, Vec<Complex64>), FrameError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, head)) = lines.next() else {
        return Err(FrameError::Malformed {
            what: "CSV",
            line: 1,
            msg: "empty file".into(),
        });
    };
    let n: usize = head.trim().parse().map_err(|_| FrameError::Malformed {
        what: "CSV",
        line: 1,
        msg: format!("header `{head}` is not a length"),
    })?;
    let mut data = Vec::with_capacity(expected(n));
    for (i, line) in lines {
        data.push(csv_line_value(line.trim(), i + 1)?);
    }
    Ok((n, data))
}

pub fn parse_csv_frame(text: &str) -> Result<Frame2d> {
    let (n, data) = parse_csv_samples(text, |n| n * n)?;
    if data.len() != n * n {
        // A count that is a multiple of n describes the actual shape.
        if let Some(rows) = data.len().checked_div(n).filter(|_| data.len() % n == 0) {
            return Err(FrameError::NonSquare { rows, cols: n }.into());
        }
        return Err(FrameError::Malformed {
            what: "CSV",
            line: data.len() + 1,
            msg: format!("{} samples for side {n}, need {}", data.len(), n * n),
        }
        .into());
    }
    let n = square_side(n, n)?;
    Frame2d::new(n, data)
}

/// 1D variant of the complex CSV: header `n`, then `n` sample lines.
pub fn parse_csv_vector(text: &str) -> Result<Vec<Complex64>> {
    let (n, data) = parse_csv_samples(text, |n| n)?;
    if data.len() != n {
        return Err(FrameError::Malformed {
            what: "CSV",
            line: data.len() + 1,
            msg: format!("{} samples, header says {n}", data.len()),
        }
        .into());
    }
    Ok(data)
}

pub fn load_vector(path: &Path) -> Result<Vec<Complex64>> {
    let bytes = read(path)?;
    parse_csv_vector(&String::from_utf8_lossy(&bytes))
}

/// Checks that every sample fits the datapath word range, so a fixed-point
/// run never clips its input silently.
pub fn check_range(frame: &Frame2d, mode: NumericMode) -> Result<()> {
    let NumericMode::Fixed(format) = mode else {
        return Ok(());
    };
    let n = frame.n();
    for (i, z) in frame.data().iter().enumerate() {
        if format.quantize_checked(z.re).is_none() || format.quantize_checked(z.im).is_none() {
            return Err(FrameError::OutOfRange {
                row: i / n,
                col: i % n,
                value: *z,
                mode,
            }
            .into());
        }
    }
    Ok(())
}

fn real_imag_text(n: usize, data: &[Complex64]) -> String {
    let mut s = String::with_capacity(data.len() * 24);
    let _ = writeln!(s, "{n}");
    for z in data {
        let _ = writeln!(s, "{},{}", z.re, z.im);
    }
    s
}

/// `x` with nine significant digits, trailing zeros trimmed.
pub fn format_significant(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..DIGITS).contains(&exp) {
        return format!("{:.*e}", (DIGITS - 1) as usize, x);
    }
    let decimals = (DIGITS - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn spectrum_text(frame: &Frame2d, layout: SpectrumLayout) -> String {
    match layout {
        SpectrumLayout::RealImagCsv => real_imag_text(frame.n(), frame.data()),
        SpectrumLayout::MagnitudeCsv => {
            let mut s = String::new();
            for r in 0..frame.n() {
                let row: Vec<_> = frame
                    .row(r)
                    .iter()
                    .map(|z| format_significant(z.norm()))
                    .collect();
                let _ = writeln!(s, "{}", row.join(","));
            }
            s
        }
    }
}

pub fn store_spectrum(frame: &Frame2d, path: &Path, layout: SpectrumLayout) -> Result<()> {
    write(path, &spectrum_text(frame, layout))
}

pub fn store_vector(data: &[Complex64], path: &Path) -> Result<()> {
    write(path, &real_imag_text(data.len(), data))
}
