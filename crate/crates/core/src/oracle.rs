//! Brute-force DFT references and error metrics.
//!
//! Nothing here shares code with the simulated datapath: twiddles are taken
//! straight from `cos`/`sin` of the reduced phase and sums are compensated.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft2d::Frame2d;

const UNIT: &str = "reference_oracle";

/// Neumaier-compensated complex accumulator.
#[derive(Default)]
struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

/// `exp(-j 2 pi m / n)` for `m` already reduced modulo `n`.
fn root(m: usize, n: usize) -> Complex64 {
    let phase = -2.0 * PI * (m as f64) / (n as f64);
    Complex64::new(phase.cos(), phase.sin())
}

/// Direct O(n^2) DFT. Any length is accepted.
pub fn dft_oracle(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut acc = CompensatedSum::default();
            for (m, v) in x.iter().enumerate() {
                acc.add(v * root((m * k) % n, n));
            }
            acc.value()
        })
        .collect()
}

/// Inverse via conjugation: `conj(DFT(conj(X))) / n`.
pub fn idft_oracle(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len() as f64;
    let conj: Vec<_> = x.iter().map(|z| z.conj()).collect();
    dft_oracle(&conj)
        .into_iter()
        .map(|z| z.conj() / n)
        .collect()
}

/// Direct O(n^4) double sum `F(u, v) = sum_x sum_y F(x, y) W^(ux) W^(vy)`,
/// with `x`, `u` the row index and `y`, `v` the column index.
pub fn dft2d_oracle(image: &Frame2d) -> Frame2d {
    let n = image.n();
    let data = (0..n * n)
        .map(|idx| {
            let (u, v) = (idx / n, idx % n);
            let mut acc = CompensatedSum::default();
            for x in 0..n {
                for y in 0..n {
                    let phase = ((u * x) % n + (v * y) % n) % n;
                    acc.add(image.get(x, y) * root(phase, n));
                }
            }
            acc.value()
        })
        .collect();
    Frame2d::new(n, data).expect("oracle preserves frame shape")
}

/// The same transform composed from 1D oracles over rows, then columns.
pub fn dft2d_oracle_row_column(image: &Frame2d) -> Frame2d {
    let n = image.n();
    let mut tmp = Frame2d::zeros(n).expect("valid side");
    for r in 0..n {
        for (c, z) in dft_oracle(image.row(r)).into_iter().enumerate() {
            tmp.set(r, c, z);
        }
    }
    let mut out = Frame2d::zeros(n).expect("valid side");
    for c in 0..n {
        for (r, z) in dft_oracle(&tmp.column(c)).into_iter().enumerate() {
            out.set(r, c, z);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub max_abs: f64,
    pub rms: f64,
    /// Reference power over error power. `+inf` only when `exact` is set.
    pub snr_db: f64,
    pub exact: bool,
    /// Largest magnitude in the scaled reference.
    pub peak: f64,
}

impl ErrorMetrics {
    /// `max_abs` relative to the reference peak.
    pub fn relative_max(&self) -> f64 {
        if self.peak > 0.0 {
            self.max_abs / self.peak
        } else {
            self.max_abs
        }
    }
}

/// Compares simulator output against `scale * oracle`.
pub fn compare(sim: &[Complex64], oracle: &[Complex64], scale: f64) -> Result<ErrorMetrics> {
    if sim.len() != oracle.len() {
        return Err(Error::input(
            UNIT,
            format!(
                "shape mismatch: {} simulated vs {} reference samples",
                sim.len(),
                oracle.len()
            ),
        ));
    }
    let mut max_abs = 0.0f64;
    let mut peak = 0.0f64;
    let mut err_pow = 0.0;
    let mut sig_pow = 0.0;
    for (s, o) in sim.iter().zip(oracle) {
        let r = o * scale;
        let e = (s - r).norm();
        max_abs = max_abs.max(e);
        peak = peak.max(r.norm());
        err_pow += e * e;
        sig_pow += r.norm_sqr();
    }
    let count = sim.len().max(1) as f64;
    let exact = err_pow == 0.0;
    let snr_db = if exact {
        f64::INFINITY
    } else {
        10.0 * (sig_pow / err_pow).log10()
    };
    Ok(ErrorMetrics {
        max_abs,
        rms: (err_pow / count).sqrt(),
        snr_db,
        exact,
        peak,
    })
}

pub fn compare_frames(sim: &Frame2d, oracle: &Frame2d, scale: f64) -> Result<ErrorMetrics> {
    if sim.n() != oracle.n() {
        return Err(Error::input(
            UNIT,
            format!("frame sides differ: {} vs {}", sim.n(), oracle.n()),
        ));
    }
    compare(sim.data(), oracle.data(), scale)
}
