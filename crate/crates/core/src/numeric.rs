//! Quantized complex arithmetic shared by every simulated unit.
//!
//! Samples are either fixed-point (`FxComplex`, raw integers in units of
//! `2^-frac_bits`) or exact `f64` complex values. Fixed-point operations
//! round half-to-even and saturate; any saturation sets a sticky flag on the
//! owning [`Kernel`].

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIT: &str = "numeric_kernel";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Rounding {
    #[default]
    HalfEven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Overflow {
    #[default]
    Saturate,
}

/// Signed fixed-point word format, `total_bits` wide with `frac_bits`
/// fractional bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FxFormat {
    total_bits: u32,
    frac_bits: u32,
    rounding: Rounding,
    overflow: Overflow,
}

impl FxFormat {
    /// Q1.15, the default 16-bit format.
    pub const Q15: FxFormat = FxFormat {
        total_bits: 16,
        frac_bits: 15,
        rounding: Rounding::HalfEven,
        overflow: Overflow::Saturate,
    };

    pub fn new(total_bits: u32, frac_bits: u32) -> Result<Self> {
        if !(2..=32).contains(&total_bits) {
            return Err(Error::config(
                UNIT,
                format!("word width {total_bits} outside 2..=32"),
            ));
        }
        if frac_bits >= total_bits {
            return Err(Error::config(
                UNIT,
                format!("{frac_bits} fractional bits do not fit a {total_bits}-bit word"),
            ));
        }
        Ok(FxFormat {
            total_bits,
            frac_bits,
            rounding: Rounding::HalfEven,
            overflow: Overflow::Saturate,
        })
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    pub fn overflow(&self) -> Overflow {
        self.overflow
    }

    pub fn max_raw(&self) -> i64 {
        (1i64 << (self.total_bits - 1)) - 1
    }

    pub fn min_raw(&self) -> i64 {
        -(1i64 << (self.total_bits - 1))
    }

    /// Weight of one LSB, `2^-frac_bits`.
    pub fn lsb(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 * self.lsb()
    }

    pub fn min_value(&self) -> f64 {
        self.min_raw() as f64 * self.lsb()
    }

    pub fn to_real(&self, raw: i32) -> f64 {
        raw as f64 * self.lsb()
    }

    /// Clamps a wide intermediate to the word range. The flag is true when
    /// clamping changed the value.
    pub fn saturate(&self, wide: i128) -> (i32, bool) {
        let (lo, hi) = (self.min_raw() as i128, self.max_raw() as i128);
        if wide > hi {
            (hi as i32, true)
        } else if wide < lo {
            (lo as i32, true)
        } else {
            (wide as i32, false)
        }
    }

    /// Nearest representable raw value (ties to even), saturating at the
    /// range endpoints. NaN maps to zero and counts as an overflow.
    pub fn quantize(&self, value: f64) -> (i32, bool) {
        if value.is_nan() {
            return (0, true);
        }
        let scaled = (value * (self.frac_bits as f64).exp2()).round_ties_even();
        if scaled > self.max_raw() as f64 {
            (self.max_raw() as i32, true)
        } else if scaled < self.min_raw() as f64 {
            (self.min_raw() as i32, true)
        } else {
            (scaled as i32, false)
        }
    }

    /// Quantizes without saturating: values whose rounded raw value falls
    /// outside the word range are returned as `None`.
    pub fn quantize_checked(&self, value: f64) -> Option<i32> {
        match self.quantize(value) {
            (raw, false) => Some(raw),
            _ => None,
        }
    }
}

impl Default for FxFormat {
    fn default() -> Self {
        FxFormat::Q15
    }
}

impl fmt::Display for FxFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Q{}.{}",
            self.total_bits - self.frac_bits,
            self.frac_bits
        )
    }
}

/// Arithmetic shift right by `shift` bits, rounding ties to even.
pub fn round_shift_half_even(value: i128, shift: u32) -> i128 {
    if shift == 0 {
        return value;
    }
    let floor = value >> shift;
    let rem = value - (floor << shift);
    let half = 1i128 << (shift - 1);
    if rem > half || (rem == half && floor & 1 == 1) {
        floor + 1
    } else {
        floor
    }
}

/// Fixed-point complex sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxComplex {
    pub re_raw: i32,
    pub im_raw: i32,
    pub format: FxFormat,
}

impl FxComplex {
    pub fn zero(format: FxFormat) -> Self {
        FxComplex {
            re_raw: 0,
            im_raw: 0,
            format,
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.format.to_real(self.re_raw),
            self.format.to_real(self.im_raw),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NumericMode {
    Fixed(FxFormat),
    /// Plain `f64` arithmetic; nothing is quantized.
    ExactFloat,
}

impl NumericMode {
    pub fn format(&self) -> Option<FxFormat> {
        match self {
            NumericMode::Fixed(f) => Some(*f),
            NumericMode::ExactFloat => None,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, NumericMode::Fixed(_))
    }
}

impl Default for NumericMode {
    fn default() -> Self {
        NumericMode::Fixed(FxFormat::Q15)
    }
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericMode::Fixed(fmt) => write!(f, "fixed {fmt}"),
            NumericMode::ExactFloat => f.write_str("exact float"),
        }
    }
}

/// A value travelling through the simulated datapath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample {
    Fixed(FxComplex),
    Float(Complex64),
}

impl Sample {
    pub fn to_complex(&self) -> Complex64 {
        match self {
            Sample::Fixed(x) => x.to_complex(),
            Sample::Float(z) => *z,
        }
    }

    pub fn zero(mode: NumericMode) -> Self {
        match mode {
            NumericMode::Fixed(f) => Sample::Fixed(FxComplex::zero(f)),
            NumericMode::ExactFloat => Sample::Float(Complex64::new(0.0, 0.0)),
        }
    }

    pub fn as_fixed(&self) -> Option<&FxComplex> {
        match self {
            Sample::Fixed(x) => Some(x),
            Sample::Float(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AddOp {
    Add,
    Sub,
}

/// Arithmetic unit bound to one numeric mode, carrying the sticky overflow
/// flag for the simulator instance that owns it.
#[derive(Debug, Clone)]
pub struct Kernel {
    mode: NumericMode,
    overflow: bool,
}

impl Kernel {
    pub fn new(mode: NumericMode) -> Self {
        Kernel {
            mode,
            overflow: false,
        }
    }

    pub fn mode(&self) -> NumericMode {
        self.mode
    }

    /// True once any operation on this kernel has saturated.
    pub fn overflow(&self) -> bool {
        self.overflow
    }

    pub fn clear_overflow(&mut self) {
        self.overflow = false;
    }

    /// Quantizes one real channel under the kernel's format, saturating.
    /// In exact-float mode there is no raw representation, so `None`.
    pub fn quantize_channel(&mut self, value: f64) -> Option<i32> {
        let format = self.mode.format()?;
        let (raw, sat) = format.quantize(value);
        self.overflow |= sat;
        Some(raw)
    }

    /// Converts an external complex value into a datapath sample, saturating.
    pub fn quantize(&mut self, z: Complex64) -> Sample {
        match self.mode {
            NumericMode::Fixed(format) => {
                let (re_raw, s1) = format.quantize(z.re);
                let (im_raw, s2) = format.quantize(z.im);
                self.overflow |= s1 | s2;
                Sample::Fixed(FxComplex {
                    re_raw,
                    im_raw,
                    format,
                })
            }
            NumericMode::ExactFloat => Sample::Float(z),
        }
    }

    /// Like [`Kernel::quantize`] but refuses values outside the word range
    /// instead of clipping them.
    pub fn quantize_strict(&self, z: Complex64) -> Option<Sample> {
        match self.mode {
            NumericMode::Fixed(format) => Some(Sample::Fixed(FxComplex {
                re_raw: format.quantize_checked(z.re)?,
                im_raw: format.quantize_checked(z.im)?,
                format,
            })),
            NumericMode::ExactFloat => {
                (z.re.is_finite() && z.im.is_finite()).then_some(Sample::Float(z))
            }
        }
    }

    pub fn add(&mut self, a: Sample, b: Sample) -> Result<Sample> {
        self.add_sub(a, b, AddOp::Add, false)
    }

    pub fn sub(&mut self, a: Sample, b: Sample) -> Result<Sample> {
        self.add_sub(a, b, AddOp::Sub, false)
    }

    /// `(a + b) / 2`, rounded once from the full-width sum.
    pub fn add_halved(&mut self, a: Sample, b: Sample) -> Result<Sample> {
        self.add_sub(a, b, AddOp::Add, true)
    }

    /// `(a - b) / 2`, rounded once from the full-width difference.
    pub fn sub_halved(&mut self, a: Sample, b: Sample) -> Result<Sample> {
        self.add_sub(a, b, AddOp::Sub, true)
    }

    fn add_sub(&mut self, a: Sample, b: Sample, op: AddOp, halve: bool) -> Result<Sample> {
        match (a, b) {
            (Sample::Fixed(a), Sample::Fixed(b)) => {
                let format = common_format(&a, &b)?;
                let shift = u32::from(halve);
                let combine = |x: i32, y: i32| {
                    let wide = match op {
                        AddOp::Add => x as i128 + y as i128,
                        AddOp::Sub => x as i128 - y as i128,
                    };
                    format.saturate(round_shift_half_even(wide, shift))
                };
                let (re_raw, s1) = combine(a.re_raw, b.re_raw);
                let (im_raw, s2) = combine(a.im_raw, b.im_raw);
                self.overflow |= s1 | s2;
                Ok(Sample::Fixed(FxComplex {
                    re_raw,
                    im_raw,
                    format,
                }))
            }
            (Sample::Float(a), Sample::Float(b)) => {
                let r = match op {
                    AddOp::Add => a + b,
                    AddOp::Sub => a - b,
                };
                Ok(Sample::Float(if halve { r * 0.5 } else { r }))
            }
            _ => Err(mixed_modes()),
        }
    }

    /// Complex product. Fixed-point products are formed exactly in wide
    /// integers and rounded once per component.
    pub fn mul(&mut self, a: Sample, b: Sample) -> Result<Sample> {
        match (a, b) {
            (Sample::Fixed(a), Sample::Fixed(b)) => {
                let format = common_format(&a, &b)?;
                let (ar, ai) = (a.re_raw as i128, a.im_raw as i128);
                let (br, bi) = (b.re_raw as i128, b.im_raw as i128);
                let shift = format.frac_bits;
                let (re_raw, s1) = format.saturate(round_shift_half_even(ar * br - ai * bi, shift));
                let (im_raw, s2) = format.saturate(round_shift_half_even(ar * bi + ai * br, shift));
                self.overflow |= s1 | s2;
                Ok(Sample::Fixed(FxComplex {
                    re_raw,
                    im_raw,
                    format,
                }))
            }
            (Sample::Float(a), Sample::Float(b)) => Ok(Sample::Float(a * b)),
            _ => Err(mixed_modes()),
        }
    }
}

fn common_format(a: &FxComplex, b: &FxComplex) -> Result<FxFormat> {
    if a.format != b.format {
        return Err(Error::config(
            UNIT,
            format!("operand formats differ: {} vs {}", a.format, b.format),
        ));
    }
    Ok(a.format)
}

fn mixed_modes() -> Error {
    Error::config(UNIT, "cannot combine fixed-point and float samples")
}
