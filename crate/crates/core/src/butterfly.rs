//! Radix-2 butterfly unit and its twiddle-factor ROM.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_pow2, Result};
use crate::numeric::{Kernel, NumericMode, Sample};

const UNIT: &str = "butterfly";

/// Precomputed `W_n^k = exp(-j 2 pi k / n)` for `k in 0..n/2`, quantized to
/// the datapath format.
#[derive(Debug, Clone)]
pub struct TwiddleRom {
    n: usize,
    entries: Vec<Sample>,
}

impl TwiddleRom {
    pub fn build(n: usize, mode: NumericMode) -> Result<Self> {
        check_pow2(UNIT, n, 2)?;
        // ROM contents are constants: saturating 1+0j to the largest code is
        // expected and is not reported on any runtime overflow flag.
        let mut rom_kernel = Kernel::new(mode);
        let entries = (0..n / 2)
            .map(|k| rom_kernel.quantize(unit_root(k, n)))
            .collect();
        Ok(TwiddleRom { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, k: usize) -> Sample {
        self.entries[k]
    }

    pub fn entries(&self) -> &[Sample] {
        &self.entries
    }
}

/// `exp(-j 2 pi k / n)` with the quarter-turn points pinned exactly.
fn unit_root(k: usize, n: usize) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if 4 * k == n {
        return Complex64::new(0.0, -1.0);
    }
    let (sin, cos) = (-2.0 * PI * k as f64 / n as f64).sin_cos();
    Complex64::new(cos, sin)
}

/// One butterfly evaluation: `t = w * b_even`, returns
/// `(a_odd + t, a_odd - t)`, each halved when `scale_by_half` is set.
pub fn butterfly_exec(
    kernel: &mut Kernel,
    a_odd: Sample,
    b_even: Sample,
    w: Sample,
    scale_by_half: bool,
) -> Result<(Sample, Sample)> {
    let t = kernel.mul(w, b_even)?;
    if scale_by_half {
        Ok((kernel.add_halved(a_odd, t)?, kernel.sub_halved(a_odd, t)?))
    } else {
        Ok((kernel.add(a_odd, t)?, kernel.sub(a_odd, t)?))
    }
}

/// One physical butterfly unit. Lanes are stateless apart from an activity
/// counter used to check how the control unit reuses them.
#[derive(Debug, Clone, Default)]
pub struct ButterflyLane {
    executions: u64,
}

impl ButterflyLane {
    pub fn exec(
        &mut self,
        kernel: &mut Kernel,
        a_odd: Sample,
        b_even: Sample,
        w: Sample,
        scale_by_half: bool,
    ) -> Result<(Sample, Sample)> {
        self.executions += 1;
        butterfly_exec(kernel, a_odd, b_even, w, scale_by_half)
    }

    pub fn executions(&self) -> u64 {
        self.executions
    }
}
