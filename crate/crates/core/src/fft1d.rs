//! One 1D FFT block: `n/2` butterfly lanes reused over `log2(n)` stages.
//!
//! Each call to [`Fft1dProcessor::step_cycle`] is one clock edge and runs a
//! whole stage. The control unit drives the stage bus (SB), the input select
//! line (ISL, low only while stage 0 reads the freshly loaded frame), and
//! the output select line (OSL, high only on the last stage). DONE follows
//! OSL. The routing network is a fixed decimation-in-time wiring per SB
//! value, so frames are loaded in bit-reversed order and come out natural.

use num_complex::Complex64;
use serde::Serialize;

use crate::butterfly::{ButterflyLane, TwiddleRom};
use crate::error::{check_pow2, Error, Result};
use crate::numeric::{Kernel, NumericMode, Sample};

const UNIT: &str = "fft1d_core";

/// Control-unit outputs observed during one clock cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ControlState {
    pub stage: u32,
    pub isl: bool,
    pub osl: bool,
    pub done: bool,
}

impl ControlState {
    fn for_stage(stage: u32, stages: u32) -> Self {
        let last = stage + 1 == stages;
        ControlState {
            stage,
            isl: stage != 0,
            osl: last,
            done: last,
        }
    }
}

/// Datapath configuration shared by every block of one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub mode: NumericMode,
    /// Halve both butterfly outputs on every stage.
    pub scale_by_half: bool,
}

impl SimConfig {
    /// Scaling defaults to on for fixed-point and off for exact float.
    pub fn new(mode: NumericMode) -> Self {
        SimConfig {
            mode,
            scale_by_half: mode.is_fixed(),
        }
    }

    pub fn with_scaling(mut self, scale_by_half: bool) -> Self {
        self.scale_by_half = scale_by_half;
        self
    }

    /// Factor by which one 1D pass of length `n` scales the plain DFT.
    pub fn pass_scale(&self, n: usize) -> f64 {
        if self.scale_by_half {
            1.0 / n as f64
        } else {
            1.0
        }
    }
}

/// Butterfly wiring for one stage: `(index_a, index_b, twiddle_index)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSchedule {
    pub stage: u32,
    pub pairs: Vec<(usize, usize, usize)>,
}

/// Decimation-in-time butterfly pairing for `stage` of an `n`-point frame.
pub fn routing_network(stage: u32, n: usize) -> Result<StageSchedule> {
    let stages = check_pow2(UNIT, n, 2)?;
    if stage >= stages {
        return Err(Error::config(
            UNIT,
            format!("stage {stage} out of range for {n}-point frame ({stages} stages)"),
        ));
    }
    let span = 1usize << stage;
    let stride = n >> (stage + 1);
    let pairs = (0..n)
        .filter(|a| a % (2 * span) < span)
        .map(|a| (a, a + span, (a % span) * stride))
        .collect();
    Ok(StageSchedule { stage, pairs })
}

/// Reverses the low `bits` bits of `i`.
pub fn bit_reverse(i: usize, bits: u32) -> usize {
    if bits == 0 {
        return 0;
    }
    i.reverse_bits() >> (usize::BITS - bits)
}

#[derive(Debug, Clone)]
pub struct Fft1dProcessor {
    n: usize,
    stages: u32,
    config: SimConfig,
    rom: TwiddleRom,
    schedules: Vec<StageSchedule>,
    lanes: Vec<ButterflyLane>,
    registers: Vec<Sample>,
    kernel: Kernel,
    stage: u32,
    loaded: bool,
    cycles: u64,
}

impl Fft1dProcessor {
    pub fn new(n: usize, config: SimConfig) -> Result<Self> {
        let stages = check_pow2(UNIT, n, 2)?;
        let rom = TwiddleRom::build(n, config.mode)?;
        let schedules = (0..stages)
            .map(|s| routing_network(s, n))
            .collect::<Result<_>>()?;
        Ok(Fft1dProcessor {
            n,
            stages,
            config,
            rom,
            schedules,
            lanes: vec![ButterflyLane::default(); n / 2],
            registers: vec![Sample::zero(config.mode); n],
            kernel: Kernel::new(config.mode),
            stage: 0,
            loaded: false,
            cycles: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stages(&self) -> u32 {
        self.stages
    }

    pub fn config(&self) -> SimConfig {
        self.config
    }

    /// Number of instantiated butterfly units.
    pub fn lane_count(&self) -> usize {
        self.lanes.len()
    }

    pub fn lanes(&self) -> &[ButterflyLane] {
        &self.lanes
    }

    pub fn rom(&self) -> &TwiddleRom {
        &self.rom
    }

    pub fn registers(&self) -> &[Sample] {
        &self.registers
    }

    /// True when no frame is loaded or in flight.
    pub fn is_idle(&self) -> bool {
        !self.loaded
    }

    pub fn overflow(&self) -> bool {
        self.kernel.overflow()
    }

    pub fn clear_overflow(&mut self) {
        self.kernel.clear_overflow();
    }

    /// Clock edges this block has executed.
    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    /// Control outputs the next clock edge will show.
    pub fn control(&self) -> ControlState {
        ControlState::for_stage(self.stage, self.stages)
    }

    /// Takes a frame from the external world, quantizing it into the
    /// register array in bit-reversed order. Values outside the word range
    /// are refused rather than clipped.
    pub fn load_frame(&mut self, input: &[Complex64]) -> Result<()> {
        self.check_load(input.len())?;
        let samples = input
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                self.kernel.quantize_strict(z).ok_or_else(|| {
                    Error::input(
                        UNIT,
                        format!(
                            "sample {i} ({z}) is not representable in {}",
                            self.config.mode
                        ),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.place(&samples);
        Ok(())
    }

    /// Loads samples that are already in the datapath format, e.g. a column
    /// read back from RAM.
    pub fn load_samples(&mut self, input: &[Sample]) -> Result<()> {
        self.check_load(input.len())?;
        for (i, s) in input.iter().enumerate() {
            let ok = match (s, self.config.mode) {
                (Sample::Fixed(x), NumericMode::Fixed(f)) => x.format == f,
                (Sample::Float(_), NumericMode::ExactFloat) => true,
                _ => false,
            };
            if !ok {
                return Err(Error::config(
                    UNIT,
                    format!(
                        "sample {i} does not match datapath mode {}",
                        self.config.mode
                    ),
                ));
            }
        }
        self.place(input);
        Ok(())
    }

    fn check_load(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::input(
                UNIT,
                format!("frame has {len} samples, block expects {}", self.n),
            ));
        }
        if self.loaded {
            return Err(Error::protocol(
                UNIT,
                format!("load while a frame is in flight (stage {})", self.stage),
            ));
        }
        Ok(())
    }

    fn place(&mut self, input: &[Sample]) {
        for (i, s) in input.iter().enumerate() {
            self.registers[bit_reverse(i, self.stages)] = *s;
        }
        self.stage = 0;
        self.loaded = true;
    }

    /// One clock edge: all `n/2` lanes fire on the current stage's pairs and
    /// write back in place. Returns the control outputs seen this cycle.
    pub fn step_cycle(&mut self) -> Result<ControlState> {
        if !self.loaded {
            return Err(Error::protocol(UNIT, "clocked with no frame loaded"));
        }
        let state = self.control();
        let schedule = &self.schedules[self.stage as usize];
        for (lane, &(ia, ib, tw)) in self.lanes.iter_mut().zip(&schedule.pairs) {
            let (odd, even) = lane.exec(
                &mut self.kernel,
                self.registers[ia],
                self.registers[ib],
                self.rom.get(tw),
                self.config.scale_by_half,
            )?;
            self.registers[ia] = odd;
            self.registers[ib] = even;
        }
        self.cycles += 1;
        if state.done {
            self.stage = 0;
            self.loaded = false;
        } else {
            self.stage += 1;
        }
        Ok(state)
    }

    /// Natural-order result of the last completed frame.
    pub fn output(&self) -> Result<&[Sample]> {
        if self.loaded {
            return Err(Error::protocol(UNIT, "output read before DONE"));
        }
        Ok(&self.registers)
    }

    /// Loads `input`, clocks until DONE and returns the spectrum together
    /// with the per-cycle control trace.
    pub fn run_frame(
        &mut self,
        input: &[Complex64],
    ) -> Result<(Vec<Complex64>, Vec<ControlState>)> {
        self.load_frame(input)?;
        let mut trace = Vec::with_capacity(self.stages as usize);
        loop {
            let state = self.step_cycle()?;
            trace.push(state);
            if state.done {
                break;
            }
        }
        let out = self.output()?.iter().map(Sample::to_complex).collect();
        Ok((out, trace))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::FxFormat;
    use proptest::prelude::*;

    fn float_proc(n: usize) -> Fft1dProcessor {
        Fft1dProcessor::new(n, SimConfig::new(NumericMode::ExactFloat)).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Direct O(n^2) DFT, kept local so these unit tests do not lean on the
    /// crate's oracle module.
    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(m, v)| {
                        let ang = -2.0 * std::f64::consts::PI * ((m * k) % n) as f64 / n as f64;
                        v * Complex64::new(ang.cos(), ang.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn schedule_examples() {
        let s = routing_network(0, 8).unwrap();
        assert_eq!(s.pairs, vec![(0, 1, 0), (2, 3, 0), (4, 5, 0), (6, 7, 0)]);
        let s = routing_network(1, 8).unwrap();
        assert_eq!(s.pairs, vec![(0, 2, 0), (1, 3, 2), (4, 6, 0), (5, 7, 2)]);
        let s = routing_network(2, 8).unwrap();
        assert_eq!(s.pairs, vec![(0, 4, 0), (1, 5, 1), (2, 6, 2), (3, 7, 3)]);
        assert_eq!(routing_network(0, 2).unwrap().pairs, vec![(0, 1, 0)]);
        assert!(matches!(routing_network(3, 8), Err(Error::Config { .. })));
        assert!(matches!(routing_network(0, 6), Err(Error::Config { .. })));
    }

    #[test]
    fn schedules_partition_registers() {
        for log in 1..=10u32 {
            let n = 1usize << log;
            for stage in 0..log {
                let s = routing_network(stage, n).unwrap();
                assert_eq!(s.pairs.len(), n / 2);
                let mut seen = vec![false; n];
                for &(a, b, tw) in &s.pairs {
                    assert_eq!(b, a + (1 << stage));
                    assert!(a % (1 << (stage + 1)) < 1 << stage);
                    assert!(tw < n / 2);
                    for i in [a, b] {
                        assert!(!seen[i], "index {i} used twice at n={n} stage={stage}");
                        seen[i] = true;
                    }
                }
                assert!(seen.iter().all(|&x| x));
            }
        }
    }

    #[test]
    fn bit_reverse_examples() {
        let r: Vec<_> = (0..8).map(|i| bit_reverse(i, 3)).collect();
        assert_eq!(r, vec![0, 4, 2, 6, 1, 5, 3, 7]);
        let r: Vec<_> = (0..4).map(|i| bit_reverse(i, 2)).collect();
        assert_eq!(r, vec![0, 2, 1, 3]);
        assert_eq!(bit_reverse(1, 1), 1);
    }

    #[test]
    fn load_places_bit_reversed() {
        let mut p = float_proc(8);
        let x: Vec<_> = (0..8).map(|i| c(i as f64, 0.0)).collect();
        p.load_frame(&x).unwrap();
        let regs: Vec<f64> = p.registers().iter().map(|s| s.to_complex().re).collect();
        assert_eq!(regs, vec![0.0, 4.0, 2.0, 6.0, 1.0, 5.0, 3.0, 7.0]);
        assert_eq!(
            p.control(),
            ControlState {
                stage: 0,
                isl: false,
                osl: false,
                done: false
            }
        );

        let mut p = float_proc(2);
        p.load_frame(&[c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        let regs: Vec<f64> = p.registers().iter().map(|s| s.to_complex().re).collect();
        assert_eq!(regs, vec![1.0, 2.0]);

        let mut p = float_proc(4);
        p.load_frame(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)])
            .unwrap();
        let regs: Vec<f64> = p.registers().iter().map(|s| s.to_complex().re).collect();
        assert_eq!(regs, vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn load_errors() {
        let mut p = float_proc(8);
        assert!(matches!(
            p.load_frame(&[c(0.0, 0.0); 4]),
            Err(Error::Input { .. })
        ));
        p.load_frame(&[c(0.0, 0.0); 8]).unwrap();
        assert!(matches!(
            p.load_frame(&[c(0.0, 0.0); 8]),
            Err(Error::Protocol { .. })
        ));
        p.step_cycle().unwrap();
        assert!(matches!(
            p.load_frame(&[c(0.0, 0.0); 8]),
            Err(Error::Protocol { .. })
        ));
        assert!(matches!(p.output(), Err(Error::Protocol { .. })));

        let mut q =
            Fft1dProcessor::new(4, SimConfig::new(NumericMode::Fixed(FxFormat::Q15))).unwrap();
        let err = q.load_frame(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(err, Err(Error::Input { .. })));
        assert!(q.is_idle());
        let float = vec![Sample::Float(c(0.0, 0.0)); 4];
        assert!(matches!(q.load_samples(&float), Err(Error::Config { .. })));
    }

    #[test]
    fn step_without_frame_is_protocol_error() {
        let mut p = float_proc(4);
        assert!(matches!(p.step_cycle(), Err(Error::Protocol { .. })));
    }

    #[test]
    fn eight_point_control_sequence() {
        let mut p = float_proc(8);
        p.load_frame(&[c(1.0, 0.0); 8]).unwrap();
        let trace: Vec<_> = (0..3).map(|_| p.step_cycle().unwrap()).collect();
        let sb: Vec<_> = trace.iter().map(|s| s.stage).collect();
        assert_eq!(sb, vec![0, 1, 2]);
        assert_eq!(
            trace.iter().map(|s| s.isl).collect::<Vec<_>>(),
            vec![false, true, true]
        );
        assert_eq!(
            trace.iter().map(|s| s.osl).collect::<Vec<_>>(),
            vec![false, false, true]
        );
        assert_eq!(trace.iter().filter(|s| s.done).count(), 1);
        assert!(p.is_idle());
        assert_eq!(p.control().stage, 0);
        assert_eq!(p.cycles(), 3);
    }

    #[test]
    fn two_point_completes_in_one_cycle() {
        let mut p = float_proc(2);
        p.load_frame(&[c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        let s = p.step_cycle().unwrap();
        assert_eq!(
            s,
            ControlState {
                stage: 0,
                isl: false,
                osl: true,
                done: true
            }
        );
        let out: Vec<_> = p.output().unwrap().iter().map(Sample::to_complex).collect();
        assert_eq!(out, vec![c(3.0, 0.0), c(-1.0, 0.0)]);
    }

    #[test]
    fn lanes_reused_every_stage() {
        let mut p = float_proc(16);
        assert_eq!(p.lane_count(), 8);
        p.run_frame(&[c(1.0, 0.0); 16]).unwrap();
        p.run_frame(&[c(1.0, 0.0); 16]).unwrap();
        assert!(p.lanes().iter().all(|l| l.executions() == 8));
    }

    #[test]
    fn impulse_and_constant() {
        for n in [2, 4, 8, 16, 32] {
            let mut p = float_proc(n);
            let mut x = vec![c(0.0, 0.0); n];
            x[0] = c(1.0, 0.0);
            let (out, trace) = p.run_frame(&x).unwrap();
            assert_eq!(trace.len(), n.trailing_zeros() as usize);
            for y in &out {
                assert!((y - c(1.0, 0.0)).norm() < 1e-12);
            }
            let k = c(0.25, -0.5);
            let (out, _) = p.run_frame(&vec![k; n]).unwrap();
            assert!((out[0] - k * n as f64).norm() < 1e-12);
            for y in &out[1..] {
                assert!(y.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fixed_mode_scales_by_one_over_n() {
        let mode = NumericMode::Fixed(FxFormat::Q15);
        let mut p = Fft1dProcessor::new(8, SimConfig::new(mode)).unwrap();
        let (out, _) = p.run_frame(&[c(0.5, 0.0); 8]).unwrap();
        assert!((out[0] - c(0.5, 0.0)).norm() < 4.0 * FxFormat::Q15.lsb());
        assert!(!p.overflow());
    }

    fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b)), n)
    }

    fn max_norm(v: &[Complex64]) -> f64 {
        v.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn float_matches_naive_dft(log in 1u32..=6, seed_vec in vec_strategy(64)) {
            let n = 1usize << log;
            let x = &seed_vec[..n];
            let (out, _) = float_proc(n).run_frame(x).unwrap();
            let want = naive_dft(x);
            let err: Vec<_> = out.iter().zip(&want).map(|(a, b)| a - b).collect();
            prop_assert!(max_norm(&err) <= 1e-9 * max_norm(&want).max(1e-300));
        }

        #[test]
        fn float_linearity(x in vec_strategy(16), y in vec_strategy(16), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let mut p = float_proc(16);
            let mix: Vec<_> = x.iter().zip(&y).map(|(u, v)| u * a + v * b).collect();
            let (fx, _) = p.run_frame(&x).unwrap();
            let (fy, _) = p.run_frame(&y).unwrap();
            let (fm, _) = p.run_frame(&mix).unwrap();
            for k in 0..16 {
                prop_assert!((fm[k] - (fx[k] * a + fy[k] * b)).norm() <= 1e-9 * (1.0 + fm[k].norm()));
            }
        }

        #[test]
        fn float_parseval(x in vec_strategy(32)) {
            let (out, _) = float_proc(32).run_frame(&x).unwrap();
            let ein: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            let eout: f64 = out.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((eout - 32.0 * ein).abs() <= 1e-9 * eout.max(1e-300));
        }

        #[test]
        fn fixed_runs_bit_exact(x in prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5).prop_map(|(a, b)| c(a, b)), 32)) {
            let mode = NumericMode::Fixed(FxFormat::Q15);
            let mut p1 = Fft1dProcessor::new(32, SimConfig::new(mode)).unwrap();
            let mut p2 = Fft1dProcessor::new(32, SimConfig::new(mode)).unwrap();
            p1.run_frame(&x).unwrap();
            p2.run_frame(&x).unwrap();
            prop_assert_eq!(p1.output().unwrap(), p2.output().unwrap());
        }
    }
}
