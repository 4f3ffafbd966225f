use fftsim_core::frame_io::{parse_pgm, Normalize};
use fftsim_core::oracle::{compare_frames, dft2d_oracle, dft2d_oracle_row_column};
use fftsim_core::stimulus::{random_frame, rng};
use fftsim_core::{run_2d, run_stream, Fft1dProcessor, Frame2d, FxFormat, NumericMode, SimConfig};
use num_complex::Complex64;

fn float() -> SimConfig {
    SimConfig::new(NumericMode::ExactFloat)
}

#[test]
fn run_2d_equals_row_then_column_1d_runs() {
    for n in [2usize, 4, 8, 16] {
        let img = random_frame(&mut rng(n as u64), n).unwrap();
        let sim = run_2d(&img, float()).unwrap().spectra.remove(0);

        let mut p = Fft1dProcessor::new(n, float()).unwrap();
        let mut mid = Frame2d::zeros(n).unwrap();
        for r in 0..n {
            let (row, _) = p.run_frame(img.row(r)).unwrap();
            for (c, z) in row.into_iter().enumerate() {
                mid.set(r, c, z);
            }
        }
        let mut composed = Frame2d::zeros(n).unwrap();
        for c in 0..n {
            let (col, _) = p.run_frame(&mid.column(c)).unwrap();
            for (r, z) in col.into_iter().enumerate() {
                composed.set(r, c, z);
            }
        }

        let direct = dft2d_oracle(&img);
        let m1 = compare_frames(&sim, &composed, 1.0).unwrap();
        let m2 = compare_frames(&sim, &direct, 1.0).unwrap();
        let m3 = compare_frames(&dft2d_oracle_row_column(&img), &direct, 1.0).unwrap();
        assert!(m1.relative_max() <= 1e-9, "n={n}: {m1:?}");
        assert!(m2.relative_max() <= 1e-9, "n={n}: {m2:?}");
        assert!(m3.relative_max() <= 1e-10, "n={n}: {m3:?}");
    }
}

#[test]
fn sel_tracks_frames_written_modulo_two() {
    let n = 4;
    let period = 4 * 2;
    let mut r = rng(11);
    let frames: Vec<_> = (0..5).map(|_| random_frame(&mut r, n).unwrap()).collect();
    let out = run_stream(&frames, float()).unwrap();
    // At the start of period k, k frames have passed through block 1.
    for k in 0..=frames.len() {
        let row = &out.trace[k * period];
        assert_eq!(row.sel, k % 2 == 1, "period {k}");
    }
    assert_eq!(out.sel_toggles, frames.len() as u64);
    assert_eq!(out.block1_done_pulses(), frames.len() * n);
    assert_eq!(out.block2_done_pulses(), frames.len() * n);
}

#[test]
fn blocks_overlap_in_steady_state() {
    let n = 8;
    let mut r = rng(12);
    let frames: Vec<_> = (0..4).map(|_| random_frame(&mut r, n).unwrap()).collect();
    let out = run_stream(&frames, float()).unwrap();
    let period = 24;
    let busy_both = out
        .trace
        .iter()
        .filter(|row| row.block1.is_some() && row.block2.is_some())
        .count();
    assert_eq!(busy_both, 3 * period);
}

#[test]
fn two_point_trace_only_stage_zero() {
    let img = random_frame(&mut rng(2), 2).unwrap();
    let out = run_stream(&[img.clone(), img], float()).unwrap();
    for row in &out.trace {
        for s in [row.block1, row.block2].into_iter().flatten() {
            assert_eq!(s.stage, 0);
            assert!(s.done);
        }
    }
}

#[test]
fn pgm_image_through_fixed_pipeline() {
    let n = 8;
    let mut text = format!("P2\n{n} {n}\n255\n");
    for i in 0..n * n {
        text.push_str(&format!("{} ", (i * 37) % 256));
    }
    let img = parse_pgm(text.as_bytes(), Normalize::UnitRange).unwrap();
    let cfg = SimConfig::new(NumericMode::Fixed(FxFormat::Q15));
    let out = run_2d(&img, cfg).unwrap();
    assert!(!out.overflow);
    let m = compare_frames(&out.spectra[0], &dft2d_oracle(&img), 1.0 / 64.0).unwrap();
    assert!(m.snr_db > 60.0, "{m:?}");
}

#[test]
fn unscaled_fixed_mode_saturates_and_flags() {
    let n = 8;
    let img = Frame2d::from_fn(n, |_, _| Complex64::new(0.5, 0.0)).unwrap();
    let cfg = SimConfig::new(NumericMode::Fixed(FxFormat::Q15)).with_scaling(false);
    let out = run_2d(&img, cfg).unwrap();
    assert!(out.overflow);
}

#[test]
fn wider_format_improves_snr() {
    let n = 8;
    let img = random_frame(&mut rng(3), n).unwrap();
    let oracle = dft2d_oracle(&img);
    let snr = |fmt: FxFormat| {
        let out = run_2d(&img, SimConfig::new(NumericMode::Fixed(fmt))).unwrap();
        compare_frames(&out.spectra[0], &oracle, 1.0 / 64.0)
            .unwrap()
            .snr_db
    };
    let q15 = snr(FxFormat::Q15);
    let q23 = snr(FxFormat::new(24, 23).unwrap());
    assert!(q23 > q15 + 30.0, "Q1.23 {q23} dB vs Q1.15 {q15} dB");
}

#[test]
fn out_of_range_input_is_refused_not_clipped() {
    let mut img = Frame2d::zeros(4).unwrap();
    img.set(1, 1, Complex64::new(1.25, 0.0));
    let cfg = SimConfig::new(NumericMode::Fixed(FxFormat::Q15));
    assert!(matches!(
        run_2d(&img, cfg),
        Err(fftsim_core::Error::Input { .. })
    ));
}
