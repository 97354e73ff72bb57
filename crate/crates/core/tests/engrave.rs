use afc_sim::engrave::{absorption_spectrum, comb_metrics, evolve, EngraveSchedule, Engraver, MediumState, PumpOffset};
use afc_sim::material::{lorentzian, shb_pattern, MaterialParams};
use afc_sim::spectrum::{fm_sidebands, FmParams, LineSpectrum};
use afc_sim::FrequencyGrid;
use proptest::prelude::*;

const NU_M: f64 = 626e3;

fn comb(deviation: f64) -> LineSpectrum {
    let p = FmParams::new(NU_M, deviation).unwrap();
    fm_sidebands(&p, p.default_truncation()).unwrap()
}

/// Rate scale giving a `deviation` comb the per-line pumping of the default
/// 465 MHz comb.
fn rate_for(deviation: f64) -> f64 {
    1.2e4 * deviation / 465e6
}

fn analysis(band: f64) -> FrequencyGrid {
    FrequencyGrid::spanning(-0.8 * band, 0.8 * band, NU_M / 50.0).unwrap()
}

fn comb_contrast(m: &MaterialParams, deviation: f64, class_df: f64, sched: &EngraveSchedule) -> f64 {
    let pump = comb(deviation);
    let grid = MediumState::grid_for(&pump, m, class_df, 2e6).unwrap();
    let out = evolve(&MediumState::unpumped(grid), &pump, sched, m).unwrap();
    let a = analysis(deviation);
    comb_metrics(&absorption_spectrum(&out, &a, m), &a, NU_M)
        .unwrap()
        .contrast
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn populations_are_conserved(
        rate in 1.0f64..2e3,
        pump_ms in 0.5f64..60.0,
        wait_ms in 0.0f64..10.0,
        cycles in 1usize..4,
        drift in -2e7f64..2e7,
        deviation in 0.0f64..3e6,
    ) {
        let m = MaterialParams::default();
        let pump = comb(deviation);
        let grid = MediumState::grid_for(&pump, &m, 25e3, 1e6).unwrap();
        let sched = EngraveSchedule {
            pump_duration: pump_ms * 1e-3,
            wait_duration: wait_ms * 1e-3,
            cycles,
            drift_rate: drift,
            pump_rate: rate,
            ..EngraveSchedule::default()
        };
        let total = sched.cycle_duration() * cycles as f64;
        let e = Engraver::new(&grid, &pump, &m, rate, (drift * total).abs()).unwrap();
        let mut s = MediumState::unpumped(grid);
        let mut t = 0.0;
        for c in 0..cycles {
            let offset = PumpOffset::Ramp { start: drift * t, rate: drift };
            e.cycle(&mut s, &sched, &offset, c + 1 == cycles).unwrap();
            t += sched.cycle_duration();
            prop_assert!(s.conservation_error() < 1e-9);
            let shelved = s.pop_shelved();
            for ((g1, g2), sh) in s.pop_g1.iter().zip(&s.pop_g2).zip(&shelved) {
                for v in [g1, g2, sh] {
                    prop_assert!((-1e-12..=1.0 + 1e-12).contains(v));
                }
            }
        }
    }
}

#[test]
fn weak_burn_matches_convolved_pattern() {
    let m = MaterialParams::default();
    let pump = LineSpectrum::monochromatic(0.0);
    let grid = MediumState::grid_for(&pump, &m, 5e3, 3e6).unwrap();
    let e = Engraver::new(&grid, &pump, &m, 0.1, 0.0).unwrap();
    let mut s = MediumState::unpumped(grid);
    e.pump_window(&mut s, 50e-3, &PumpOffset::Constant(0.0)).unwrap();
    // Let the excited and bottleneck pools empty back into the ground levels.
    e.dark(&mut s, 0.3).unwrap();

    let pat = shb_pattern(&m);
    let width = m.pump_linewidth() + m.gamma_h;
    let oracle = |nu: f64| {
        let holes: f64 = pat.holes.iter().map(|&(o, w)| w * lorentzian(nu - o, width)).sum();
        let anti: f64 = pat.antiholes.iter().map(|&(o, w)| w * lorentzian(nu - o, width)).sum();
        anti - holes
    };
    let offsets: Vec<f64> = pat.holes.iter().chain(&pat.antiholes).map(|h| h.0).collect();
    let change = |nu: f64| {
        let g = FrequencyGrid::new(nu, 1.0, 2).unwrap();
        let d = absorption_spectrum(&s, &g, &m);
        0.5 * (d[0] + d[1]) - m.d_peak
    };
    let scale = change(0.0) / oracle(0.0);
    assert!(scale > 0.0);
    for o in offsets {
        let got = change(o);
        let want = scale * oracle(o);
        assert!(((got - want) / want).abs() < 0.02, "offset {o}: {got} vs {want}");
    }
}

fn shift_estimate(a: &[f64], b_at: impl Fn(f64) -> Vec<f64>, guess: f64, df: f64) -> f64 {
    let mut best = (f64::MAX, guess);
    for j in -40..=40 {
        let s = guess + j as f64 * df / 10.0;
        let b = b_at(s);
        let err: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
        if err < best.0 {
            best = (err, s);
        }
    }
    best.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn shifting_the_pump_shifts_the_spectrum(delta in -1.5e6f64..1.5e6) {
        let m = MaterialParams::default();
        let deviation = 3e6;
        let pump = comb(deviation);
        let df = 12.5e3;
        let grid = FrequencyGrid::spanning(-deviation - m.delta_g - m.delta_e - 4e6, deviation + 4e6, df).unwrap();
        let sched = EngraveSchedule { cycles: 3, pump_rate: rate_for(deviation), ..EngraveSchedule::default() };
        let base = evolve(&MediumState::unpumped(grid), &pump, &sched, &m).unwrap();
        let moved = evolve(&MediumState::unpumped(grid), &pump.shifted(delta), &sched, &m).unwrap();
        let probe = FrequencyGrid::spanning(-2.5e6, 2.5e6, df).unwrap();
        let d0 = absorption_spectrum(&base, &probe, &m);
        let at = |s: f64| {
            let g = FrequencyGrid::new(probe.f0 + s, probe.df, probe.n).unwrap();
            absorption_spectrum(&moved, &g, &m)
        };
        let est = shift_estimate(&d0, at, delta, df);
        prop_assert!((est - delta).abs() < df, "shift {delta}, estimated {est}");
    }
}

#[test]
fn longer_pumping_only_deepens_holes() {
    let m = MaterialParams::default();
    let probe = FrequencyGrid::new(0.0, 1.0, 2).unwrap();
    let pump = LineSpectrum::monochromatic(0.0);
    let grid = MediumState::grid_for(&pump, &m, 12.5e3, 1e6).unwrap();
    for rate in [1.0, 20.0, 80.0, 400.0] {
        let mut last = f64::MAX;
        for ms in [1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0] {
            let sched = EngraveSchedule {
                pump_duration: ms * 1e-3,
                cycles: 1,
                pump_rate: rate,
                ..EngraveSchedule::default()
            };
            let out = evolve(&MediumState::unpumped(grid), &pump, &sched, &m).unwrap();
            let d = absorption_spectrum(&out, &probe, &m)[0];
            assert!(d <= last + 1e-12, "rate {rate}, {ms} ms: {d} > {last}");
            last = d;
        }
        assert!(last < m.d_peak);
    }
}

fn linewidth_series(widths: &[f64], dose: f64) -> Vec<f64> {
    let deviation = 5e6;
    let sched = EngraveSchedule {
        cycles: 3,
        pump_rate: dose * rate_for(deviation),
        ..EngraveSchedule::default()
    };
    widths
        .iter()
        .map(|&g| {
            let m = MaterialParams {
                gamma_laser: g,
                ..MaterialParams::default()
            };
            comb_contrast(&m, deviation, 2.5e3, &sched)
        })
        .collect()
}

#[test]
fn laser_linewidth_washes_out_the_comb() {
    // Saturating dose: every width burns its teeth to steady state.
    let c = linewidth_series(&[0.0, NU_M / 3.0, 2.0 * NU_M / 3.0, NU_M], 20.0);
    assert!(c.windows(2).all(|w| w[1] < w[0]), "{c:?}");
    // Default dose, once the line is broad enough to fill the teeth.
    let c = linewidth_series(&[NU_M / 3.0, 2.0 * NU_M / 3.0, NU_M], 1.0);
    assert!(c.windows(2).all(|w| w[1] < w[0]), "{c:?}");
}

#[test]
fn drift_beyond_a_tooth_erases_the_comb() {
    let m = MaterialParams::default();
    let deviation = 5e6;
    let still = EngraveSchedule {
        pump_rate: rate_for(deviation),
        ..EngraveSchedule::default()
    };
    // 15 MHz/s moves the pump by more than a comb period every cycle.
    let drifting = EngraveSchedule {
        drift_rate: 15e6,
        ..still
    };
    assert!(drifting.drift_rate * drifting.cycle_duration() > NU_M);
    let c0 = comb_contrast(&m, deviation, 12.5e3, &still);
    let c1 = comb_contrast(&m, deviation, 12.5e3, &drifting);
    assert!(c0 > 0.05, "{c0}");
    assert!(c1 < 0.1 * c0, "{c1} vs {c0}");
}
