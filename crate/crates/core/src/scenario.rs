//! Named experiments built from the library modules, writing their results
//! as artifacts under the configured output directory.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use crate::config::ScenarioConfig;
use crate::engrave::{absorption_spectrum, comb_metrics, evolve, CombMetrics, Engraver, MediumState};
use crate::io::{decimate, ArtifactWriter, Manifest, Plot};
use crate::material::MaterialParams;
use crate::propagation::{
    afc_efficiency_analytic, detector_filter, extract_echo, gaussian_pulse, propagate, transfer_from_absorption,
    EchoReport, IntensityTrace, ModeMetrics, PeakShape,
};
use crate::servo::{run_lock, DriftModel, LockConfig, LockRun};
use crate::spectrum::{carson_bandwidth, drive_to_deviation, rlc_gain, LineSpectrum, TimeSignal};
use crate::{Error, FrequencyGrid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    FmSpectrum,
    Engrave,
    Probe,
    Store,
    Servo,
    Full,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::FmSpectrum,
        Scenario::Engrave,
        Scenario::Probe,
        Scenario::Store,
        Scenario::Servo,
        Scenario::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::FmSpectrum => "fm-spectrum",
            Scenario::Engrave => "engrave",
            Scenario::Probe => "probe",
            Scenario::Store => "store",
            Scenario::Servo => "servo",
            Scenario::Full => "full",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::config("scenario", format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub summary: Value,
    pub manifest: Manifest,
}

/// Pump, material and engraved medium of one preparation.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub pump: LineSpectrum,
    pub material: MaterialParams,
    pub medium: MediumState,
}

impl Prepared {
    /// Half-width of the pump comb (Hz).
    pub fn band(&self) -> f64 {
        self.pump
            .max_offset()
            .unwrap_or(0.0)
            .max(-self.pump.min_offset().unwrap_or(0.0))
    }
}

/// Unpumped medium covering the configured pump.
pub fn blank_medium(cfg: &ScenarioConfig) -> Result<Prepared> {
    let pump = cfg.fm.pump()?;
    let material = cfg.medium();
    let grid = MediumState::grid_for(&pump, &material, cfg.grid.class_df_hz, cfg.grid.class_margin_hz)?;
    Ok(Prepared {
        pump,
        material,
        medium: MediumState::unpumped(grid),
    })
}

/// Free-running preparation following `cfg.schedule`.
pub fn prepare_medium(cfg: &ScenarioConfig) -> Result<Prepared> {
    let mut p = blank_medium(cfg)?;
    p.medium = evolve(&p.medium, &p.pump, &cfg.schedule, &p.material)?;
    Ok(p)
}

/// Chirped weak-probe readout: `d` sampled over `span` centred on the
/// carrier at the class spacing. A zero span gives the single centre point.
pub fn probe_transmission_sweep(cfg: &ScenarioConfig, p: &Prepared, span: f64) -> Result<Vec<(f64, f64)>> {
    if !(span >= 0.0) || span > 2.0 * cfg.grid.probe_half_span_hz {
        return Err(Error::param("span", "sweep must lie within the probe window"));
    }
    if span == 0.0 {
        let g = FrequencyGrid::new(0.0, cfg.grid.class_df_hz, 2)?;
        let d = absorption_spectrum(&p.medium, &g, &p.material);
        return Ok(vec![(0.0, 0.5 * (d[0] + d[1]))]);
    }
    let n = (span / cfg.grid.class_df_hz).round().max(1.0) as usize + 1;
    let g = FrequencyGrid::new(0.0, span / (n - 1) as f64, n)?;
    let d = absorption_spectrum(&p.medium, &g, &p.material);
    Ok(g.frequencies().zip(d).collect())
}

/// Peaks of a sweep that stand at least half the sweep's range above the
/// lowest point within one comb period.
pub fn resolved_peaks(sweep: &[(f64, f64)], nu_m: f64) -> usize {
    if sweep.len() < 3 {
        return 0;
    }
    let (lo, hi) = sweep
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let range = hi - lo;
    if range <= 1e-9 * hi.abs().max(1e-12) {
        return 0;
    }
    let df = sweep[1].0 - sweep[0].0;
    let w = ((0.25 * nu_m / df).round() as usize).max(1);
    let wide = ((0.5 * nu_m / df).round() as usize).max(1);
    (0..sweep.len())
        .filter(|&i| {
            let near = i.saturating_sub(w)..(i + w + 1).min(sweep.len());
            if sweep[near].iter().any(|q| q.1 > sweep[i].1) {
                return false;
            }
            // Plateaus count once, at their first sample.
            if i > 0 && sweep[i - 1].1 == sweep[i].1 {
                return false;
            }
            let floor = sweep[i.saturating_sub(wide)..(i + wide + 1).min(sweep.len())]
                .iter()
                .fold(f64::MAX, |a, q| a.min(q.1));
            sweep[i].1 - floor >= 0.5 * range
        })
        .count()
}

#[derive(Debug, Clone)]
pub struct Storage {
    pub probe_grid: FrequencyGrid,
    pub absorption: Vec<f64>,
    pub pulse_in: TimeSignal,
    pub pulse_out: TimeSignal,
    pub pulse: EchoReport,
    pub train: EchoReport,
    pub train_in: IntensityTrace,
    pub train_out: IntensityTrace,
    pub input_modes: ModeMetrics,
    pub echo_modes: ModeMetrics,
}

/// Sends a single pulse and the pulse train through the prepared medium.
pub fn storage(cfg: &ScenarioConfig, p: &Prepared) -> Result<Storage> {
    let s = &cfg.storage;
    let nu_m = cfg.fm.nu_m_hz;
    let probe_grid = cfg.grid.probe()?;
    let absorption = absorption_spectrum(&p.medium, &probe_grid, &p.material);
    let tf = transfer_from_absorption(&absorption, &probe_grid)?;
    let dt = s.train.dt;
    let samples = (s.record_s / dt).ceil() as usize;

    let pulse_in = gaussian_pulse(s.pulse_center_s, s.pulse_fwhm_s, s.record_s, dt)?;
    let pulse_out = propagate(&pulse_in, &tf)?;
    let half = 3.0 * s.pulse_fwhm_s;
    let pulse = extract_echo(
        &pulse_in,
        &pulse_out,
        (s.pulse_center_s - half, s.pulse_center_s + half),
        1.0 / nu_m,
        2.0 * half,
    )?;

    let train_sig = s.train.generate()?.zero_padded(samples);
    let train_outsig = propagate(&train_sig, &tf)?;
    let period = 1.0 / s.train.f_mod;
    let train = extract_echo(&train_sig, &train_outsig, (0.0, s.train.duration), 1.0 / nu_m, period)?;
    let train_in = detector_filter(&train_sig, s.detector_bandwidth_hz)?;
    let train_out = detector_filter(&train_outsig, s.detector_bandwidth_hz)?;
    let input_modes = train_in.mode_metrics(-0.5 * period, s.train.duration + 0.5 * period, period);
    let echo_modes = train_out.mode_metrics(train.echo_window.0, train.echo_window.1, period);
    Ok(Storage {
        probe_grid,
        absorption,
        pulse_in,
        pulse_out,
        pulse,
        train,
        train_in,
        train_out,
        input_modes,
        echo_modes,
    })
}

/// Lock co-simulation on the reduced-deviation comb.
pub fn lock_run(cfg: &ScenarioConfig, lock: &LockConfig) -> Result<LockRun> {
    let fm = cfg.fm.with_deviation(cfg.servo.deviation_hz);
    let pump = fm.pump()?;
    let material = cfg.medium();
    let grid = MediumState::grid_for(&pump, &material, cfg.grid.class_df_hz, cfg.grid.class_margin_hz)?;
    run_lock(MediumState::unpumped(grid), &pump, &material, lock)
}

/// Full-band preparation with the pump following a locked laser: each
/// window is pumped at the mean residual of the matching co-simulated
/// window.
pub fn locked_medium(cfg: &ScenarioConfig) -> Result<(LockRun, Prepared)> {
    let lock = LockConfig {
        cycles: cfg.schedule.cycles,
        ..cfg.servo.lock(cfg.seeds.drift)
    };
    let run = lock_run(cfg, &lock).map_err(|e| e.in_stage("servo"))?;
    if run.failed {
        return Err(Error::config("servo", "lock failed during the co-simulation").in_stage("servo"));
    }
    let shifts: Vec<f64> = run.window_detuning.iter().map(|d| d - run.comb_frame).collect();
    let mut p = blank_medium(cfg)?;
    let reach = shifts.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let engraver = Engraver::new(&p.medium.grid, &p.pump, &p.material, cfg.schedule.pump_rate, reach)
        .map_err(|e| e.in_stage("engrave"))?
        .with_step(cfg.schedule.step);
    engraver
        .run_windows(&mut p.medium, &cfg.schedule, &shifts)
        .map_err(|e| e.in_stage("engrave"))?;
    Ok((run, p))
}

#[derive(Debug, Clone, Serialize)]
struct CombSummary {
    contrast: f64,
    d_comb: f64,
    d0: f64,
    finesse: f64,
    periodic: bool,
}

impl From<CombMetrics> for CombSummary {
    fn from(c: CombMetrics) -> Self {
        CombSummary {
            contrast: c.contrast,
            d_comb: c.d_comb,
            d0: c.d0,
            finesse: c.finesse,
            periodic: c.periodic,
        }
    }
}

fn comb_of(cfg: &ScenarioConfig, p: &Prepared) -> Result<(FrequencyGrid, Vec<f64>, CombMetrics)> {
    let g = cfg.grid.analysis(p.band().max(5.0 * cfg.fm.nu_m_hz))?;
    let d = absorption_spectrum(&p.medium, &g, &p.material);
    let m = comb_metrics(&d, &g, cfg.fm.nu_m_hz)?;
    Ok((g, d, m))
}

fn spectrum_rows(g: &FrequencyGrid, d: &[f64]) -> Vec<[f64; 2]> {
    g.frequencies().zip(d).map(|(f, &v)| [f, v]).collect()
}

fn write_spectrum(w: &mut ArtifactWriter, stem: &str, title: &str, rows: &[[f64; 2]]) -> Result<()> {
    w.csv(&format!("{stem}.csv"), &["nu_hz", "od"], rows)?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    w.svg(
        &format!("{stem}.svg"),
        &Plot::new(title, "detuning (Hz)", "optical depth").line("d", decimate(&pts, 4000)),
    )?;
    Ok(())
}

fn write_trace(w: &mut ArtifactWriter, name: &str, tr: &IntensityTrace) -> Result<()> {
    w.csv(
        name,
        &["t_s", "intensity"],
        tr.values.iter().enumerate().map(|(i, &v)| [tr.time(i), v]),
    )?;
    Ok(())
}

fn write_trajectory(w: &mut ArtifactWriter, stem: &str, run: &LockRun) -> Result<()> {
    w.csv(
        &format!("{stem}.csv"),
        &["t_s", "detuning_hz", "error", "locked"],
        run.trajectory
            .iter()
            .map(|p| [p.t, p.detuning, p.error, if p.locked { 1.0 } else { 0.0 }]),
    )?;
    w.jsonl(&format!("{stem}_events.jsonl"), &run.events)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct LockSummary {
    enabled: bool,
    failed: bool,
    rms_detuning_hz: f64,
    final_detuning_hz: f64,
    comb_frame_hz: f64,
    contrast: f64,
    events: usize,
}

fn lock_summary(run: &LockRun, enabled: bool) -> LockSummary {
    LockSummary {
        enabled,
        failed: run.failed,
        rms_detuning_hz: run.rms_detuning,
        final_detuning_hz: run.servo.detuning,
        comb_frame_hz: run.comb_frame,
        contrast: run.metrics.map_or(0.0, |m| m.contrast),
        events: run.events.len(),
    }
}

/// Runs one scenario and writes its artifacts into `cfg.output_dir`.
pub fn run_scenario(scenario: Scenario, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    cfg.validate()?;
    let mut w = ArtifactWriter::new(&cfg.output_dir)?;
    let summary = match scenario {
        Scenario::FmSpectrum => fm_spectrum(cfg, &mut w),
        Scenario::Engrave => engrave(cfg, &mut w),
        Scenario::Probe => probe(cfg, &mut w),
        Scenario::Store => store(cfg, &mut w),
        Scenario::Servo => servo(cfg, &mut w),
        Scenario::Full => full(cfg, &mut w),
    }?;
    w.json("config.json", cfg)?;
    w.json("summary.json", &summary)?;
    let manifest = w.finish(scenario.name(), cfg.seeds.drift)?;
    Ok(ScenarioReport {
        scenario,
        summary,
        manifest,
    })
}

fn fm_spectrum(cfg: &ScenarioConfig, w: &mut ArtifactWriter) -> Result<Value> {
    let stage = |e: Error| e.in_stage("fm-spectrum");
    let params = cfg.fm.params().map_err(stage)?;
    let pump = cfg.fm.pump().map_err(stage)?;
    w.csv(
        "fm_lines.csv",
        &["offset_hz", "weight"],
        pump.lines().iter().map(|l| [l.offset, l.weight]),
    )?;
    let pts: Vec<(f64, f64)> = pump.lines().iter().map(|l| (l.offset, l.weight * l.weight)).collect();
    w.svg(
        "fm_lines.svg",
        &Plot::new("Pump sideband power", "offset (Hz)", "power").line("w^2", decimate(&pts, 4000)),
    )?;

    let rlc = &cfg.fm.drive().map_err(stage)?;
    let n = cfg.fm.rlc_sweep_points;
    let (lo, hi) = (
        (cfg.fm.nu_m_hz - cfg.fm.rlc_sweep_half_width_hz).max(0.0),
        cfg.fm.nu_m_hz + cfg.fm.rlc_sweep_half_width_hz,
    );
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let f = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let h = rlc_gain(rlc, f).map_err(stage)?;
        rows.push([f, h.norm(), h.arg()]);
    }
    let peak = rows
        .iter()
        .fold([0.0, f64::MIN, 0.0], |a, r| if r[1] > a[1] { *r } else { a });
    w.csv("rlc_response.csv", &["f_hz", "gain_abs", "gain_phase_rad"], &rows)?;
    w.svg(
        "rlc_response.svg",
        &Plot::new("Drive circuit response", "frequency (Hz)", "|H|").line("|H|", rows.iter().map(|r| (r[0], r[1]))),
    )?;

    #[derive(Serialize)]
    struct S {
        nu_m_hz: f64,
        deviation_hz: f64,
        modulation_index: f64,
        lines: usize,
        carson_bandwidth_hz: f64,
        power_within_carson: f64,
        rlc_peak_hz: f64,
        rlc_resonance_hz: f64,
        rlc_quality_factor: f64,
        drive_deviation_hz: f64,
        tuning_rate_hz_per_v: f64,
    }
    let carson = carson_bandwidth(&params);
    Ok(serde_json::to_value(S {
        nu_m_hz: params.nu_m(),
        deviation_hz: params.deviation(),
        modulation_index: params.index(),
        lines: pump.len(),
        carson_bandwidth_hz: carson,
        power_within_carson: pump.power_within(0.5 * carson) / pump.normalization().max(f64::MIN_POSITIVE),
        rlc_peak_hz: peak[0],
        rlc_resonance_hz: rlc.resonance_frequency(),
        rlc_quality_factor: rlc.quality_factor(),
        drive_deviation_hz: drive_to_deviation(rlc, cfg.fm.nu_m_hz).map_err(stage)?,
        tuning_rate_hz_per_v: rlc.tuning_rate,
    })?)
}

fn engrave(cfg: &ScenarioConfig, w: &mut ArtifactWriter) -> Result<Value> {
    let p = prepare_medium(cfg).map_err(|e| e.in_stage("engrave"))?;
    let (g, d, m) = comb_of(cfg, &p).map_err(|e| e.in_stage("engrave"))?;
    write_spectrum(w, "absorption", "Engraved absorption", &spectrum_rows(&g, &d))?;
    let zoom = FrequencyGrid::spanning(-5e6, 5e6, cfg.grid.class_df_hz)?;
    let dz = absorption_spectrum(&p.medium, &zoom, &p.material);
    write_spectrum(
        w,
        "absorption_center",
        "Engraved absorption near the carrier",
        &spectrum_rows(&zoom, &dz),
    )?;

    #[derive(Serialize)]
    struct S {
        comb: CombSummary,
        classes: usize,
        conservation_error: f64,
        elapsed_s: f64,
    }
    Ok(serde_json::to_value(S {
        comb: m.into(),
        classes: p.medium.grid.n,
        conservation_error: p.medium.conservation_error(),
        elapsed_s: p.medium.elapsed,
    })?)
}

#[derive(Serialize)]
struct ProbeSummary {
    contrast: f64,
    comb: CombSummary,
    sweep_span_hz: f64,
    sweep_points: usize,
    resolved_peaks: usize,
    sweep_min_od: f64,
    sweep_max_od: f64,
}

fn probe_summary(cfg: &ScenarioConfig, p: &Prepared, w: &mut ArtifactWriter) -> Result<ProbeSummary> {
    let (g, d, m) = comb_of(cfg, p)?;
    write_spectrum(w, "absorption", "Probe absorption", &spectrum_rows(&g, &d))?;
    let span = cfg.storage.probe_sweep_span_hz;
    let sweep = probe_transmission_sweep(cfg, p, span)?;
    let rows: Vec<[f64; 2]> = sweep.iter().map(|&(f, v)| [f, v]).collect();
    write_spectrum(w, "probe_sweep", "Chirped probe sweep", &rows)?;
    let (lo, hi) = sweep
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), q| (a.min(q.1), b.max(q.1)));
    Ok(ProbeSummary {
        contrast: m.contrast,
        comb: m.into(),
        sweep_span_hz: span,
        sweep_points: sweep.len(),
        resolved_peaks: resolved_peaks(&sweep, cfg.fm.nu_m_hz),
        sweep_min_od: lo,
        sweep_max_od: hi,
    })
}

fn probe(cfg: &ScenarioConfig, w: &mut ArtifactWriter) -> Result<Value> {
    let p = prepare_medium(cfg).map_err(|e| e.in_stage("engrave"))?;
    let s = probe_summary(cfg, &p, w).map_err(|e| e.in_stage("probe"))?;
    Ok(serde_json::to_value(s)?)
}

#[derive(Serialize)]
struct StoreSummary {
    efficiency: f64,
    delay_s: f64,
    mode_count: usize,
    pulse_efficiency: f64,
    pulse_delay_s: f64,
    pulse_transmitted_fraction: f64,
    analytic_efficiency: f64,
    input_mode_contrast: f64,
    echo_mode_contrast: f64,
    train_efficiency: f64,
    comb: CombSummary,
}

fn store_summary(cfg: &ScenarioConfig, p: &Prepared, w: &mut ArtifactWriter) -> Result<StoreSummary> {
    let (_, _, m) = comb_of(cfg, p).map_err(|e| e.in_stage("probe"))?;
    let st = storage(cfg, p).map_err(|e| e.in_stage("store"))?;
    w.csv(
        "pulse_output.csv",
        &["t_s", "re", "im"],
        st.pulse_out
            .samples
            .iter()
            .enumerate()
            .map(|(i, c)| [st.pulse_out.time(i), c.re, c.im]),
    )?;
    write_trace(w, "train_input.csv", &st.train_in)?;
    write_trace(w, "train_output.csv", &st.train_out)?;
    let pts = |tr: &IntensityTrace| {
        decimate(
            &tr.values
                .iter()
                .enumerate()
                .map(|(i, &v)| (tr.time(i), v))
                .collect::<Vec<_>>(),
            6000,
        )
    };
    w.svg(
        "train.svg",
        &Plot::new("Pulse train after the detector", "time (s)", "intensity")
            .line("input", pts(&st.train_in))
            .line("output", pts(&st.train_out)),
    )?;
    Ok(StoreSummary {
        efficiency: st.pulse.efficiency,
        delay_s: st.pulse.delay,
        mode_count: st.train.mode_count,
        pulse_efficiency: st.pulse.efficiency,
        pulse_delay_s: st.pulse.delay,
        pulse_transmitted_fraction: st.pulse.transmitted_fraction,
        analytic_efficiency: afc_efficiency_analytic(m.d_comb, m.finesse, m.d0, PeakShape::Gaussian),
        input_mode_contrast: st.input_modes.mean_contrast,
        echo_mode_contrast: st.echo_modes.mean_contrast,
        train_efficiency: st.train.efficiency,
        comb: m.into(),
    })
}

fn store(cfg: &ScenarioConfig, w: &mut ArtifactWriter) -> Result<Value> {
    let p = prepare_medium(cfg).map_err(|e| e.in_stage("engrave"))?;
    Ok(serde_json::to_value(store_summary(cfg, &p, w)?)?)
}

fn servo(cfg: &ScenarioConfig, w: &mut ArtifactWriter) -> Result<Value> {
    let stage = |e: Error| e.in_stage("servo");
    let base = cfg.servo.lock(cfg.seeds.drift);
    let on = lock_run(
        cfg,
        &LockConfig {
            enabled: true,
            ..base.clone()
        },
    )
    .map_err(stage)?;
    let off = lock_run(
        cfg,
        &LockConfig {
            enabled: false,
            ..base.clone()
        },
    )
    .map_err(stage)?;
    write_trajectory(w, "trajectory", &on)?;
    write_trajectory(w, "trajectory_free", &off)?;
    let traj = |r: &LockRun| r.trajectory.iter().map(|p| (p.t, p.detuning)).collect::<Vec<_>>();
    w.svg(
        "trajectory.svg",
        &Plot::new("Laser detuning", "time (s)", "detuning (Hz)")
            .line("servo on", decimate(&traj(&on), 4000))
            .line("servo off", decimate(&traj(&off), 4000)),
    )?;
    write_spectrum(
        w,
        "lock_absorption",
        "Locked comb",
        &spectrum_rows(&on.analysis_grid, &on.spectrum),
    )?;
    write_spectrum(
        w,
        "free_absorption",
        "Free-running comb",
        &spectrum_rows(&off.analysis_grid, &off.spectrum),
    )?;

    let fast = LockConfig {
        drift: DriftModel {
            rate: cfg.servo.erasure_drift_hz_per_s,
            ..base.drift.clone()
        },
        ..base.clone()
    };
    let fast_on = lock_run(
        cfg,
        &LockConfig {
            enabled: true,
            ..fast.clone()
        },
    )
    .map_err(stage)?;
    let fast_off = lock_run(cfg, &LockConfig { enabled: false, ..fast }).map_err(stage)?;
    write_spectrum(
        w,
        "erasure_free_absorption",
        "Free-running comb under fast drift",
        &spectrum_rows(&fast_off.analysis_grid, &fast_off.spectrum),
    )?;

    #[derive(Serialize)]
    struct S {
        locked: LockSummary,
        free: LockSummary,
        erasure_drift_hz_per_s: f64,
        erasure_locked: LockSummary,
        erasure_free: LockSummary,
    }
    Ok(serde_json::to_value(S {
        locked: lock_summary(&on, true),
        free: lock_summary(&off, false),
        erasure_drift_hz_per_s: cfg.servo.erasure_drift_hz_per_s,
        erasure_locked: lock_summary(&fast_on, true),
        erasure_free: lock_summary(&fast_off, false),
    })?)
}

fn full(cfg: &ScenarioConfig, w: &mut ArtifactWriter) -> Result<Value> {
    let (run, p) = locked_medium(cfg)?;
    write_trajectory(w, "trajectory", &run)?;
    let probe = probe_summary(cfg, &p, w).map_err(|e| e.in_stage("probe"))?;
    let store = store_summary(cfg, &p, w)?;

    #[derive(Serialize)]
    struct S {
        contrast: f64,
        efficiency: f64,
        delay: f64,
        mode_count: usize,
        lock: LockSummary,
        probe: ProbeSummary,
        store: StoreSummary,
    }
    Ok(serde_json::to_value(S {
        contrast: probe.contrast,
        efficiency: store.efficiency,
        delay: store.delay_s,
        mode_count: store.mode_count,
        lock: lock_summary(&run, cfg.servo.enabled),
        probe,
        store,
    })?)
}
