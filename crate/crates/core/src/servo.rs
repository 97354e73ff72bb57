//! Self-locking of the FM laser onto the comb it engraves.
//!
//! The laser centre sits at `detuning = drift + correction` in the frame of
//! the medium. During pump windows the total transmission of the pump is
//! dithered by `±dither_depth`, demodulated into an error signal and fed
//! through a PI controller whose integrator leaks so that its DC gain stops
//! `integrator_cap_db` above the proportional gain. The correction reaches
//! the laser through a first-order low-pass at `feedback_bandwidth`.
//! Between pump windows the light is off and the controller holds.

use std::f64::consts::PI;

use num_complex::Complex64;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::engrave::{absorption_spectrum, comb_metrics, CombMetrics, Engraver, MediumState, PumpOffset};
use crate::material::MaterialParams;
use crate::spectrum::LineSpectrum;
use crate::{Error, FrequencyGrid, Result};

/// Pump, wait and probe durations of one preparation cycle (ms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Duty {
    pub pump_ms: f64,
    pub wait_ms: f64,
    pub probe_ms: f64,
}

impl Duty {
    pub fn period(&self) -> f64 {
        (self.pump_ms + self.wait_ms + self.probe_ms) * 1e-3
    }
}

impl Default for Duty {
    fn default() -> Self {
        Duty {
            pump_ms: 50.0,
            wait_ms: 5.0,
            probe_ms: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServoParams {
    #[serde(rename = "dither_freq_hz")]
    pub dither_freq: f64,
    /// Peak frequency excursion of the dither.
    #[serde(rename = "dither_depth_hz")]
    pub dither_depth: f64,
    #[serde(rename = "pi_corner_hz")]
    pub pi_corner: f64,
    pub integrator_cap_db: f64,
    #[serde(rename = "feedback_bandwidth_hz")]
    pub feedback_bandwidth: f64,
    #[serde(rename = "loop_dt_s")]
    pub loop_dt: f64,
    pub duty: Duty,
    /// Proportional gain, Hz of correction per unit error.
    #[serde(rename = "kp_hz")]
    pub kp: f64,
    /// Error injected while the light is gated off (electronic offset).
    pub error_offset: f64,
}

impl Default for ServoParams {
    fn default() -> Self {
        ServoParams {
            dither_freq: 100e3,
            dither_depth: 30e3,
            pi_corner: 300.0,
            integrator_cap_db: 20.0,
            feedback_bandwidth: 10e3,
            loop_dt: 2e-6,
            duty: Duty::default(),
            kp: 4e7,
            error_offset: 0.0,
        }
    }
}

impl ServoParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dither_depth", self.dither_depth),
            ("pi_corner", self.pi_corner),
            ("feedback_bandwidth", self.feedback_bandwidth),
            ("loop_dt", self.loop_dt),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.dither_freq > self.pi_corner) {
            return Err(Error::param("dither_freq", "must exceed pi_corner"));
        }
        if !(self.loop_dt < 0.1 / self.feedback_bandwidth) {
            return Err(Error::param("loop_dt", "must be below 1 / (10 feedback_bandwidth)"));
        }
        if !(self.integrator_cap_db >= 0.0) {
            return Err(Error::param("integrator_cap_db", "must be >= 0"));
        }
        if !(self.kp >= 0.0) || !self.error_offset.is_finite() {
            return Err(Error::param("kp", "gain must be >= 0 and offset finite"));
        }
        for v in [self.duty.pump_ms, self.duty.wait_ms, self.duty.probe_ms] {
            if !(v >= 0.0) {
                return Err(Error::param("duty", "durations must be >= 0"));
            }
        }
        Ok(())
    }

    /// Leak rate of the integrator (1/s); infinite when the cap is 0 dB.
    pub fn integrator_leak(&self) -> f64 {
        let excess = 10f64.powf(self.integrator_cap_db / 20.0) - 1.0;
        if excess <= 0.0 {
            f64::INFINITY
        } else {
            2.0 * PI * self.pi_corner / excess
        }
    }

    /// Gain from error to commanded correction at DC.
    pub fn dc_gain(&self) -> f64 {
        self.kp * 10f64.powf(self.integrator_cap_db / 20.0)
    }

    /// Per-step smoothing factor of the actuator.
    pub fn actuator_alpha(&self) -> f64 {
        -(-2.0 * PI * self.feedback_bandwidth * self.loop_dt).exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoState {
    pub time: f64,
    /// Laser centre relative to the medium frame (Hz).
    pub detuning: f64,
    /// Integrator contribution to the command (Hz).
    pub integrator: f64,
    /// Commanded correction `kp * error + integrator` (Hz).
    pub command: f64,
    /// Correction actually applied to the laser (Hz).
    pub correction: f64,
    pub locked: bool,
    pub drift_seed: u64,
}

impl ServoState {
    pub fn new(drift_seed: u64) -> Self {
        ServoState {
            time: 0.0,
            detuning: 0.0,
            integrator: 0.0,
            command: 0.0,
            correction: 0.0,
            locked: false,
            drift_seed,
        }
    }
}

/// Total pump transmission `sum w^2 exp(-d(line + x)) / sum w^2`, with `d`
/// held at its edge values beyond `grid`.
pub fn transmission(x: f64, pump: &LineSpectrum, d: &[f64], grid: &FrequencyGrid) -> f64 {
    let norm = pump.normalization();
    if norm == 0.0 {
        return 1.0;
    }
    let (lo, hi) = (d[0], d[d.len() - 1]);
    pump.lines()
        .iter()
        .map(|l| {
            let f = l.offset + x;
            let v = if f <= grid.start() {
                lo
            } else if f >= grid.end() {
                hi
            } else {
                grid.interpolate(d, f, lo)
            };
            l.weight * l.weight * (-v).exp()
        })
        .sum::<f64>()
        / norm
}

/// Demodulated dither signal `(T(x + a) - T(x - a)) / 2`.
pub fn error_signal(detuning: f64, pump: &LineSpectrum, d: &[f64], grid: &FrequencyGrid, p: &ServoParams) -> f64 {
    let a = p.dither_depth;
    0.5 * (transmission(detuning + a, pump, d, grid) - transmission(detuning - a, pump, d, grid))
}

/// One loop period with light on: integrate `error`, update the command
/// and the actuator, and move the detuning by the drift and the change in
/// correction.
pub fn pi_step(state: &ServoState, error: f64, drift_increment: f64, p: &ServoParams) -> ServoState {
    let dt = p.loop_dt;
    let leak = p.integrator_leak();
    let ki = p.kp * 2.0 * PI * p.pi_corner;
    let integrator = if leak.is_infinite() {
        0.0
    } else {
        let decay = (-leak * dt).exp();
        state.integrator * decay + ki * error * (-(-leak * dt).exp_m1()) / leak
    };
    let command = p.kp * error + integrator;
    let correction = state.correction + p.actuator_alpha() * (command - state.correction);
    ServoState {
        time: state.time + dt,
        detuning: state.detuning + drift_increment + (correction - state.correction),
        integrator,
        command,
        correction,
        ..*state
    }
}

/// One loop period with light gated off: the correction holds and only
/// the electronic offset is integrated.
pub fn pi_hold(state: &ServoState, drift_increment: f64, p: &ServoParams) -> ServoState {
    let ki = p.kp * 2.0 * PI * p.pi_corner;
    let integrator = if p.integrator_leak().is_infinite() {
        0.0
    } else {
        state.integrator + ki * p.error_offset * p.loop_dt
    };
    ServoState {
        time: state.time + p.loop_dt,
        detuning: state.detuning + drift_increment,
        integrator,
        ..*state
    }
}

/// Sudden laser jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftStep {
    #[serde(rename = "time_s")]
    pub time: f64,
    #[serde(rename = "size_hz")]
    pub size: f64,
}

/// Free-running laser drift: linear ramp, seeded random walk and steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftModel {
    #[serde(rename = "rate_hz_per_s")]
    pub rate: f64,
    #[serde(rename = "walk_std_hz_per_sqrt_s")]
    pub walk_std: f64,
    pub steps: Vec<DriftStep>,
}

impl Default for DriftModel {
    fn default() -> Self {
        DriftModel {
            rate: 3e6,
            walk_std: 200e3,
            steps: Vec::new(),
        }
    }
}

impl DriftModel {
    pub fn none() -> Self {
        DriftModel {
            rate: 0.0,
            walk_std: 0.0,
            steps: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rate.is_finite() || !(self.walk_std >= 0.0) || !self.walk_std.is_finite() {
            return Err(Error::param("drift", "rate must be finite and walk_std >= 0"));
        }
        if self.steps.iter().any(|s| !s.time.is_finite() || !s.size.is_finite()) {
            return Err(Error::param("drift.steps", "times and sizes must be finite"));
        }
        Ok(())
    }

    pub fn process(&self, seed: u64) -> DriftProcess {
        DriftProcess {
            model: self.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

/// Running realization of a [`DriftModel`].
#[derive(Debug, Clone)]
pub struct DriftProcess {
    model: DriftModel,
    rng: ChaCha8Rng,
}

impl DriftProcess {
    /// Drift accumulated over `[t, t + dt)`.
    pub fn increment(&mut self, t: f64, dt: f64) -> f64 {
        let mut inc = self.model.rate * dt;
        if self.model.walk_std > 0.0 {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            inc += self.model.walk_std * dt.sqrt() * z;
        }
        for s in &self.model.steps {
            if s.time >= t && s.time < t + dt {
                inc += s.size;
            }
        }
        inc
    }
}

/// Settings of a locked engraving run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LockConfig {
    pub servo: ServoParams,
    pub drift: DriftModel,
    pub cycles: usize,
    /// Excitation rate scale handed to the engraver (1/s). The default gives
    /// a 20 MHz deviation comb the per-line pumping of the full 465 MHz one.
    #[serde(rename = "pump_rate_per_s")]
    pub pump_rate: f64,
    pub enabled: bool,
    pub seed: u64,
    /// Trajectory decimation interval (s).
    #[serde(rename = "record_every_s")]
    pub record_every: f64,
}

impl Default for LockConfig {
    fn default() -> Self {
        LockConfig {
            servo: ServoParams::default(),
            drift: DriftModel::default(),
            cycles: 10,
            pump_rate: 516.0,
            enabled: true,
            seed: 1,
            record_every: 50e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    #[serde(rename = "t_s")]
    pub t: f64,
    #[serde(rename = "detuning_hz")]
    pub detuning: f64,
    pub error: f64,
    pub locked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LockEvent {
    Acquired { t_s: f64, tooth: i64 },
    Lost { t_s: f64, detuning_hz: f64 },
    Relocked { t_s: f64, tooth: i64, previous_tooth: i64 },
    Failure { t_s: f64, detuning_hz: f64, reason: String },
}

/// Result of [`run_lock`].
#[derive(Debug, Clone)]
pub struct LockRun {
    pub trajectory: Vec<TrajectoryPoint>,
    pub events: Vec<LockEvent>,
    /// Comb figures after the last cycle (`None` if the run failed early).
    pub metrics: Option<CombMetrics>,
    /// Comb figures after each completed cycle.
    pub cycle_metrics: Vec<CombMetrics>,
    pub analysis_grid: FrequencyGrid,
    pub spectrum: Vec<f64>,
    pub medium: MediumState,
    pub servo: ServoState,
    pub failed: bool,
    /// RMS of `detuning - comb_frame` over every cycle after the first (Hz).
    pub rms_detuning: f64,
    /// Hole position of the comb engraved in the first cycle, taken on the
    /// tooth nearest the laser (Hz).
    pub comb_frame: f64,
    /// Mean detuning of each completed pump window (Hz).
    pub window_detuning: Vec<f64>,
}

/// Co-simulates drift, servo and engraving for `cfg.cycles` preparation
/// cycles. The comb used for the error signal is refreshed after every
/// cycle; within a pump window the medium is integrated along the
/// recorded detuning path.
pub fn run_lock(medium: MediumState, pump: &LineSpectrum, m: &MaterialParams, cfg: &LockConfig) -> Result<LockRun> {
    let p = &cfg.servo;
    p.validate()?;
    cfg.drift.validate()?;
    let nu_m = comb_spacing(pump)?;
    let band = pump.max_offset().unwrap_or(0.0).max(-pump.min_offset().unwrap_or(0.0));
    let margin = band + 4.0 * nu_m;
    let engraver = Engraver::new(&medium.grid, pump, m, cfg.pump_rate, margin)?;
    let analysis = FrequencyGrid::spanning(-0.8 * band.max(4.0 * nu_m), 0.8 * band.max(4.0 * nu_m), nu_m / 50.0)?;
    let sense = FrequencyGrid::spanning(
        medium.grid.start().min(-band - margin),
        medium.grid.end().max(band + margin),
        (nu_m / 50.0).min(medium.grid.df),
    )?;

    let mut medium = medium;
    let mut state = ServoState::new(cfg.seed);
    let mut drift = cfg.drift.process(cfg.seed);
    let mut d = absorption_spectrum(&medium, &sense, m);
    let mut trajectory = Vec::new();
    let mut events = Vec::new();
    let mut cycle_metrics = Vec::new();
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    let mut tooth: Option<i64> = None;
    let mut next_record = 0.0;
    let mut failed = false;
    let mut frame = 0.0;
    let mut window_detuning = Vec::new();

    let steps = |ms: f64| ((ms * 1e-3) / p.loop_dt).round() as usize;
    let (n_pump, n_dark) = (steps(p.duty.pump_ms), steps(p.duty.wait_ms + p.duty.probe_ms));

    'cycles: for cycle in 0..cfg.cycles {
        let mut path = Vec::with_capacity(n_pump);
        for k in 0..n_pump + n_dark {
            let pumping = k < n_pump;
            let inc = drift.increment(state.time, p.loop_dt);
            let error = if pumping && cfg.enabled {
                error_signal(state.detuning, pump, &d, &sense, p)
            } else {
                0.0
            };
            state = if !cfg.enabled {
                ServoState {
                    time: state.time + p.loop_dt,
                    detuning: state.detuning + inc,
                    ..state
                }
            } else if pumping {
                pi_step(&state, error, inc, p)
            } else {
                pi_hold(&state, inc, p)
            };
            if pumping {
                path.push(state.detuning);
            }
            // Residual is taken against the comb left by the first cycle.
            if cycle > 0 {
                let r = state.detuning - frame;
                sum_sq += r * r;
                count += 1;
            }

            let rel = state.detuning - frame;
            let wrapped = rel - (rel / nu_m).round() * nu_m;
            // Hysteresis: acquire within nu_m/8, lose beyond nu_m/4.
            let window = if state.locked { nu_m / 4.0 } else { nu_m / 8.0 };
            let now_locked = cfg.enabled && wrapped.abs() < window;
            let now_tooth = (rel / nu_m).round() as i64;
            if now_locked && (!state.locked || tooth != Some(now_tooth)) {
                events.push(match tooth {
                    Some(prev) if prev != now_tooth => LockEvent::Relocked {
                        t_s: state.time,
                        tooth: now_tooth,
                        previous_tooth: prev,
                    },
                    _ => LockEvent::Acquired {
                        t_s: state.time,
                        tooth: now_tooth,
                    },
                });
                tooth = Some(now_tooth);
            } else if !now_locked && state.locked {
                events.push(LockEvent::Lost {
                    t_s: state.time,
                    detuning_hz: state.detuning,
                });
            }
            state.locked = now_locked;
            if state.time >= next_record {
                trajectory.push(TrajectoryPoint {
                    t: state.time,
                    detuning: state.detuning,
                    error,
                    locked: state.locked,
                });
                next_record += cfg.record_every;
            }
            if !state.detuning.is_finite() || (cfg.enabled && state.detuning.abs() > band.max(nu_m)) {
                events.push(LockEvent::Failure {
                    t_s: state.time,
                    detuning_hz: state.detuning,
                    reason: "detuning left the pump band".into(),
                });
                failed = true;
                break 'cycles;
            }
        }
        window_detuning.push(path.iter().sum::<f64>() / path.len().max(1) as f64);
        let offset = PumpOffset::Sampled {
            dt: p.loop_dt,
            values: &path,
        };
        engraver.pump_window(&mut medium, p.duty.pump_ms * 1e-3, &offset)?;
        engraver.dark(&mut medium, (p.duty.wait_ms + p.duty.probe_ms) * 1e-3)?;
        d = absorption_spectrum(&medium, &sense, m);
        let da = absorption_spectrum(&medium, &analysis, m);
        cycle_metrics.push(comb_metrics(&da, &analysis, nu_m)?);
        if cycle == 0 {
            let centre = path.iter().sum::<f64>() / path.len().max(1) as f64;
            frame = hole_frame(&da, &analysis, nu_m).map_or(centre, |h| h + ((centre - h) / nu_m).round() * nu_m);
        }
    }

    let spectrum = absorption_spectrum(&medium, &analysis, m);
    let metrics = if failed {
        None
    } else {
        Some(comb_metrics(&spectrum, &analysis, nu_m)?)
    };
    Ok(LockRun {
        trajectory,
        events,
        metrics,
        cycle_metrics,
        analysis_grid: analysis,
        spectrum,
        medium,
        servo: state,
        failed,
        rms_detuning: if count > 0 { (sum_sq / count as f64).sqrt() } else { 0.0 },
        comb_frame: frame,
        window_detuning,
    })
}

/// Offset of the hole centres of `d` modulo `nu_m`, from its first harmonic.
/// `None` when the spectrum has no structure at `nu_m`.
pub fn hole_frame(d: &[f64], grid: &FrequencyGrid, nu_m: f64) -> Option<f64> {
    let mean = d.iter().sum::<f64>() / d.len().max(1) as f64;
    let h: Complex64 = grid
        .frequencies()
        .zip(d)
        .map(|(f, &v)| (v - mean) * Complex64::from_polar(1.0, -2.0 * PI * f / nu_m))
        .sum();
    if h.norm() == 0.0 || !h.norm().is_finite() {
        return None;
    }
    // Absorption peaks sit at -arg(h) nu_m / 2 pi; holes half a period away.
    let x = -h.arg() / (2.0 * PI) * nu_m + 0.5 * nu_m;
    Some(x - (x / nu_m).round() * nu_m)
}

/// Line spacing of a comb spectrum.
fn comb_spacing(pump: &LineSpectrum) -> Result<f64> {
    let lines = pump.lines();
    if lines.len() < 2 {
        return Err(Error::param("pump", "locking needs a comb with at least two lines"));
    }
    Ok(lines[1].offset - lines[0].offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectralLine;

    fn comb(nu_m: f64, n: i32) -> LineSpectrum {
        LineSpectrum::new(
            (-n..=n)
                .map(|k| SpectralLine {
                    offset: k as f64 * nu_m,
                    weight: 1.0 / (1.0 + (k as f64 / 4.0).powi(2)),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_error_leaves_state_alone() {
        let p = ServoParams::default();
        let s0 = ServoState {
            detuning: 42.0,
            ..ServoState::new(3)
        };
        let mut s = s0;
        for _ in 0..1000 {
            s = pi_step(&s, 0.0, 0.0, &p);
        }
        assert_eq!(ServoState { time: s0.time, ..s }, s0);
    }

    #[test]
    fn constant_error_settles_at_capped_gain() {
        let p = ServoParams::default();
        let e = 1e-3;
        let mut s = ServoState::new(0);
        let steps = (20.0 / p.integrator_leak() / p.loop_dt) as usize;
        for _ in 0..steps {
            s = pi_step(&s, e, 0.0, &p);
        }
        let want = e * p.kp * 10f64.powf(p.integrator_cap_db / 20.0);
        assert!((s.correction / want - 1.0).abs() < 1e-6, "{} vs {want}", s.correction);
    }

    #[test]
    fn integrator_clamp_under_sine_sweep() {
        let p = ServoParams::default();
        let cap = 10f64.powf(p.integrator_cap_db / 20.0);
        let lambda = p.integrator_leak();
        let ki = p.kp * 2.0 * PI * p.pi_corner;
        for f in [3.0, 30.0, 150.0] {
            let mut s = ServoState::new(0);
            let settle = 20.0 / lambda;
            let n_settle = (settle / p.loop_dt) as usize;
            let n_meas = (4.0 / f / p.loop_dt) as usize;
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..n_settle + n_meas {
                let t = k as f64 * p.loop_dt;
                s = pi_step(&s, (2.0 * PI * f * t).sin(), 0.0, &p);
                if k >= n_settle {
                    re += s.command * (2.0 * PI * f * t).sin();
                    im += s.command * (2.0 * PI * f * t).cos();
                }
            }
            let gain = 2.0 * (re * re + im * im).sqrt() / n_meas as f64;
            let w = 2.0 * PI * f;
            let oracle = (Complex64::new(p.kp, 0.0) + ki / Complex64::new(lambda, w)).norm();
            assert!((gain / oracle - 1.0).abs() < 0.01, "f={f}: {gain} vs {oracle}");
            assert!(gain <= p.kp * cap * 1.001);
        }
    }

    #[test]
    fn gating_freezes_the_controller() {
        let p = ServoParams::default();
        let mut s = ServoState::new(0);
        for _ in 0..500 {
            s = pi_step(&s, 2e-3, 0.0, &p);
        }
        let held = pi_hold(&s, 5.0, &p);
        assert_eq!(held.integrator, s.integrator);
        assert_eq!(held.command, s.command);
        assert_eq!(held.correction, s.correction);
        assert_eq!(held.detuning, s.detuning + 5.0);
    }

    #[test]
    fn flat_spectrum_gives_zero_error() {
        let p = ServoParams::default();
        let grid = FrequencyGrid::spanning(-10e6, 10e6, 10e3).unwrap();
        let d = vec![1.3; grid.n];
        for x in [-400e3, 0.0, 123e3] {
            assert_eq!(error_signal(x, &comb(626e3, 5), &d, &grid, &p), 0.0);
        }
    }

    #[test]
    fn error_is_periodic_in_the_comb_spacing() {
        let p = ServoParams::default();
        let nu_m = 626e3;
        let grid = FrequencyGrid::spanning(-20e6, 20e6, nu_m / 64.0).unwrap();
        let d: Vec<f64> = grid
            .frequencies()
            .map(|f| 1.0 + 0.5 * (2.0 * PI * (f - 0.2 * nu_m) / nu_m).cos())
            .collect();
        let pump = comb(nu_m, 6);
        for x in [-150e3, 37e3, 200e3] {
            let a = error_signal(x, &pump, &d, &grid, &p);
            let b = error_signal(x + nu_m, &pump, &d, &grid, &p);
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        // Zero crossing at the hole, where transmission peaks.
        let hole = 0.2 * nu_m + 0.5 * nu_m;
        let slope = error_signal(hole + 0.25 * nu_m, &pump, &d, &grid, &p).abs();
        assert!(error_signal(hole, &pump, &d, &grid, &p).abs() < 1e-3 * slope);
        let h = hole_frame(&d, &grid, nu_m).unwrap();
        assert!((h - (hole - nu_m)).abs() < 1e-3 * nu_m, "{h}");
    }

    #[test]
    fn drift_process_is_seeded() {
        let m = DriftModel::default();
        let (mut a, mut b) = (m.process(9), m.process(9));
        for k in 0..100 {
            let t = k as f64 * 1e-6;
            assert_eq!(a.increment(t, 1e-6).to_bits(), b.increment(t, 1e-6).to_bits());
        }
    }
}
