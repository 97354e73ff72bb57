//! Comb engraving: per-frequency-class rate equations under the FM pump,
//! the resulting optical-depth spectrum and its comb figures of merit.
//!
//! Each ion class carries six populations: the two ground sublevels, the
//! excited state and the bottleneck state (the last two tagged with the
//! ground sublevel they were pumped from). Excitation empties a ground
//! sublevel into the excited state, which decays into the bottleneck with
//! `t_excited`; the bottleneck returns to the ground with `t_bottleneck`,
//! a fraction `branching_spinflip` landing in the other sublevel. The two
//! ground sublevels relax towards each other with the Zeeman lifetime.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::material::{lorentzian, Ground, MaterialParams};
use crate::spectrum::LineSpectrum;
use crate::{Error, FrequencyGrid, Result};

/// Largest `rate * dt` the integrator accepts.
pub const MAX_RATE_STEP: f64 = 0.1;

/// Excitation rates `(g1, g2)` of the class at `delta` for a pump with
/// `rate_scale` (1/s per unit line power on a strong transition).
pub fn pump_rate_per_class(delta: f64, pump: &LineSpectrum, m: &MaterialParams, rate_scale: f64) -> (f64, f64) {
    let width = m.pump_linewidth();
    let mut r = [0.0, 0.0];
    for t in m.transitions() {
        let f = delta + t.offset;
        let p: f64 = pump
            .lines()
            .iter()
            .map(|l| l.weight * l.weight * lorentzian(l.offset - f, width))
            .sum();
        r[level_index(t.ground)] += t.strength * p;
    }
    (rate_scale * r[0], rate_scale * r[1])
}

#[inline]
fn level_index(g: Ground) -> usize {
    match g {
        Ground::G1 => 0,
        Ground::G2 => 1,
    }
}

/// Pump preparation sequence: `cycles` repetitions of pump, wait, probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngraveSchedule {
    #[serde(rename = "pump_duration_s")]
    pub pump_duration: f64,
    #[serde(rename = "wait_duration_s")]
    pub wait_duration: f64,
    /// Dark time spent probing before the next preparation cycle.
    #[serde(rename = "probe_duration_s")]
    pub probe_duration: f64,
    pub cycles: usize,
    /// Linear laser drift during the whole sequence (Hz/s).
    #[serde(rename = "drift_rate_hz_per_s")]
    pub drift_rate: f64,
    /// Excitation rate on a strong transition per unit line power (1/s).
    #[serde(rename = "pump_rate_per_s")]
    pub pump_rate: f64,
    /// Fixed integration step; chosen automatically when absent.
    #[serde(rename = "step_s", skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl Default for EngraveSchedule {
    fn default() -> Self {
        EngraveSchedule {
            pump_duration: 50e-3,
            wait_duration: 5e-3,
            probe_duration: 5e-3,
            cycles: 20,
            drift_rate: 0.0,
            pump_rate: 1.2e4,
            step: None,
        }
    }
}

impl EngraveSchedule {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pump_duration", self.pump_duration),
            ("wait_duration", self.wait_duration),
            ("probe_duration", self.probe_duration),
            ("pump_rate", self.pump_rate),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if self.cycles < 1 {
            return Err(Error::param("cycles", "need at least one cycle"));
        }
        if !self.drift_rate.is_finite() {
            return Err(Error::param("drift_rate", "must be finite"));
        }
        if let Some(s) = self.step {
            if !(s > 0.0) {
                return Err(Error::param("step", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn cycle_duration(&self) -> f64 {
        self.pump_duration + self.wait_duration + self.probe_duration
    }
}

/// Per-class populations of the engraved medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumState {
    pub grid: FrequencyGrid,
    pub pop_g1: Vec<f64>,
    pub pop_g2: Vec<f64>,
    /// Excited-state population, by ground sublevel of origin.
    pub excited: [Vec<f64>; 2],
    /// Bottleneck population, by ground sublevel of origin.
    pub bottleneck: [Vec<f64>; 2],
    /// Time elapsed since the medium was last unpumped (s).
    pub elapsed: f64,
}

impl MediumState {
    /// Thermal state: ground sublevels equally populated.
    pub fn unpumped(grid: FrequencyGrid) -> Self {
        let n = grid.n;
        MediumState {
            grid,
            pop_g1: vec![0.5; n],
            pop_g2: vec![0.5; n],
            excited: [vec![0.0; n], vec![0.0; n]],
            bottleneck: [vec![0.0; n], vec![0.0; n]],
            elapsed: 0.0,
        }
    }

    /// Class grid wide enough for `pump` plus all four transitions and a
    /// `margin` on each side.
    pub fn grid_for(pump: &LineSpectrum, m: &MaterialParams, df: f64, margin: f64) -> Result<FrequencyGrid> {
        let lo = pump.min_offset().unwrap_or(0.0) - m.delta_g - m.delta_e - margin;
        let hi = pump.max_offset().unwrap_or(0.0) + margin;
        FrequencyGrid::spanning(lo, hi, df)
    }

    /// Excited plus bottleneck population of each class.
    pub fn pop_shelved(&self) -> Vec<f64> {
        (0..self.grid.n)
            .map(|i| self.excited[0][i] + self.excited[1][i] + self.bottleneck[0][i] + self.bottleneck[1][i])
            .collect()
    }

    /// Largest deviation of any class from unit total population.
    pub fn conservation_error(&self) -> f64 {
        let shelved = self.pop_shelved();
        (0..self.grid.n)
            .map(|i| (self.pop_g1[i] + self.pop_g2[i] + shelved[i] - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Pump spectral density `P(x) = sum w^2 L(line - x)` tabulated for fast
/// lookup, with exact evaluation outside the table.
#[derive(Debug, Clone)]
struct PumpDensity {
    pump: LineSpectrum,
    width: f64,
    table: FrequencyGrid,
    values: Vec<f64>,
}

impl PumpDensity {
    fn new(pump: &LineSpectrum, width: f64, lo: f64, hi: f64, step: f64) -> Result<Self> {
        let table = FrequencyGrid::spanning(lo, hi, step)?;
        let values = if pump.is_empty() {
            vec![0.0; table.n]
        } else {
            table.frequencies().map(|x| Self::exact(pump, width, x)).collect()
        };
        Ok(PumpDensity {
            pump: pump.clone(),
            width,
            table,
            values,
        })
    }

    fn exact(pump: &LineSpectrum, width: f64, x: f64) -> f64 {
        pump.lines()
            .iter()
            .map(|l| l.weight * l.weight * lorentzian(l.offset - x, width))
            .sum()
    }

    #[inline]
    fn at(&self, x: f64) -> f64 {
        let p = self.table.position(x);
        if p >= 0.0 && p <= (self.table.n - 1) as f64 {
            self.table.interpolate(&self.values, x, 0.0)
        } else if self.pump.is_empty() {
            0.0
        } else {
            Self::exact(&self.pump, self.width, x)
        }
    }

    fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// Pump frequency offset as a function of time within a window.
#[derive(Debug, Clone)]
pub enum PumpOffset<'a> {
    Constant(f64),
    Ramp {
        start: f64,
        rate: f64,
    },
    /// Offsets sampled every `dt` from the start of the window.
    Sampled {
        dt: f64,
        values: &'a [f64],
    },
}

impl PumpOffset<'_> {
    fn at(&self, t: f64) -> f64 {
        match self {
            PumpOffset::Constant(v) => *v,
            PumpOffset::Ramp { start, rate } => start + rate * t,
            PumpOffset::Sampled { dt, values } => {
                if values.is_empty() {
                    return 0.0;
                }
                let i = ((t / dt).floor().max(0.0) as usize).min(values.len() - 1);
                values[i]
            }
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            PumpOffset::Constant(_) => true,
            PumpOffset::Ramp { rate, .. } => *rate == 0.0,
            PumpOffset::Sampled { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
        }
    }
}

/// Integrator for one pump spectrum on one class grid. Building it
/// tabulates the pump density once; windows can then be applied
/// repeatedly with arbitrary offset paths.
#[derive(Debug, Clone)]
pub struct Engraver {
    material: MaterialParams,
    density: PumpDensity,
    rate_scale: f64,
    step: Option<f64>,
}

impl Engraver {
    /// `shift_margin` bounds the pump offsets expected during the run;
    /// larger offsets still work but fall back to exact (slow) evaluation.
    pub fn new(
        grid: &FrequencyGrid,
        pump: &LineSpectrum,
        m: &MaterialParams,
        rate_scale: f64,
        shift_margin: f64,
    ) -> Result<Self> {
        m.validate()?;
        let width = m.pump_linewidth();
        if !(width > 0.0) {
            return Err(Error::param("gamma_h", "pump line width must be > 0"));
        }
        let step = grid.df.min(width / 40.0);
        let margin = shift_margin.abs() + 2.0 * step;
        let lo = grid.start() - margin;
        let hi = grid.end() + m.delta_g + m.delta_e + margin;
        Ok(Engraver {
            material: *m,
            density: PumpDensity::new(pump, width, lo, hi, step)?,
            rate_scale,
            step: None,
        })
    }

    /// Forces a fixed integration step (rejected if unstable).
    pub fn with_step(mut self, step: Option<f64>) -> Self {
        self.step = step;
        self
    }

    /// Upper bound on any class's excitation rate.
    pub fn max_pump_rate(&self) -> f64 {
        self.rate_scale * self.material.strength_per_level() * self.density.max()
    }

    fn rates(&self, delta: f64, shift: f64) -> (f64, f64) {
        let m = &self.material;
        let c = m.cross_strength;
        let x = delta - shift;
        let r1 = c * self.density.at(x) + self.density.at(x + m.delta_e);
        let r2 = self.density.at(x + m.delta_g) + c * self.density.at(x + m.delta_g + m.delta_e);
        (self.rate_scale * r1, self.rate_scale * r2)
    }

    fn step_for(&self, duration: f64, pumping: bool) -> Result<(usize, f64)> {
        let m = &self.material;
        let max_rate = [
            if pumping { self.max_pump_rate() } else { 0.0 },
            1.0 / m.t_excited,
            1.0 / m.t_bottleneck,
            1.0 / m.t_zeeman,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if duration <= 0.0 {
            return Ok((0, 0.0));
        }
        let dt = match self.step {
            Some(s) => {
                let product = max_rate * s;
                if product > MAX_RATE_STEP * (1.0 + 1e-12) {
                    return Err(Error::StepTooLarge { step: s, product });
                }
                s
            }
            None => MAX_RATE_STEP / max_rate,
        };
        let n = (duration / dt).ceil().max(1.0) as usize;
        Ok((n, duration / n as f64))
    }

    /// Integrates `duration` seconds of pumping with the pump comb moved
    /// by `offset(t)`.
    pub fn pump_window(&self, state: &mut MediumState, duration: f64, offset: &PumpOffset) -> Result<()> {
        let (steps, dt) = self.step_for(duration, true)?;
        if steps == 0 {
            return Ok(());
        }
        let k = Decay::new(&self.material, dt);
        if offset.is_constant() {
            let shift = offset.at(0.0);
            for i in 0..state.grid.n {
                let (r1, r2) = self.rates(state.grid.freq(i), shift);
                let f = [-(-r1 * dt).exp_m1(), -(-r2 * dt).exp_m1()];
                let mut c = ClassPops::load(state, i);
                for _ in 0..steps {
                    c.step(&k, f);
                }
                c.store(state, i);
            }
        } else {
            let shifts: Vec<f64> = (0..steps).map(|s| offset.at((s as f64 + 0.5) * dt)).collect();
            for i in 0..state.grid.n {
                let delta = state.grid.freq(i);
                let mut c = ClassPops::load(state, i);
                for &shift in &shifts {
                    let (r1, r2) = self.rates(delta, shift);
                    c.step(&k, [-(-r1 * dt).exp_m1(), -(-r2 * dt).exp_m1()]);
                }
                c.store(state, i);
            }
        }
        state.elapsed += duration;
        Ok(())
    }

    /// Integrates `duration` seconds without pump light.
    pub fn dark(&self, state: &mut MediumState, duration: f64) -> Result<()> {
        let (steps, dt) = self.step_for(duration, false)?;
        if steps == 0 {
            return Ok(());
        }
        let k = Decay::new(&self.material, dt);
        for i in 0..state.grid.n {
            let mut c = ClassPops::load(state, i);
            for _ in 0..steps {
                c.step(&k, [0.0, 0.0]);
            }
            c.store(state, i);
        }
        state.elapsed += duration;
        Ok(())
    }

    /// Whole schedule for a pump that does not move. Each window is a
    /// fixed linear map per class, so the step maps are raised to the
    /// required power instead of being iterated.
    pub fn run_fixed(&self, state: &mut MediumState, sched: &EngraveSchedule) -> Result<()> {
        let window = |duration: f64, pumping: bool| -> Result<(usize, Decay)> {
            let (steps, dt) = self.step_for(duration, pumping)?;
            Ok((steps, Decay::new(&self.material, dt.max(f64::MIN_POSITIVE))))
        };
        let (kp, dp) = window(sched.pump_duration, true)?;
        let (kw, dw) = window(sched.wait_duration, false)?;
        let (kq, dq) = window(sched.probe_duration, false)?;
        let wait = mat_pow(&step_matrix(&dw, [0.0, 0.0]), kw);
        let probe = mat_pow(&step_matrix(&dq, [0.0, 0.0]), kq);
        let cycles = sched.cycles.max(1);
        for i in 0..state.grid.n {
            let (r1, r2) = self.rates(state.grid.freq(i), 0.0);
            let f = [-(-r1 * dp.dt).exp_m1(), -(-r2 * dp.dt).exp_m1()];
            let pump = mat_pow(&step_matrix(&dp, f), kp);
            let last = mat_mul(&wait, &pump);
            let full = mat_pow(&mat_mul(&probe, &last), cycles - 1);
            let total = mat_mul(&last, &full);
            let v = mat_apply(&total, &ClassPops::load(state, i).to_array());
            ClassPops::from_array(v).store(state, i);
        }
        state.elapsed += sched.cycle_duration() * cycles as f64 - sched.probe_duration;
        Ok(())
    }

    /// Schedule whose pump sits still within each window but moves between
    /// windows: window `k` is pumped at `shifts[k]`. The number of cycles
    /// is `shifts.len()`.
    pub fn run_windows(&self, state: &mut MediumState, sched: &EngraveSchedule, shifts: &[f64]) -> Result<()> {
        if shifts.is_empty() {
            return Ok(());
        }
        if shifts.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("shifts", "must be finite"));
        }
        let window = |duration: f64, pumping: bool| -> Result<(usize, Decay)> {
            let (steps, dt) = self.step_for(duration, pumping)?;
            Ok((steps, Decay::new(&self.material, dt.max(f64::MIN_POSITIVE))))
        };
        let (kp, dp) = window(sched.pump_duration, true)?;
        let (kw, dw) = window(sched.wait_duration, false)?;
        let (kq, dq) = window(sched.probe_duration, false)?;
        let wait = mat_pow(&step_matrix(&dw, [0.0, 0.0]), kw);
        let probe = mat_pow(&step_matrix(&dq, [0.0, 0.0]), kq);
        for i in 0..state.grid.n {
            let mut v = ClassPops::load(state, i).to_array();
            for (k, &shift) in shifts.iter().enumerate() {
                if k > 0 {
                    v = mat_apply(&probe, &v);
                }
                let (r1, r2) = self.rates(state.grid.freq(i), shift);
                let f = [-(-r1 * dp.dt).exp_m1(), -(-r2 * dp.dt).exp_m1()];
                v = mat_apply(&wait, &mat_apply(&mat_pow(&step_matrix(&dp, f), kp), &v));
            }
            ClassPops::from_array(v).store(state, i);
        }
        state.elapsed += sched.cycle_duration() * shifts.len() as f64 - sched.probe_duration;
        Ok(())
    }

    /// One preparation cycle: pump, wait, and (unless `last`) the probe gap.
    pub fn cycle(
        &self,
        state: &mut MediumState,
        sched: &EngraveSchedule,
        offset: &PumpOffset,
        last: bool,
    ) -> Result<()> {
        self.pump_window(state, sched.pump_duration, offset)?;
        self.dark(state, sched.wait_duration)?;
        if !last {
            self.dark(state, sched.probe_duration)?;
        }
        Ok(())
    }
}

/// Per-step decay factors `1 - exp(-dt / tau)`.
struct Decay {
    dt: f64,
    excited: f64,
    bottleneck: f64,
    zeeman: f64,
    branching: f64,
}

impl Decay {
    fn new(m: &MaterialParams, dt: f64) -> Self {
        Decay {
            dt,
            excited: -(-dt / m.t_excited).exp_m1(),
            bottleneck: -(-dt / m.t_bottleneck).exp_m1(),
            zeeman: -(-dt / m.t_zeeman).exp_m1(),
            branching: m.branching_spinflip,
        }
    }
}

#[derive(Clone, Copy)]
struct ClassPops {
    g: [f64; 2],
    e: [f64; 2],
    b: [f64; 2],
}

type Mat6 = [[f64; 6]; 6];

fn identity6() -> Mat6 {
    let mut m = [[0.0; 6]; 6];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn mat_mul(a: &Mat6, b: &Mat6) -> Mat6 {
    let mut c = [[0.0; 6]; 6];
    for i in 0..6 {
        for k in 0..6 {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..6 {
                    c[i][j] += aik * b[k][j];
                }
            }
        }
    }
    c
}

fn mat_pow(m: &Mat6, mut n: usize) -> Mat6 {
    let mut out = identity6();
    let mut base = *m;
    while n > 0 {
        if n & 1 == 1 {
            out = mat_mul(&out, &base);
        }
        n >>= 1;
        if n > 0 {
            base = mat_mul(&base, &base);
        }
    }
    out
}

fn mat_apply(m: &Mat6, v: &[f64; 6]) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

/// Linear map of one integrator step, built column by column from
/// [`ClassPops::step`] so both paths agree exactly.
fn step_matrix(k: &Decay, pump: [f64; 2]) -> Mat6 {
    let mut m = [[0.0; 6]; 6];
    for j in 0..6 {
        let mut e = [0.0; 6];
        e[j] = 1.0;
        let mut c = ClassPops::from_array(e);
        c.step(k, pump);
        for (i, v) in c.to_array().iter().enumerate() {
            m[i][j] = *v;
        }
    }
    m
}

impl ClassPops {
    fn to_array(self) -> [f64; 6] {
        [self.g[0], self.g[1], self.e[0], self.e[1], self.b[0], self.b[1]]
    }

    fn from_array(a: [f64; 6]) -> Self {
        ClassPops {
            g: [a[0], a[1]],
            e: [a[2], a[3]],
            b: [a[4], a[5]],
        }
    }

    #[inline]
    fn load(s: &MediumState, i: usize) -> Self {
        ClassPops {
            g: [s.pop_g1[i], s.pop_g2[i]],
            e: [s.excited[0][i], s.excited[1][i]],
            b: [s.bottleneck[0][i], s.bottleneck[1][i]],
        }
    }

    #[inline]
    fn store(&self, s: &mut MediumState, i: usize) {
        s.pop_g1[i] = self.g[0];
        s.pop_g2[i] = self.g[1];
        s.excited[0][i] = self.e[0];
        s.excited[1][i] = self.e[1];
        s.bottleneck[0][i] = self.b[0];
        s.bottleneck[1][i] = self.b[1];
    }

    /// Exponential-Euler step; every transfer leaves one pool and enters
    /// another, so the class total is conserved to rounding.
    #[inline]
    fn step(&mut self, k: &Decay, pump: [f64; 2]) {
        let x = [self.g[0] * pump[0], self.g[1] * pump[1]];
        let y = [self.e[0] * k.excited, self.e[1] * k.excited];
        let z = [self.b[0] * k.bottleneck, self.b[1] * k.bottleneck];
        let stay = 1.0 - k.branching;
        self.g[0] += stay * z[0] + k.branching * z[1] - x[0];
        self.g[1] += stay * z[1] + k.branching * z[0] - x[1];
        self.e[0] += x[0] - y[0];
        self.e[1] += x[1] - y[1];
        self.b[0] += y[0] - z[0];
        self.b[1] += y[1] - z[1];
        let relax = 0.5 * (self.g[1] - self.g[0]) * k.zeeman;
        self.g[0] += relax;
        self.g[1] -= relax;
    }
}

/// Runs the full preparation schedule. The pump drifts linearly at
/// `sched.drift_rate` from the start of the sequence.
pub fn evolve(
    state: &MediumState,
    pump: &LineSpectrum,
    sched: &EngraveSchedule,
    m: &MaterialParams,
) -> Result<MediumState> {
    sched.validate()?;
    let total = sched.cycle_duration() * sched.cycles as f64;
    let engraver =
        Engraver::new(&state.grid, pump, m, sched.pump_rate, (sched.drift_rate * total).abs())?.with_step(sched.step);
    let mut out = state.clone();
    if sched.drift_rate == 0.0 {
        engraver.run_fixed(&mut out, sched)?;
        return Ok(out);
    }
    let mut t = 0.0;
    for c in 0..sched.cycles {
        let offset = PumpOffset::Ramp {
            start: sched.drift_rate * t,
            rate: sched.drift_rate,
        };
        let last = c + 1 == sched.cycles;
        engraver.cycle(&mut out, sched, &offset, last)?;
        t += sched.cycle_duration();
    }
    Ok(out)
}

/// Optical depth seen by a weak monochromatic probe on `probe_grid`.
///
/// Classes outside the state's grid are unpumped, so the spectrum returns
/// to `d_peak` away from the engraved window.
pub fn absorption_spectrum(state: &MediumState, probe_grid: &FrequencyGrid, m: &MaterialParams) -> Vec<f64> {
    let grid = &state.grid;
    let dev1: Vec<f64> = state.pop_g1.iter().map(|p| p - 0.5).collect();
    let dev2: Vec<f64> = state.pop_g2.iter().map(|p| p - 0.5).collect();
    let kernel = probe_kernel(grid, m.gamma_h);
    let conv = convolve_same(&[dev1, dev2], &kernel);
    let norm = m.d_peak / m.strength_per_level();
    let tr = m.transitions();
    probe_grid
        .frequencies()
        .map(|nu| {
            let mut dev = 0.0;
            for t in &tr {
                let c = &conv[level_index(t.ground)];
                dev += t.strength * grid.interpolate(c, nu - t.offset, 0.0);
            }
            m.d_peak + norm * dev
        })
        .collect()
}

/// Lorentzian probe kernel on the class grid, normalized to unit sum.
fn probe_kernel(grid: &FrequencyGrid, fwhm: f64) -> Vec<f64> {
    let n = grid.n as i64;
    let mut k: Vec<f64> = (-(n - 1)..n).map(|j| lorentzian(j as f64 * grid.df, fwhm)).collect();
    let s: f64 = k.iter().sum();
    for v in k.iter_mut() {
        *v /= s;
    }
    k
}

/// Linear convolution of each signal with a centred kernel of length
/// `2 n - 1`, output aligned with the input.
fn convolve_same(signals: &[Vec<f64>], kernel: &[f64]) -> Vec<Vec<f64>> {
    let n = signals[0].len();
    let len = (n + kernel.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut kf: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    kf.resize(len, Complex64::new(0.0, 0.0));
    fwd.process(&mut kf);
    // Pack two real signals into one complex transform when possible.
    let mut out = Vec::with_capacity(signals.len());
    for pair in signals.chunks(2) {
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (i, b) in buf.iter_mut().take(n).enumerate() {
            *b = Complex64::new(pair[0][i], pair.get(1).map_or(0.0, |s| s[i]));
        }
        fwd.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&kf) {
            *b *= k;
        }
        inv.process(&mut buf);
        let scale = 1.0 / len as f64;
        let offset = n - 1;
        out.push((0..n).map(|i| buf[i + offset].re * scale).collect());
        if pair.len() == 2 {
            out.push((0..n).map(|i| buf[i + offset].im * scale).collect());
        }
    }
    out
}

/// Figures of merit of an engraved comb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombMetrics {
    pub contrast: f64,
    /// Depth of the periodic part, `mean(d_max) - d0`.
    pub d_comb: f64,
    /// Residual background, `mean(d_min)`.
    pub d0: f64,
    pub finesse: f64,
    /// False when no structure at `nu_m` was found; the other fields are
    /// then contrast 0 and the flat level.
    pub periodic: bool,
}

/// Comb analysis over the whole periods contained in the window.
pub fn comb_metrics(d: &[f64], grid: &FrequencyGrid, nu_m: f64) -> Result<CombMetrics> {
    if d.len() != grid.n {
        return Err(Error::param("d", "spectrum length does not match grid"));
    }
    let periods = grid.span() / nu_m;
    if periods < 5.0 {
        return Err(Error::TooFewPeriods { periods });
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let (lo, hi) = d.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let flat = CombMetrics {
        contrast: 0.0,
        d_comb: 0.0,
        d0: mean,
        finesse: 0.0,
        periodic: false,
    };
    if hi - lo <= 1e-9 * mean.abs().max(1e-12) {
        return Ok(flat);
    }
    // First harmonic at nu_m locates the tooth centres.
    let h: Complex64 = grid
        .frequencies()
        .zip(d)
        .map(|(f, &v)| (v - mean) * Complex64::from_polar(1.0, -2.0 * PI * f / nu_m))
        .sum::<Complex64>()
        / d.len() as f64;
    if 2.0 * h.norm() < 0.05 * (hi - lo) {
        return Ok(flat);
    }
    // Teeth peak where 2 pi f / nu_m + arg(h) = 0 (mod 2 pi).
    let peak_phase = -h.arg() / (2.0 * PI) * nu_m;
    let first_start = peak_phase - 0.5 * nu_m;
    let k0 = ((grid.start() - first_start) / nu_m).ceil();
    let mut starts = Vec::new();
    let mut k = k0;
    while first_start + (k + 1.0) * nu_m <= grid.end() {
        starts.push(first_start + k * nu_m);
        k += 1.0;
    }
    // Average tooth rebuilt from the harmonics of the whole periods, so it
    // moves continuously with the data and is not blunted between samples.
    let (s0, s1) = (starts[0], starts[starts.len() - 1] + nu_m);
    let idx = grid.position(s0).ceil().max(0.0) as usize..(grid.position(s1).ceil() as usize).min(grid.n);
    let count = idx.len() as f64;
    let seg_mean = d[idx.clone()].iter().sum::<f64>() / count;
    let per_period = nu_m / grid.df;
    let harmonics = (((per_period - 1.0) / 2.0).floor() as usize).clamp(1, 64);
    let coeffs: Vec<Complex64> = (1..=harmonics)
        .map(|k| {
            idx.clone()
                .map(|i| {
                    (d[i] - seg_mean) * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * (grid.freq(i) - s0) / nu_m)
                })
                .sum::<Complex64>()
                * (2.0 / count)
        })
        .collect();
    let bins = 256;
    let profile: Vec<f64> = (0..bins)
        .map(|b| {
            let phase = 2.0 * PI * (b as f64 + 0.5) / bins as f64;
            seg_mean
                + coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| (c * Complex64::from_polar(1.0, (k + 1) as f64 * phase)).re)
                    .sum::<f64>()
        })
        .collect();
    let d_max = profile.iter().cloned().fold(f64::MIN, f64::max);
    let d_min = profile.iter().cloned().fold(f64::MAX, f64::min);
    let contrast = if d_max + d_min > 0.0 {
        (d_max - d_min) / (d_max + d_min)
    } else {
        0.0
    };
    Ok(CombMetrics {
        contrast,
        d_comb: d_max - d_min,
        d0: d_min,
        finesse: nu_m / profile_fwhm(&profile, nu_m),
        periodic: true,
    })
}

/// Full width at half height (between the profile's min and max) of the
/// averaged tooth, in Hz.
fn profile_fwhm(profile: &[f64], period: f64) -> f64 {
    let filled = profile;
    let (lo, hi) = filled
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let half = 0.5 * (lo + hi);
    let n = filled.len();
    let above = filled.iter().filter(|&&v| v >= half).count();
    // Refine with linear crossings on either side of the maximum.
    let imax = filled
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let crossing = |dir: isize| -> Option<f64> {
        let mut i = imax as isize;
        for _ in 0..n {
            let j = i + dir;
            let (a, b) = (
                filled[i.rem_euclid(n as isize) as usize],
                filled[j.rem_euclid(n as isize) as usize],
            );
            if b < half {
                let frac = (a - half) / (a - b);
                return Some((i - imax as isize) as f64 + dir as f64 * frac);
            }
            i = j;
        }
        None
    };
    let bin = period / n as f64;
    match (crossing(-1), crossing(1)) {
        (Some(l), Some(r)) => (r - l).abs() * bin,
        _ => above as f64 * bin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::shb_pattern;

    fn narrow_material() -> MaterialParams {
        MaterialParams {
            gamma_h: 20e3,
            gamma_laser: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn empty_pump_has_no_rate() {
        let m = MaterialParams::default();
        assert_eq!(pump_rate_per_class(0.0, &LineSpectrum::empty(), &m, 1.0), (0.0, 0.0));
    }

    #[test]
    fn single_line_rate_halves_at_hwhm() {
        let m = MaterialParams {
            cross_strength: 0.0,
            ..Default::default()
        };
        let pump = LineSpectrum::monochromatic(0.0);
        // class whose strong g1 line (delta + delta_e) sits on the pump
        let delta = -m.delta_e;
        let (peak, _) = pump_rate_per_class(delta, &pump, &m, 1.0);
        let hw = 0.5 * m.pump_linewidth();
        let (half, _) = pump_rate_per_class(delta + hw, &pump, &m, 1.0);
        assert!((peak - 1.0).abs() < 1e-12);
        assert!((half - 0.5).abs() < 1e-12);
        for d in [-1e6, -0.3e6, 0.2e6] {
            assert!(pump_rate_per_class(delta + d, &pump, &m, 1.0).0 <= peak);
        }
    }

    #[test]
    fn no_pump_relaxes_to_thermal() {
        let m = MaterialParams::default();
        let grid = FrequencyGrid::new(0.0, 10e3, 64).unwrap();
        let mut s = MediumState::unpumped(grid);
        s.pop_g1.iter_mut().for_each(|p| *p = 0.7);
        s.pop_g2.iter_mut().for_each(|p| *p = 0.3);
        let sched = EngraveSchedule {
            cycles: 3,
            ..Default::default()
        };
        let out = evolve(&s, &LineSpectrum::empty(), &sched, &m).unwrap();
        let dt = sched.cycle_duration() * 3.0 - sched.probe_duration;
        let expect = 0.2 * (-dt / m.t_zeeman).exp();
        for (a, b) in out.pop_g1.iter().zip(&out.pop_g2) {
            assert!(((a - b) - 2.0 * expect * 0.5 * 2.0).abs() < 1e-3, "{a} {b}");
            assert!((a + b - 1.0).abs() < 1e-12);
        }
        // untouched thermal state is a fixed point
        let s = MediumState::unpumped(grid);
        let out = evolve(&s, &LineSpectrum::empty(), &sched, &m).unwrap();
        assert!(out.pop_g1.iter().all(|p| (p - 0.5).abs() < 1e-12));
    }

    #[test]
    fn forced_step_is_checked() {
        let m = MaterialParams::default();
        let grid = FrequencyGrid::new(0.0, 10e3, 16).unwrap();
        let s = MediumState::unpumped(grid);
        let sched = EngraveSchedule {
            step: Some(1e-3),
            cycles: 1,
            ..Default::default()
        };
        let err = evolve(&s, &LineSpectrum::monochromatic(0.0), &sched, &m).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
        let sched = EngraveSchedule {
            step: Some(5e-6),
            cycles: 1,
            pump_rate: 100.0,
            ..Default::default()
        };
        assert!(evolve(&s, &LineSpectrum::monochromatic(0.0), &sched, &m).is_ok());
    }

    #[test]
    fn unpumped_spectrum_is_flat() {
        let m = MaterialParams::default();
        let grid = FrequencyGrid::new(0.0, 12.5e3, 400).unwrap();
        let s = MediumState::unpumped(grid);
        let probe = FrequencyGrid::new(0.0, 7e3, 300).unwrap();
        let d = absorption_spectrum(&s, &probe, &m);
        assert!(d.iter().all(|v| (v - m.d_peak).abs() < 1e-12));
    }

    #[test]
    fn monochromatic_burn_matches_pattern() {
        let m = narrow_material();
        let grid = FrequencyGrid::spanning(-6.5e6, 4e6, 4e3).unwrap();
        let s = MediumState::unpumped(grid);
        let sched = EngraveSchedule {
            cycles: 4,
            pump_rate: 50.0,
            ..Default::default()
        };
        let out = evolve(&s, &LineSpectrum::monochromatic(0.0), &sched, &m).unwrap();
        let probe = FrequencyGrid::spanning(-3.5e6, 3.5e6, 4e3).unwrap();
        let d = absorption_spectrum(&out, &probe, &m);
        let pat = shb_pattern(&m);
        let is_min = |f: f64| {
            let i = probe.nearest_index(f).unwrap();
            (i.saturating_sub(3)..=i + 3)
                .min_by(|&a, &b| d[a].total_cmp(&d[b]))
                .unwrap()
        };
        let is_max = |f: f64| {
            let i = probe.nearest_index(f).unwrap();
            (i.saturating_sub(3)..=i + 3)
                .max_by(|&a, &b| d[a].total_cmp(&d[b]))
                .unwrap()
        };
        for &(o, _) in &pat.holes {
            let i = is_min(o);
            assert!((probe.freq(i) - o).abs() <= probe.df, "hole {o}");
            assert!(d[i] < m.d_peak);
        }
        for &(o, w) in &pat.antiholes {
            if w < 0.01 {
                continue;
            }
            let i = is_max(o);
            assert!((probe.freq(i) - o).abs() <= probe.df, "antihole {o}");
            assert!(d[i] > m.d_peak);
        }
    }

    #[test]
    fn window_shifts_match_stepping() {
        let m = MaterialParams::default();
        let fm = crate::spectrum::FmParams::new(626e3, 3e6).unwrap();
        let pump = crate::spectrum::fm_sidebands(&fm, fm.default_truncation()).unwrap();
        let grid = MediumState::grid_for(&pump, &m, 25e3, 1e6).unwrap();
        let sched = EngraveSchedule {
            cycles: 3,
            ..Default::default()
        };
        let e = Engraver::new(&grid, &pump, &m, sched.pump_rate, 1e6).unwrap();

        let mut a = MediumState::unpumped(grid);
        let mut b = a.clone();
        e.run_fixed(&mut a, &sched).unwrap();
        e.run_windows(&mut b, &sched, &[0.0; 3]).unwrap();
        let diff = a
            .pop_g1
            .iter()
            .zip(&b.pop_g1)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");

        let shifts = [0.0, 40e3, -90e3];
        let mut c = MediumState::unpumped(grid);
        let mut d = c.clone();
        e.run_windows(&mut c, &sched, &shifts).unwrap();
        for (k, &sh) in shifts.iter().enumerate() {
            e.cycle(&mut d, &sched, &PumpOffset::Constant(sh), k + 1 == shifts.len())
                .unwrap();
        }
        let diff = c
            .pop_g1
            .iter()
            .zip(&d.pop_g1)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
        assert!((c.elapsed - d.elapsed).abs() < 1e-12);
    }

    #[test]
    fn square_comb_metrics() {
        // Half-period plateaus joined by raised-cosine edges a tenth of a
        // period wide, so the tooth is resolved by the sampled harmonics.
        let nu_m = 100e3;
        let grid = FrequencyGrid::new(0.0, 1e3, 1001).unwrap();
        let edge = |u: f64| 0.5 - 0.5 * (PI * u.clamp(0.0, 1.0)).cos();
        let d: Vec<f64> = grid
            .frequencies()
            .map(|f| {
                let x = (f / nu_m).rem_euclid(1.0);
                2.0 * if x >= 0.75 {
                    edge((x - 0.95) / 0.1)
                } else if x < 0.25 {
                    edge((x + 0.05) / 0.1)
                } else {
                    1.0 - edge((x - 0.45) / 0.1)
                }
            })
            .collect();
        let cm = comb_metrics(&d, &grid, nu_m).unwrap();
        assert!(cm.periodic);
        assert!((cm.contrast - 1.0).abs() < 5e-3, "{cm:?}");
        assert!(cm.d0.abs() < 5e-3);
        assert!((cm.d_comb - 2.0).abs() < 1e-2);
        assert!((cm.finesse - 2.0).abs() < 0.05, "{}", cm.finesse);
    }

    #[test]
    fn metrics_are_continuous_in_the_data() {
        let nu_m = 626e3;
        let grid = FrequencyGrid::new(0.0, nu_m / 50.0, 801).unwrap();
        let d = crate::propagation::synthetic_comb(&grid, nu_m, 3.0, 1.0, 0.5, crate::propagation::PeakShape::Gaussian);
        let a = comb_metrics(&d, &grid, nu_m).unwrap();
        for eps in [1e-15, -1e-15, 1e-12] {
            let bumped: Vec<f64> = d.iter().enumerate().map(|(i, v)| v + eps * (i % 7) as f64).collect();
            let b = comb_metrics(&bumped, &grid, nu_m).unwrap();
            assert!((a.contrast - b.contrast).abs() < 1e-9, "{a:?} {b:?}");
        }
    }

    #[test]
    fn flat_spectrum_is_aperiodic() {
        let grid = FrequencyGrid::new(0.0, 1e3, 1001).unwrap();
        let cm = comb_metrics(&vec![1.5; 1001], &grid, 100e3).unwrap();
        assert!(!cm.periodic);
        assert_eq!(cm.contrast, 0.0);
        assert!(comb_metrics(&vec![1.5; 1001], &grid, 300e3).is_err());
    }

    #[test]
    fn gaussian_comb_finesse() {
        let nu_m = 100e3;
        let fwhm = 20e3;
        let grid = FrequencyGrid::new(0.0, 500.0, 4001).unwrap();
        let d: Vec<f64> = grid
            .frequencies()
            .map(|f| {
                let x = (f / nu_m).round() * nu_m - f;
                1.0 + (-4.0 * 2f64.ln() * x * x / (fwhm * fwhm)).exp()
            })
            .collect();
        let cm = comb_metrics(&d, &grid, nu_m).unwrap();
        assert!((cm.finesse - 5.0).abs() < 0.1, "{}", cm.finesse);
        assert!((cm.d0 - 1.0).abs() < 1e-6);
        assert!((cm.d_comb - 1.0).abs() < 1e-3);
    }
}
