//! Linear propagation through the engraved medium: causal transfer
//! function, FFT filtering of pulses, echo extraction and the detection
//! chain.
//!
//! Frequencies are offsets from the optical carrier, the same axis as the
//! absorption spectrum. A field component `exp(-i 2 pi nu t)` of the time
//! envelope maps to offset `nu`; a pure delay `tau` is the phase
//! `-2 pi nu tau`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fft;
use crate::spectrum::TimeSignal;
use crate::{Error, FrequencyGrid, Result};

/// Complex transmission `amplitude * exp(i phase)` of the medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    /// Grid on which `amplitude` and `phase` are sampled. It extends the
    /// absorption window on both sides with the background level.
    pub grid: FrequencyGrid,
    /// The absorption window the function was built from.
    pub core: FrequencyGrid,
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
    /// Optical depth far from the engraved window.
    pub background: f64,
}

/// Edge condition tolerance on the absorption window.
const EDGE_TOLERANCE: f64 = 0.01;

/// Builds the causal transfer function of an absorption profile `d`
/// sampled on `grid`. The phase is the discrete Hilbert transform of
/// `-d/2` after removing the edge background.
pub fn transfer_from_absorption(d: &[f64], grid: &FrequencyGrid) -> Result<TransferFunction> {
    let n = grid.n;
    if d.len() != n {
        return Err(Error::param("d", format!("expected {n} samples, got {}", d.len())));
    }
    if let Some(v) = d.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::param(
            "d",
            format!("optical depth must be finite and >= 0, got {v}"),
        ));
    }
    let (left, right) = (d[0], d[n - 1]);
    let background = 0.5 * (left + right);
    if (left - right).abs() > EDGE_TOLERANCE * background.max(1e-3) {
        return Err(Error::WindowTooNarrow { left, right });
    }
    let m = (2 * n).next_power_of_two();
    let off = (m - n) / 2;
    let start = grid.start() - off as f64 * grid.df;
    let ext = FrequencyGrid::new(start + 0.5 * (m - 1) as f64 * grid.df, grid.df, m)?;

    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (i, &v) in d.iter().enumerate() {
        buf[off + i] = Complex64::new(-0.5 * (v - background), 0.0);
    }
    fft::inverse(&mut buf);
    for v in buf.iter_mut().take(m / 2).skip(1) {
        *v *= 2.0;
    }
    for v in buf.iter_mut().skip(m / 2 + 1) {
        *v = Complex64::new(0.0, 0.0);
    }
    fft::forward(&mut buf);

    let amplitude = buf.iter().map(|v| (v.re - 0.5 * background).exp()).collect();
    let phase = buf.iter().map(|v| v.im).collect();
    Ok(TransferFunction {
        grid: ext,
        core: *grid,
        amplitude,
        phase,
        background,
    })
}

impl TransferFunction {
    /// Flat transmission `exp(-d/2)` over `grid`.
    pub fn uniform(grid: &FrequencyGrid, d: f64) -> Result<Self> {
        transfer_from_absorption(&vec![d; grid.n], grid)
    }

    /// Transmission at offset `f`, linearly interpolated in amplitude and
    /// phase. Beyond the sampled grid the medium is the flat background.
    pub fn at(&self, f: f64) -> Complex64 {
        let far = (-0.5 * self.background).exp();
        let a = self.grid.interpolate(&self.amplitude, f, far);
        let p = self.grid.interpolate(&self.phase, f, 0.0);
        Complex64::from_polar(a, p)
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.amplitude
            .iter()
            .zip(&self.phase)
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect()
    }

    /// Impulse response on the time axis conjugate to the grid, ordered
    /// from `-T/2` to `T/2` with `T = 1 / df`.
    pub fn impulse_response(&self) -> TimeSignal {
        let m = self.grid.n;
        let dt = 1.0 / (m as f64 * self.grid.df);
        let mut buf = self.values();
        fft::inverse(&mut buf);
        let f_start = self.grid.start();
        let samples = (0..m)
            .map(|j| {
                // j runs over times -T/2 .. T/2
                let n = (j + m / 2) % m;
                let t = j as f64 * dt - 0.5 * m as f64 * dt;
                buf[n] * Complex64::from_polar(1.0, 2.0 * PI * f_start * t)
            })
            .collect();
        TimeSignal {
            t0: -0.5 * m as f64 * dt,
            dt,
            samples,
        }
    }

    /// Share of impulse-response energy at negative times.
    pub fn pre_trigger_fraction(&self) -> f64 {
        let h = self.impulse_response();
        let total = h.energy();
        if total == 0.0 {
            return 0.0;
        }
        h.energy_between(h.t0, 0.0) / total
    }
}

/// Filters `signal` through `tf`. The signal is zero-padded to a power of
/// two; the output keeps the padded length so the echo fits.
pub fn propagate(signal: &TimeSignal, tf: &TransferFunction) -> Result<TimeSignal> {
    let n = signal.len().next_power_of_two();
    let mut buf = signal.zero_padded(n).samples;
    fft::forward(&mut buf);
    let total: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
    if total > 0.0 {
        let inside: f64 = buf
            .iter()
            .enumerate()
            .filter(|(k, _)| tf.core.contains(fft::bin_frequency(*k, n, signal.dt)))
            .map(|(_, v)| v.norm_sqr())
            .sum();
        let fraction = inside / total;
        if fraction < 0.99 {
            return Err(Error::SpectralLeakage { fraction });
        }
    }
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= tf.at(fft::bin_frequency(k, n, signal.dt));
    }
    fft::inverse(&mut buf);
    TimeSignal::new(signal.t0, signal.dt, buf)
}

/// Tooth profile of an idealized comb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakShape {
    Gaussian,
    Square,
}

/// Forward-echo efficiency of a periodic comb of teeth with peak depth
/// `d_comb` and finesse `finesse` on a flat background `d0`.
///
/// With `d_t` the mean tooth depth, the causal first harmonic of the
/// absorption has weight `d_t * s(F)` and the echo efficiency is
/// `(d_t s)^2 exp(-d_t) exp(-d0)`:
///
/// * Gaussian: `d_t = (d_comb / F) sqrt(pi / (4 ln 2))`,
///   `s^2 = exp(-pi^2 / (2 ln 2 F^2))` (about `exp(-7 / F^2)`).
/// * Square: `d_t = d_comb / F`, `s = sinc(pi / F)`.
pub fn afc_efficiency_analytic(d_comb: f64, finesse: f64, d0: f64, shape: PeakShape) -> f64 {
    let ln2 = 2f64.ln();
    let (dt, s2) = match shape {
        PeakShape::Gaussian => (
            d_comb / finesse * (PI / (4.0 * ln2)).sqrt(),
            (-PI * PI / (2.0 * ln2 * finesse * finesse)).exp(),
        ),
        PeakShape::Square => {
            let x = PI / finesse;
            let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
            (d_comb / finesse, sinc * sinc)
        }
    };
    dt * dt * s2 * (-dt).exp() * (-d0).exp()
}

/// Idealized comb `d0 + d_comb * sum_k tooth(nu - k spacing)` on `grid`,
/// teeth of width `spacing / finesse` centred on multiples of `spacing`.
pub fn synthetic_comb(
    grid: &FrequencyGrid,
    spacing: f64,
    finesse: f64,
    d_comb: f64,
    d0: f64,
    shape: PeakShape,
) -> Vec<f64> {
    let w = spacing / finesse;
    let reach = (4.0 * w / spacing).ceil() as i64 + 1;
    grid.frequencies()
        .map(|f| {
            let x = f - (f / spacing).round() * spacing;
            let teeth: f64 = (-reach..=reach)
                .map(|j| {
                    let u = x - j as f64 * spacing;
                    match shape {
                        PeakShape::Gaussian => (-4.0 * 2f64.ln() * u * u / (w * w)).exp(),
                        PeakShape::Square => {
                            let e = (u.abs() - 0.5 * w) / grid.df;
                            (0.5 - e).clamp(0.0, 1.0)
                        }
                    }
                })
                .sum();
            d0 + d_comb * teeth
        })
        .collect()
}

/// Gaussian pulse of intensity FWHM `fwhm` centred at `center`, sampled on
/// `[0, duration)`.
pub fn gaussian_pulse(center: f64, fwhm: f64, duration: f64, dt: f64) -> Result<TimeSignal> {
    if !(fwhm > 0.0) {
        return Err(Error::param("fwhm", "must be > 0"));
    }
    let n = ((duration / dt) - 1e-9).ceil().max(1.0) as usize;
    let a = 2.0 * 2f64.ln() / (fwhm * fwhm);
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 * dt - center;
            Complex64::new((-a * t * t).exp(), 0.0)
        })
        .collect();
    TimeSignal::new(0.0, dt, samples)
}

/// Detected intensity trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityTrace {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl IntensityTrace {
    pub fn of(signal: &TimeSignal) -> Self {
        IntensityTrace {
            t0: signal.t0,
            dt: signal.dt,
            values: signal.intensity(),
        }
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    fn index_range(&self, start: f64, end: f64) -> std::ops::Range<usize> {
        let lo = ((start - self.t0) / self.dt - 1e-9).ceil().max(0.0) as usize;
        let hi = ((end - self.t0) / self.dt - 1e-9).ceil().max(0.0) as usize;
        lo.min(self.values.len())..hi.min(self.values.len())
    }

    /// Splits `[start, end)` into slots of `period` centred on the pulses
    /// and measures each slot.
    pub fn mode_metrics(&self, start: f64, end: f64, period: f64) -> ModeMetrics {
        let range = self.index_range(start, end);
        // Pulse phase from the first harmonic of the modulation.
        let c: Complex64 = range
            .clone()
            .map(|i| self.values[i] * Complex64::from_polar(1.0, -2.0 * PI * self.time(i) / period))
            .sum();
        let peak = -c.arg() / (2.0 * PI) * period;
        let k0 = ((start - (peak - 0.5 * period)) / period - 1e-9).ceil();
        let mut slots = Vec::new();
        let mut k = k0;
        loop {
            let s = peak - 0.5 * period + k * period;
            if s + period > end + 1e-9 * period {
                break;
            }
            let r = self.index_range(s, s + period);
            if !r.is_empty() {
                let v = &self.values[r];
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
                let contrast = if hi + lo > 0.0 { (hi - lo) / (hi + lo) } else { 0.0 };
                slots.push((mean, contrast));
            }
            k += 1.0;
        }
        let envelope = slots.iter().map(|s| s.0).fold(0.0, f64::max);
        let counted: Vec<f64> = slots
            .iter()
            .filter(|s| envelope > 0.0 && s.0 >= 0.5 * envelope)
            .map(|s| s.1)
            .collect();
        ModeMetrics {
            mode_count: counted.len(),
            mean_contrast: if counted.is_empty() {
                0.0
            } else {
                counted.iter().sum::<f64>() / counted.len() as f64
            },
            per_mode_contrast: slots.iter().map(|s| s.1).collect(),
        }
    }
}

/// Pulse-slot statistics of an intensity trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMetrics {
    /// `(max - min) / (max + min)` of each slot.
    pub per_mode_contrast: Vec<f64>,
    /// Slots whose mean intensity reaches half of the largest slot mean.
    pub mode_count: usize,
    /// Mean contrast over the counted slots.
    pub mean_contrast: f64,
}

/// First-order low-pass `1 / (1 + i f / bandwidth)` applied to the
/// intensity of `signal`. An infinite bandwidth returns the raw intensity.
pub fn detector_filter(signal: &TimeSignal, bandwidth: f64) -> Result<IntensityTrace> {
    if !(bandwidth > 0.0) {
        return Err(Error::param("bandwidth", format!("must be > 0, got {bandwidth}")));
    }
    let raw = IntensityTrace::of(signal);
    if bandwidth.is_infinite() {
        return Ok(raw);
    }
    let n = raw.values.len();
    let mut buf: Vec<Complex64> = raw.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let f = fft::bin_frequency(k, n, raw.dt);
        *v /= Complex64::new(1.0, f / bandwidth);
    }
    fft::inverse(&mut buf);
    Ok(IntensityTrace {
        values: buf.iter().map(|v| v.re).collect(),
        ..raw
    })
}

/// Storage figures extracted from a propagated signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoReport {
    /// Echo energy over input energy.
    pub efficiency: f64,
    /// Peak echo intensity over peak input intensity.
    pub peak_ratio: f64,
    /// Echo time minus directly transmitted time (s).
    pub delay: f64,
    /// Energy left in the input window over input energy.
    pub transmitted_fraction: f64,
    pub echo_window: (f64, f64),
    pub per_mode_contrast: Vec<f64>,
    pub mode_count: usize,
    pub mean_mode_contrast: f64,
}

/// Measures the echo of `input` (occupying `input_window`) in `output`.
///
/// The echo window is the input window moved by `expected_delay` and
/// widened by half a `mode_period` on each side. The delay is refined by
/// intensity cross-correlation between the transmitted and echoed parts,
/// searched within half a mode period of `expected_delay`.
pub fn extract_echo(
    input: &TimeSignal,
    output: &TimeSignal,
    input_window: (f64, f64),
    expected_delay: f64,
    mode_period: f64,
) -> Result<EchoReport> {
    let (a, b) = input_window;
    if !(b > a) {
        return Err(Error::param("input_window", "end must be after start"));
    }
    if !(expected_delay > 0.0) || !(mode_period > 0.0) {
        return Err(Error::param("expected_delay", "delay and mode period must be > 0"));
    }
    let half = 0.5 * mode_period;
    let echo = (a + expected_delay - half, b + expected_delay + half);
    let t_max = output.t0 + output.len() as f64 * output.dt;
    if echo.0 < output.t0 || echo.1 > t_max {
        return Err(Error::WindowOutOfRange {
            start: echo.0,
            end: echo.1,
            t_min: output.t0,
            t_max,
        });
    }
    let e_in = input.energy();
    if !(e_in > 0.0) {
        return Err(Error::param("input", "input carries no energy"));
    }
    let efficiency = output.energy_between(echo.0, echo.1) / e_in;
    let transmitted_fraction = output.energy_between(a - half, b + half) / e_in;

    let trace = IntensityTrace::of(output);
    let peak_in = input.intensity().into_iter().fold(0.0, f64::max);
    let r = trace.index_range(echo.0, echo.1);
    let peak_out = trace.values[r].iter().cloned().fold(0.0, f64::max);
    let delay = correlation_delay(&trace, (a - half, b + half), expected_delay, half);
    let modes = trace.mode_metrics(echo.0, echo.1, mode_period);
    Ok(EchoReport {
        efficiency,
        peak_ratio: if peak_in > 0.0 { peak_out / peak_in } else { 0.0 },
        delay,
        transmitted_fraction,
        echo_window: echo,
        per_mode_contrast: modes.per_mode_contrast,
        mode_count: modes.mode_count,
        mean_mode_contrast: modes.mean_contrast,
    })
}

/// Lag maximizing `sum I(t) I(t + lag)` over the reference window, with
/// parabolic refinement.
fn correlation_delay(trace: &IntensityTrace, reference: (f64, f64), expected: f64, search: f64) -> f64 {
    let dt = trace.dt;
    let r = trace.index_range(reference.0, reference.1);
    let n = trace.values.len();
    let center = (expected / dt).round() as i64;
    let reach = (search / dt).ceil() as i64;
    let corr = |lag: i64| -> f64 {
        r.clone()
            .filter_map(|i| {
                let j = i as i64 + lag;
                (j >= 0 && (j as usize) < n).then(|| trace.values[i] * trace.values[j as usize])
            })
            .sum()
    };
    let lags: Vec<i64> = ((center - reach).max(1)..=center + reach).collect();
    let vals: Vec<f64> = lags.iter().map(|&l| corr(l)).collect();
    let (best, _) = vals
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .unwrap_or((0, &0.0));
    let mut lag = lags[best] as f64;
    if best > 0 && best + 1 < vals.len() {
        let (y0, y1, y2) = (vals[best - 1], vals[best], vals[best + 1]);
        let den = y0 - 2.0 * y1 + y2;
        if den < 0.0 {
            lag += 0.5 * (y0 - y2) / den;
        }
    }
    lag * dt
}
