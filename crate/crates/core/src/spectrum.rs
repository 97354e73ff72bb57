//! Pump and probe light: FM sideband synthesis, the resonant RLC drive of
//! the electro-optic prism, and the Mach-Zehnder pulse train.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Frequency modulation of the laser: spacing `nu_m` between sidebands and
/// peak deviation `deviation`. The modulation index is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FmParamsRaw", into = "FmParamsRaw")]
pub struct FmParams {
    nu_m: f64,
    deviation: f64,
    index: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FmParamsRaw {
    nu_m_hz: f64,
    deviation_hz: f64,
}

impl TryFrom<FmParamsRaw> for FmParams {
    type Error = Error;
    fn try_from(r: FmParamsRaw) -> Result<Self> {
        FmParams::new(r.nu_m_hz, r.deviation_hz)
    }
}

impl From<FmParams> for FmParamsRaw {
    fn from(p: FmParams) -> Self {
        FmParamsRaw {
            nu_m_hz: p.nu_m,
            deviation_hz: p.deviation,
        }
    }
}

impl FmParams {
    pub fn new(nu_m: f64, deviation: f64) -> Result<Self> {
        if !(nu_m > 0.0) || !nu_m.is_finite() {
            return Err(Error::param("nu_m", format!("must be finite and > 0, got {nu_m}")));
        }
        if !(deviation >= 0.0) || !deviation.is_finite() {
            return Err(Error::param(
                "deviation",
                format!("must be finite and >= 0, got {deviation}"),
            ));
        }
        Ok(FmParams {
            nu_m,
            deviation,
            index: deviation / nu_m,
        })
    }

    /// Builds the parameters from a modulation index rather than a deviation.
    pub fn with_index(nu_m: f64, index: f64) -> Result<Self> {
        if !index.is_finite() {
            return Err(Error::param("index", "modulation index must be finite"));
        }
        FmParams::new(nu_m, index * nu_m)
    }

    pub fn nu_m(&self) -> f64 {
        self.nu_m
    }

    pub fn deviation(&self) -> f64 {
        self.deviation
    }

    pub fn index(&self) -> f64 {
        self.index
    }

    /// Smallest truncation order accepted by [`fm_sidebands`].
    pub fn minimum_truncation(&self) -> usize {
        self.index.ceil() as usize + 2
    }

    /// Default truncation order: past the turning point by four widths
    /// of the Bessel transition zone (`beta^(1/3)`) plus 8.
    pub fn default_truncation(&self) -> usize {
        self.truncation_for_jitter(0.0)
    }

    /// Default truncation when the index spreads by `index_jitter` (rad).
    pub fn truncation_for_jitter(&self, index_jitter: f64) -> usize {
        let top = self.index + 3.0 * index_jitter.abs();
        (top + 4.0 * top.cbrt()).ceil() as usize + 8
    }
}

/// One pump line: offset from the carrier (Hz) and real field amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub offset: f64,
    pub weight: f64,
}

/// Discrete line spectrum with strictly increasing offsets.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LineSpectrum {
    lines: Vec<SpectralLine>,
}

impl LineSpectrum {
    pub fn new(mut lines: Vec<SpectralLine>) -> Result<Self> {
        if lines.iter().any(|l| !l.offset.is_finite() || !l.weight.is_finite()) {
            return Err(Error::param("lines", "offsets and weights must be finite"));
        }
        lines.sort_by(|a, b| a.offset.total_cmp(&b.offset));
        if lines.windows(2).any(|w| w[1].offset <= w[0].offset) {
            return Err(Error::param("lines", "duplicate line offsets"));
        }
        Ok(LineSpectrum { lines })
    }

    pub fn empty() -> Self {
        LineSpectrum::default()
    }

    /// Single unit-weight line at `offset`.
    pub fn monochromatic(offset: f64) -> Self {
        LineSpectrum {
            lines: vec![SpectralLine { offset, weight: 1.0 }],
        }
    }

    pub fn lines(&self) -> &[SpectralLine] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Total power, the sum of squared weights.
    pub fn normalization(&self) -> f64 {
        self.lines.iter().map(|l| l.weight * l.weight).sum()
    }

    /// Power carried by lines with `|offset| <= half_width`.
    pub fn power_within(&self, half_width: f64) -> f64 {
        self.lines
            .iter()
            .filter(|l| l.offset.abs() <= half_width)
            .map(|l| l.weight * l.weight)
            .sum()
    }

    /// Copy with every line moved by `shift` Hz.
    pub fn shifted(&self, shift: f64) -> Self {
        LineSpectrum {
            lines: self
                .lines
                .iter()
                .map(|l| SpectralLine {
                    offset: l.offset + shift,
                    weight: l.weight,
                })
                .collect(),
        }
    }

    pub fn min_offset(&self) -> Option<f64> {
        self.lines.first().map(|l| l.offset)
    }

    pub fn max_offset(&self) -> Option<f64> {
        self.lines.last().map(|l| l.offset)
    }

    /// Weight of the line closest to `offset`, if one lies within `tol`.
    pub fn weight_at(&self, offset: f64, tol: f64) -> Option<f64> {
        self.lines
            .iter()
            .find(|l| (l.offset - offset).abs() <= tol)
            .map(|l| l.weight)
    }
}

/// Bessel functions of the first kind `J_0(x) ..= J_{order}(x)`.
///
/// Miller's backward recurrence, normalized with
/// `J_0 + 2 * sum_k J_{2k} = 1`. Stable for any order and argument.
pub fn bessel_j_sequence(order: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = order.max(ax.ceil() as usize);
    // Start well above both the order and the turning point.
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;

    let mut j_next = 0.0;
    let mut j_cur = 1e-300;
    let mut norm = 0.0;
    let mut tail = vec![0.0; order + 1];
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / ax * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // j_cur now holds J_{k-1}
        let idx = k - 1;
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j_cur;
        }
        if idx <= order {
            tail[idx] = j_cur;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            for v in tail.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += j_cur;
    for (o, t) in out.iter_mut().zip(&tail) {
        *o = t / norm;
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// FM sideband comb: lines at `k * nu_m` for `|k| <= truncation_order`
/// with weights `J_k(beta)`.
pub fn fm_sidebands(p: &FmParams, truncation_order: usize) -> Result<LineSpectrum> {
    let beta = p.index();
    if !beta.is_finite() {
        return Err(Error::param("index", "modulation index must be finite"));
    }
    let required = p.minimum_truncation();
    if truncation_order < required {
        return Err(Error::InsufficientTruncation {
            order: truncation_order,
            index: beta,
            required,
        });
    }
    if beta == 0.0 {
        return Ok(LineSpectrum::monochromatic(0.0));
    }
    let j = bessel_j_sequence(truncation_order, beta);
    let n = truncation_order as i64;
    let lines = (-n..=n)
        .map(|k| {
            let mag = j[k.unsigned_abs() as usize];
            let weight = if k < 0 && k % 2 != 0 { -mag } else { mag };
            SpectralLine {
                offset: k as f64 * p.nu_m(),
                weight,
            }
        })
        .collect();
    Ok(LineSpectrum { lines })
}

/// Time-averaged sideband powers when the modulation index fluctuates
/// with Gaussian spread `index_jitter` (rad) around its nominal value.
///
/// Line weights are `sqrt(<J_k^2>)`; phases are meaningless after
/// averaging, so all weights are non-negative. Zero jitter reproduces the
/// magnitudes of [`fm_sidebands`].
pub fn fm_sidebands_jittered(p: &FmParams, truncation_order: usize, index_jitter: f64) -> Result<LineSpectrum> {
    if !(index_jitter >= 0.0) || !index_jitter.is_finite() {
        return Err(Error::param("index_jitter", "must be finite and >= 0"));
    }
    if index_jitter == 0.0 {
        let lines = fm_sidebands(p, truncation_order)?
            .lines
            .into_iter()
            .map(|l| SpectralLine {
                weight: l.weight.abs(),
                ..l
            })
            .collect();
        return Ok(LineSpectrum { lines });
    }
    let beta = p.index();
    let required = (beta + 3.0 * index_jitter).ceil() as usize + 2;
    if truncation_order < required {
        return Err(Error::InsufficientTruncation {
            order: truncation_order,
            index: beta + 3.0 * index_jitter,
            required,
        });
    }
    const NODES: usize = 65;
    let mut power = vec![0.0; truncation_order + 1];
    let mut total = 0.0;
    for i in 0..NODES {
        let x = -3.0 + 6.0 * i as f64 / (NODES - 1) as f64;
        let w = (-0.5 * x * x).exp();
        let j = bessel_j_sequence(truncation_order, beta + x * index_jitter);
        for (acc, v) in power.iter_mut().zip(&j) {
            *acc += w * v * v;
        }
        total += w;
    }
    let n = truncation_order as i64;
    let lines = (-n..=n)
        .map(|k| SpectralLine {
            offset: k as f64 * p.nu_m(),
            weight: (power[k.unsigned_abs() as usize] / total).sqrt(),
        })
        .collect();
    Ok(LineSpectrum { lines })
}

/// Carson bandwidth `2 (deviation + nu_m)`.
pub fn carson_bandwidth(p: &FmParams) -> f64 {
    2.0 * (p.deviation() + p.nu_m())
}

/// Mechanical resonance of the electro-optic crystal, modelled as a
/// Lorentzian notch in the drive response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiezoResonance {
    pub frequency_hz: f64,
    pub width_hz: f64,
    /// Fractional dip at the centre, in `[0, 1)`.
    pub depth: f64,
}

/// Series RLC circuit whose capacitor is the EOP electrode pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlcParams {
    #[serde(rename = "resistance_ohm")]
    pub resistance: f64,
    #[serde(rename = "inductance_h")]
    pub inductance: f64,
    #[serde(rename = "capacitance_f")]
    pub capacitance: f64,
    pub drive_vpp: f64,
    /// Laser frequency response to the capacitor voltage (Hz/V).
    #[serde(rename = "tuning_rate_hz_per_v")]
    pub tuning_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub piezo: Option<PiezoResonance>,
}

impl Default for RlcParams {
    fn default() -> Self {
        RlcParams {
            resistance: 55.0,
            inductance: 470e-6,
            capacitance: 143e-12,
            drive_vpp: 10.8,
            tuning_rate: 10e6,
            piezo: None,
        }
    }
}

impl RlcParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("resistance", self.resistance),
            ("inductance", self.inductance),
            ("capacitance", self.capacitance),
            ("tuning_rate", self.tuning_rate),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.drive_vpp >= 0.0) || !self.drive_vpp.is_finite() {
            return Err(Error::param("drive_vpp", "must be finite and >= 0"));
        }
        if let Some(pz) = &self.piezo {
            if !(pz.width_hz > 0.0) || !(0.0..1.0).contains(&pz.depth) {
                return Err(Error::param("piezo", "width must be > 0 and depth in [0, 1)"));
            }
        }
        Ok(())
    }

    /// `1 / (2 pi sqrt(L C))`.
    pub fn resonance_frequency(&self) -> f64 {
        1.0 / (2.0 * PI * (self.inductance * self.capacitance).sqrt())
    }

    /// `(1 / R) sqrt(L / C)`.
    pub fn quality_factor(&self) -> f64 {
        (self.inductance / self.capacitance).sqrt() / self.resistance
    }

    /// Sets `tuning_rate` so the current drive produces `deviation` at `f_mod`.
    pub fn calibrated(mut self, f_mod: f64, deviation: f64) -> Result<Self> {
        if !(self.drive_vpp > 0.0) {
            return Err(Error::param("drive_vpp", "calibration needs a nonzero drive"));
        }
        let g = rlc_gain(
            &RlcParams {
                tuning_rate: 1.0,
                ..self
            },
            f_mod,
        )?
        .norm();
        self.tuning_rate = deviation / (0.5 * self.drive_vpp * g);
        Ok(self)
    }
}

/// Capacitor-to-source voltage ratio `Z_C / (R + Z_L + Z_C)`.
pub fn rlc_gain(p: &RlcParams, f: f64) -> Result<Complex64> {
    if !(f >= 0.0) || !f.is_finite() {
        return Err(Error::param("f", format!("frequency must be finite and >= 0, got {f}")));
    }
    if f == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let w = 2.0 * PI * f;
    let z_c = Complex64::new(0.0, -1.0 / (w * p.capacitance));
    let z_l = Complex64::new(0.0, w * p.inductance);
    let mut h = z_c / (p.resistance + z_l + z_c);
    if let Some(pz) = &p.piezo {
        let x = 2.0 * (f - pz.frequency_hz) / pz.width_hz;
        h *= 1.0 - pz.depth / (1.0 + x * x);
    }
    Ok(h)
}

/// Peak frequency deviation produced by the drive at `f_mod`.
pub fn drive_to_deviation(p: &RlcParams, f_mod: f64) -> Result<f64> {
    if !(f_mod > 0.0) {
        return Err(Error::param("f_mod", format!("must be > 0, got {f_mod}")));
    }
    Ok(p.tuning_rate * 0.5 * p.drive_vpp * rlc_gain(p, f_mod)?.norm())
}

/// Uniformly sampled complex field envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSignal {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<Complex64>,
}

impl TimeSignal {
    pub fn new(t0: f64, dt: f64, samples: Vec<Complex64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")));
        }
        if samples.is_empty() {
            return Err(Error::param("samples", "signal needs at least one sample"));
        }
        Ok(TimeSignal { t0, dt, samples })
    }

    /// Real-valued signal (e.g. a detected intensity) stored in the real part.
    pub fn from_real(t0: f64, dt: f64, values: &[f64]) -> Result<Self> {
        TimeSignal::new(t0, dt, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// `sum |E|^2 dt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.dt
    }

    /// Energy of samples with `start <= t < end`.
    pub fn energy_between(&self, start: f64, end: f64) -> f64 {
        self.index_range(start, end)
            .map(|i| self.samples[i].norm_sqr())
            .sum::<f64>()
            * self.dt
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }

    /// Indices with `start <= t < end`, clipped to the sampled range.
    pub fn index_range(&self, start: f64, end: f64) -> std::ops::Range<usize> {
        let lo = ((start - self.t0) / self.dt - 1e-9).ceil().max(0.0) as usize;
        let hi = ((end - self.t0) / self.dt - 1e-9).ceil().max(0.0) as usize;
        lo.min(self.len())..hi.min(self.len())
    }

    /// Copy padded with zeros to `total` samples.
    pub fn zero_padded(&self, total: usize) -> TimeSignal {
        let mut samples = self.samples.clone();
        if total > samples.len() {
            samples.resize(total, Complex64::new(0.0, 0.0));
        }
        TimeSignal {
            t0: self.t0,
            dt: self.dt,
            samples,
        }
    }

    pub fn scaled(&self, a: Complex64) -> TimeSignal {
        TimeSignal {
            t0: self.t0,
            dt: self.dt,
            samples: self.samples.iter().map(|s| s * a).collect(),
        }
    }
}

/// Drive settings of the Mach-Zehnder amplitude modulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseTrainParams {
    #[serde(rename = "f_mod_hz")]
    pub f_mod: f64,
    /// Sine amplitude of the drive in units of `V_pi`.
    pub v_over_vpi: f64,
    #[serde(rename = "bias_phase_rad")]
    pub bias_phase: f64,
    #[serde(rename = "duration_s")]
    pub duration: f64,
    #[serde(rename = "dt_s")]
    pub dt: f64,
}

impl Default for PulseTrainParams {
    fn default() -> Self {
        PulseTrainParams {
            f_mod: 800e6,
            // Vpi peak-to-peak around quadrature: full swing, one pulse per period.
            v_over_vpi: 0.5,
            bias_phase: PI / 2.0,
            duration: 1.375e-6,
            dt: 50e-12,
        }
    }
}

/// Field transmitted by the Mach-Zehnder modulator,
/// `cos(bias/2 + (pi/2) v sin(2 pi f t))`, gated to `[0, duration)`.
pub fn mz_pulse_train(f_mod: f64, v_over_vpi: f64, bias_phase: f64, duration: f64, dt: f64) -> Result<TimeSignal> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", "must be finite and > 0"));
    }
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::param("duration", "must be finite and > 0"));
    }
    if !(f_mod >= 0.0) || !f_mod.is_finite() {
        return Err(Error::param("f_mod", "must be finite and >= 0"));
    }
    let ratio = f_mod * dt;
    if ratio >= 0.5 {
        return Err(Error::Undersampled { ratio });
    }
    let n = ((duration / dt) - 1e-9).ceil().max(1.0) as usize;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            let arg = 0.5 * bias_phase + 0.5 * PI * v_over_vpi * (2.0 * PI * f_mod * t).sin();
            Complex64::new(arg.cos(), 0.0)
        })
        .collect();
    TimeSignal::new(0.0, dt, samples)
}

impl PulseTrainParams {
    pub fn generate(&self) -> Result<TimeSignal> {
        mz_pulse_train(self.f_mod, self.v_over_vpi, self.bias_phase, self.duration, self.dt)
    }

    /// Number of modulation periods inside the gate.
    pub fn periods(&self) -> f64 {
        self.duration * self.f_mod
    }
}
