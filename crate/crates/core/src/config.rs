//! Scenario configuration: a single versioned JSON document. Every section
//! is optional and falls back to the shipped defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engrave::EngraveSchedule;
use crate::material::MaterialParams;
use crate::servo::{DriftModel, LockConfig, ServoParams};
use crate::spectrum::{fm_sidebands_jittered, FmParams, LineSpectrum, PulseTrainParams, RlcParams};
use crate::{Error, FrequencyGrid, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Applied magnetic field (gauss).
    #[serde(default = "default_field", rename = "field_gauss")]
    pub field: f64,
    #[serde(default)]
    pub material: MaterialParams,
    #[serde(default)]
    pub fm: FmConfig,
    #[serde(default)]
    pub schedule: EngraveSchedule,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub servo: ServoConfig,
    #[serde(default)]
    pub storage: StorageConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_field() -> f64 {
    crate::material::FIELD_THRESHOLD_GAUSS
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            seeds: Seeds::default(),
            output_dir: default_output_dir(),
            field: default_field(),
            material: MaterialParams::default(),
            fm: FmConfig::default(),
            schedule: EngraveSchedule::default(),
            grid: GridConfig::default(),
            servo: ServoConfig::default(),
            storage: StorageConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    /// Seed of the laser drift random walk.
    pub drift: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { drift: 1 }
    }
}

/// Pump modulation and its electrical drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FmConfig {
    pub nu_m_hz: f64,
    pub deviation_hz: f64,
    /// RMS spread of the modulation index (rad); 0 gives ideal Bessel lines.
    pub index_jitter_rad: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_order: Option<usize>,
    pub rlc: RlcParams,
    /// Replace `rlc.tuning_rate_hz_per_v` by the value that makes the drive
    /// produce `deviation_hz` at `nu_m_hz`.
    pub calibrate_tuning: bool,
    /// Half-width of the RLC sweep around the modulation frequency (Hz).
    pub rlc_sweep_half_width_hz: f64,
    pub rlc_sweep_points: usize,
}

impl Default for FmConfig {
    fn default() -> Self {
        FmConfig {
            nu_m_hz: 626e3,
            deviation_hz: 465e6,
            index_jitter_rad: 1.5,
            truncation_order: None,
            rlc: RlcParams::default(),
            calibrate_tuning: true,
            rlc_sweep_half_width_hz: 300e3,
            rlc_sweep_points: 1201,
        }
    }
}

impl FmConfig {
    pub fn params(&self) -> Result<FmParams> {
        FmParams::new(self.nu_m_hz, self.deviation_hz)
    }

    /// Same modulation with another deviation.
    pub fn with_deviation(&self, deviation_hz: f64) -> FmConfig {
        FmConfig {
            deviation_hz,
            truncation_order: None,
            ..*self
        }
    }

    /// Drive circuit, calibrated when requested.
    pub fn drive(&self) -> Result<RlcParams> {
        if self.calibrate_tuning && self.rlc.drive_vpp > 0.0 {
            self.rlc.calibrated(self.nu_m_hz, self.deviation_hz)
        } else {
            Ok(self.rlc)
        }
    }

    pub fn pump(&self) -> Result<LineSpectrum> {
        let p = self.params()?;
        let order = self
            .truncation_order
            .unwrap_or_else(|| p.truncation_for_jitter(self.index_jitter_rad));
        fm_sidebands_jittered(&p, order, self.index_jitter_rad)
    }
}

/// Sampling of the medium and of the probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Spacing of the simulated frequency classes (Hz).
    pub class_df_hz: f64,
    /// Classes simulated beyond the pump band on each side (Hz).
    pub class_margin_hz: f64,
    pub probe_df_hz: f64,
    pub probe_half_span_hz: f64,
    /// Fraction of the pump band used for comb metrics.
    pub analysis_fraction: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            class_df_hz: 12.5e3,
            class_margin_hz: 2e6,
            probe_df_hz: 626e3 / 16.0,
            probe_half_span_hz: 2.5e9,
            analysis_fraction: 0.8,
        }
    }
}

impl GridConfig {
    pub fn probe(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::spanning(-self.probe_half_span_hz, self.probe_half_span_hz, self.probe_df_hz)
    }

    /// Window over which comb metrics are taken for a pump of half-width `band`.
    pub fn analysis(&self, band: f64) -> Result<FrequencyGrid> {
        let h = self.analysis_fraction * band;
        FrequencyGrid::spanning(-h, h, self.probe_df_hz)
    }
}

/// Locked engraving. The co-simulation runs on a comb of reduced
/// deviation so that a run takes seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServoConfig {
    pub params: ServoParams,
    pub drift: DriftModel,
    pub cycles: usize,
    pub enabled: bool,
    /// Deviation of the comb used in the co-simulation (Hz).
    pub deviation_hz: f64,
    /// Excitation rate scale for the co-simulation comb (1/s).
    pub pump_rate_per_s: f64,
    /// Ramp used to show erasure without the servo (Hz/s).
    pub erasure_drift_hz_per_s: f64,
    #[serde(rename = "record_every_s")]
    pub record_every: f64,
}

impl Default for ServoConfig {
    fn default() -> Self {
        let lock = LockConfig::default();
        ServoConfig {
            params: lock.servo,
            drift: lock.drift,
            cycles: lock.cycles,
            enabled: true,
            deviation_hz: 20e6,
            pump_rate_per_s: lock.pump_rate,
            erasure_drift_hz_per_s: 15e6,
            record_every: lock.record_every,
        }
    }
}

impl ServoConfig {
    pub fn lock(&self, seed: u64) -> LockConfig {
        LockConfig {
            servo: self.params,
            drift: self.drift.clone(),
            cycles: self.cycles,
            pump_rate: self.pump_rate_per_s,
            enabled: self.enabled,
            seed,
            record_every: self.record_every,
        }
    }
}

/// Pulses sent through the prepared medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StorageConfig {
    pub train: PulseTrainParams,
    pub pulse_center_s: f64,
    pub pulse_fwhm_s: f64,
    /// Length of the simulated time record (s).
    pub record_s: f64,
    pub detector_bandwidth_hz: f64,
    /// Span of the chirped probe sweep (Hz).
    pub probe_sweep_span_hz: f64,
}

impl Default for StorageConfig {
    fn default() -> Self {
        StorageConfig {
            train: PulseTrainParams::default(),
            pulse_center_s: 0.3e-6,
            pulse_fwhm_s: 5e-9,
            record_s: 6.4e-6,
            detector_bandwidth_hz: 1e9,
            probe_sweep_span_hz: 4e6,
        }
    }
}

/// Prefixes parameter errors with the section they came from.
fn within(section: &str, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::InvalidParameter { name, reason } => Error::config(format!("{section}.{name}"), reason),
        other => Error::config(section, other.to_string()),
    })
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and > 0, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        if !self.field.is_finite() || self.field < 0.0 {
            return Err(Error::config("field_gauss", "must be finite and >= 0"));
        }
        within("material", self.material.validate())?;
        within("fm", self.fm.params().map(|_| ()))?;
        if !(self.fm.index_jitter_rad >= 0.0) || !self.fm.index_jitter_rad.is_finite() {
            return Err(Error::config("fm.index_jitter_rad", "must be finite and >= 0"));
        }
        if let Some(order) = self.fm.truncation_order {
            let need = self.fm.params()?.minimum_truncation();
            if order < need {
                return Err(Error::config(
                    "fm.truncation_order",
                    format!("{order} is below the minimum {need}"),
                ));
            }
        }
        within("fm.rlc", self.fm.rlc.validate())?;
        positive("fm.rlc_sweep_half_width_hz", self.fm.rlc_sweep_half_width_hz)?;
        if self.fm.rlc_sweep_points < 2 {
            return Err(Error::config("fm.rlc_sweep_points", "need at least 2 points"));
        }
        within("schedule", self.schedule.validate())?;
        if self.schedule.cycles == 0 {
            return Err(Error::config("schedule.cycles", "must be >= 1"));
        }

        let g = &self.grid;
        positive("grid.class_df_hz", g.class_df_hz)?;
        positive("grid.probe_df_hz", g.probe_df_hz)?;
        positive("grid.probe_half_span_hz", g.probe_half_span_hz)?;
        if !(g.class_margin_hz >= 0.0) {
            return Err(Error::config("grid.class_margin_hz", "must be >= 0"));
        }
        if !(g.analysis_fraction > 0.0 && g.analysis_fraction <= 1.0) {
            return Err(Error::config("grid.analysis_fraction", "must lie in (0, 1]"));
        }
        let band = 0.5 * crate::spectrum::carson_bandwidth(&self.fm.params()?);
        if band + g.class_margin_hz > g.probe_half_span_hz {
            return Err(Error::config(
                "grid.probe_half_span_hz",
                format!(
                    "pump band plus margin ({:.4e} Hz) exceeds the probe window",
                    band + g.class_margin_hz
                ),
            ));
        }
        if 2.0 * self.fm.nu_m_hz * 5.0 > g.analysis_fraction * 2.0 * band {
            return Err(Error::config(
                "grid.analysis_fraction",
                "analysis window holds fewer than 5 comb periods",
            ));
        }

        within("servo.params", self.servo.params.validate())?;
        within("servo.drift", self.servo.drift.validate())?;
        positive("servo.deviation_hz", self.servo.deviation_hz)?;
        positive("servo.pump_rate_per_s", self.servo.pump_rate_per_s)?;
        positive("servo.record_every_s", self.servo.record_every)?;
        if !self.servo.erasure_drift_hz_per_s.is_finite() {
            return Err(Error::config("servo.erasure_drift_hz_per_s", "must be finite"));
        }
        if self.servo.cycles == 0 {
            return Err(Error::config("servo.cycles", "must be >= 1"));
        }

        let s = &self.storage;
        positive("storage.train.dt_s", s.train.dt)?;
        positive("storage.train.duration_s", s.train.duration)?;
        if !(s.train.f_mod >= 0.0) || s.train.f_mod * s.train.dt >= 0.5 {
            return Err(Error::config(
                "storage.train.f_mod_hz",
                "must be >= 0 and below the Nyquist rate of dt_s",
            ));
        }
        if 2.0 * s.train.f_mod > g.probe_half_span_hz {
            return Err(Error::config(
                "storage.train.f_mod_hz",
                "second train harmonic lies outside the probe window",
            ));
        }
        positive("storage.pulse_fwhm_s", s.pulse_fwhm_s)?;
        positive("storage.record_s", s.record_s)?;
        positive("storage.detector_bandwidth_hz", s.detector_bandwidth_hz)?;
        if !(s.probe_sweep_span_hz >= 0.0) || s.probe_sweep_span_hz > 2.0 * g.probe_half_span_hz {
            return Err(Error::config(
                "storage.probe_sweep_span_hz",
                "must lie within the probe window",
            ));
        }
        let echo_end = s.train.duration.max(s.pulse_center_s + 3.0 * s.pulse_fwhm_s) + 1.5 / self.fm.nu_m_hz;
        if s.record_s < echo_end {
            return Err(Error::config(
                "storage.record_s",
                format!("record must reach past the first echo ({echo_end:.3e} s)"),
            ));
        }
        Ok(())
    }

    /// Material at the configured field.
    pub fn medium(&self) -> MaterialParams {
        self.material.at_field(self.field)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path == "." { "<document>".to_string() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Returns a copy with `key=value` overrides applied. Keys are dotted
    /// paths; values are parsed as JSON and fall back to plain strings.
    pub fn with_overrides<S: AsRef<str>>(&self, sets: &[S]) -> Result<Self> {
        let mut tree = serde_json::to_value(self)?;
        for item in sets {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::config(item, "override must look like key=value"))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut tree, key, value)?;
        }
        Self::from_value(tree)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn set_path(tree: &mut Value, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(key, "empty path segment"));
    }
    let mut node = tree;
    for (i, part) in parts.iter().enumerate() {
        let here = parts[..=i].join(".");
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::config(&here, "parent is not an object"))?;
        if i + 1 == parts.len() {
            // Absent optional leaves may be set; unknown names fail on reparse.
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .get_mut(*part)
            .ok_or_else(|| Error::config(&here, "no such section"))?;
    }
    Ok(())
}
