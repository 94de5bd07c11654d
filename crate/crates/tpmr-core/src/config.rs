//! Run configuration: flat `section.key = value` text files, environment
//! overrides, and the preset scenarios behind the `fig*` commands.
//!
//! Unknown keys are rejected (typo protection), every range violation names
//! its field, and any key can be overridden through `TPMR_<KEY>` with dots
//! replaced by underscores (e.g. `TPMR_PUMP_FREQ=6.1`).

use crate::dynamics::{FrameMode, PumpPhase};
use crate::spectrum::{DepthModel, SweepAxis};
use crate::spin_model::NvParams;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("config line {line}: invalid value for {key}: {msg}")]
    BadValue { line: usize, key: String, msg: String },
    #[error("range error: {field}: {msg}")]
    Range { field: String, msg: String },
    #[error("environment override {var}: {msg}")]
    BadEnv { var: String, msg: String },
}

/// Output format of command summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Full run configuration with documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub nv: NvParams,
    /// Static field in mT; used only when `nv.zeeman` is not given.
    pub b0_mt: Option<f64>,
    /// Gyromagnetic ratio for the b0 conversion, MHz/mT.
    pub gyro_mhz_per_mt: f64,
    /// Effective two-level probe amplitude ω₁, MHz. The default is the π
    /// pulse over the probe duration: 1/(2·5.5 µs).
    pub probe_rabi: f64,
    /// Probe pulse length, µs.
    pub probe_duration: f64,
    /// Pump frequency, MHz.
    pub pump_freq: f64,
    /// Pump power, mW; converted through κ·√P unless `pump_rabi` is set.
    pub pump_power_mw: f64,
    /// Direct pump amplitude ω₂ override, MHz.
    pub pump_rabi: Option<f64>,
    /// Pump phase at probe start: averaged unless fixed.
    pub pump_phase: Option<f64>,
    /// Detuning grid (MHz relative to the central carrier).
    pub grid_start: f64,
    pub grid_stop: f64,
    pub grid_step: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Power-to-amplitude calibration κ, MHz/√mW.
    pub kappa: f64,
    pub contrast_scale: f64,
    pub width_ratio: f64,
    pub noise_sigma: f64,
    pub depth_model: DepthModel,
    pub k_max: i32,
    pub detuning_samples: usize,
    pub oracle_frame: FrameMode,
    /// Integration step override, µs (0 = automatic).
    pub oracle_dt: f64,
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    /// Peak-detection prominence (0 = automatic).
    pub fit_prominence: f64,
    /// Worker cap for parallel sections (0 = all cores).
    pub jobs: usize,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nv: NvParams::default(),
            b0_mt: None,
            gyro_mhz_per_mt: 28.024,
            probe_rabi: 1.0 / 11.0,
            probe_duration: 5.5,
            pump_freq: 5.3,
            pump_power_mw: 63.0,
            pump_rabi: None,
            pump_phase: None,
            grid_start: -9.0,
            grid_stop: 9.0,
            grid_step: 0.02,
            seed: 20260810,
            out_dir: PathBuf::from("out"),
            kappa: 0.19,
            contrast_scale: 0.017,
            width_ratio: 0.45,
            noise_sigma: 2.5e-4,
            depth_model: DepthModel::PulsedAmplitude,
            k_max: 3,
            detuning_samples: 32,
            oracle_frame: FrameMode::RotatingWave,
            oracle_dt: 0.0,
            sweep_axis: SweepAxis::PumpPower,
            sweep_values: vec![0.63, 2.0, 10.0, 31.6, 63.0],
            fit_prominence: 0.0,
            jobs: 0,
            format: OutputFormat::Csv,
        }
    }
}

/// Every recognized config key, in documentation order.
pub const CONFIG_KEYS: &[&str] = &[
    "nv.d_gs",
    "nv.zeeman",
    "nv.b0_mt",
    "nv.gyro_mhz_per_mt",
    "nv.a_hf",
    "nv.q_quad",
    "nv.t1",
    "nv.t2",
    "nv.t2_star",
    "probe.rabi",
    "probe.duration",
    "pump.freq",
    "pump.power_mw",
    "pump.rabi",
    "pump.phase",
    "grid.start",
    "grid.stop",
    "grid.step",
    "seed",
    "out.dir",
    "synth.kappa",
    "synth.contrast_scale",
    "synth.width_ratio",
    "synth.noise_sigma",
    "synth.depth_model",
    "frames.k_max",
    "oracle.detuning_samples",
    "oracle.frame",
    "oracle.dt",
    "sweep.axis",
    "sweep.values",
    "fit.prominence",
    "jobs",
    "format",
];

impl RunConfig {
    /// Parse a config file on top of the defaults, then apply environment
    /// overrides and check ranges.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut zeeman_given = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or(ConfigError::Malformed {
                line,
                msg: "expected key = value".into(),
            })?;
            let key = key.trim();
            if key == "nv.zeeman" {
                zeeman_given = true;
            }
            cfg.set_key(key, value.trim(), line)?;
        }
        if !zeeman_given {
            if let Some(b0) = cfg.b0_mt {
                cfg.nv.zeeman = b0 * cfg.gyro_mhz_per_mt;
            }
        }
        cfg.apply_env()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply `TPMR_<KEY>` environment overrides (dots → underscores).
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        for key in CONFIG_KEYS {
            let var = format!("TPMR_{}", key.replace('.', "_").to_uppercase());
            if let Ok(value) = std::env::var(&var) {
                self.set_key(key, &value, 0).map_err(|e| ConfigError::BadEnv {
                    var: var.clone(),
                    msg: e.to_string(),
                })?;
            }
        }
        Ok(())
    }

    fn set_key(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let bad = |msg: &str| ConfigError::BadValue {
            line,
            key: key.to_string(),
            msg: msg.to_string(),
        };
        let f = |v: &str| -> Result<f64, ConfigError> {
            v.parse::<f64>().map_err(|e| bad(&e.to_string()))
        };
        match key {
            "nv.d_gs" => self.nv.d_gs = f(value)?,
            "nv.zeeman" => self.nv.zeeman = f(value)?,
            "nv.b0_mt" => self.b0_mt = Some(f(value)?),
            "nv.gyro_mhz_per_mt" => self.gyro_mhz_per_mt = f(value)?,
            "nv.a_hf" => self.nv.a_hf = f(value)?,
            "nv.q_quad" => self.nv.q_quad = f(value)?,
            "nv.t1" => self.nv.t1 = f(value)?,
            "nv.t2" => self.nv.t2 = f(value)?,
            "nv.t2_star" => self.nv.t2_star = f(value)?,
            "probe.rabi" => self.probe_rabi = f(value)?,
            "probe.duration" => self.probe_duration = f(value)?,
            "pump.freq" => self.pump_freq = f(value)?,
            "pump.power_mw" => self.pump_power_mw = f(value)?,
            "pump.rabi" => self.pump_rabi = Some(f(value)?),
            "pump.phase" => {
                self.pump_phase = if value == "average" {
                    None
                } else {
                    Some(f(value)?)
                }
            }
            "grid.start" => self.grid_start = f(value)?,
            "grid.stop" => self.grid_stop = f(value)?,
            "grid.step" => self.grid_step = f(value)?,
            "seed" => self.seed = value.parse().map_err(|_| bad("expected u64"))?,
            "out.dir" => self.out_dir = PathBuf::from(value),
            "synth.kappa" => self.kappa = f(value)?,
            "synth.contrast_scale" => self.contrast_scale = f(value)?,
            "synth.width_ratio" => self.width_ratio = f(value)?,
            "synth.noise_sigma" => self.noise_sigma = f(value)?,
            "synth.depth_model" => {
                self.depth_model = match value {
                    "pulsed_amplitude" => DepthModel::PulsedAmplitude,
                    "cw_bloch" => DepthModel::CwBloch,
                    _ => return Err(bad("expected pulsed_amplitude or cw_bloch")),
                }
            }
            "frames.k_max" => self.k_max = value.parse().map_err(|_| bad("expected integer"))?,
            "oracle.detuning_samples" => {
                self.detuning_samples = value.parse().map_err(|_| bad("expected usize"))?
            }
            "oracle.frame" => {
                self.oracle_frame = match value {
                    "rotating_wave" => FrameMode::RotatingWave,
                    "lab" => FrameMode::Lab,
                    _ => return Err(bad("expected rotating_wave or lab")),
                }
            }
            "oracle.dt" => self.oracle_dt = f(value)?,
            "sweep.axis" => {
                self.sweep_axis = value.parse().map_err(|e: String| bad(&e))?;
            }
            "sweep.values" => {
                let values: Result<Vec<f64>, _> =
                    value.split(',').map(|v| v.trim().parse::<f64>()).collect();
                self.sweep_values = values.map_err(|e| bad(&e.to_string()))?;
            }
            "fit.prominence" => self.fit_prominence = f(value)?,
            "jobs" => self.jobs = value.parse().map_err(|_| bad("expected usize"))?,
            "format" => {
                self.format = match value {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    _ => return Err(bad("expected csv or json")),
                }
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |field: &str, msg: &str| {
            Err(ConfigError::Range {
                field: field.to_string(),
                msg: msg.to_string(),
            })
        };
        if let Err(e) = self.nv.validate() {
            return range("nv", &e.to_string());
        }
        if !(self.probe_rabi > 0.0) {
            return range("probe.rabi", "must be > 0");
        }
        if !(self.probe_duration > 0.0) {
            return range("probe.duration", "must be > 0");
        }
        if !(self.pump_freq > 0.0) {
            return range("pump.freq", "must be > 0");
        }
        if !(self.pump_power_mw >= 0.0) {
            return range("pump.power_mw", "must be >= 0");
        }
        if let Some(r) = self.pump_rabi {
            if !(r >= 0.0) {
                return range("pump.rabi", "must be >= 0");
            }
        }
        if !(self.grid_step > 0.0) {
            return range("grid.step", "must be > 0");
        }
        if !(self.grid_start < self.grid_stop) {
            return range("grid.start", "must be below grid.stop");
        }
        if !(self.kappa > 0.0) {
            return range("synth.kappa", "must be > 0");
        }
        if !(self.noise_sigma >= 0.0) {
            return range("synth.noise_sigma", "must be >= 0");
        }
        if !(self.width_ratio > 0.0) {
            return range("synth.width_ratio", "must be > 0");
        }
        if !(self.contrast_scale > 0.0) {
            return range("synth.contrast_scale", "must be > 0");
        }
        if self.k_max < 0 {
            return range("frames.k_max", "must be >= 0");
        }
        if self.detuning_samples == 0 {
            return range("oracle.detuning_samples", "must be >= 1");
        }
        if !(self.oracle_dt >= 0.0) {
            return range("oracle.dt", "must be >= 0");
        }
        if self.sweep_values.is_empty() {
            return range("sweep.values", "must not be empty");
        }
        if !(self.fit_prominence >= 0.0) {
            return range("fit.prominence", "must be >= 0");
        }
        Ok(())
    }

    /// Pump amplitude ω₂ in MHz: the explicit override or κ·√P.
    pub fn pump_rabi_mhz(&self) -> f64 {
        self.pump_rabi
            .unwrap_or_else(|| self.kappa * self.pump_power_mw.sqrt())
    }

    /// Pump phase setting for the oracle.
    pub fn pump_phase_mode(&self) -> PumpPhase {
        match self.pump_phase {
            Some(phi) => PumpPhase::Fixed(phi),
            None => PumpPhase::Average,
        }
    }

    /// Pump-power series preset: fixed 5.3 MHz pump, the five reference
    /// powers, paper-like linewidths (0.71 MHz carriers).
    pub fn fig3() -> Self {
        RunConfig {
            nv: NvParams {
                t2_star: 1.0 / (PI * 0.71),
                ..NvParams::default()
            },
            sweep_axis: SweepAxis::PumpPower,
            sweep_values: vec![0.63, 2.0, 10.0, 31.6, 63.0],
            pump_freq: 5.3,
            ..RunConfig::default()
        }
    }

    /// Pump-frequency series preset: fixed 63 mW power, 3–8 MHz pump.
    pub fn fig4() -> Self {
        RunConfig {
            nv: NvParams {
                t2_star: 1.0 / (PI * 0.71),
                ..NvParams::default()
            },
            sweep_axis: SweepAxis::PumpFreq,
            sweep_values: vec![3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            pump_power_mw: 63.0,
            pump_freq: 5.3,
            grid_start: -11.5,
            grid_stop: 11.5,
            ..RunConfig::default()
        }
    }

    /// Diplexer-spur demonstration preset.
    pub fn fig5_spurs() -> Self {
        RunConfig {
            nv: NvParams {
                t2_star: 1.0 / (PI * 0.71),
                ..NvParams::default()
            },
            pump_freq: 5.3,
            pump_power_mw: 63.0,
            grid_start: -12.0,
            grid_stop: 12.0,
            ..RunConfig::default()
        }
    }

    /// Two-photon intensity-curve preset: ω₁ = 90 kHz, T₁ = 6 ms,
    /// T₂ = 1 µs, pump amplitude fixed at the 63 mW calibration.
    pub fn fig6() -> Self {
        RunConfig {
            probe_rabi: 0.09,
            nv: NvParams {
                t1: 6000.0,
                t2: 1.0,
                ..NvParams::default()
            },
            // rf grid reuses the grid fields, here absolute MHz.
            grid_start: 1.0,
            grid_stop: 8.0,
            grid_step: 0.1,
            ..RunConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn comments_and_values_parse() {
        let text = "\
# comment line
nv.d_gs = 2870.0
pump.freq = 6.1   # trailing comment
sweep.values = 0.63, 2.00, 10.0, 31.6, 63.0
seed = 42
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.pump_freq, 6.1);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.sweep_values, vec![0.63, 2.0, 10.0, 31.6, 63.0]);
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let err = RunConfig::parse("pump.frq = 5.3").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey { line: 1, key: "pump.frq".into() }
        );
    }

    #[test]
    fn range_violation_names_field() {
        let err = RunConfig::parse("pump.freq = -1").unwrap_err();
        match err {
            ConfigError::Range { field, .. } => assert_eq!(field, "pump.freq"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn b0_converts_when_zeeman_absent() {
        let cfg = RunConfig::parse("nv.b0_mt = 1.5\nnv.gyro_mhz_per_mt = 28.0").unwrap();
        assert!((cfg.nv.zeeman - 42.0).abs() < 1e-12);
        // Explicit zeeman wins over b0.
        let cfg = RunConfig::parse("nv.b0_mt = 1.5\nnv.zeeman = 40.0").unwrap();
        assert_eq!(cfg.nv.zeeman, 40.0);
    }

    #[test]
    fn env_override_applies() {
        let var = "TPMR_PUMP_FREQ";
        std::env::set_var(var, "7.7");
        let cfg = RunConfig::parse("pump.freq = 5.3").unwrap();
        std::env::remove_var(var);
        assert_eq!(cfg.pump_freq, 7.7);
    }

    #[test]
    fn pump_rabi_priority() {
        let cfg = RunConfig::parse("pump.power_mw = 63.0\nsynth.kappa = 0.19").unwrap();
        assert!((cfg.pump_rabi_mhz() - 0.19 * 63f64.sqrt()).abs() < 1e-12);
        let cfg = RunConfig::parse("pump.rabi = 0.5").unwrap();
        assert_eq!(cfg.pump_rabi_mhz(), 0.5);
    }

    #[test]
    fn fig3_preset_reference_values() {
        let cfg = RunConfig::fig3();
        assert_eq!(cfg.sweep_values, vec![0.63, 2.0, 10.0, 31.6, 63.0]);
        assert_eq!(cfg.pump_freq, 5.3);
        assert!((1.0 / (PI * cfg.nv.t2_star) - 0.71).abs() < 1e-12);
    }
}
