//! Fast phenomenological ODMR spectrum synthesis.
//!
//! Spectra are Gaussian dip mixtures on a detuning grid: three hyperfine
//! carriers, optionally the six dressed sidebands at ±f_pump, additive
//! seeded Gaussian noise, and the diplexer intermodulation-spur model. The
//! same CSV container is produced by the time-domain oracle and consumed by
//! the fitting module.

use crate::bloch::{self, BlochError};
use crate::frames::{bessel_j, DriveTone, FramesError};
use crate::rng::{derive_seed, stream_rng};
use crate::spin_model::NvParams;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("spectrum file parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Frames(#[from] FramesError),
    #[error(transparent)]
    Bloch(#[from] BlochError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Photoluminescence-contrast spectrum on a detuning grid.
///
/// Detunings are MHz relative to the central carrier; the baseline sits at
/// zero contrast with resonances as negative-going dips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub detuning: Vec<f64>,
    pub contrast: Vec<f64>,
    /// Generation parameters as ordered key=value pairs.
    pub meta: BTreeMap<String, String>,
}

impl Spectrum {
    pub fn validate(&self) -> Result<(), SpectrumError> {
        if self.detuning.len() != self.contrast.len() {
            return Err(SpectrumError::InvalidInput(
                "grid and contrast lengths differ".into(),
            ));
        }
        if self.detuning.is_empty() {
            return Err(SpectrumError::InvalidInput("empty spectrum".into()));
        }
        if self.detuning.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SpectrumError::InvalidInput(
                "grid must be strictly ascending".into(),
            ));
        }
        if self.contrast.iter().any(|c| !c.is_finite()) {
            return Err(SpectrumError::InvalidInput("non-finite contrast".into()));
        }
        Ok(())
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta.get(key).and_then(|v| v.parse().ok())
    }

    /// Serialize as `# key=value` comment lines, a column header, and one
    /// `detuning_mhz,contrast` row per point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (k, v) in &self.meta {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "detuning_mhz,contrast")?;
        for (x, y) in self.detuning.iter().zip(&self.contrast) {
            writeln!(w, "{x},{y}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, SpectrumError> {
        let mut meta = BTreeMap::new();
        let mut detuning = Vec::new();
        let mut contrast = Vec::new();
        let mut saw_header = false;
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if !saw_header {
                if line != "detuning_mhz,contrast" {
                    return Err(SpectrumError::Parse {
                        line: lineno,
                        msg: format!("expected column header, found {line:?}"),
                    });
                }
                saw_header = true;
                continue;
            }
            let (x, y) = line.split_once(',').ok_or_else(|| SpectrumError::Parse {
                line: lineno,
                msg: "expected two comma-separated columns".into(),
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| SpectrumError::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })
            };
            detuning.push(parse(x)?);
            contrast.push(parse(y)?);
        }
        let s = Spectrum { detuning, contrast, meta };
        s.validate()?;
        Ok(s)
    }

    pub fn from_csv_str(text: &str) -> Result<Self, SpectrumError> {
        Self::read_csv(text.as_bytes())
    }
}

/// How sideband dip depths relate to the carrier depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthModel {
    /// Pulsed-probe regime: the inhomogeneously broadened dip area scales
    /// with the effective transverse amplitude, so depths go as
    /// |J₁(2ω₂/ω_rf)| relative to |J₀|.
    PulsedAmplitude,
    /// Continuous-wave steady state: depths follow the saturated
    /// multiphoton absorption peak values.
    CwBloch,
}

/// Synthesis knobs shared by every generated spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    /// Effective two-level probe amplitude, MHz.
    pub probe_rabi: f64,
    /// Depth of the deepest carrier dip in ΔPL/PL units.
    pub contrast_scale: f64,
    /// Sideband FWHM relative to the carrier FWHM.
    pub width_ratio: f64,
    /// Additive Gaussian noise standard deviation.
    pub noise_sigma: f64,
    pub depth_model: DepthModel,
    /// Photon-order cutoff for the CW depth model.
    pub k_max: i32,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            // π pulse over the 5.5 µs probe.
            probe_rabi: 1.0 / 11.0,
            contrast_scale: 0.017,
            width_ratio: 0.45,
            noise_sigma: 2.5e-4,
            depth_model: DepthModel::PulsedAmplitude,
            k_max: 3,
        }
    }
}

/// One Gaussian dip of the synthesis mixture: depth > 0, FWHM width.
#[derive(Debug, Clone, Copy, PartialEq)]
struct DipSpec {
    center: f64,
    fwhm: f64,
    depth: f64,
}

fn gaussian_dip(x: f64, d: &DipSpec) -> f64 {
    let u = x - d.center;
    d.depth * (-4.0 * std::f64::consts::LN_2 * u * u / (d.fwhm * d.fwhm)).exp()
}

/// Square-root field-power law: pump amplitude ω₂ = κ·√P.
pub fn power_to_rabi(power_mw: f64, kappa: f64) -> f64 {
    assert!(power_mw >= 0.0 && kappa > 0.0, "power >= 0, kappa > 0");
    kappa * power_mw.sqrt()
}

/// Sideband depth relative to the carrier depth under the given model.
fn sideband_relative_depth(
    p: &NvParams,
    pump: &DriveTone,
    opts: &SynthOptions,
) -> Result<f64, SpectrumError> {
    if pump.rabi == 0.0 {
        return Ok(0.0);
    }
    let z = pump.bessel_argument();
    match opts.depth_model {
        DepthModel::PulsedAmplitude => Ok((bessel_j(1, z)? / bessel_j(0, z)?).abs()),
        DepthModel::CwBloch => {
            let carrier = bloch::multiphoton_term(0, 0.0, opts.probe_rabi, pump, p.t1, p.t2)?;
            let sideband =
                bloch::multiphoton_term(1, pump.freq, opts.probe_rabi, pump, p.t1, p.t2)?;
            Ok(sideband / carrier)
        }
    }
}

fn dip_mixture(
    p: &NvParams,
    pump: &DriveTone,
    opts: &SynthOptions,
) -> Result<Vec<DipSpec>, SpectrumError> {
    let f0 = p.central_esr();
    let carrier_fwhm = 1.0 / (PI * p.t2_star);
    let sideband_fwhm = carrier_fwhm * opts.width_ratio;
    let rel = sideband_relative_depth(p, pump, opts)?;
    let mut dips = Vec::new();
    for f in crate::spin_model::esr_frequencies(p) {
        let o = f - f0;
        dips.push(DipSpec { center: o, fwhm: carrier_fwhm, depth: opts.contrast_scale });
        if rel > 0.0 {
            for sign in [-1.0, 1.0] {
                dips.push(DipSpec {
                    center: o + sign * pump.freq,
                    fwhm: sideband_fwhm,
                    depth: opts.contrast_scale * rel,
                });
            }
        }
    }
    Ok(dips)
}

/// Inverse-CDF Gaussian draw; keeps the uniform strictly inside (0, 1).
fn gauss_draw<R: Rng>(rng: &mut R, normal: &Normal) -> f64 {
    let u: f64 = rng.gen::<f64>().clamp(1e-16, 1.0 - 1e-16);
    normal.inverse_cdf(u)
}

fn render(
    dips: &[DipSpec],
    grid: &[f64],
    noise_sigma: f64,
    seed: u64,
    meta: BTreeMap<String, String>,
) -> Result<Spectrum, SpectrumError> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectrumError::InvalidInput(
            "grid must be non-empty and strictly ascending".into(),
        ));
    }
    let mut rng = stream_rng(seed, 0);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let contrast = grid
        .iter()
        .map(|&x| {
            let clean: f64 = -dips.iter().map(|d| gaussian_dip(x, d)).sum::<f64>();
            if noise_sigma > 0.0 {
                clean + noise_sigma * gauss_draw(&mut rng, &normal)
            } else {
                clean
            }
        })
        .collect();
    let s = Spectrum { detuning: grid.to_vec(), contrast, meta };
    s.validate()?;
    Ok(s)
}

fn base_meta(p: &NvParams, opts: &SynthOptions, seed: u64) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("kind".into(), "synthetic".into());
    m.insert("seed".into(), seed.to_string());
    m.insert("f0_mhz".into(), p.central_esr().to_string());
    m.insert("a_hf_mhz".into(), p.a_hf.to_string());
    m.insert("t2_star_us".into(), p.t2_star.to_string());
    m.insert("probe_rabi_mhz".into(), opts.probe_rabi.to_string());
    m.insert("contrast_scale".into(), opts.contrast_scale.to_string());
    m.insert("width_ratio".into(), opts.width_ratio.to_string());
    m.insert("noise_sigma".into(), opts.noise_sigma.to_string());
    m
}

/// Synthesize one ODMR spectrum: three carriers plus, with the pump on, the
/// six dressed sidebands, with seeded additive noise.
pub fn synth_spectrum(
    p: &NvParams,
    pump: &DriveTone,
    opts: &SynthOptions,
    grid: &[f64],
    seed: u64,
) -> Result<Spectrum, SpectrumError> {
    p.validate()
        .map_err(|e| SpectrumError::InvalidInput(e.to_string()))?;
    if pump.rabi > 0.0 {
        pump.validate()?;
    }
    let dips = dip_mixture(p, pump, opts)?;
    let mut meta = base_meta(p, opts, seed);
    meta.insert("pump_freq_mhz".into(), pump.freq.to_string());
    meta.insert("pump_rabi_mhz".into(), pump.rabi.to_string());
    render(&dips, grid, opts.noise_sigma, seed, meta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PumpPower,
    PumpFreq,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pump_power" | "pump-power" => Ok(Self::PumpPower),
            "pump_freq" | "pump-freq" => Ok(Self::PumpFreq),
            other => Err(format!("unknown sweep axis {other:?}")),
        }
    }
}

/// Sweep definition: one spectrum per value on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Pump frequency held fixed during a power sweep, MHz.
    pub pump_freq: f64,
    /// Pump power held fixed during a frequency sweep, mW.
    pub pump_power_mw: f64,
    /// Power-to-amplitude calibration, MHz/√mW.
    pub kappa: f64,
}

/// Run a pump-power or pump-frequency sweep. Every entry uses a
/// deterministic per-value sub-seed, so the sweep output is reproducible
/// point-for-point regardless of evaluation order.
pub fn sweep(
    p: &NvParams,
    spec: &SweepSpec,
    opts: &SynthOptions,
    grid: &[f64],
    seed: u64,
) -> Result<Vec<Spectrum>, SpectrumError> {
    if spec.values.is_empty() {
        return Err(SpectrumError::InvalidInput("empty sweep values".into()));
    }
    spec.values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (pump, label) = match spec.axis {
                SweepAxis::PumpPower => (
                    DriveTone::pump(power_to_rabi(v, spec.kappa), spec.pump_freq),
                    ("pump_power_mw", v),
                ),
                SweepAxis::PumpFreq => (
                    DriveTone::pump(power_to_rabi(spec.pump_power_mw, spec.kappa), v),
                    ("pump_freq_mhz", v),
                ),
            };
            let mut s = synth_spectrum(p, &pump, opts, grid, derive_seed(seed, i as u64))?;
            s.meta.insert("sweep_index".into(), i.to_string());
            s.meta.insert(label.0.into(), label.1.to_string());
            Ok(s)
        })
        .collect()
}

/// One diplexer intermodulation line at f_probe + n·f_pump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpurLine {
    pub n: i32,
    /// Absolute frequency at the reference probe frequency, MHz.
    pub freq: f64,
    /// Amplitude relative to the carrier, dB (≤ 0).
    pub amplitude_db: f64,
}

/// Measured spur amplitudes by |n|, dB relative to the n = 0 carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpurTable {
    pub entries: Vec<(u32, f64)>,
}

impl SpurTable {
    /// Bench measurement at full pump power: −48 dB at |n| = 1 and −15 dB
    /// at |n| = 2.
    pub fn measured_63mw() -> Self {
        Self { entries: vec![(1, -48.0), (2, -15.0)] }
    }

    /// Intermodulation products only rise out of the analyzer floor above a
    /// few mW of pump power; below that the output is the carrier alone.
    pub fn for_power(power_mw: f64) -> Self {
        if power_mw < 5.0 {
            Self { entries: Vec::new() }
        } else {
            Self::measured_63mw()
        }
    }

    pub fn amplitude_db(&self, n_abs: u32) -> Option<f64> {
        if n_abs == 0 {
            return Some(0.0);
        }
        self.entries.iter().find(|(k, _)| *k == n_abs).map(|(_, db)| *db)
    }
}

/// Enumerate the diplexer output lines f_probe + n·f_pump for |n| ≤
/// max_order, with amplitudes from the measured table. Orders the table
/// does not cover are omitted. Sorted by n.
pub fn spur_lines(f_probe: f64, f_pump: f64, max_order: u32, table: &SpurTable) -> Vec<SpurLine> {
    let mut out = Vec::new();
    for n in -(max_order as i32)..=(max_order as i32) {
        if let Some(db) = table.amplitude_db(n.unsigned_abs()) {
            out.push(SpurLine {
                n,
                freq: f_probe + f64::from(n) * f_pump,
                amplitude_db: db,
            });
        }
    }
    out
}

/// Overlay spur-induced dips on the carrier-only spectrum.
///
/// Each n ≠ 0 line acts as an additional weak probe sweeping in lockstep
/// with the main probe, so it produces dips offset by −n·f_pump from every
/// carrier. The main probe is a π pulse; a spur at relative amplitude
/// r = 10^(dB/20) transfers sin²(π·r/2) of the carrier transfer, which sets
/// the spur dip depth. n = 0 entries are the main probe itself and are
/// skipped; the carrier dips are always present, so an empty spur list
/// reproduces the base spectrum.
pub fn apply_spurs(
    p: &NvParams,
    opts: &SynthOptions,
    grid: &[f64],
    seed: u64,
    spurs: &[SpurLine],
    f_pump: f64,
) -> Result<Spectrum, SpectrumError> {
    p.validate()
        .map_err(|e| SpectrumError::InvalidInput(e.to_string()))?;
    let f0 = p.central_esr();
    let carrier_fwhm = 1.0 / (PI * p.t2_star);
    let mut dips = Vec::new();
    for f in crate::spin_model::esr_frequencies(p) {
        let o = f - f0;
        dips.push(DipSpec { center: o, fwhm: carrier_fwhm, depth: opts.contrast_scale });
        for spur in spurs {
            if spur.n == 0 {
                continue;
            }
            if spur.amplitude_db > 0.0 {
                return Err(SpectrumError::InvalidInput(format!(
                    "spur amplitude {} dB above carrier",
                    spur.amplitude_db
                )));
            }
            let r = 10f64.powf(spur.amplitude_db / 20.0);
            dips.push(DipSpec {
                center: o - f64::from(spur.n) * f_pump,
                fwhm: carrier_fwhm,
                depth: opts.contrast_scale * (FRAC_PI_2 * r).sin().powi(2),
            });
        }
    }
    let mut meta = base_meta(p, opts, seed);
    meta.insert("kind".into(), "spurs".into());
    meta.insert("pump_freq_mhz".into(), f_pump.to_string());
    meta.insert("spur_orders".into(), spurs.len().to_string());
    render(&dips, grid, opts.noise_sigma, seed, meta)
}

/// Uniform detuning grid from start to stop inclusive.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, SpectrumError> {
    if !(step > 0.0 && stop > start) {
        return Err(SpectrumError::InvalidInput(
            "grid needs step > 0 and stop > start".into(),
        ));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + step * i as f64).collect())
}

/// Write an intensity curve as `omega_rf_mhz,intensity` CSV with metadata
/// comments (validity boundary included).
pub fn write_intensity_csv<W: Write>(
    points: &[bloch::IntensityPoint],
    meta: &BTreeMap<String, String>,
    mut w: W,
) -> io::Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "# validity_min_mhz={}", bloch::VALIDITY_MIN_RF_MHZ)?;
    writeln!(w, "omega_rf_mhz,intensity")?;
    for p in points {
        writeln!(w, "{},{}", p.omega_rf, p.intensity)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn default_grid() -> Vec<f64> {
        linear_grid(-9.0, 9.0, 0.02).unwrap()
    }

    #[test]
    fn power_law_reference() {
        assert_eq!(power_to_rabi(0.0, 0.19), 0.0);
        assert_relative_eq!(power_to_rabi(63.0, 0.19), 1.508, epsilon = 2e-3);
        let mut last = 0.0;
        for p in [1.0, 2.0, 10.0, 30.0] {
            let r = power_to_rabi(p, 0.19);
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn pump_off_spectrum_has_three_dips() {
        let p = NvParams::default();
        let opts = SynthOptions { noise_sigma: 0.0, ..SynthOptions::default() };
        let pump = DriveTone::pump(0.0, 5.3);
        let s = synth_spectrum(&p, &pump, &opts, &default_grid(), 1).unwrap();
        for o in [-2.2, 0.0, 2.2] {
            let at = s.detuning.iter().position(|x| (x - o).abs() < 1e-9).unwrap();
            assert_relative_eq!(s.contrast[at], -0.017, max_relative = 1e-6);
        }
        assert!(s.contrast[0].abs() < 1e-6);
    }

    #[test]
    fn strong_pump_adds_sidebands_at_pump_offset() {
        let p = NvParams::default();
        let opts = SynthOptions { noise_sigma: 0.0, ..SynthOptions::default() };
        let pump = DriveTone::pump(power_to_rabi(63.0, 0.19), 5.3);
        let s = synth_spectrum(&p, &pump, &opts, &default_grid(), 1).unwrap();
        let z = pump.bessel_argument();
        let rel = (bessel_j(1, z).unwrap() / bessel_j(0, z).unwrap()).abs();
        for o in [-7.5, -5.3, -3.1, 3.1, 5.3, 7.5] {
            let at = s.detuning.iter().position(|x| (x - o).abs() < 1e-9).unwrap();
            let expected = -0.017 * rel;
            assert!(
                (s.contrast[at] - expected).abs() < 0.017 * 0.02,
                "sideband at {o}: {} vs {expected}",
                s.contrast[at]
            );
        }
    }

    #[test]
    fn sideband_depth_monotone_in_power_small_argument() {
        let p = NvParams::default();
        let opts = SynthOptions::default();
        let mut last = 0.0;
        for power in [2.0, 10.0, 31.6, 63.0] {
            let pump = DriveTone::pump(power_to_rabi(power, 0.19), 5.3);
            let rel = sideband_relative_depth(&p, &pump, &opts).unwrap();
            assert!(rel > last, "not monotone at {power} mW");
            last = rel;
        }
    }

    #[test]
    fn sweep_power_keeps_positions_and_is_deterministic() {
        let p = NvParams::default();
        let opts = SynthOptions { noise_sigma: 0.0, ..SynthOptions::default() };
        let spec = SweepSpec {
            axis: SweepAxis::PumpPower,
            values: vec![0.63, 2.0, 10.0, 31.6, 63.0],
            pump_freq: 5.3,
            pump_power_mw: 0.0,
            kappa: 0.19,
        };
        let grid = default_grid();
        let spectra = sweep(&p, &spec, &opts, &grid, 99).unwrap();
        assert_eq!(spectra.len(), 5);
        let carrier_idx: Vec<usize> = [-2.2, 0.0, 2.2]
            .iter()
            .map(|o| {
                spectra[0]
                    .detuning
                    .iter()
                    .position(|x| (x - o).abs() < 1e-9)
                    .unwrap()
            })
            .collect();
        for s in &spectra {
            for &i in &carrier_idx {
                assert!(s.contrast[i] < s.contrast[i + 5]);
                assert!(s.contrast[i] < s.contrast[i - 5]);
            }
        }
        let again = sweep(&p, &spec, &opts, &grid, 99).unwrap();
        assert_eq!(spectra, again);
    }

    #[test]
    fn sweep_zero_power_matches_pump_off() {
        let p = NvParams::default();
        let opts = SynthOptions { noise_sigma: 0.0, ..SynthOptions::default() };
        let spec = SweepSpec {
            axis: SweepAxis::PumpPower,
            values: vec![0.0],
            pump_freq: 5.3,
            pump_power_mw: 0.0,
            kappa: 0.19,
        };
        let grid = default_grid();
        let swept = &sweep(&p, &spec, &opts, &grid, 3).unwrap()[0];
        let direct =
            synth_spectrum(&p, &DriveTone::pump(0.0, 5.3), &opts, &grid, derive_seed(3, 0))
                .unwrap();
        assert_eq!(swept.contrast, direct.contrast);
    }

    #[test]
    fn spur_lines_reference_table() {
        let lines = spur_lines(2822.0, 5.3, 2, &SpurTable::measured_63mw());
        assert_eq!(lines.len(), 5);
        let by_n: Vec<(i32, f64, f64)> =
            lines.iter().map(|l| (l.n, l.freq, l.amplitude_db)).collect();
        assert_eq!(by_n[0], (-2, 2822.0 - 10.6, -15.0));
        assert_eq!(by_n[1], (-1, 2822.0 - 5.3, -48.0));
        assert_eq!(by_n[2], (0, 2822.0, 0.0));
        assert_eq!(by_n[3], (1, 2822.0 + 5.3, -48.0));
        assert_eq!(by_n[4], (2, 2822.0 + 10.6, -15.0));
    }

    #[test]
    fn spur_lines_trivial_cases() {
        let only_carrier = spur_lines(2822.0, 5.3, 0, &SpurTable::measured_63mw());
        assert_eq!(only_carrier.len(), 1);
        assert_eq!(only_carrier[0].n, 0);
        // Low pump power: intermodulation below the floor, carrier only.
        let low = spur_lines(2822.0, 5.3, 2, &SpurTable::for_power(4.0));
        assert_eq!(low.len(), 1);
        assert_eq!(low[0].n, 0);
    }

    #[test]
    fn spur_depth_follows_pi_pulse_transfer() {
        // −48 dB: depth ratio sin²(π/2 · 10^(−48/20)) ≈ 3.9e−5.
        let r = 10f64.powf(-48.0 / 20.0);
        let ratio = (FRAC_PI_2 * r).sin().powi(2);
        assert_relative_eq!(ratio, 3.9e-5, max_relative = 0.02);

        let p = NvParams::default();
        let opts = SynthOptions { noise_sigma: 0.0, ..SynthOptions::default() };
        let grid = linear_grid(-12.0, 12.0, 0.02).unwrap();
        let spurs = spur_lines(2822.7, 5.3, 2, &SpurTable::measured_63mw());
        let s = apply_spurs(&p, &opts, &grid, 7, &spurs, 5.3).unwrap();
        // Spur dip of the central carrier from n = +1 sits at −5.3 and is
        // buried: below 1e−3 of the carrier depth.
        let at = s.detuning.iter().position(|x| (x + 5.3).abs() < 1e-9).unwrap();
        assert!(
            s.contrast[at].abs() < 0.017 * 1e-3,
            "spur too visible: {}",
            s.contrast[at]
        );

        // Empty spur list reproduces the carrier-only base spectrum.
        let base = apply_spurs(&p, &opts, &grid, 7, &[], 5.3).unwrap();
        let pump_off = synth_spectrum(&p, &DriveTone::pump(0.0, 5.3), &opts, &grid, 7).unwrap();
        assert_eq!(base.contrast, pump_off.contrast);

        // Artificially boosted 0 dB spur produces a visible dip.
        let boosted = vec![SpurLine { n: 1, freq: 2828.0, amplitude_db: 0.0 }];
        let s = apply_spurs(&p, &opts, &grid, 7, &boosted, 5.3).unwrap();
        let at = s.detuning.iter().position(|x| (x + 5.3).abs() < 1e-9).unwrap();
        assert!(s.contrast[at] < -0.016, "boosted spur invisible: {}", s.contrast[at]);
    }

    #[test]
    fn csv_round_trip_exact() {
        let p = NvParams::default();
        let pump = DriveTone::pump(1.0, 5.3);
        let s = synth_spectrum(&p, &pump, &SynthOptions::default(), &default_grid(), 11).unwrap();
        let text = s.to_csv_string();
        let back = Spectrum::from_csv_str(&text).unwrap();
        assert_eq!(s, back);
        assert_eq!(text, back.to_csv_string());
    }

    #[test]
    fn grid_construction() {
        let g = linear_grid(-1.0, 1.0, 0.5).unwrap();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(linear_grid(1.0, -1.0, 0.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        /// Identical inputs and seed give bit-identical spectra.
        #[test]
        fn prop_determinism(seed in 0u64..1_000_000, noise in 1e-5f64..1e-2) {
            let p = NvParams::default();
            let opts = SynthOptions { noise_sigma: noise, ..SynthOptions::default() };
            let pump = DriveTone::pump(1.0, 5.3);
            let grid = linear_grid(-8.0, 8.0, 0.05).unwrap();
            let a = synth_spectrum(&p, &pump, &opts, &grid, seed).unwrap();
            let b = synth_spectrum(&p, &pump, &opts, &grid, seed).unwrap();
            prop_assert_eq!(&a.contrast, &b.contrast);
            prop_assert_eq!(a.to_csv_string(), b.to_csv_string());
        }

        /// Noiseless dip minima sit on the model positions for random
        /// parameter draws (grid-resolution accuracy).
        #[test]
        fn prop_noiseless_minima_on_model_positions(
            a_hf in 1.5f64..3.0,
            f_pump in 4.5f64..7.5,
            power in 20.0f64..80.0,
        ) {
            let p = NvParams { a_hf, ..NvParams::default() };
            let opts = SynthOptions { noise_sigma: 0.0, ..SynthOptions::default() };
            let pump = DriveTone::pump(power_to_rabi(power, 0.19), f_pump);
            let grid = linear_grid(-12.0, 12.0, 0.01).unwrap();
            let s = synth_spectrum(&p, &pump, &opts, &grid, 0).unwrap();
            let f0 = p.central_esr();
            let mut expected: Vec<f64> = crate::spin_model::esr_frequencies(&p)
                .iter()
                .map(|f| f - f0)
                .collect();
            for f in crate::spin_model::tpmr_positions(&p, f_pump) {
                expected.push(f - f0);
            }
            // A weak line riding the flank of a much deeper neighbor is a
            // shoulder, not a local minimum; only resolvable lines (clear of
            // all others by more than a carrier width) carry the position law.
            let resolvable: Vec<f64> = expected
                .iter()
                .copied()
                .filter(|c| {
                    expected
                        .iter()
                        .all(|o| (o - c).abs() < 1e-9 || (o - c).abs() > 0.9)
                })
                .collect();
            for c in resolvable {
                let i = s
                    .detuning
                    .iter()
                    .position(|x| (x - c).abs() <= 0.005 + 1e-12)
                    .unwrap();
                let lo = i.saturating_sub(3);
                let hi = (i + 3).min(s.detuning.len() - 1);
                let local_min = (lo..=hi)
                    .min_by(|&u, &v| s.contrast[u].partial_cmp(&s.contrast[v]).unwrap())
                    .unwrap();
                prop_assert!(
                    (s.detuning[local_min] - c).abs() <= 0.011,
                    "line at {} not a local minimum", c
                );
            }
        }
    }
}
