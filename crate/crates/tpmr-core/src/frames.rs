//! Effective-Hamiltonian theory of multi-photon resonance.
//!
//! A transverse probe tone plus a longitudinal pump tone reduce, after the
//! singly/doubly rotating and toggling frame transformations, to a family of
//! static two-level problems indexed by the photon order k: resonance offset
//! Ωₛ − k·ω_rf and transverse amplitude ω₁·J₋ₖ(2ω₂/ω_rf).

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

/// Largest photon order handled by default. The physics of interest lives at
/// |k| ≤ 1; higher orders are kept for headroom.
pub const DEFAULT_K_MAX: i32 = 3;

/// Largest Bessel argument accepted; covers every physical drive ratio here.
pub const BESSEL_MAX_ARG: f64 = 50.0;

#[derive(Debug, Error, PartialEq)]
pub enum FramesError {
    #[error("bessel argument |z| = {0} exceeds {BESSEL_MAX_ARG}")]
    BesselArgOutOfRange(f64),
    #[error("photon order |{order}| exceeds k_max = {k_max}")]
    OrderOutOfRange { order: i32, k_max: i32 },
    #[error("invalid drive tone: {0}")]
    InvalidTone(String),
}

/// Coupling axis of a drive tone in the θ = 0 geometry: the probe is
/// transverse (x), the pump longitudinal (z, along the static field).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Probe,
    Pump,
}

/// One oscillating field 2ω·cos(2πf·t) acting on its coupling axis.
///
/// `rabi` is the amplitude ω of that convention, in MHz. For the effective
/// two-level formulas the probe amplitude is the transverse amplitude of the
/// reduced two-level problem; the dynamics module documents the ladder
/// factor that maps it onto the spin-1 drive coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveTone {
    /// Amplitude ω in the 2ω·cos convention, MHz.
    pub rabi: f64,
    /// Oscillation frequency, MHz.
    pub freq: f64,
    pub axis: Axis,
    pub role: Role,
}

impl DriveTone {
    pub fn probe(rabi: f64, freq: f64) -> Self {
        Self { rabi, freq, axis: Axis::X, role: Role::Probe }
    }

    pub fn pump(rabi: f64, freq: f64) -> Self {
        Self { rabi, freq, axis: Axis::Z, role: Role::Pump }
    }

    pub fn validate(&self) -> Result<(), FramesError> {
        if !(self.rabi >= 0.0 && self.rabi.is_finite()) {
            return Err(FramesError::InvalidTone("rabi must be finite and >= 0".into()));
        }
        if !(self.freq > 0.0 && self.freq.is_finite()) {
            return Err(FramesError::InvalidTone("freq must be finite and > 0".into()));
        }
        let axis_ok = matches!(
            (self.role, self.axis),
            (Role::Probe, Axis::X) | (Role::Pump, Axis::Z)
        );
        if !axis_ok {
            return Err(FramesError::InvalidTone(
                "probe couples on x, pump on z".into(),
            ));
        }
        Ok(())
    }

    /// Toggling-frame Bessel argument 2ω₂/ω_rf of a pump tone.
    pub fn bessel_argument(&self) -> f64 {
        2.0 * self.rabi / self.freq
    }
}

/// Static two-level reduction at photon order k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTwoLevel {
    /// Resonance offset Ωₛ − k·ω_rf, MHz.
    pub offset: f64,
    /// Effective transverse amplitude ω₁·J₋ₖ(2ω₂/ω_rf), MHz (signed).
    pub rabi_eff: f64,
    /// Photon order k.
    pub order: i32,
}

/// Bessel function of the first kind J_n(z) for integer order.
///
/// Evaluated as the N-point trapezoid sum of the integral representation
/// (1/2π)∫ cos(nθ − z·sinθ) dθ over a full period. The sum equals
/// Σ_m J_{n+mN}(z) exactly, so taking N comfortably larger than |z| + |n|
/// leaves an aliasing error far below 1e−12 for every accepted argument.
pub fn bessel_j(n: i32, z: f64) -> Result<f64, FramesError> {
    if !z.is_finite() || z.abs() > BESSEL_MAX_ARG {
        return Err(FramesError::BesselArgOutOfRange(z));
    }
    if z == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    // Parity reductions: J_{-n}(z) = (-1)^n J_n(z), J_n(-z) = (-1)^n J_n(z).
    let mut sign = 1.0;
    let mut n = n;
    let mut z = z;
    if n < 0 {
        n = -n;
        if n % 2 == 1 {
            sign = -sign;
        }
    }
    if z < 0.0 {
        z = -z;
        if n % 2 == 1 {
            sign = -sign;
        }
    }
    let samples = 64.max((z + n as f64 + 60.0).ceil() as usize);
    let nf = n as f64;
    let mut sum = 0.0;
    let mut comp = 0.0; // Kahan compensation
    for j in 0..samples {
        let theta = TAU * (j as f64) / (samples as f64);
        let term = (nf * theta - z * theta.sin()).cos();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sign * sum / samples as f64)
}

/// Effective two-level parameters of the order-k resonance.
///
/// `omega0` is the two-level splitting; Ωₛ = ω₀ − ω_probe is the resonance
/// offset of the singly rotating frame. At k = 0 this reduces to the
/// single-photon problem with the amplitude scaled by J₀.
pub fn effective_order_params(
    probe: &DriveTone,
    pump: &DriveTone,
    omega0: f64,
    k: i32,
    k_max: i32,
) -> Result<EffectiveTwoLevel, FramesError> {
    probe.validate()?;
    pump.validate()?;
    if k.abs() > k_max {
        return Err(FramesError::OrderOutOfRange { order: k, k_max });
    }
    let offset_s = omega0 - probe.freq;
    let z = pump.bessel_argument();
    Ok(EffectiveTwoLevel {
        offset: offset_s - f64::from(k) * pump.freq,
        rabi_eff: probe.rabi * bessel_j(-k, z)?,
        order: k,
    })
}

/// Small-argument approximation of the order-k transverse amplitude:
/// ω₁·[sign(−k)]^k/|k|!·(ω₂/ω_rf)^{|k|}.
///
/// This is the |k|-th order Taylor form of ω₁·J₋ₖ(2ω₂/ω_rf); for k = 1 it
/// gives −ω₁ω₂/ω_rf. Arguments 2ω₂/ω_rf above 0.2 are outside the regime
/// where the truncation is reliable and are reported through a warning.
pub fn small_arg_rabi(probe: &DriveTone, pump: &DriveTone, k: i32) -> f64 {
    let z = pump.bessel_argument();
    if z > 0.2 {
        log::warn!(
            "small-argument amplitude used at 2*omega2/omega_rf = {z:.3} > 0.2; \
             the truncation error is no longer negligible"
        );
    }
    let ratio = pump.rabi / pump.freq;
    // sign(−k)^k: (−1)^k for k > 0, +1 otherwise (J_{−k} parity).
    let sign = if k > 0 && k % 2 == 1 { -1.0 } else { 1.0 };
    let kabs = k.unsigned_abs();
    let factorial: f64 = (1..=kabs).map(f64::from).product::<f64>().max(1.0);
    probe.rabi * sign / factorial * ratio.powi(kabs as i32)
}

/// Doubly-rotating-frame transverse amplitude ω₁,₁ = −ω₁ω₂/√(ω₁² + Ωₛ²).
///
/// Near resonance (Ωₛ ≈ ω_rf, ω₁ ≪ Ωₛ) this approaches −ω₁ω₂/ω_rf, the
/// k = 1 small-argument amplitude.
pub fn doubly_rotating_rabi(probe_rabi: f64, pump_rabi: f64, offset_s: f64) -> f64 {
    -probe_rabi * pump_rabi / (probe_rabi * probe_rabi + offset_s * offset_s).sqrt()
}

/// Accumulated rotation angle of the toggling-frame transformation at time t:
/// k·ω_rf·t + (2ω₂/ω_rf)·sin(ω_rf·t), in radians (t in µs, tone in MHz).
pub fn toggling_rotation_phase(t: f64, k: i32, pump: &DriveTone) -> f64 {
    let w_rf = TAU * pump.freq;
    f64::from(k) * w_rf * t + pump.bessel_argument() * (w_rf * t).sin()
}
