//! Static ground-state spin model of the NV center.
//!
//! Energy levels of the electron (S = 1) ⊗ ¹⁴N nuclear (I = 1) system under a
//! zero-field splitting, an axial Zeeman shift, the axial hyperfine coupling
//! and the nuclear quadrupole term. All frequencies are in MHz, all times in
//! µs; angular-frequency conversion happens inside the dynamics and Bloch
//! modules only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Static spin-Hamiltonian constants plus relaxation times.
///
/// `zeeman` is the electron Zeeman shift gₑμ_B·B₀ expressed in MHz. Configs
/// may instead give the static field in mT together with a gyromagnetic
/// ratio; the conversion happens once at load time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NvParams {
    /// Zero-field splitting D, MHz.
    pub d_gs: f64,
    /// Electron Zeeman shift gₑμ_B·B₀, MHz.
    pub zeeman: f64,
    /// Axial hyperfine constant A, MHz (signed).
    pub a_hf: f64,
    /// Nuclear quadrupole constant Q, MHz (signed).
    pub q_quad: f64,
    /// Longitudinal relaxation time T₁, µs.
    pub t1: f64,
    /// Transverse relaxation time T₂, µs.
    pub t2: f64,
    /// Inhomogeneous dephasing time T₂*, µs.
    pub t2_star: f64,
}

impl Default for NvParams {
    fn default() -> Self {
        // D and the 1.5 mT working point of the reference scenario; A and Q
        // magnitudes typical for the ¹⁴N nucleus, taken as positive inputs.
        Self {
            d_gs: 2870.0,
            zeeman: 42.0,
            a_hf: 2.2,
            q_quad: 4.95,
            t1: 6000.0,
            t2: 1.0,
            t2_star: 1.0,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpinModelError {
    #[error("invalid NV parameters: {0}")]
    InvalidParams(String),
    #[error("spin projection {0} outside {{-1, 0, +1}}")]
    BadProjection(i8),
}

impl NvParams {
    /// Check the structural invariants of the parameter set.
    pub fn validate(&self) -> Result<(), SpinModelError> {
        let fail = |msg: &str| Err(SpinModelError::InvalidParams(msg.to_string()));
        if !(self.d_gs > 0.0) {
            return fail("d_gs must be > 0");
        }
        if !(self.zeeman >= 0.0 && self.zeeman < self.d_gs) {
            return fail("zeeman must satisfy 0 <= zeeman < d_gs (low-field regime)");
        }
        if !(self.t2 > 0.0 && self.t1 >= self.t2) {
            return fail("relaxation times must satisfy t1 >= t2 > 0");
        }
        if !(self.t2_star > 0.0) {
            return fail("t2_star must be > 0");
        }
        for v in [self.a_hf, self.q_quad] {
            if !v.is_finite() {
                return fail("hyperfine/quadrupole constants must be finite");
            }
        }
        Ok(())
    }

    /// Central electron spin resonance f₀ = D − gₑμ_B·B₀ for the
    /// mₛ = 0 ↔ −1 branch, MHz.
    pub fn central_esr(&self) -> f64 {
        self.d_gs - self.zeeman
    }
}

/// Projection labels |mₛ, m_I⟩ of one basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinLabel {
    pub ms: i8,
    pub mi: i8,
}

impl SpinLabel {
    pub fn new(ms: i8, mi: i8) -> Result<Self, SpinModelError> {
        for v in [ms, mi] {
            if !(-1..=1).contains(&v) {
                return Err(SpinModelError::BadProjection(v));
            }
        }
        Ok(Self { ms, mi })
    }

    /// All nine labels in the lexicographic basis order used by the
    /// dynamics module: mₛ ∈ {+1, 0, −1} outer, m_I ∈ {+1, 0, −1} inner.
    pub fn basis() -> [SpinLabel; 9] {
        let mut out = [SpinLabel { ms: 0, mi: 0 }; 9];
        let mut i = 0;
        for ms in [1i8, 0, -1] {
            for mi in [1i8, 0, -1] {
                out[i] = SpinLabel { ms, mi };
                i += 1;
            }
        }
        out
    }

    /// Index of this label in [`SpinLabel::basis`] order.
    pub fn basis_index(&self) -> usize {
        let row = (1 - self.ms) as usize;
        let col = (1 - self.mi) as usize;
        3 * row + col
    }
}

/// Resonance kind for the selection rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    Esr,
    Nmr,
}

/// Diagonal energy of |mₛ, m_I⟩ in MHz:
/// D·mₛ² + gₑμ_B B₀·mₛ + A·mₛ·m_I + Q·m_I².
///
/// The anisotropic hyperfine term and the nuclear Zeeman shift are dropped;
/// both are negligible at the low fields this model targets.
pub fn energy_level(p: &NvParams, s: SpinLabel) -> f64 {
    let ms = f64::from(s.ms);
    let mi = f64::from(s.mi);
    p.d_gs * ms * ms + p.zeeman * ms + p.a_hf * ms * mi + p.q_quad * mi * mi
}

/// The three hyperfine-split electron resonances of the mₛ = 0 ↔ −1 branch,
/// sorted ascending: {f₀ − A, f₀, f₀ + A} with f₀ = D − gₑμ_B·B₀.
pub fn esr_frequencies(p: &NvParams) -> [f64; 3] {
    let f0 = p.central_esr();
    let mut f = [f0 - p.a_hf, f0, f0 + p.a_hf];
    f.sort_by(|a, b| a.partial_cmp(b).expect("finite frequencies"));
    f
}

/// The four double-resonance NMR lines of the ¹⁴N nuclear spin observed via
/// the electron transition:
/// {f₀ − Q − A, f₀ − Q + A, f₁ + Q − A, f₋₁ + Q + A}, where f₁ = f₀ + A and
/// f₋₁ = f₀ − A. The last two coincide at f₀ + Q for every parameter set.
pub fn nmr_lines(p: &NvParams) -> [f64; 4] {
    let f0 = p.central_esr();
    let (a, q) = (p.a_hf, p.q_quad);
    let f1 = f0 + a;
    let fm1 = f0 - a;
    [f0 - q - a, f0 - q + a, f1 + q - a, fm1 + q + a]
}

/// Selection rules for magnetic dipole transitions:
/// ESR requires Δmₛ = ±1 with Δm_I = 0, NMR requires Δmₛ = 0 with
/// Δm_I = ±1. Double-quantum combinations are always disallowed.
pub fn transition_allowed(from: SpinLabel, to: SpinLabel, kind: TransitionKind) -> bool {
    let dms = i16::from(to.ms) - i16::from(from.ms);
    let dmi = i16::from(to.mi) - i16::from(from.mi);
    match kind {
        TransitionKind::Esr => dms.abs() == 1 && dmi == 0,
        TransitionKind::Nmr => dms == 0 && dmi.abs() == 1,
    }
}

/// Two-photon resonance positions: every hyperfine carrier f_I split into the
/// dressed pair f_I ± f_pump by a pump tone of the given frequency. Six
/// values, sorted ascending.
pub fn tpmr_positions(p: &NvParams, f_pump: f64) -> [f64; 6] {
    assert!(f_pump >= 0.0, "pump frequency must be non-negative");
    let carriers = esr_frequencies(p);
    let mut out = [0.0; 6];
    for (i, f) in carriers.iter().enumerate() {
        out[2 * i] = f - f_pump;
        out[2 * i + 1] = f + f_pump;
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite frequencies"));
    out
}
