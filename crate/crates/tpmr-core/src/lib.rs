//! Simulation and analysis toolkit for two-photon magnetic resonance (TPMR)
//! on a single NV-center spin.
//!
//! The crate covers the full pipeline:
//!
//! - [`spin_model`] — static level structure: ESR/NMR/TPMR line positions;
//! - [`frames`] — rotating/toggling-frame effective two-level reductions
//!   with Bessel-function sideband amplitudes;
//! - [`bloch`] — steady-state absorption signals and the two-photon
//!   intensity curve;
//! - [`dynamics`] — brute-force time-domain propagation of the full
//!   electron ⊗ nuclear 9-level system, used as the validation oracle;
//! - [`spectrum`] — fast phenomenological ODMR spectrum synthesis, sweeps,
//!   and the diplexer intermodulation-spur model;
//! - [`fitting`] — peak detection, multi-Gaussian least squares, model
//!   selection, linewidth and splitting extraction;
//! - [`config`] and [`scenarios`] — run configuration and the preset
//!   end-to-end pipelines behind the command-line tool.
//!
//! Unit conventions: frequencies in MHz, times in µs. Angular frequencies
//! (2π·MHz) appear only inside the frames/Bloch/dynamics numerics.

pub mod bloch;
pub mod config;
pub mod dynamics;
pub mod fitting;
pub mod frames;
pub mod rng;
pub mod scenarios;
pub mod spectrum;
pub mod spin_model;
pub mod validate;

pub use bloch::{BlochState, IntensityPoint};
pub use frames::{DriveTone, EffectiveTwoLevel};
pub use spectrum::{Spectrum, SpurLine};
pub use spin_model::{NvParams, SpinLabel};
