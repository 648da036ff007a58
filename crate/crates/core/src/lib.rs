//! Slow-light propagation of narrowband single photons through a warm vapour
//! with two hyperfine absorption lines, together with the photon source,
//! frequency-conversion budget and the file formats used by the CLI.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constants;
pub mod dispersion;
pub mod error;
pub mod io;
pub mod qfc;
pub mod source;
pub mod vapor;
pub mod wavepacket;

pub use dispersion::{
    absorption_coefficient, complex_index, group_delay, group_delay_with, group_velocity,
    group_velocity_with, index_offset, index_slope, transmission, GroupVelocityModel, MediumState,
    ResonanceDoublet,
};
pub use config::SimConfig;
pub use error::{Error, Result};
pub use qfc::{
    calibrate_noise_scale, conversion_efficiency, fit_noise, noise_rate, optimize_pump, snr,
    NoiseCalibration, NoisePolynomial, PumpOptimum, QfcParams, SnrObservation,
};
pub use source::{
    bin_events, repetition_rate, simulate, simulate_with_workers, EmissionEvent, PhotonKind,
    PulseSequenceConfig, Simulation, SourceWarning,
};
pub use vapor::{
    calibrate_scale, number_density, resonance_strength, CalibrationResult, DelayModel,
    DelayObservation, DelayReference, VaporModel,
};
