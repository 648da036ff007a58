//! Physical constants (SI) and ⁸⁷Rb D₂ reference data.

use std::f64::consts::PI;

/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant (J·s), exact.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Vacuum permittivity (F/m), CODATA 2018.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Boltzmann constant (J/K), exact.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Ground-state hyperfine splitting of ⁸⁷Rb (Hz).
pub const RB87_HYPERFINE_SPLITTING_HZ: f64 = 6.834_682_610_904e9;

/// Vacuum wavelength of the ⁸⁷Rb D₂ line (m).
pub const RB87_D2_WAVELENGTH_M: f64 = 780.241_209_686e-9;

/// Natural linewidth (FWHM) of the D₂ transition (Hz).
pub const RB87_D2_LINEWIDTH_HZ: f64 = 6.07e6;

/// Reduced dipole matrix element of the D₂ transition (C·m).
pub const RB87_D2_DIPOLE_CM: f64 = 3.584_244e-29;

/// Relative strength of the lower-frequency line of the doublet.
pub const RB87_G1: f64 = 7.0 / 16.0;

/// Relative strength of the upper-frequency line of the doublet.
pub const RB87_G2: f64 = 9.0 / 16.0;

/// Length of the vapour cell (m).
pub const DEFAULT_CELL_LENGTH_M: f64 = 0.075;

/// Converts a cyclic frequency (Hz) to angular frequency (rad/s).
#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    2.0 * PI * f
}

#[inline]
pub fn rad_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Angular frequency of light with the given vacuum wavelength.
#[inline]
pub fn wavelength_to_rad(lambda: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / lambda
}
