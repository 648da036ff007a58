//! Complex refractive index, absorption and group velocity of a vapour with
//! two Lorentzian absorption lines, evaluated at a detuning `delta` (rad/s)
//! measured from the transmission maximum between the lines.
//!
//! Sign convention: a field component travelling through the cell picks up
//! `exp(i·(ω/c)·n·L)`. With `n = 1 − A·Σ gⱼ/(xⱼ + iγ/2)` the imaginary part
//! is `+A·Σ gⱼ(γ/2)/(xⱼ² + γ²/4) ≥ 0`, so the field decays as
//! `exp(−(ω/c)·n_i·L)` and the intensity transmission `exp(−α·L)` with
//! `α = 2(ω₀/c)·n_i` never exceeds one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{self, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// The two absorption lines of the medium.
///
/// Line 1 (strength `g1`, angular frequency `omega1()`) sits at
/// `delta = −Δ₊`, line 2 (strength `g2`, `omega2()`) at `delta = +Δ₋`.
///
/// The splitting and the carrier are stored separately so that the GHz-scale
/// offsets keep full precision next to the optical carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceDoublet {
    pub g1: f64,
    pub g2: f64,
    /// Homogeneous linewidth (rad/s).
    pub gamma: f64,
    /// Line splitting `ω₂ − ω₁` (rad/s).
    pub splitting: f64,
    /// Carrier angular frequency at peak transmission (rad/s).
    pub omega0: f64,
}

impl ResonanceDoublet {
    /// Builds a doublet from the absolute angular frequencies of both lines.
    pub fn new(g1: f64, g2: f64, gamma: f64, omega1: f64, omega2: f64) -> Result<Self> {
        let splitting = omega2 - omega1;
        let (plus, _) = split_offsets(g1, g2, 0.5 * splitting);
        Self::from_splitting(g1, g2, gamma, splitting, omega1 + plus)
    }

    /// Builds a doublet from the line splitting `ω₂ − ω₁` and the carrier
    /// frequency at peak transmission.
    pub fn from_splitting(g1: f64, g2: f64, gamma: f64, splitting: f64, omega0: f64) -> Result<Self> {
        let d = Self {
            g1,
            g2,
            gamma,
            splitting,
            omega0,
        };
        d.validate()?;
        Ok(d)
    }

    /// ⁸⁷Rb D₂ hyperfine doublet probed at 780 nm.
    pub fn rb87_d2() -> Self {
        Self::from_splitting(
            constants::RB87_G1,
            constants::RB87_G2,
            constants::hz_to_rad(constants::RB87_D2_LINEWIDTH_HZ),
            constants::hz_to_rad(constants::RB87_HYPERFINE_SPLITTING_HZ),
            constants::wavelength_to_rad(constants::RB87_D2_WAVELENGTH_M),
        )
        .expect("reference doublet is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.g1, self.g2, self.gamma, self.splitting, self.omega0]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("doublet parameters must be finite"));
        }
        if self.g1 <= 0.0 || self.g2 <= 0.0 {
            return Err(Error::invalid("line strengths g1, g2 must be positive"));
        }
        if self.splitting <= 0.0 {
            return Err(Error::invalid("omega2 must exceed omega1"));
        }
        if self.omega0 <= self.splitting {
            return Err(Error::invalid("carrier frequency must exceed the line splitting"));
        }
        if self.gamma <= 0.0 {
            return Err(Error::invalid("linewidth gamma must be positive"));
        }
        if self.gamma >= self.splitting {
            return Err(Error::invalid(
                "linewidth gamma must be much smaller than the line splitting",
            ));
        }
        Ok(())
    }

    /// Half the line splitting, `ω_s = (ω₂ − ω₁)/2`.
    pub fn omega_s(&self) -> f64 {
        0.5 * self.splitting
    }

    /// Angular frequency of line 1.
    pub fn omega1(&self) -> f64 {
        self.omega0 - self.delta_plus()
    }

    /// Angular frequency of line 2.
    pub fn omega2(&self) -> f64 {
        self.omega0 + self.delta_minus()
    }

    /// Shift of the transmission maximum from the geometric midpoint.
    pub fn delta_shift(&self) -> f64 {
        let (a, b) = (self.g1.cbrt(), self.g2.cbrt());
        self.omega_s() * (a - b) / (a + b)
    }

    /// Distance from the transmission maximum to line 1.
    pub fn delta_plus(&self) -> f64 {
        split_offsets(self.g1, self.g2, self.omega_s()).0
    }

    /// Distance from the transmission maximum to line 2.
    pub fn delta_minus(&self) -> f64 {
        split_offsets(self.g1, self.g2, self.omega_s()).1
    }
}

// Δ₊ = 2ω_s·a/(a+b) and Δ₋ = 2ω_s·b/(a+b) with a = g1^{1/3}, b = g2^{1/3};
// algebraically equal to ω_s ± Δ but without the cancellation.
fn split_offsets(g1: f64, g2: f64, omega_s: f64) -> (f64, f64) {
    let (a, b) = (g1.cbrt(), g2.cbrt());
    let s = a + b;
    (2.0 * omega_s * a / s, 2.0 * omega_s * b / s)
}

/// How the group velocity is obtained from the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupVelocityModel {
    /// `v_g = (ω₀/c · dn_r/dω)⁻¹`: dispersive term only. The resulting
    /// `L/v_g` is the excess delay over vacuum.
    #[default]
    DispersiveOnly,
    /// `v_g = c / (n_r + ω₀·dn_r/dω)`.
    Full,
}

/// Physical state of the vapour cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumState {
    /// Cell (cold-finger) temperature (K).
    pub temperature: f64,
    /// Atomic number density (m⁻³).
    pub number_density: f64,
    /// Resonance strength `A` (rad/s).
    pub strength: f64,
    /// Cell length (m).
    pub length: f64,
    /// Effective far-detuned dipole moment (C·m).
    pub dipole: f64,
}

impl MediumState {
    /// A medium with a directly specified strength.
    pub fn with_strength(strength: f64, length: f64) -> Self {
        Self {
            temperature: f64::NAN,
            number_density: f64::NAN,
            strength,
            length,
            dipole: f64::NAN,
        }
    }

    pub fn vacuum(length: f64) -> Self {
        Self::with_strength(0.0, length)
    }
}

#[inline]
fn detunings(delta: f64, d: &ResonanceDoublet) -> (f64, f64) {
    (delta + d.delta_plus(), delta - d.delta_minus())
}

/// Complex refractive index `n(δ)` for resonance strength `a` (rad/s).
pub fn complex_index(delta: f64, doublet: &ResonanceDoublet, a: f64) -> Complex64 {
    1.0 + index_offset(delta, doublet, a)
}

/// `n(δ) − 1`, evaluated without the cancellation of forming `n` first.
pub fn index_offset(delta: f64, doublet: &ResonanceDoublet, a: f64) -> Complex64 {
    let (x1, x2) = detunings(delta, doublet);
    let half = 0.5 * doublet.gamma;
    let t1 = doublet.g1 / Complex64::new(x1, half);
    let t2 = doublet.g2 / Complex64::new(x2, half);
    -a * (t1 + t2)
}

/// Analytic `dn_r/dω` at detuning `delta`.
pub fn index_slope(delta: f64, doublet: &ResonanceDoublet, a: f64) -> f64 {
    let (x1, x2) = detunings(delta, doublet);
    let h2 = 0.25 * doublet.gamma * doublet.gamma;
    let term = |g: f64, x: f64| {
        let den = x * x + h2;
        g * (x * x - h2) / (den * den)
    };
    a * (term(doublet.g1, x1) + term(doublet.g2, x2))
}

/// Group velocity under the dispersive-only model.
pub fn group_velocity(delta: f64, doublet: &ResonanceDoublet, a: f64) -> Result<f64> {
    group_velocity_with(delta, doublet, a, GroupVelocityModel::DispersiveOnly)
}

pub fn group_velocity_with(
    delta: f64,
    doublet: &ResonanceDoublet,
    a: f64,
    model: GroupVelocityModel,
) -> Result<f64> {
    let slope = index_slope(delta, doublet, a);
    let k0 = doublet.omega0 / SPEED_OF_LIGHT;
    match model {
        GroupVelocityModel::DispersiveOnly => {
            if slope <= 0.0 || !slope.is_finite() {
                return Err(Error::Domain(format!(
                    "dn_r/dω = {slope:e} s is not positive at δ = {delta:e} rad/s"
                )));
            }
            Ok(1.0 / (k0 * slope))
        }
        GroupVelocityModel::Full => {
            if slope < 0.0 || !slope.is_finite() {
                return Err(Error::Domain(format!(
                    "anomalous dispersion (dn_r/dω = {slope:e} s) at δ = {delta:e} rad/s"
                )));
            }
            let n_r = complex_index(delta, doublet, a).re;
            Ok(SPEED_OF_LIGHT / (n_r + doublet.omega0 * slope))
        }
    }
}

/// Intensity absorption coefficient (1/m), evaluated at the fixed carrier.
pub fn absorption_coefficient(delta: f64, doublet: &ResonanceDoublet, a: f64) -> f64 {
    let n_i = complex_index(delta, doublet, a).im;
    2.0 * doublet.omega0 / SPEED_OF_LIGHT * n_i.abs()
}

/// Intensity transmission through the cell.
pub fn transmission(delta: f64, doublet: &ResonanceDoublet, medium: &MediumState) -> f64 {
    (-absorption_coefficient(delta, doublet, medium.strength) * medium.length).exp()
}

/// Group delay relative to vacuum traversal of the same length.
pub fn group_delay(medium: &MediumState, doublet: &ResonanceDoublet, delta: f64) -> Result<f64> {
    group_delay_with(medium, doublet, delta, GroupVelocityModel::DispersiveOnly)
}

/// Group delay relative to vacuum; linear in the resonance strength for both
/// models and exactly zero for an empty cell.
pub fn group_delay_with(
    medium: &MediumState,
    doublet: &ResonanceDoublet,
    delta: f64,
    model: GroupVelocityModel,
) -> Result<f64> {
    let a = medium.strength;
    if a == 0.0 {
        return Ok(0.0);
    }
    let length = medium.length;
    match model {
        // Here 1/v_g = ω₀/c·dn_r/dω carries no vacuum term, so L/v_g is
        // already the excess delay.
        GroupVelocityModel::DispersiveOnly => Ok(length / group_velocity(delta, doublet, a)?),
        GroupVelocityModel::Full => {
            // validates the dispersion region
            group_velocity_with(delta, doublet, a, model)?;
            let excess = index_offset(delta, doublet, a).re;
            let slope = index_slope(delta, doublet, a);
            Ok(length / SPEED_OF_LIGHT * (excess + doublet.omega0 * slope))
        }
    }
}
