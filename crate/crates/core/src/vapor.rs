//! Temperature → number density → resonance strength, and the scalar
//! calibration of the modelled delay curve against measured delays.

use serde::{Deserialize, Serialize};

use crate::constants::{self, BOLTZMANN, EPSILON_0, HBAR};
use crate::dispersion::{group_delay_with, GroupVelocityModel, MediumState, ResonanceDoublet};
use crate::error::{Error, Result};

const LOG10_PA_PER_TORR: f64 = 2.124_903_020_132_939; // log10(101325/760)

/// Two-branch vapour-pressure correlation `log10(P/Pa) = a − b/T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VaporModel {
    pub a_solid: f64,
    /// K
    pub b_solid: f64,
    pub a_liquid: f64,
    /// K
    pub b_liquid: f64,
    /// K
    pub melting_point: f64,
    /// Fraction of the vapour that is the resonant isotope.
    pub isotope_fraction: f64,
    /// Lower bound of the correlation's validity window (K).
    pub t_min: f64,
    /// Upper bound of the correlation's validity window (K).
    pub t_max: f64,
}

impl Default for VaporModel {
    /// Rubidium coefficients, enriched cell.
    fn default() -> Self {
        Self {
            a_solid: 2.881 + 4.857 + LOG10_PA_PER_TORR,
            b_solid: 4215.0,
            a_liquid: 2.881 + 4.312 + LOG10_PA_PER_TORR,
            b_liquid: 4040.0,
            melting_point: 312.46,
            isotope_fraction: 1.0,
            t_min: 250.0,
            t_max: 500.0,
        }
    }
}

impl VaporModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.isotope_fraction > 0.0 && self.isotope_fraction <= 1.0) {
            return Err(Error::invalid("isotope_fraction must lie in (0, 1]"));
        }
        if !(self.t_min < self.t_max) || self.t_min <= 0.0 {
            return Err(Error::invalid("temperature window must satisfy 0 < t_min < t_max"));
        }
        if self.b_solid <= 0.0 || self.b_liquid <= 0.0 {
            return Err(Error::invalid("vapour-pressure slopes must be positive"));
        }
        let tm = self.melting_point;
        let solid = self.a_solid - self.b_solid / tm;
        let liquid = self.a_liquid - self.b_liquid / tm;
        let jump = 10f64.powf((solid - liquid).abs()) - 1.0;
        if jump > 0.05 {
            return Err(Error::invalid(format!(
                "vapour pressure jumps by {:.1}% at the melting point",
                100.0 * jump
            )));
        }
        Ok(())
    }

    /// Saturated vapour pressure (Pa).
    pub fn vapor_pressure(&self, temperature: f64) -> Result<f64> {
        self.check_window(temperature)?;
        let log_p = if temperature < self.melting_point {
            self.a_solid - self.b_solid / temperature
        } else {
            self.a_liquid - self.b_liquid / temperature
        };
        Ok(10f64.powf(log_p))
    }

    fn check_window(&self, temperature: f64) -> Result<()> {
        if !(temperature >= self.t_min && temperature <= self.t_max) {
            return Err(Error::OutOfRange {
                quantity: "temperature (K)",
                value: temperature,
                min: self.t_min,
                max: self.t_max,
            });
        }
        Ok(())
    }
}

/// Number density of the resonant isotope (m⁻³).
pub fn number_density(temperature: f64, model: &VaporModel) -> Result<f64> {
    let p = model.vapor_pressure(temperature)?;
    Ok(model.isotope_fraction * p / (BOLTZMANN * temperature))
}

/// Resonance strength `A = N|μ|²/(2ε₀ħ(g1+g2))` in rad/s.
pub fn resonance_strength(number_density: f64, dipole: f64, g1: f64, g2: f64) -> f64 {
    number_density * dipole * dipole / (2.0 * EPSILON_0 * HBAR * (g1 + g2))
}

/// What a reported delay is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DelayReference {
    /// Delay over vacuum traversal of the cell length.
    #[default]
    Vacuum,
    /// Delay relative to the same cell held at `temperature` (K).
    Cell { temperature: f64 },
}

/// Delay of a photon at fixed detuning as a function of cell temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayModel {
    pub doublet: ResonanceDoublet,
    pub vapor: VaporModel,
    /// Cell length (m).
    pub length: f64,
    /// Effective dipole moment (C·m).
    pub dipole: f64,
    /// Carrier detuning from peak transmission (rad/s).
    pub detuning: f64,
    pub velocity_model: GroupVelocityModel,
    pub reference: DelayReference,
}

impl Default for DelayModel {
    fn default() -> Self {
        Self {
            doublet: ResonanceDoublet::rb87_d2(),
            vapor: VaporModel::default(),
            length: constants::DEFAULT_CELL_LENGTH_M,
            dipole: constants::RB87_D2_DIPOLE_CM,
            detuning: 0.0,
            velocity_model: GroupVelocityModel::default(),
            reference: DelayReference::default(),
        }
    }
}

impl DelayModel {
    /// Cell state at `temperature` with the strength multiplied by `scale`.
    pub fn medium(&self, temperature: f64, scale: f64) -> Result<MediumState> {
        let n = number_density(temperature, &self.vapor)?;
        let a = resonance_strength(n, self.dipole, self.doublet.g1, self.doublet.g2);
        Ok(MediumState {
            temperature,
            number_density: n,
            strength: scale * a,
            length: self.length,
            dipole: self.dipole,
        })
    }

    fn vacuum_delay(&self, temperature: f64, scale: f64) -> Result<f64> {
        let m = self.medium(temperature, scale)?;
        group_delay_with(&m, &self.doublet, self.detuning, self.velocity_model)
    }

    /// Modelled delay (s) at `temperature` for calibration scale `scale`.
    pub fn delay(&self, temperature: f64, scale: f64) -> Result<f64> {
        let d = self.vacuum_delay(temperature, scale)?;
        match self.reference {
            DelayReference::Vacuum => Ok(d),
            DelayReference::Cell { temperature: t_ref } => Ok(d - self.vacuum_delay(t_ref, scale)?),
        }
    }
}

/// A measured delay at one cell temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayObservation {
    /// K
    pub temperature: f64,
    /// s
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Multiplier applied to the modelled resonance strength.
    pub scale: f64,
    /// Observed minus fitted delay per observation (s).
    pub residuals: Vec<f64>,
    /// Unscaled model delay per observation (s).
    pub model_values: Vec<f64>,
    pub observations: Vec<DelayObservation>,
    pub method: String,
}

/// Least-squares scale `s` minimising `Σ(s·mᵢ − dᵢ)²`, where `mᵢ` is the
/// unscaled model delay at the i-th observed temperature.
pub fn calibrate_scale(observations: &[DelayObservation], model: &DelayModel) -> Result<CalibrationResult> {
    if observations.is_empty() {
        return Err(Error::Degenerate("no observations to calibrate against".into()));
    }
    if let Some(o) = observations.iter().find(|o| !(o.delay >= 0.0) || !o.delay.is_finite()) {
        return Err(Error::invalid(format!(
            "observed delay {} s at {} K must be finite and non-negative",
            o.delay, o.temperature
        )));
    }
    let model_values = observations
        .iter()
        .map(|o| model.delay(o.temperature, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let (num, den) = observations
        .iter()
        .zip(&model_values)
        .fold((0.0, 0.0), |(n, d), (o, m)| (n + m * o.delay, d + m * m));
    if den == 0.0 {
        return Err(Error::Degenerate("model delay is zero at every observed temperature".into()));
    }
    let scale = num / den;
    if !(scale > 0.0) {
        return Err(Error::Degenerate(format!("fitted scale {scale} is not positive")));
    }
    let residuals = observations
        .iter()
        .zip(&model_values)
        .map(|(o, m)| o.delay - scale * m)
        .collect();
    Ok(CalibrationResult {
        scale,
        residuals,
        model_values,
        observations: observations.to_vec(),
        method: "linear-least-squares".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn density_increases_on_one_kelvin_grid() {
        let m = VaporModel::default();
        let mut prev = number_density(296.0, &m).unwrap();
        for t in 297..=423 {
            let n = number_density(t as f64, &m).unwrap();
            assert!(n > prev, "N not increasing at {t} K");
            prev = n;
        }
    }

    #[test]
    fn density_ratio_matches_direct_evaluation() {
        // 40-digit evaluation of the same correlation
        let m = VaporModel::default();
        let r = number_density(373.0, &m).unwrap() / number_density(296.0, &m).unwrap();
        assert_relative_eq!(r, 579.893_910_746_156_4, max_relative = 1e-10);
        assert_relative_eq!(number_density(395.0, &m).unwrap(), 2.256_184_132_547_7e19, max_relative = 1e-10);
    }

    #[test]
    fn isotope_fraction_scales_density() {
        let full = VaporModel::default();
        let half = VaporModel {
            isotope_fraction: 0.5,
            ..full
        };
        let a = number_density(350.0, &full).unwrap();
        let b = number_density(350.0, &half).unwrap();
        assert_eq!(b, 0.5 * a);
    }

    #[test]
    fn temperature_outside_window_is_rejected() {
        let m = VaporModel::default();
        assert!(matches!(number_density(200.0, &m), Err(Error::OutOfRange { .. })));
        assert!(matches!(number_density(600.0, &m), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn default_correlation_is_continuous_at_melting() {
        VaporModel::default().validate().unwrap();
        let broken = VaporModel {
            a_liquid: 8.0,
            ..VaporModel::default()
        };
        assert!(broken.validate().is_err());
    }

    #[test]
    fn strength_matches_direct_evaluation() {
        assert_eq!(resonance_strength(0.0, 3e-29, 0.4, 0.6), 0.0);
        let a = resonance_strength(1e19, constants::RB87_D2_DIPOLE_CM, 7.0 / 16.0, 9.0 / 16.0);
        assert_relative_eq!(a, 6_879_236.614_370_031, max_relative = 1e-9);
        let a2 = resonance_strength(2e19, constants::RB87_D2_DIPOLE_CM, 7.0 / 16.0, 9.0 / 16.0);
        assert_relative_eq!(a2, 2.0 * a, max_relative = 1e-15);
    }

    fn synthetic(model: &DelayModel, scale: f64) -> Vec<DelayObservation> {
        [296.0, 330.0, 360.0, 395.0]
            .iter()
            .map(|&t| DelayObservation {
                temperature: t,
                delay: model.delay(t, scale).unwrap(),
            })
            .collect()
    }

    #[test]
    fn calibration_recovers_known_scales() {
        let model = DelayModel::default();
        let r = calibrate_scale(&synthetic(&model, 1.0), &model).unwrap();
        assert!((r.scale - 1.0).abs() < 1e-12);
        let r = calibrate_scale(&synthetic(&model, 2.5), &model).unwrap();
        assert!((r.scale - 2.5).abs() < 1e-9);
        assert!(r.residuals.iter().all(|x| x.abs() < 1e-20));
    }

    #[test]
    fn calibration_through_endpoint() {
        let model = DelayModel::default();
        let obs = [
            DelayObservation { temperature: 296.0, delay: 0.0 },
            DelayObservation { temperature: 395.0, delay: 13.5e-9 },
        ];
        let r = calibrate_scale(&obs, &model).unwrap();
        let d = model.delay(395.0, r.scale).unwrap();
        assert!((d - 13.5e-9).abs() < 0.5e-9, "{d}");
    }

    #[test]
    fn calibration_errors() {
        let model = DelayModel::default();
        assert!(matches!(calibrate_scale(&[], &model), Err(Error::Degenerate(_))));
        let neg = [DelayObservation { temperature: 350.0, delay: -1e-9 }];
        assert!(calibrate_scale(&neg, &model).is_err());
        let flat = DelayModel {
            dipole: 0.0,
            ..model
        };
        let obs = [DelayObservation { temperature: 350.0, delay: 1e-9 }];
        assert!(matches!(calibrate_scale(&obs, &flat), Err(Error::Degenerate(_))));
    }

    #[test]
    fn room_temperature_reference_vanishes_at_reference() {
        let model = DelayModel {
            reference: DelayReference::Cell { temperature: 296.0 },
            ..DelayModel::default()
        };
        assert_eq!(model.delay(296.0, 1.0).unwrap(), 0.0);
        let vac = DelayModel::default();
        let diff = vac.delay(395.0, 1.0).unwrap() - model.delay(395.0, 1.0).unwrap();
        assert_relative_eq!(diff, vac.delay(296.0, 1.0).unwrap(), max_relative = 1e-9);
    }
}
