//! Run configuration read from JSON or TOML. Frequencies are given in Hz and
//! converted to rad/s here; every key carries its unit in the name.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{self, BOLTZMANN, EPSILON_0, HBAR, SPEED_OF_LIGHT};
use crate::dispersion::{GroupVelocityModel, ResonanceDoublet};
use crate::error::{Error, Result};
use crate::qfc::QfcParams;
use crate::source::PulseSequenceConfig;
use crate::vapor::{DelayModel, DelayReference, VaporModel};

/// Optional restatement of the physical constants. They are fixed SI values;
/// a file may repeat them but not change them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsSpec {
    pub c_m_s: Option<f64>,
    pub hbar_j_s: Option<f64>,
    pub epsilon0_f_m: Option<f64>,
    pub boltzmann_j_k: Option<f64>,
}

impl ConstantsSpec {
    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("c_m_s", self.c_m_s, SPEED_OF_LIGHT),
            ("hbar_j_s", self.hbar_j_s, HBAR),
            ("epsilon0_f_m", self.epsilon0_f_m, EPSILON_0),
            ("boltzmann_j_k", self.boltzmann_j_k, BOLTZMANN),
        ];
        for (key, given, si) in pairs {
            if let Some(v) = given {
                if ((v - si) / si).abs() > 1e-9 {
                    return Err(Error::invalid(format!(
                        "constants.{key} = {v} differs from the SI value {si}; physical constants are fixed"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubletSpec {
    pub g1: f64,
    pub g2: f64,
    /// Homogeneous linewidth, FWHM (Hz).
    pub linewidth_hz: f64,
    /// Line splitting (Hz). Mutually exclusive with the peak frequencies.
    pub splitting_hz: Option<f64>,
    /// Absolute optical frequencies of the two lines (Hz).
    pub peak1_hz: Option<f64>,
    pub peak2_hz: Option<f64>,
    /// Carrier at peak transmission, as a vacuum wavelength (m) or a
    /// frequency (Hz). Ignored when the peak frequencies are given.
    pub carrier_wavelength_m: Option<f64>,
    pub carrier_hz: Option<f64>,
}

impl Default for DoubletSpec {
    fn default() -> Self {
        Self {
            g1: constants::RB87_G1,
            g2: constants::RB87_G2,
            linewidth_hz: constants::RB87_D2_LINEWIDTH_HZ,
            splitting_hz: None,
            peak1_hz: None,
            peak2_hz: None,
            carrier_wavelength_m: None,
            carrier_hz: None,
        }
    }
}

impl DoubletSpec {
    pub fn resolve(&self) -> Result<ResonanceDoublet> {
        let gamma = constants::hz_to_rad(self.linewidth_hz);
        match (self.peak1_hz, self.peak2_hz) {
            (Some(p1), Some(p2)) => {
                if self.splitting_hz.is_some() || self.carrier_hz.is_some() || self.carrier_wavelength_m.is_some() {
                    return Err(Error::invalid(
                        "give either peak1_hz/peak2_hz or splitting_hz with a carrier, not both",
                    ));
                }
                ResonanceDoublet::new(self.g1, self.g2, gamma, constants::hz_to_rad(p1), constants::hz_to_rad(p2))
            }
            (None, None) => {
                let splitting = self.splitting_hz.unwrap_or(constants::RB87_HYPERFINE_SPLITTING_HZ);
                let omega0 = match (self.carrier_hz, self.carrier_wavelength_m) {
                    (Some(_), Some(_)) => {
                        return Err(Error::invalid("give carrier_hz or carrier_wavelength_m, not both"))
                    }
                    (Some(f), None) => constants::hz_to_rad(f),
                    (None, Some(l)) => constants::wavelength_to_rad(l),
                    (None, None) => constants::wavelength_to_rad(constants::RB87_D2_WAVELENGTH_M),
                };
                ResonanceDoublet::from_splitting(self.g1, self.g2, gamma, constants::hz_to_rad(splitting), omega0)
            }
            _ => Err(Error::invalid("peak1_hz and peak2_hz must be given together")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellSpec {
    pub length_m: f64,
    pub dipole_cm: f64,
    /// Carrier detuning from peak transmission (Hz).
    pub detuning_hz: f64,
    pub velocity_model: GroupVelocityModel,
    pub reference: DelayReference,
}

impl Default for CellSpec {
    fn default() -> Self {
        Self {
            length_m: constants::DEFAULT_CELL_LENGTH_M,
            dipole_cm: constants::RB87_D2_DIPOLE_CM,
            detuning_hz: 0.0,
            velocity_model: GroupVelocityModel::default(),
            reference: DelayReference::default(),
        }
    }
}

/// Seeds, sizes and rates of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub seed: u64,
    pub blocks: u64,
    /// Worker threads for Monte Carlo; 0 picks one per core.
    pub workers: usize,
    pub bin_width_s: f64,
    /// Photons per second entering the converter.
    pub qfc_input_rate_hz: f64,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            blocks: 1,
            workers: 0,
            bin_width_s: crate::wavepacket::DEFAULT_BIN_WIDTH,
            qfc_input_rate_hz: 1e5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub constants: ConstantsSpec,
    pub doublet: DoubletSpec,
    pub cell: CellSpec,
    pub vapor: VaporModel,
    pub source: PulseSequenceConfig,
    pub qfc: QfcParams,
    pub run: RunSpec,
}

impl SimConfig {
    /// Loads a `.json` or `.toml` file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            Some("toml") => Self::from_toml(&text),
            _ => Err(Error::invalid(format!(
                "config file {} must end in .json or .toml",
                path.display()
            ))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format(e.line(), e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::format(line, e.message().to_string())
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        self.delay_model()?;
        self.source.validate()?;
        self.qfc.validate()
    }

    pub fn doublet(&self) -> Result<ResonanceDoublet> {
        self.doublet.resolve()
    }

    pub fn delay_model(&self) -> Result<DelayModel> {
        self.constants.validate()?;
        self.vapor.validate()?;
        if !(self.cell.length_m >= 0.0) || !(self.cell.dipole_cm > 0.0) {
            return Err(Error::invalid("cell length must be non-negative and dipole positive"));
        }
        Ok(DelayModel {
            doublet: self.doublet()?,
            vapor: self.vapor,
            length: self.cell.length_m,
            dipole: self.cell.dipole_cm,
            detuning: constants::hz_to_rad(self.cell.detuning_hz),
            velocity_model: self.cell.velocity_model,
            reference: self.cell.reference,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_to_reference_model() {
        let m = SimConfig::default().delay_model().unwrap();
        assert_eq!(m, DelayModel::default());
    }

    #[test]
    fn toml_with_units_in_hz() {
        let cfg = SimConfig::from_toml(
            r#"
            [doublet]
            linewidth_hz = 6e6
            splitting_hz = 6.8e9

            [cell]
            length_m = 0.1
            velocity_model = "full"
            reference = { kind = "cell", temperature = 296.0 }

            [run]
            seed = 42
            "#,
        )
        .unwrap();
        let d = cfg.doublet().unwrap();
        assert!((d.omega_s() - 2.0 * std::f64::consts::PI * 3.4e9).abs() < 1e-3);
        assert_eq!(cfg.run.seed, 42);
        let m = cfg.delay_model().unwrap();
        assert_eq!(m.velocity_model, GroupVelocityModel::Full);
        assert_eq!(m.reference, DelayReference::Cell { temperature: 296.0 });
    }

    #[test]
    fn peak_frequencies_set_carrier_at_transmission_maximum() {
        let f1 = 384.2e12;
        let cfg = SimConfig {
            doublet: DoubletSpec {
                peak1_hz: Some(f1),
                peak2_hz: Some(f1 + 6.8e9),
                ..Default::default()
            },
            ..Default::default()
        };
        let d = cfg.doublet().unwrap();
        let rel = (d.omega1() - constants::hz_to_rad(f1)) / d.omega1();
        assert!(rel.abs() < 1e-15);
        assert!((d.splitting - constants::hz_to_rad(6.8e9)).abs() < 1e-3 * d.splitting * 1e-3);
    }

    #[test]
    fn conflicting_keys_are_rejected() {
        let both = DoubletSpec {
            peak1_hz: Some(1e14),
            peak2_hz: Some(1e14 + 7e9),
            splitting_hz: Some(7e9),
            ..Default::default()
        };
        assert!(both.resolve().is_err());
        let half = DoubletSpec {
            peak1_hz: Some(1e14),
            ..Default::default()
        };
        assert!(half.resolve().is_err());
    }

    #[test]
    fn changed_constants_are_rejected() {
        let mut cfg = SimConfig::default();
        cfg.constants.c_m_s = Some(299_792_458.0);
        assert!(cfg.validate().is_ok());
        cfg.constants.c_m_s = Some(3e8);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_keys_report_a_line() {
        match SimConfig::from_toml("[cell]\nlength_m = 0.1\nlenght_m = 0.2\n") {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match SimConfig::from_json("{\n \"cell\": {\n  \"length_m\": \"x\"\n }\n}") {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let cfg = SimConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(SimConfig::from_json(&text).unwrap(), cfg);
    }
}
