//! Frequency-conversion budget: pump-power dependence of the conversion
//! efficiency, pump-induced noise, and the resulting signal-to-noise ratio.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `dark + linear·P + quadratic·P²`, counts/s at the detector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoisePolynomial {
    pub dark: f64,
    pub linear: f64,
    pub quadratic: f64,
}

impl NoisePolynomial {
    pub fn eval(&self, pump: f64) -> f64 {
        self.dark + pump * (self.linear + pump * self.quadratic)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            dark: k * self.dark,
            linear: k * self.linear,
            quadratic: k * self.quadratic,
        }
    }

    /// Checks `eval(P) ≥ 0` for every `P ≥ 0`.
    pub fn validate(&self) -> Result<()> {
        let finite = self.dark.is_finite() && self.linear.is_finite() && self.quadratic.is_finite();
        if !finite {
            return Err(Error::invalid("noise coefficients must be finite"));
        }
        let min = if self.quadratic > 0.0 && self.linear < 0.0 {
            self.eval(-self.linear / (2.0 * self.quadratic))
        } else if self.quadratic < 0.0 || (self.quadratic == 0.0 && self.linear < 0.0) {
            f64::NEG_INFINITY
        } else {
            self.dark
        };
        if min < 0.0 {
            return Err(Error::invalid(format!(
                "noise polynomial {self:?} becomes negative for some pump power"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QfcParams {
    /// Peak conversion efficiency, reached at `p_opt`.
    pub eta_max: f64,
    /// Pump power of peak efficiency (W).
    pub p_opt: f64,
    pub noise: NoisePolynomial,
    pub bragg_transmission: f64,
    /// Insertion transmission of the vapour cell (windows and absorption).
    pub cell_transmission: f64,
    /// Whether the cell sits in the beam path.
    pub cell_inserted: bool,
    /// Further resonant absorption in the cell, multiplied in when inserted.
    pub cell_absorption: f64,
    /// Length of the photon arrival window in which noise is counted (s).
    pub window: f64,
    /// Rate of arrival windows (Hz).
    pub trigger_rate: f64,
}

impl Default for QfcParams {
    fn default() -> Self {
        Self {
            eta_max: 0.177,
            p_opt: 1.0,
            noise: NoisePolynomial::default(),
            bragg_transmission: 0.90,
            cell_transmission: 0.70,
            cell_inserted: false,
            cell_absorption: 1.0,
            window: 50e-9,
            trigger_rate: 3.788e5,
        }
    }
}

impl QfcParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta_max) {
            return Err(Error::invalid(format!("eta_max = {} must lie in [0, 1]", self.eta_max)));
        }
        if !(self.p_opt > 0.0) || !self.p_opt.is_finite() {
            return Err(Error::invalid(format!("p_opt = {} must be positive", self.p_opt)));
        }
        for (name, v) in [
            ("bragg_transmission", self.bragg_transmission),
            ("cell_transmission", self.cell_transmission),
            ("cell_absorption", self.cell_absorption),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} must lie in [0, 1]")));
            }
        }
        if !(self.window > 0.0) || !(self.trigger_rate > 0.0) {
            return Err(Error::invalid("window and trigger_rate must be positive"));
        }
        self.noise.validate()
    }

    /// Product of transmissions between the converter and the detector.
    pub fn signal_transmission(&self) -> f64 {
        let cell = if self.cell_inserted {
            self.cell_transmission * self.cell_absorption
        } else {
            1.0
        };
        self.bragg_transmission * cell
    }

    /// Fraction of wall-clock time during which noise counts are accepted.
    pub fn duty_cycle(&self) -> f64 {
        self.window * self.trigger_rate
    }
}

pub fn conversion_efficiency(pump: f64, params: &QfcParams) -> Result<f64> {
    if !(pump >= 0.0) {
        return Err(Error::invalid(format!("pump power {pump} W must be non-negative")));
    }
    let s = (FRAC_PI_2 * (pump / params.p_opt).sqrt()).sin();
    Ok(params.eta_max * s * s)
}

pub fn noise_rate(pump: f64, params: &QfcParams) -> Result<f64> {
    if !(pump >= 0.0) {
        return Err(Error::invalid(format!("pump power {pump} W must be non-negative")));
    }
    params.noise.validate()?;
    Ok(params.noise.eval(pump))
}

/// Least-squares polynomial of degree `degree` (≤ 2) through
/// `(pump W, counts/s)` points.
pub fn fit_noise(points: &[(f64, f64)], degree: usize) -> Result<NoisePolynomial> {
    if degree > 2 {
        return Err(Error::invalid("noise polynomial degree must be at most 2"));
    }
    let distinct = {
        let mut p: Vec<f64> = points.iter().map(|p| p.0).collect();
        p.sort_by(f64::total_cmp);
        p.dedup();
        p.len()
    };
    if distinct <= degree {
        return Err(Error::Degenerate(format!(
            "{distinct} distinct pump powers cannot determine a degree-{degree} fit"
        )));
    }
    let cols = degree + 1;
    let a = DMatrix::from_fn(points.len(), cols, |i, j| points[i].0.powi(j as i32));
    let b = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    Ok(NoisePolynomial {
        dark: coef[0],
        linear: if cols > 1 { coef[1] } else { 0.0 },
        quadratic: if cols > 2 { coef[2] } else { 0.0 },
    })
}

/// Detected signal counts over noise counts in the arrival windows, for
/// `rate` photons/s entering the converter.
pub fn snr(pump: f64, rate: f64, params: &QfcParams) -> Result<f64> {
    let signal = rate * conversion_efficiency(pump, params)? * params.signal_transmission();
    let noise = noise_rate(pump, params)? * params.duty_cycle();
    if noise == 0.0 {
        return if signal == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::Domain(format!("noise vanishes at {pump} W")))
        };
    }
    Ok(signal / noise)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpOptimum {
    pub pump: f64,
    pub snr: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Maximises `snr` over `[0, 2·p_opt]`: a 256-point scan brackets the best
/// grid point, golden-section search refines it to `1e-6·p_opt`.
pub fn optimize_pump(params: &QfcParams, rate: f64) -> Result<PumpOptimum> {
    params.validate()?;
    if !(rate > 0.0) {
        return Err(Error::Degenerate(format!("input rate {rate} gives zero SNR everywhere")));
    }
    if params.noise == NoisePolynomial::default() {
        return Err(Error::invalid("noise polynomial is unset; supply fitted noise coefficients"));
    }
    if params.eta_max == 0.0 || params.signal_transmission() == 0.0 {
        return Err(Error::Degenerate("signal path transmits nothing".into()));
    }
    let hi = 2.0 * params.p_opt;
    let n = 256;
    let step = hi / n as f64;
    let f = |p: f64| snr(p, rate, params);
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 1..=n {
        let v = f(i as f64 * step)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let mut a = (best.0 as f64 - 1.0) * step;
    let mut b = ((best.0 + 1) as f64 * step).min(hi);
    let tol = 1e-6 * params.p_opt;
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
        }
    }
    let pump = 0.5 * (a + b);
    Ok(PumpOptimum { pump, snr: f(pump)? })
}

/// A measured peak SNR and the signal transmission, relative to the
/// parameter set being calibrated, under which it was taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrObservation {
    pub signal_factor: f64,
    pub snr: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub params: QfcParams,
    /// Factor applied to every noise coefficient.
    pub noise_scale: f64,
    /// Peak SNR of the calibrated parameters.
    pub peak_snr: f64,
    pub predicted: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Rescales the noise polynomial so that the predicted peak SNRs fit the
/// observations in the weighted least-squares sense. Scaling the noise does
/// not move the optimal pump power, so every prediction is
/// `signal_factor · x` with a single unknown `x`.
pub fn calibrate_noise_scale(params: &QfcParams, rate: f64, observations: &[SnrObservation]) -> Result<NoiseCalibration> {
    if observations.is_empty() {
        return Err(Error::Degenerate("no SNR observations to calibrate against".into()));
    }
    for o in observations {
        if !(o.sigma > 0.0) || !(o.signal_factor > 0.0) || !(o.snr > 0.0) {
            return Err(Error::invalid(format!("unusable SNR observation {o:?}")));
        }
    }
    let base = optimize_pump(params, rate)?;
    let (num, den) = observations.iter().fold((0.0, 0.0), |(n, d), o| {
        let w = 1.0 / (o.sigma * o.sigma);
        (n + w * o.signal_factor * o.snr, d + w * o.signal_factor * o.signal_factor)
    });
    let x = num / den;
    let noise_scale = base.snr / x;
    let calibrated = QfcParams {
        noise: params.noise.scaled(noise_scale),
        ..*params
    };
    let peak_snr = optimize_pump(&calibrated, rate)?.snr;
    let predicted: Vec<f64> = observations.iter().map(|o| o.signal_factor * peak_snr).collect();
    let residuals = observations.iter().zip(&predicted).map(|(o, p)| o.snr - p).collect();
    Ok(NoiseCalibration {
        params: calibrated,
        noise_scale,
        peak_snr,
        predicted,
        residuals,
    })
}
