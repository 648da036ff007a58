use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::envelope::{Normalization, TemporalEnvelope};
use crate::constants::SPEED_OF_LIGHT;
use crate::dispersion::{index_offset, index_slope, GroupVelocityModel, MediumState, ResonanceDoublet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationOptions {
    pub velocity_model: GroupVelocityModel,
    /// Minimum ratio of transform length to input length.
    pub pad_factor: usize,
    /// Guard window after the input, in units of the predicted delay.
    pub guard_delays: f64,
    /// Forces the output length (samples); must be a power of two.
    pub output_len: Option<usize>,
    /// Largest transform the caller is willing to run.
    pub max_len: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            velocity_model: GroupVelocityModel::default(),
            pad_factor: 4,
            guard_delays: 5.0,
            output_len: None,
            max_len: 1 << 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropagationWarning {
    /// Spectral FWHM is not small against the half-splitting.
    NotNarrowband { bandwidth: f64, omega_s: f64 },
    /// Sampling does not resolve ±10 bandwidths around the carrier.
    CoarseSampling { nyquist: f64, bandwidth: f64 },
}

#[derive(Debug, Clone)]
pub struct Propagated {
    pub envelope: TemporalEnvelope,
    /// Group delay of the carrier under the selected model (s).
    pub predicted_delay: f64,
    /// Spectral FWHM of the input field's power spectrum (rad/s).
    pub bandwidth: f64,
    pub warnings: Vec<PropagationWarning>,
}

/// Carrier group delay without the domain check; used for grid sizing.
fn carrier_delay(medium: &MediumState, doublet: &ResonanceDoublet, delta: f64, model: GroupVelocityModel) -> f64 {
    let a = medium.strength;
    if a == 0.0 {
        return 0.0;
    }
    let k_l = medium.length / SPEED_OF_LIGHT;
    let slope = index_slope(delta, doublet, a);
    match model {
        GroupVelocityModel::DispersiveOnly => k_l * doublet.omega0 * slope,
        GroupVelocityModel::Full => k_l * (index_offset(delta, doublet, a).re + doublet.omega0 * slope),
    }
}

pub fn propagate(
    env: &TemporalEnvelope,
    medium: &MediumState,
    doublet: &ResonanceDoublet,
    carrier_detuning: f64,
) -> Result<Propagated> {
    propagate_with(env, medium, doublet, carrier_detuning, &PropagationOptions::default())
}

/// Propagates the envelope through the cell with the frequency-domain
/// transfer function `exp(i·k(ν)·(n(δ₀+ν) − 1)·L)`, where `k = ω₀/c` for
/// the dispersive-only model and `(ω₀+ν)/c` for the full model. The vacuum
/// transit is divided out, so an empty cell returns the input unchanged.
///
/// The field is taken as the real square root of the intensity. The output
/// starts at the input's `t_start` and spans the padded transform window.
pub fn propagate_with(
    env: &TemporalEnvelope,
    medium: &MediumState,
    doublet: &ResonanceDoublet,
    carrier_detuning: f64,
    opts: &PropagationOptions,
) -> Result<Propagated> {
    env.validate()?;
    if env.is_empty() {
        return Err(Error::Degenerate("cannot propagate an empty envelope".into()));
    }
    if !(medium.length >= 0.0) || !(medium.strength >= 0.0) {
        return Err(Error::invalid("cell length and strength must be non-negative"));
    }
    let len = env.len();
    let predicted = carrier_delay(medium, doublet, carrier_detuning, opts.velocity_model);
    let guard_samples = (opts.guard_delays * predicted.abs() / env.dt).ceil() as usize;
    let n = match opts.output_len {
        Some(n) => {
            if !n.is_power_of_two() || n < len {
                return Err(Error::Grid(format!(
                    "output length {n} must be a power of two no shorter than the input ({len})"
                )));
            }
            if n - len < guard_samples {
                return Err(Error::Grid(format!(
                    "guard window of {} samples cannot hold {:.3e} s of delay ({} samples needed)",
                    n - len,
                    predicted,
                    guard_samples
                )));
            }
            n
        }
        None => (len * opts.pad_factor.max(1)).max(len + guard_samples).next_power_of_two(),
    };
    if n > opts.max_len {
        return Err(Error::Grid(format!("transform length {n} exceeds the limit {}", opts.max_len)));
    }

    let mut buf: Vec<Complex64> = env
        .samples
        .iter()
        .map(|v| Complex64::new(v.sqrt(), 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(n)
        .collect();

    // Spectral convention a(t) = Σ A(ν)·e^{−iνt}: the analysis step is the
    // inverse DFT, synthesis the forward one.
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(n).process(&mut buf);

    let dnu = 2.0 * PI / (n as f64 * env.dt);
    let freqs: Vec<f64> = (0..n)
        .map(|k| if k <= n / 2 { k as f64 } else { k as f64 - n as f64 } * dnu)
        .collect();
    let bandwidth = spectral_fwhm(&freqs, &buf);

    let a = medium.strength;
    if a != 0.0 && medium.length != 0.0 {
        let k_l = medium.length / SPEED_OF_LIGHT;
        for (amp, &nu) in buf.iter_mut().zip(&freqs) {
            let dn = index_offset(carrier_detuning + nu, doublet, a);
            let k = match opts.velocity_model {
                GroupVelocityModel::DispersiveOnly => doublet.omega0,
                GroupVelocityModel::Full => doublet.omega0 + nu,
            };
            let phase = Complex64::new(0.0, k * k_l) * dn;
            *amp *= phase.exp();
        }
    }

    planner.plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (n as f64 * n as f64);
    let samples: Vec<f64> = buf.iter().map(|c| c.norm_sqr() * scale).collect();
    let mut out = TemporalEnvelope {
        samples,
        dt: env.dt,
        t_start: env.t_start,
        normalization: Normalization::Raw,
    };
    if env.normalization == Normalization::Area {
        out = out.normalized()?;
    }

    let mut warnings = Vec::new();
    let omega_s = doublet.omega_s();
    if bandwidth >= omega_s / 10.0 {
        warnings.push(PropagationWarning::NotNarrowband { bandwidth, omega_s });
    }
    let nyquist = PI / env.dt;
    if nyquist < 10.0 * bandwidth {
        warnings.push(PropagationWarning::CoarseSampling { nyquist, bandwidth });
    }
    Ok(Propagated {
        envelope: out,
        predicted_delay: predicted,
        bandwidth,
        warnings,
    })
}

/// FWHM (rad/s) of |A(ν)|² around its maximum, linear interpolation at the
/// half-power crossings.
fn spectral_fwhm(freqs: &[f64], spectrum: &[Complex64]) -> f64 {
    let n = freqs.len();
    let order: Vec<usize> = (n / 2 + 1..n).chain(0..=n / 2).collect();
    let power: Vec<f64> = order.iter().map(|&k| spectrum[k].norm_sqr()).collect();
    let f: Vec<f64> = order.iter().map(|&k| freqs[k]).collect();
    let (peak, max) = power
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
    if !(max > 0.0) {
        return 0.0;
    }
    let half = 0.5 * max;
    let lo = (0..peak).rev().find(|&i| power[i] < half).map(|i| {
        let t = (half - power[i]) / (power[i + 1] - power[i]);
        f[i] + t * (f[i + 1] - f[i])
    });
    let hi = (peak + 1..power.len()).find(|&i| power[i] < half).map(|i| {
        let t = (power[i - 1] - half) / (power[i - 1] - power[i]);
        f[i - 1] + t * (f[i] - f[i - 1])
    });
    match (lo, hi) {
        (Some(l), Some(h)) => h - l,
        _ => f[f.len() - 1] - f[0],
    }
}
