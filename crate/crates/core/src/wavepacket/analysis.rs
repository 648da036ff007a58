use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::envelope::TemporalEnvelope;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayMethod {
    Peak,
    Centroid,
    /// Cross-correlation maximum with parabolic sub-sample refinement.
    #[default]
    Xcorr,
}

impl std::str::FromStr for DelayMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "peak" => Ok(Self::Peak),
            "centroid" => Ok(Self::Centroid),
            "xcorr" => Ok(Self::Xcorr),
            other => Err(Error::invalid(format!("unknown delay method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DelayOptions {
    pub method: DelayMethod,
    /// Subtract the median sample from each trace (clamped at zero) before
    /// estimating.
    pub subtract_background: bool,
}

impl DelayOptions {
    pub fn method(method: DelayMethod) -> Self {
        Self {
            method,
            subtract_background: false,
        }
    }
}

fn without_background(env: &TemporalEnvelope) -> TemporalEnvelope {
    let mut sorted = env.samples.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted.get(sorted.len() / 2).copied().unwrap_or(0.0);
    TemporalEnvelope {
        samples: env.samples.iter().map(|v| (v - median).max(0.0)).collect(),
        ..env.clone()
    }
}

fn check_nonzero(env: &TemporalEnvelope, which: &str) -> Result<()> {
    if env.samples.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate(format!("{which} envelope is empty or all zero")));
    }
    Ok(())
}

/// Delay of `b` relative to `a` (positive when `b` arrives later). `b` is
/// resampled onto `a`'s spacing when the two differ.
pub fn extract_delay(a: &TemporalEnvelope, b: &TemporalEnvelope, opts: DelayOptions) -> Result<f64> {
    check_nonzero(a, "first")?;
    check_nonzero(b, "second")?;
    let b = if (b.dt - a.dt).abs() > 1e-12 * a.dt {
        b.resampled(a.dt)?
    } else {
        b.clone()
    };
    let (a, b) = if opts.subtract_background {
        (without_background(a), without_background(&b))
    } else {
        (a.clone(), b)
    };
    check_nonzero(&a, "first")?;
    check_nonzero(&b, "second")?;
    match opts.method {
        DelayMethod::Centroid => Ok(b.centroid()? - a.centroid()?),
        DelayMethod::Peak => {
            let pa = a.peak_index().expect("non-zero envelope has a peak");
            let pb = b.peak_index().expect("non-zero envelope has a peak");
            Ok(b.time(pb) - a.time(pa))
        }
        DelayMethod::Xcorr => Ok(xcorr_lag(&a.samples, &b.samples) * a.dt + (b.t_start - a.t_start)),
    }
}

/// Lag (in samples, fractional) maximising `Σᵢ a[i]·b[i+lag]`.
fn xcorr_lag(a: &[f64], b: &[f64]) -> f64 {
    let m = (a.len() + b.len()).next_power_of_two();
    let pad = |x: &[f64]| -> Vec<Complex64> {
        x.iter()
            .map(|&v| Complex64::new(v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(m)
            .collect()
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    let mut c: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
    planner.plan_fft_inverse(m).process(&mut c);

    // valid lags: −(len_a − 1) ..= len_b − 1
    let lag_min = -(a.len() as i64 - 1);
    let lag_max = b.len() as i64 - 1;
    let at = |lag: i64| c[lag.rem_euclid(m as i64) as usize].re;
    let mut best = (0i64, f64::NEG_INFINITY);
    for lag in lag_min..=lag_max {
        let v = at(lag);
        if v > best.1 {
            best = (lag, v);
        }
    }
    let (k, y0) = best;
    if k == lag_min || k == lag_max {
        return k as f64;
    }
    let (ym, yp) = (at(k - 1), at(k + 1));
    let den = ym - 2.0 * y0 + yp;
    let frac = if den < 0.0 { 0.5 * (ym - yp) / den } else { 0.0 };
    k as f64 + frac.clamp(-0.5, 0.5)
}

/// Full width at half maximum (s), with linear interpolation at the
/// half-maximum crossings either side of the highest sample.
pub fn width_metric(env: &TemporalEnvelope) -> Result<f64> {
    let peak = env
        .peak_index()
        .ok_or_else(|| Error::Degenerate("width of an all-zero envelope".into()))?;
    let s = &env.samples;
    let half = 0.5 * s[peak];
    let left = (0..peak)
        .rev()
        .find(|&i| s[i] < half)
        .map(|i| i as f64 + (half - s[i]) / (s[i + 1] - s[i]));
    let right = (peak + 1..s.len())
        .find(|&i| s[i] < half)
        .map(|i| (i - 1) as f64 + (s[i - 1] - half) / (s[i - 1] - s[i]));
    match (left, right) {
        (Some(l), Some(r)) => Ok((r - l) * env.dt),
        _ => Err(Error::Degenerate(
            "envelope does not fall below half maximum on both sides of its peak".into(),
        )),
    }
}

/// `FWHM(out) / FWHM(in)`.
pub fn broadening_ratio(input: &TemporalEnvelope, output: &TemporalEnvelope) -> Result<f64> {
    Ok(width_metric(output)? / width_metric(input)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavepacket::DEFAULT_BIN_WIDTH;

    fn pulse() -> TemporalEnvelope {
        TemporalEnvelope::exponential_decay(8e-9, 10e-9, DEFAULT_BIN_WIDTH, 200e-9).unwrap()
    }

    #[test]
    fn identical_envelopes_have_zero_delay() {
        let p = pulse();
        for m in [DelayMethod::Xcorr, DelayMethod::Centroid, DelayMethod::Peak] {
            let d = extract_delay(&p, &p, DelayOptions::method(m)).unwrap();
            assert!(d.abs() <= p.dt / 100.0, "{m:?}: {d}");
        }
    }

    #[test]
    fn thirteen_bin_shift() {
        let p = pulse();
        let mut s = vec![0.0; 13];
        s.extend_from_slice(&p.samples);
        let q = TemporalEnvelope::new(s, p.dt, p.t_start).unwrap();
        for m in [DelayMethod::Xcorr, DelayMethod::Centroid, DelayMethod::Peak] {
            let d = extract_delay(&p, &q, DelayOptions::method(m)).unwrap();
            assert!((d - 6.656e-9).abs() < 0.1e-9, "{m:?}: {d}");
        }
        // same shift expressed through t_start only
        let d = extract_delay(&p, &p.shifted(13.0 * p.dt), DelayOptions::default()).unwrap();
        assert!((d - 6.656e-9).abs() < 1e-15);
    }

    #[test]
    fn negative_lags_are_found() {
        let p = pulse();
        let mut s = vec![0.0; 20];
        s.extend_from_slice(&p.samples);
        let later = TemporalEnvelope::new(s, p.dt, p.t_start).unwrap();
        let d = extract_delay(&later, &p, DelayOptions::default()).unwrap();
        assert!((d + 20.0 * p.dt).abs() < p.dt / 100.0, "{d}");
    }

    #[test]
    fn subpixel_shift_of_smooth_pulse() {
        let a = TemporalEnvelope::gaussian(5e-9, 30e-9, 0.5e-9, 100e-9).unwrap();
        let b = TemporalEnvelope::gaussian(5e-9, 30.2e-9, 0.5e-9, 100e-9).unwrap();
        let d = extract_delay(&a, &b, DelayOptions::default()).unwrap();
        assert!((d - 0.2e-9).abs() < 0.05e-9, "{d}");
    }

    #[test]
    fn background_subtraction_removes_floor() {
        let p = pulse();
        let floor = 0.05;
        let noisy = |e: &TemporalEnvelope| TemporalEnvelope {
            samples: e.samples.iter().map(|v| v + floor).collect(),
            ..e.clone()
        };
        let shifted = {
            let mut s = vec![0.0; 13];
            s.extend_from_slice(&p.samples);
            s.truncate(p.len());
            TemporalEnvelope::new(s, p.dt, p.t_start).unwrap()
        };
        let opts = DelayOptions {
            method: DelayMethod::Centroid,
            subtract_background: true,
        };
        let d = extract_delay(&noisy(&p), &noisy(&shifted), opts).unwrap();
        assert!((d - 13.0 * p.dt).abs() < 0.2e-9, "{d}");
    }

    #[test]
    fn degenerate_inputs() {
        let p = pulse();
        let z = TemporalEnvelope::new(vec![0.0; 10], p.dt, 0.0).unwrap();
        let e = TemporalEnvelope::new(vec![], p.dt, 0.0).unwrap();
        assert!(matches!(extract_delay(&p, &z, DelayOptions::default()), Err(Error::Degenerate(_))));
        assert!(matches!(extract_delay(&e, &p, DelayOptions::default()), Err(Error::Degenerate(_))));
        assert!(matches!(width_metric(&z), Err(Error::Degenerate(_))));
        let ramp = TemporalEnvelope::new((0..10).map(|i| i as f64).collect(), 1e-9, 0.0).unwrap();
        assert!(matches!(width_metric(&ramp), Err(Error::Degenerate(_))));
    }

    #[test]
    fn rectangle_width() {
        let dt = 0.1e-9;
        let r = TemporalEnvelope::rectangular(10e-9, 5e-9, dt, 30e-9).unwrap();
        let w = width_metric(&r).unwrap();
        assert!((w - 10e-9).abs() <= dt, "{w}");
    }

    #[test]
    fn gaussian_width() {
        let g = TemporalEnvelope::gaussian(4e-9, 20e-9, 0.05e-9, 40e-9).unwrap();
        assert!((width_metric(&g).unwrap() - 4e-9).abs() < 0.01e-9);
    }

    #[test]
    fn delay_method_parsing() {
        assert_eq!("xcorr".parse::<DelayMethod>().unwrap(), DelayMethod::Xcorr);
        assert!("median".parse::<DelayMethod>().is_err());
    }
}
