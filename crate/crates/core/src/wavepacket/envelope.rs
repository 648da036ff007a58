use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// TCSPC bin width used for arrival-time histograms (s).
pub const DEFAULT_BIN_WIDTH: f64 = 512e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Samples integrate to one over time.
    Area,
    #[default]
    Raw,
}

/// Photon intensity sampled on a uniform time grid.
///
/// Sample `i` sits at `t_start + i·dt` and stands for the interval of width
/// `dt` centred on that instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalEnvelope {
    pub samples: Vec<f64>,
    /// s
    pub dt: f64,
    /// s
    pub t_start: f64,
    pub normalization: Normalization,
}

impl TemporalEnvelope {
    pub fn new(samples: Vec<f64>, dt: f64, t_start: f64) -> Result<Self> {
        let env = Self {
            samples,
            dt,
            t_start,
            normalization: Normalization::Raw,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("sample spacing dt = {} must be positive", self.dt)));
        }
        if !self.t_start.is_finite() {
            return Err(Error::invalid("t_start must be finite"));
        }
        if let Some((i, v)) = self
            .samples
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(Error::invalid(format!("sample {i} = {v} is negative or not finite")));
        }
        if self.normalization == Normalization::Area && !(self.area() > 0.0) {
            return Err(Error::Degenerate("normalised envelope has zero area".into()));
        }
        Ok(())
    }

    /// Intensity `exp(−(t − onset)/decay)` for `t ≥ onset`, zero before.
    pub fn exponential_decay(decay: f64, onset: f64, dt: f64, duration: f64) -> Result<Self> {
        if !(decay > 0.0) {
            return Err(Error::invalid("decay time must be positive"));
        }
        Self::from_fn(dt, duration, |t| if t >= onset { (-(t - onset) / decay).exp() } else { 0.0 })
    }

    /// Single-photon shape: an exponential decay with time constant `decay`
    /// starting at `onset`, convolved with a Gaussian of standard deviation
    /// `rise` (exponentially modified Gaussian). The tail follows
    /// `e^{−(t − onset)/decay}` up to the factor `e^{rise²/(2·decay²)}`.
    /// The smooth onset keeps the sampled spectrum
    /// free of the high-frequency content a hard edge would put there.
    pub fn photon(decay: f64, rise: f64, onset: f64, dt: f64, duration: f64) -> Result<Self> {
        if !(decay > 0.0) || !(rise > 0.0) {
            return Err(Error::invalid("decay and rise times must be positive"));
        }
        let lam = 1.0 / decay;
        let shift = lam * rise * rise;
        Self::from_fn(dt, duration, |t| {
            let z = (onset + shift - t) / (std::f64::consts::SQRT_2 * rise);
            let expo = 0.5 * lam * (2.0 * (onset - t) + shift);
            if z < 25.0 {
                (expo).exp() * erfc(z) * 0.5
            } else {
                // erfc(z) ≈ e^{−z²}/(z√π)
                0.5 * (expo - z * z).exp() / (z * std::f64::consts::PI.sqrt())
            }
        })
    }

    /// Gaussian intensity profile with the given full width at half maximum.
    pub fn gaussian(fwhm: f64, center: f64, dt: f64, duration: f64) -> Result<Self> {
        if !(fwhm > 0.0) {
            return Err(Error::invalid("FWHM must be positive"));
        }
        let sigma = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
        Self::from_fn(dt, duration, |t| (-0.5 * ((t - center) / sigma).powi(2)).exp())
    }

    /// Unit intensity on `[start, start + width)`.
    pub fn rectangular(width: f64, start: f64, dt: f64, duration: f64) -> Result<Self> {
        let n_on = (width / dt).round() as usize;
        let first = (start / dt).round() as usize;
        let n = (duration / dt).round() as usize;
        let samples = (0..n).map(|i| if i >= first && i < first + n_on { 1.0 } else { 0.0 }).collect();
        Self::new(samples, dt, 0.0)
    }

    fn from_fn(dt: f64, duration: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(dt > 0.0) || !(duration >= dt) {
            return Err(Error::invalid("need dt > 0 and duration ≥ dt"));
        }
        let n = (duration / dt).round() as usize;
        Self::new((0..n).map(|i| f(i as f64 * dt)).collect(), dt, 0.0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    /// Time integral of the intensity.
    pub fn area(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.dt
    }

    pub fn normalized(&self) -> Result<Self> {
        let area = self.area();
        if !(area > 0.0) {
            return Err(Error::Degenerate("envelope has zero area".into()));
        }
        Ok(Self {
            samples: self.samples.iter().map(|v| v / area).collect(),
            dt: self.dt,
            t_start: self.t_start,
            normalization: Normalization::Area,
        })
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * k).collect(),
            normalization: Normalization::Raw,
            ..self.clone()
        }
    }

    /// Same samples, moved in time by `shift` seconds.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            t_start: self.t_start + shift,
            ..self.clone()
        }
    }

    /// First moment of the intensity in time.
    pub fn centroid(&self) -> Result<f64> {
        let total: f64 = self.samples.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("centroid of an all-zero envelope".into()));
        }
        let moment: f64 = self.samples.iter().enumerate().map(|(i, v)| i as f64 * v).sum();
        Ok(self.t_start + self.dt * moment / total)
    }

    /// Index of the largest sample (first one on ties).
    pub fn peak_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.samples.iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.filter(|(_, v)| *v > 0.0).map(|(i, _)| i)
    }

    /// Linear-interpolation resample onto a new spacing over the same span.
    pub fn resampled(&self, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid("resample spacing must be positive"));
        }
        if self.samples.is_empty() {
            return Ok(Self { dt, ..self.clone() });
        }
        let span = (self.samples.len() - 1) as f64 * self.dt;
        let n = (span / dt).floor() as usize + 1;
        let samples = (0..n)
            .map(|k| {
                let x = k as f64 * dt / self.dt;
                let i = x.floor() as usize;
                let frac = x - i as f64;
                let a = self.samples[i.min(self.samples.len() - 1)];
                let b = self.samples[(i + 1).min(self.samples.len() - 1)];
                a + frac * (b - a)
            })
            .collect();
        Ok(Self {
            samples,
            dt,
            t_start: self.t_start,
            normalization: Normalization::Raw,
        })
    }
}

/// Binned photon arrival times, TCSPC style. Bin `k` covers
/// `[t0 + k·bin_width, t0 + (k+1)·bin_width)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalHistogram {
    pub bin_width_ps: u64,
    pub counts: Vec<u64>,
    pub t0_ps: i64,
}

impl ArrivalHistogram {
    /// Histogram with bin width and origin given in seconds; both are held
    /// internally as integer picoseconds so that TCSPC metadata survives
    /// round trips exactly.
    pub fn new(bin_width: f64, counts: Vec<u64>, t0: f64) -> Result<Self> {
        let bw = (bin_width * 1e12).round();
        if !(bw >= 1.0) || !bw.is_finite() {
            return Err(Error::invalid(format!("bin width {bin_width} s must be at least 1 ps")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("histogram origin must be finite"));
        }
        Ok(Self {
            bin_width_ps: bw as u64,
            counts,
            t0_ps: (t0 * 1e12).round() as i64,
        })
    }

    pub fn empty(bin_width: f64, n_bins: usize, t0: f64) -> Result<Self> {
        Self::new(bin_width, vec![0; n_bins], t0)
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width_ps as f64 * 1e-12
    }

    pub fn t0(&self) -> f64 {
        self.t0_ps as f64 * 1e-12
    }

    /// Total counts, saturating rather than overflowing on absurd inputs.
    pub fn total(&self) -> u64 {
        self.counts.iter().fold(0u64, |a, &c| a.saturating_add(c))
    }

    pub fn bin_start(&self, k: usize) -> f64 {
        self.t0() + k as f64 * self.bin_width()
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.bin_start(k) + 0.5 * self.bin_width()
    }
}

/// Area-normalised envelope sampled at the bin centres.
pub fn histogram_to_envelope(h: &ArrivalHistogram) -> Result<TemporalEnvelope> {
    let total = h.total();
    if total == 0 {
        return Err(Error::Degenerate("histogram holds no counts".into()));
    }
    let bw = h.bin_width();
    let norm = 1.0 / (total as f64 * bw);
    Ok(TemporalEnvelope {
        samples: h.counts.iter().map(|&c| c as f64 * norm).collect(),
        dt: bw,
        t_start: h.bin_center(0),
        normalization: Normalization::Area,
    })
}

/// Draws `shot_count` arrival times from the envelope (treated as piecewise
/// constant over each sample interval) and bins them. The multinomial draw
/// is done bin by bin with conditional binomials, so the result depends only
/// on the seed.
pub fn envelope_to_histogram(
    env: &TemporalEnvelope,
    bin_width: f64,
    shot_count: u64,
    seed: u64,
) -> Result<ArrivalHistogram> {
    if shot_count == 0 {
        return Err(Error::invalid("shot_count must be positive"));
    }
    env.validate()?;
    if !(env.area() > 0.0) {
        return Err(Error::Degenerate("cannot sample an all-zero envelope".into()));
    }
    let t0 = env.t_start - 0.5 * env.dt;
    let mut hist = ArrivalHistogram::new(bin_width, Vec::new(), t0)?;
    let bw = hist.bin_width();
    let t0 = hist.t0();
    let t_end = env.t_start + (env.len() as f64 - 0.5) * env.dt;
    let n_bins = ((t_end - t0) / bw).ceil().max(1.0) as usize;

    let mut mass = vec![0.0; n_bins];
    for (i, &v) in env.samples.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let lo = env.time(i) - 0.5 * env.dt;
        let hi = lo + env.dt;
        let first = (((lo - t0) / bw).floor().max(0.0) as usize).min(n_bins - 1);
        let mut k = first;
        while k < n_bins {
            let b_lo = t0 + k as f64 * bw;
            let b_hi = b_lo + bw;
            if b_lo >= hi {
                break;
            }
            let overlap = hi.min(b_hi) - lo.max(b_lo);
            if overlap > 0.0 {
                mass[k] += v * overlap;
            }
            k += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining_mass: f64 = mass.iter().sum();
    let mut remaining = shot_count;
    let mut counts = Vec::with_capacity(n_bins);
    for m in mass {
        if remaining == 0 || remaining_mass <= 0.0 {
            counts.push(0);
            continue;
        }
        let p = (m / remaining_mass).clamp(0.0, 1.0);
        let c = if p >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, p)
                .map_err(|e| Error::Domain(e.to_string()))?
                .sample(&mut rng)
        };
        counts.push(c);
        remaining -= c;
        remaining_mass -= m;
    }
    hist.counts = counts;
    Ok(hist)
}
